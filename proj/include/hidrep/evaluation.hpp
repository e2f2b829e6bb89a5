#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "hidrep/errors.hpp"
#include "hidrep/types.hpp"

namespace hidrep {

enum class DeletionSign { Plus, Minus };

/// DEL curve for one test point: prediction change after removing the top-k
/// samples at each k in the schedule.
struct DeletionCurve {
  std::string test_point;
  std::vector<int> ks;
  std::vector<double> deltas;
  DeletionSign sign = DeletionSign::Plus;
};

/// Per-trial AUC-DEL values with their mean and a normal-approximation 95%
/// confidence interval.
struct DeletionReport {
  std::vector<double> trial_aucs;
  double mean = 0.0;
  double ci_half_width = 0.0;
  int trials = 0;
  int tests_per_trial = 0;
};

/// Retrains without the given training indices and returns the prediction at
/// the curve's test point.
using Retrainer = std::function<double(const std::vector<int>& removed)>;

/// Indices of the top-k eligible points for the given sign. Plus: positive
/// scores, descending; minus: negative scores, ascending. Stable tie-break
/// by index; truncates when the eligible pool is smaller than k.
inline std::vector<int> select_top_k(const std::vector<double>& scores, int k,
                                     DeletionSign sign) {
  std::vector<int> pool;
  for (int i = 0; i < static_cast<int>(scores.size()); ++i) {
    if (sign == DeletionSign::Plus && scores[i] > 0) pool.push_back(i);
    if (sign == DeletionSign::Minus && scores[i] < 0) pool.push_back(i);
  }
  std::stable_sort(pool.begin(), pool.end(), [&](int a, int b) {
    return sign == DeletionSign::Plus ? scores[a] > scores[b]
                                      : scores[a] < scores[b];
  });
  if (static_cast<int>(pool.size()) > k) pool.resize(k);
  return pool;
}

inline DeletionCurve del_curve(const Retrainer& trainer,
                               const std::vector<double>& scores,
                               const std::string& test_point,
                               const std::vector<int>& ks, DeletionSign sign) {
  for (std::size_t i = 1; i < ks.size(); ++i)
    if (ks[i] <= ks[i - 1])
      throw InvalidInputError("del_curve: ks must be strictly increasing");
  const double base = trainer({});
  DeletionCurve curve;
  curve.test_point = test_point;
  curve.sign = sign;
  for (int k : ks) {
    const std::vector<int> removed = select_top_k(scores, k, sign);
    if (static_cast<int>(removed.size()) < k)
      std::cerr << "del_curve: eligible pool smaller than k=" << k
                << ", truncating\n";
    double pred;
    try {
      pred = k == 0 ? base : trainer(removed);
    } catch (const std::exception& e) {
      throw ConvergenceError(
          "del_curve: retraining failed at k=" + std::to_string(k) + ": " +
              e.what(),
          0.0);
    }
    curve.ks.push_back(k);
    curve.deltas.push_back(pred - base);
  }
  return curve;
}

/// Arithmetic mean of the curve's deltas.
inline double auc_del(const DeletionCurve& curve) {
  if (curve.deltas.empty())
    throw InvalidInputError("auc_del: empty curve");
  return std::accumulate(curve.deltas.begin(), curve.deltas.end(), 0.0) /
         static_cast<double>(curve.deltas.size());
}

/// One trial = AUC per test point, then the mean over test points.
/// The report aggregates trials with a normal-approximation 95% CI.
inline DeletionReport aggregate_trials(const std::vector<double>& trial_aucs,
                                       int tests_per_trial) {
  DeletionReport rep;
  rep.trial_aucs = trial_aucs;
  rep.trials = static_cast<int>(trial_aucs.size());
  rep.tests_per_trial = tests_per_trial;
  if (trial_aucs.empty()) return rep;
  rep.mean = std::accumulate(trial_aucs.begin(), trial_aucs.end(), 0.0) /
             trial_aucs.size();
  if (trial_aucs.size() > 1) {
    double ss = 0;
    for (double a : trial_aucs) ss += (a - rep.mean) * (a - rep.mean);
    const double sd = std::sqrt(ss / (trial_aucs.size() - 1));
    rep.ci_half_width = 1.96 * sd / std::sqrt(double(trial_aucs.size()));
  }
  return rep;
}

/// Mean absolute error.
inline double mae(const std::vector<double>& predictions,
                  const std::vector<double>& truths) {
  if (predictions.size() != truths.size() || predictions.empty())
    throw InvalidInputError("mae: length mismatch or empty");
  double s = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    s += std::abs(predictions[i] - truths[i]);
  return s / predictions.size();
}

/// Mean over users of |top-k of the ranked list that are held-out positives|
/// divided by the user's held-out positive count. Users with no held-out
/// positives are skipped with a warning.
inline double recall_at_k(
    const std::vector<std::vector<int>>& ranked_items_per_user,
    const std::vector<std::set<int>>& held_out_positives, int k) {
  if (k < 1) throw InvalidInputError("recall_at_k: k must be >= 1");
  if (ranked_items_per_user.size() != held_out_positives.size())
    throw InvalidInputError("recall_at_k: per-user length mismatch");
  double total = 0;
  int counted = 0;
  for (std::size_t u = 0; u < ranked_items_per_user.size(); ++u) {
    const auto& pos = held_out_positives[u];
    if (pos.empty()) {
      std::cerr << "recall_at_k: user " << u
                << " has no held-out positives, skipping\n";
      continue;
    }
    const auto& ranked = ranked_items_per_user[u];
    int hits = 0;
    for (int r = 0; r < std::min<int>(k, ranked.size()); ++r)
      if (pos.count(ranked[r])) ++hits;
    total += static_cast<double>(hits) / pos.size();
    ++counted;
  }
  return counted > 0 ? total / counted : 0.0;
}

}  // namespace hidrep
