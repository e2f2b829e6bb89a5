#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hidrep/baselines.hpp"
#include "hidrep/datasets.hpp"
#include "hidrep/errors.hpp"
#include "hidrep/evaluation.hpp"
#include "hidrep/l1_solver.hpp"
#include "hidrep/mf_sgd.hpp"
#include "hidrep/representers.hpp"
#include "hidrep/soft_impute.hpp"
#include "hidrep/types.hpp"

namespace hidrep {

// Sub-streams derived from one master seed, by component name.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index) {
  std::uint64_t x = master ^ (0x9e3779b97f4a7c15ULL * (stream + 1)) ^
                    (0xbf58476d1ce4e5b9ULL * (index + 1));
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

enum class AttributionMethod { HighDimRep, L2Rep, Influence, Random };

inline AttributionMethod method_from_name(const std::string& s) {
  if (s == "hidrep") return AttributionMethod::HighDimRep;
  if (s == "l2") return AttributionMethod::L2Rep;
  if (s == "influence") return AttributionMethod::Influence;
  if (s == "random") return AttributionMethod::Random;
  throw InvalidInputError("unknown attribution method: " + s);
}

inline const char* method_name(AttributionMethod m) {
  switch (m) {
    case AttributionMethod::HighDimRep: return "hidrep";
    case AttributionMethod::L2Rep: return "l2";
    case AttributionMethod::Influence: return "influence";
    case AttributionMethod::Random: return "random";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Case deletion on l1 linear models.
// ---------------------------------------------------------------------------

struct L1DeletionConfig {
  LabeledDataset train;
  std::vector<SparseVector> test_pool;
  AttributionMethod method = AttributionMethod::HighDimRep;
  LossFunction loss{LossKind::Logistic};
  double lambda = 0.01;
  double tol = 1e-8;
  int max_iter = 100000;
  std::vector<int> ks;
  int trials = 1;
  int tests_per_trial = 1;
  std::uint64_t seed = 0;
  DeletionSign sign = DeletionSign::Plus;
};

inline DeletionReport run_case_deletion_l1(const L1DeletionConfig& cfg) {
  const L1LinearModel model =
      fit_l1(cfg.train, cfg.loss, cfg.lambda, cfg.tol, cfg.max_iter);

  std::vector<double> trial_aucs;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    std::mt19937_64 trial_rng(derive_seed(cfg.seed, 1, trial));
    std::uniform_int_distribution<std::size_t> pick(0,
                                                    cfg.test_pool.size() - 1);
    double auc_sum = 0;
    for (int t = 0; t < cfg.tests_per_trial; ++t) {
      const SparseVector& x_test = cfg.test_pool[pick(trial_rng)];
      std::vector<double> scores;
      switch (cfg.method) {
        case AttributionMethod::HighDimRep: {
          const auto recs = l1_attribute(model, cfg.train, x_test);
          scores.resize(recs.size());
          for (const auto& r : recs) scores[r.train_index] = r.importance;
          break;
        }
        case AttributionMethod::L2Rep:
          scores = l2_representer(model, cfg.train, x_test);
          break;
        case AttributionMethod::Influence:
          scores = influence_l1(model, cfg.train, x_test);
          break;
        case AttributionMethod::Random:
          scores = random_scores(cfg.train.samples.size(),
                                 derive_seed(cfg.seed, 2, trial * 1000 + t));
          break;
      }
      Retrainer retrain = [&](const std::vector<int>& removed) {
        LabeledDataset sub;
        std::set<int> rm(removed.begin(), removed.end());
        for (Eigen::Index i = 0; i < cfg.train.size(); ++i)
          if (!rm.count(static_cast<int>(i))) {
            sub.samples.push_back(cfg.train.samples[i]);
            sub.labels.push_back(cfg.train.labels[i]);
          }
        const L1LinearModel refit = fit_l1(sub, cfg.loss, cfg.lambda, cfg.tol,
                                           cfg.max_iter, &model.theta);
        return sparse_dense_inner(x_test, refit.theta);
      };
      auc_sum += auc_del(del_curve(retrain, scores,
                                   "trial" + std::to_string(trial) + "/test" +
                                       std::to_string(t),
                                   cfg.ks, cfg.sign));
    }
    trial_aucs.push_back(auc_sum / cfg.tests_per_trial);
  }
  return aggregate_trials(trial_aucs, cfg.tests_per_trial);
}

// ---------------------------------------------------------------------------
// Case deletion on SGD matrix factorization.
// ---------------------------------------------------------------------------

struct MfDeletionConfig {
  InteractionSet train;
  std::vector<std::pair<int, int>> test_pool;  // held-out (user, item) pairs
  AttributionMethod method = AttributionMethod::HighDimRep;
  MfSgdOptions mf;
  std::vector<int> ks;
  int trials = 1;
  int tests_per_trial = 1;
  std::uint64_t seed = 0;
  DeletionSign sign = DeletionSign::Plus;
};

/// Combined user- and item-side representer scores, one per train point.
inline std::vector<double> mf_hidrep_scores(const NormalizedEmbeddings& norm,
                                            const LossFunction& loss,
                                            const InteractionSet& train,
                                            int i_test, int j_test) {
  std::vector<double> scores(train.size(), 0.0);
  const auto recs = cf_explain(norm, loss, train, i_test, j_test);
  for (const auto& r : recs) scores[r.train_index] += r.importance;
  return scores;
}

inline DeletionReport run_case_deletion_mf(const MfDeletionConfig& cfg) {
  std::vector<double> trial_aucs;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    MfSgdOptions opt = cfg.mf;
    opt.seed = derive_seed(cfg.seed, 10, trial);
    const EmbeddingPair base = fit_mf_sgd(cfg.train, opt).factors;
    const NormalizedEmbeddings norm = normalize_factors(base);

    std::mt19937_64 trial_rng(derive_seed(cfg.seed, 11, trial));
    std::uniform_int_distribution<std::size_t> pick(0,
                                                    cfg.test_pool.size() - 1);
    double auc_sum = 0;
    for (int t = 0; t < cfg.tests_per_trial; ++t) {
      const auto [iu, ij] = cfg.test_pool[pick(trial_rng)];
      std::vector<double> scores;
      if (cfg.method == AttributionMethod::HighDimRep) {
        scores = mf_hidrep_scores(norm, cfg.mf.loss, cfg.train, iu, ij);
      } else if (cfg.method == AttributionMethod::Random) {
        // Random deletion restricted to samples sharing the test user or
        // item, mirroring the pool the representer draws from.
        scores.assign(cfg.train.size(), 0.0);
        std::mt19937_64 rng(derive_seed(cfg.seed, 12, trial * 1000 + t));
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (std::size_t s = 0; s < cfg.train.size(); ++s) {
          const auto& it = cfg.train.interactions[s];
          if (it.user == iu || it.item == ij) scores[s] = dist(rng);
        }
      } else {
        throw InvalidInputError(
            "run_case_deletion_mf: unsupported method for the MF family");
      }
      Retrainer retrain = [&](const std::vector<int>& removed) {
        InteractionSet sub;
        sub.n_users = cfg.train.n_users;
        sub.n_items = cfg.train.n_items;
        std::set<int> rm(removed.begin(), removed.end());
        for (std::size_t s = 0; s < cfg.train.size(); ++s)
          if (!rm.count(static_cast<int>(s)))
            sub.interactions.push_back(cfg.train.interactions[s]);
        const EmbeddingPair refit = fit_mf_sgd(sub, opt).factors;
        return refit.user_mat.row(iu).dot(refit.item_mat.row(ij));
      };
      auc_sum += auc_del(del_curve(retrain, scores,
                                   "trial" + std::to_string(trial) + "/test" +
                                       std::to_string(t),
                                   cfg.ks, cfg.sign));
    }
    trial_aucs.push_back(auc_sum / cfg.tests_per_trial);
  }
  return aggregate_trials(trial_aucs, cfg.tests_per_trial);
}

// ---------------------------------------------------------------------------
// Negative-sample audit (implicit CF, weighted BCE).
// ---------------------------------------------------------------------------

enum class NegAuditMethod { Representer, Loss, Random };

inline NegAuditMethod neg_audit_method_from_name(const std::string& s) {
  if (s == "representer") return NegAuditMethod::Representer;
  if (s == "loss") return NegAuditMethod::Loss;
  if (s == "random") return NegAuditMethod::Random;
  throw InvalidInputError("unknown negative-audit method: " + s);
}

struct NegativeAuditConfig {
  InteractionSet train_positives;   // binarized
  InteractionSet test_positives;    // held-out positives, same id space
  std::optional<std::size_t> negative_count;  // nullopt: all unobserved pairs
  double negative_weight = 0.05;
  MfSgdOptions mf;                  // loss should be BCE
  std::vector<double> removal_fractions;  // e.g. {0.01, 0.03, 0.05}
  NegAuditMethod method = NegAuditMethod::Representer;
  /// true: remove the negatives with the largest aggregated scores (they
  /// flag likely false negatives); false: remove the smallest.
  bool remove_largest = true;
  int recall_k = 20;
  std::uint64_t seed = 0;
};

struct NegativeAuditRow {
  double fraction = 0.0;
  int removed = 0;
  int false_negative_hits = 0;  // removed negatives present in the test set
  double recall_before = 0.0;
  double recall_after = 0.0;
};

struct NegativeAuditReport {
  std::vector<NegativeAuditRow> rows;
};

namespace detail {

inline double mf_recall(const EmbeddingPair& factors,
                        const InteractionSet& train_positives,
                        const InteractionSet& test_positives, int k) {
  const int n_users = train_positives.n_users;
  std::vector<std::set<int>> train_items(n_users), test_items(n_users);
  for (const auto& it : train_positives.interactions)
    train_items[it.user].insert(it.item);
  for (const auto& it : test_positives.interactions)
    test_items[it.user].insert(it.item);
  std::vector<std::vector<int>> ranked(n_users);
  for (int u = 0; u < n_users; ++u) {
    if (test_items[u].empty()) continue;
    std::vector<std::pair<double, int>> scored;
    for (int j = 0; j < train_positives.n_items; ++j) {
      if (train_items[u].count(j)) continue;
      scored.emplace_back(factors.user_mat.row(u).dot(factors.item_mat.row(j)),
                          j);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) {
                       if (a.first != b.first) return a.first > b.first;
                       return a.second < b.second;
                     });
    for (const auto& [score, j] : scored) ranked[u].push_back(j);
  }
  return recall_at_k(ranked, test_items, k);
}

}  // namespace detail

inline NegativeAuditReport negative_audit_experiment(
    const NegativeAuditConfig& cfg) {
  const InteractionSet negatives = uniform_negative_sample(
      cfg.train_positives, cfg.negative_count, derive_seed(cfg.seed, 20, 0));

  MfSgdOptions opt = cfg.mf;
  opt.seed = derive_seed(cfg.seed, 21, 0);
  opt.neg = NegConfig{negatives, cfg.negative_weight};
  const EmbeddingPair base = fit_mf_sgd(cfg.train_positives, opt).factors;
  const double recall_before = detail::mf_recall(
      base, cfg.train_positives, cfg.test_positives, cfg.recall_k);

  // Score every negative by the chosen criterion.
  std::vector<double> neg_scores(negatives.size(), 0.0);
  switch (cfg.method) {
    case NegAuditMethod::Representer: {
      const NormalizedEmbeddings norm = normalize_factors(base);
      const auto agg = aggregate_negative_importance(
          norm, cfg.mf.loss, cfg.train_positives, negatives);
      for (std::size_t s = 0; s < negatives.size(); ++s) {
        const auto& it = negatives.interactions[s];
        neg_scores[s] = agg.at({it.user, it.item});
      }
      break;
    }
    case NegAuditMethod::Loss:
      for (std::size_t s = 0; s < negatives.size(); ++s) {
        const auto& it = negatives.interactions[s];
        const double pred =
            base.user_mat.row(it.user).dot(base.item_mat.row(it.item));
        neg_scores[s] = cfg.mf.loss.value(0.0, pred);
      }
      break;
    case NegAuditMethod::Random: {
      neg_scores = random_scores(negatives.size(), derive_seed(cfg.seed, 22, 0));
      break;
    }
  }

  std::set<std::pair<int, int>> test_pairs;
  for (const auto& it : cfg.test_positives.interactions)
    test_pairs.insert({it.user, it.item});

  NegativeAuditReport report;
  for (double frac : cfg.removal_fractions) {
    const int n_remove =
        static_cast<int>(frac * static_cast<double>(negatives.size()));
    std::vector<int> order(negatives.size());
    std::iota(order.begin(), order.end(), 0);
    const bool largest =
        cfg.method == NegAuditMethod::Loss ? true : cfg.remove_largest;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return largest ? neg_scores[a] > neg_scores[b]
                     : neg_scores[a] < neg_scores[b];
    });
    order.resize(n_remove);

    NegativeAuditRow row;
    row.fraction = frac;
    row.removed = n_remove;
    InteractionSet pruned;
    pruned.n_users = negatives.n_users;
    pruned.n_items = negatives.n_items;
    std::set<int> rm(order.begin(), order.end());
    for (std::size_t s = 0; s < negatives.size(); ++s) {
      const auto& it = negatives.interactions[s];
      if (rm.count(static_cast<int>(s))) {
        if (test_pairs.count({it.user, it.item})) ++row.false_negative_hits;
      } else {
        pruned.interactions.push_back(it);
      }
    }
    MfSgdOptions opt2 = cfg.mf;
    opt2.seed = opt.seed;
    opt2.neg = NegConfig{pruned, cfg.negative_weight};
    const EmbeddingPair refit = fit_mf_sgd(cfg.train_positives, opt2).factors;
    row.recall_before = recall_before;
    row.recall_after = detail::mf_recall(refit, cfg.train_positives,
                                         cfg.test_positives, cfg.recall_k);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace hidrep
