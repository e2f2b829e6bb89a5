#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "hidrep/errors.hpp"
#include "hidrep/loss.hpp"
#include "hidrep/types.hpp"

namespace hidrep {

/// Weighted negative-sample term: positives use the plain loss, negatives
/// are down-weighted by `weight` (BCE with label 0).
struct NegConfig {
  InteractionSet negatives;
  double weight = 0.05;
};

/// Embedding snapshots along the SGD trajectory, with their learning rates.
struct CheckpointTrace {
  std::vector<EmbeddingPair> snapshots;
  std::vector<double> learning_rates;

  std::size_t size() const { return snapshots.size(); }
};

struct MfSgdOptions {
  int k = 8;
  double lr = 0.1;
  int epochs = 20;
  int batch = 128;
  LossFunction loss{LossKind::Squared};
  std::optional<NegConfig> neg;
  std::uint64_t seed = 0;
  std::vector<int> checkpoint_epochs;  // snapshot after these epochs (0-based)
  double init_scale = -1.0;            // < 0: uniform(-1/sqrt(k), 1/sqrt(k))
};

struct MfSgdResult {
  EmbeddingPair factors;
  CheckpointTrace trace;
};

/// Plain minibatch SGD on sum_(i,j) ell(y_ij, <U_i, V_j>), uniformly
/// shuffled each epoch; deterministic for a fixed seed.
inline MfSgdResult fit_mf_sgd(const InteractionSet& train,
                              const MfSgdOptions& opt) {
  if (opt.k < 1) throw InvalidInputError("fit_mf_sgd: k must be >= 1");
  if (opt.lr <= 0) throw InvalidInputError("fit_mf_sgd: lr must be > 0");
  if (opt.batch < 1) throw InvalidInputError("fit_mf_sgd: batch must be >= 1");
  train.validate();

  std::mt19937_64 rng(opt.seed);
  const double scale =
      opt.init_scale > 0 ? opt.init_scale : 1.0 / std::sqrt(double(opt.k));
  std::uniform_real_distribution<double> init(-scale, scale);

  Matrix U(train.n_users, opt.k), V(train.n_items, opt.k);
  for (Eigen::Index i = 0; i < U.rows(); ++i)
    for (Eigen::Index c = 0; c < opt.k; ++c) U(i, c) = init(rng);
  for (Eigen::Index j = 0; j < V.rows(); ++j)
    for (Eigen::Index c = 0; c < opt.k; ++c) V(j, c) = init(rng);

  // Samples: (user, item, label, weight).
  struct Sample {
    int user, item;
    double y, w;
  };
  std::vector<Sample> samples;
  samples.reserve(train.size() +
                  (opt.neg ? opt.neg->negatives.size() : 0));
  for (const auto& it : train.interactions)
    samples.push_back({it.user, it.item, it.rating, 1.0});
  if (opt.neg)
    for (const auto& it : opt.neg->negatives.interactions)
      samples.push_back({it.user, it.item, 0.0, opt.neg->weight});

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  MfSgdResult out;
  Matrix gU = Matrix::Zero(U.rows(), opt.k);
  Matrix gV = Matrix::Zero(V.rows(), opt.k);
  std::vector<int> touched_users, touched_items;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opt.batch)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(opt.batch));
      const double inv_b = 1.0 / static_cast<double>(end - start);
      touched_users.clear();
      touched_items.clear();
      for (std::size_t s = start; s < end; ++s) {
        const Sample& smp = samples[order[s]];
        const double pred = U.row(smp.user).dot(V.row(smp.item));
        const double d = smp.w * opt.loss.derivative(smp.y, pred) * inv_b;
        if (!std::isfinite(d))
          throw ConvergenceError("fit_mf_sgd: diverged at epoch " +
                                     std::to_string(epoch),
                                 pred);
        if (gU.row(smp.user).isZero(0)) touched_users.push_back(smp.user);
        if (gV.row(smp.item).isZero(0)) touched_items.push_back(smp.item);
        gU.row(smp.user) += d * V.row(smp.item);
        gV.row(smp.item) += d * U.row(smp.user);
      }
      for (int u : touched_users) {
        U.row(u) -= opt.lr * gU.row(u);
        gU.row(u).setZero();
      }
      for (int j : touched_items) {
        V.row(j) -= opt.lr * gV.row(j);
        gV.row(j).setZero();
      }
    }
    if (std::find(opt.checkpoint_epochs.begin(), opt.checkpoint_epochs.end(),
                  epoch) != opt.checkpoint_epochs.end()) {
      out.trace.snapshots.push_back({U, V, false});
      out.trace.learning_rates.push_back(opt.lr);
    }
  }
  out.factors = {U, V, false};
  return out;
}

/// Unobserved (user, item) pairs: either all of them, or a uniform sample
/// without replacement. Always disjoint from the positives.
inline InteractionSet uniform_negative_sample(
    const InteractionSet& positives, std::optional<std::size_t> count,
    std::uint64_t seed = 0) {
  positives.validate();
  const std::size_t total = static_cast<std::size_t>(positives.n_users) *
                            static_cast<std::size_t>(positives.n_items);
  std::unordered_set<std::size_t> observed;
  observed.reserve(positives.size() * 2);
  for (const auto& it : positives.interactions)
    observed.insert(static_cast<std::size_t>(it.user) * positives.n_items +
                    it.item);
  const std::size_t n_unobserved = total - observed.size();

  InteractionSet out;
  out.n_users = positives.n_users;
  out.n_items = positives.n_items;
  if (!count) {
    for (std::size_t code = 0; code < total; ++code)
      if (!observed.count(code))
        out.interactions.push_back(
            {static_cast<int>(code / positives.n_items),
             static_cast<int>(code % positives.n_items), 0.0, {}});
    return out;
  }
  if (*count > n_unobserved)
    throw InvalidInputError(
        "uniform_negative_sample: requested more pairs than unobserved");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  std::unordered_set<std::size_t> chosen;
  while (chosen.size() < *count) {
    const std::size_t code = pick(rng);
    if (!observed.count(code)) chosen.insert(code);
  }
  std::vector<std::size_t> codes(chosen.begin(), chosen.end());
  std::sort(codes.begin(), codes.end());
  for (std::size_t code : codes)
    out.interactions.push_back({static_cast<int>(code / positives.n_items),
                                static_cast<int>(code % positives.n_items),
                                0.0,
                                {}});
  return out;
}

}  // namespace hidrep
