#pragma once

#include <Eigen/Cholesky>

#include <cmath>
#include <iostream>
#include <random>
#include <vector>

#include "hidrep/errors.hpp"
#include "hidrep/l1_solver.hpp"
#include "hidrep/loss.hpp"
#include "hidrep/mf_sgd.hpp"
#include "hidrep/representers.hpp"
#include "hidrep/types.hpp"

namespace hidrep {

/// l2 representer: score_i = -ell'(y_i, <x_i, theta>) * <x_i, x_test>.
inline std::vector<double> l2_representer(const Vector& theta,
                                          const LossFunction& loss,
                                          const LabeledDataset& data,
                                          const SparseVector& x_test) {
  if (data.dim() != theta.size() || x_test.dim != theta.size())
    throw InvalidInputError("l2_representer: dimension mismatch");
  std::vector<double> scores(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double t = sparse_dense_inner(data.samples[i], theta);
    scores[i] = -loss.derivative(data.labels[i], t) *
                sparse_inner(data.samples[i], x_test);
  }
  return scores;
}

inline std::vector<double> l2_representer(const L1LinearModel& model,
                                          const LabeledDataset& data,
                                          const SparseVector& x_test) {
  return l2_representer(model.theta, model.loss, data, x_test);
}

struct InfluenceOptions {
  bool damp_if_singular = true;
  double damping = -1.0;         // < 0: 1e-8 * trace(H) / q
  bool self_consistent = false;  // scale the Hessian by 1/n as well
};

/// Support-restricted Hessian and its factorization, built once per model.
class InfluenceWorkspace {
 public:
  InfluenceWorkspace(const L1LinearModel& model, const LabeledDataset& data,
                     InfluenceOptions opt = {})
      : model_(model), opt_(opt) {
    for (Eigen::Index j = 0; j < model.theta.size(); ++j)
      if (model.theta[j] != 0.0) support_.push_back(j);
    const Eigen::Index q = static_cast<Eigen::Index>(support_.size());
    hessian_ = Matrix::Zero(q, q);
    std::vector<Eigen::Index> pos(model.theta.size(), -1);
    for (Eigen::Index c = 0; c < q; ++c) pos[support_[c]] = c;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      const double t = sparse_dense_inner(data.samples[i], model.theta);
      const double h = model.loss.second_derivative(data.labels[i], t);
      // Rank-one update on the gathered support coordinates.
      std::vector<std::pair<Eigen::Index, double>> sup;
      for (const auto& [idx, val] : data.samples[i].entries)
        if (pos[idx] >= 0) sup.emplace_back(pos[idx], val);
      for (const auto& [a, va] : sup)
        for (const auto& [b, vb] : sup) hessian_(a, b) += h * va * vb;
    }
    if (opt.self_consistent)
      hessian_ /= static_cast<double>(data.size());

    Eigen::LDLT<Matrix> ldlt(hessian_);
    const bool singular =
        q > 0 && (ldlt.info() != Eigen::Success ||
                  ldlt.vectorD().minCoeff() < 1e-12 * hessian_.trace() / q);
    if (singular) {
      if (!opt.damp_if_singular)
        throw InvalidInputError(
            "influence_l1: singular Hessian; enable damping");
      const double eps =
          opt.damping > 0 ? opt.damping : 1e-8 * hessian_.trace() / q;
      ldlt.compute(hessian_ + eps * Matrix::Identity(q, q));
    }
    ldlt_ = ldlt;
    pos_ = std::move(pos);
  }

  const std::vector<Eigen::Index>& support() const { return support_; }
  const Matrix& hessian() const { return hessian_; }

  /// score_i = -((1/n) ell' x_i|_q + lambda sign(theta)|_q)^T H^-1 x'|_q.
  std::vector<double> scores(const LabeledDataset& data,
                             const SparseVector& x_test) const {
    const Eigen::Index q = static_cast<Eigen::Index>(support_.size());
    std::vector<double> out(data.size(), 0.0);
    if (q == 0) {
      std::cerr << "influence_l1: empty support, all scores are zero\n";
      return out;
    }
    Vector xq = Vector::Zero(q);
    for (const auto& [idx, val] : x_test.entries)
      if (pos_[idx] >= 0) xq[pos_[idx]] = val;
    const Vector hinv_x = ldlt_.solve(xq);

    Vector sign_q(q);
    for (Eigen::Index c = 0; c < q; ++c)
      sign_q[c] = model_.theta[support_[c]] > 0 ? 1.0 : -1.0;
    const double sign_term = model_.lambda * sign_q.dot(hinv_x);

    const double n = static_cast<double>(data.size());
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      const double t = sparse_dense_inner(data.samples[i], model_.theta);
      const double d = model_.loss.derivative(data.labels[i], t) / n;
      double grad_term = 0;
      for (const auto& [idx, val] : data.samples[i].entries)
        if (pos_[idx] >= 0) grad_term += val * hinv_x[pos_[idx]];
      out[i] = -(d * grad_term + sign_term);
    }
    return out;
  }

 private:
  const L1LinearModel& model_;
  InfluenceOptions opt_;
  std::vector<Eigen::Index> support_;
  std::vector<Eigen::Index> pos_;
  Matrix hessian_;
  Eigen::LDLT<Matrix> ldlt_;
};

inline std::vector<double> influence_l1(const L1LinearModel& model,
                                        const LabeledDataset& data,
                                        const SparseVector& x_test,
                                        InfluenceOptions opt = {}) {
  return InfluenceWorkspace(model, data, opt).scores(data, x_test);
}

/// TracInCP on matrix-factorization checkpoints with the prediction-score
/// test gradient; raw (un-normalized) checkpoint embeddings.
inline double tracin_cp(const CheckpointTrace& trace, const LossFunction& loss,
                        double y_train, int i, int j, int i_test, int j_test) {
  if (trace.snapshots.empty()) return 0.0;
  const Eigen::Index k = trace.snapshots[0].k();
  double total = 0;
  for (std::size_t t = 0; t < trace.snapshots.size(); ++t) {
    const EmbeddingPair& cp = trace.snapshots[t];
    if (cp.k() != k)
      throw InvalidInputError("tracin_cp: inconsistent k across checkpoints");
    const double eta = trace.learning_rates[t];
    const double pred = cp.user_mat.row(i).dot(cp.item_mat.row(j));
    const double dloss = loss.derivative(y_train, pred);
    if (j == j_test)
      total += -eta * dloss * cp.user_mat.row(i).dot(cp.user_mat.row(i_test));
    if (i == i_test)
      total += -eta * dloss * cp.item_mat.row(j).dot(cp.item_mat.row(j_test));
  }
  return total;
}

inline double tracin_cp(const CheckpointTrace& trace, const LossFunction& loss,
                        const InteractionSet& train, int i, int j, int i_test,
                        int j_test) {
  for (const auto& it : train.interactions)
    if (it.user == i && it.item == j)
      return tracin_cp(trace, loss, it.rating, i, j, i_test, j_test);
  throw InvalidInputError("tracin_cp: (i, j) not in the training set");
}

/// i.i.d. uniform(-1, 1) scores, deterministic per seed.
inline std::vector<double> random_scores(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> out(n);
  for (auto& x : out) x = dist(rng);
  return out;
}

}  // namespace hidrep
