#pragma once

#include <cmath>
#include <string>

#include "hidrep/errors.hpp"
#include "hidrep/loss.hpp"
#include "hidrep/svd.hpp"
#include "hidrep/types.hpp"

namespace hidrep {

/// Minimizer of (1/|D|) sum_(i,j) 0.5*(Theta_ij - y_ij)^2 + lambda*|Theta|_*
/// held as its SVD, together with the observed entries it was fit on.
struct LowRankModel {
  SvdTriple svd;
  double lambda = 0.0;
  LossFunction loss{LossKind::Squared};
  InteractionSet observed;
  double converged_delta = 0.0;
  int iterations = 0;

  Eigen::Index rank() const { return svd.rank(); }

  double predict(int user, int item) const {
    double s = 0;
    for (Eigen::Index r = 0; r < svd.rank(); ++r)
      s += svd.U(user, r) * svd.S[r] * svd.V(item, r);
    return s;
  }
};

/// Iterative singular-value soft-thresholding for matrix completion.
///
/// The svt threshold is lambda * |D|: the loss term is scaled by 1/|D|, so
/// the prox of the unscaled completion objective uses the rescaled penalty.
inline LowRankModel soft_impute(const InteractionSet& observed, double lambda,
                                int max_rank = -1, double tol = 1e-9,
                                int max_iter = 500) {
  if (lambda <= 0) throw InvalidInputError("soft_impute: lambda must be > 0");
  observed.validate();
  const double tau = lambda * static_cast<double>(observed.size());

  Matrix theta = Matrix::Zero(observed.n_users, observed.n_items);
  SvdTriple triple;
  double delta = 0;
  int iters = 0;
  for (; iters < max_iter; ++iters) {
    Matrix z = theta;
    for (const auto& it : observed.interactions)
      z(it.user, it.item) = it.rating;
    triple = svt(z, tau);
    if (max_rank >= 0 && triple.rank() > max_rank)
      throw ConvergenceError(
          "soft_impute: iterate exceeded max_rank " +
              std::to_string(max_rank) +
              "; increase the rank budget or lambda",
          static_cast<double>(triple.rank()));
    Matrix theta_new = triple.reconstruct();
    delta = (theta_new - theta).norm() / std::max(1.0, theta.norm());
    theta = theta_new;
    if (delta <= tol) break;
  }

  LowRankModel model;
  model.svd = triple;
  model.lambda = lambda;
  model.observed = observed;
  model.converged_delta = delta;
  model.iterations = iters + 1;
  return model;
}

/// Value of the scaled completion objective at the model's fixed point.
inline double completion_objective(const LowRankModel& m) {
  double loss = 0;
  for (const auto& it : m.observed.interactions) {
    const double d = m.predict(it.user, it.item) - it.rating;
    loss += 0.5 * d * d;
  }
  loss /= static_cast<double>(m.observed.size());
  return loss + m.lambda * m.svd.S.sum();
}

}  // namespace hidrep
