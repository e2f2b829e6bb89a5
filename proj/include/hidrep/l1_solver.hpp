#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "hidrep/errors.hpp"
#include "hidrep/loss.hpp"
#include "hidrep/types.hpp"

namespace hidrep {

/// Fitted minimizer of (1/n) sum ell(y_i, <x_i, theta>) + lambda * |theta|_1.
struct L1LinearModel {
  Vector theta;
  double lambda = 0.0;
  LossFunction loss;
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Thrown when fit_l1 runs out of iterations; carries the best iterate.
class L1ConvergenceError : public ConvergenceError {
 public:
  L1ConvergenceError(const std::string& msg, L1LinearModel best)
      : ConvergenceError(msg, best.kkt_residual), best_(std::move(best)) {}
  const L1LinearModel& best_iterate() const { return best_; }

 private:
  L1LinearModel best_;
};

namespace detail {

inline Vector l1_gradient(const LabeledDataset& data, const LossFunction& loss,
                          const Vector& theta) {
  const double n = static_cast<double>(data.size());
  Vector g = Vector::Zero(theta.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double t = sparse_dense_inner(data.samples[i], theta);
    const double d = loss.derivative(data.labels[i], t) / n;
    for (const auto& [idx, val] : data.samples[i].entries) g[idx] += d * val;
  }
  return g;
}

inline double l1_smooth_value(const LabeledDataset& data,
                              const LossFunction& loss, const Vector& theta) {
  double v = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i)
    v += loss.value(data.labels[i],
                    sparse_dense_inner(data.samples[i], theta));
  return v / static_cast<double>(data.size());
}

inline Vector soft_threshold(const Vector& v, double tau) {
  return v.unaryExpr([tau](double x) {
    return x > tau ? x - tau : (x < -tau ? x + tau : 0.0);
  });
}

}  // namespace detail

/// Max-norm violation of the l1 subgradient optimality condition:
/// |g_j + lambda*sign(theta_j)| on the support, max(0, |g_j| - lambda) off it.
inline double kkt_residual_l1(const Vector& theta, double lambda,
                              const LossFunction& loss,
                              const LabeledDataset& data) {
  const Vector g = detail::l1_gradient(data, loss, theta);
  double r = 0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (theta[j] != 0.0)
      r = std::max(r, std::abs(g[j] + lambda * (theta[j] > 0 ? 1.0 : -1.0)));
    else
      r = std::max(r, std::max(0.0, std::abs(g[j]) - lambda));
  }
  return r;
}

inline double kkt_residual_l1(const L1LinearModel& model,
                              const LabeledDataset& data) {
  return kkt_residual_l1(model.theta, model.lambda, model.loss, data);
}

/// FISTA with backtracking line search, stopping on the KKT residual.
inline L1LinearModel fit_l1(const LabeledDataset& data,
                            const LossFunction& loss, double lambda,
                            double tol = 1e-8, int max_iter = 20000,
                            const Vector* warm_start = nullptr) {
  if (lambda <= 0) throw InvalidInputError("fit_l1: lambda must be > 0");
  if (tol <= 0) throw InvalidInputError("fit_l1: tol must be > 0");
  data.validate();
  if (data.size() == 0) throw InvalidInputError("fit_l1: empty dataset");
  const Eigen::Index p = data.dim();

  Vector theta = warm_start ? *warm_start : Vector::Zero(p);
  Vector momentum = theta;
  double t_acc = 1.0;
  double step = 1.0;
  double obj_prev =
      detail::l1_smooth_value(data, loss, theta) + lambda * theta.lpNorm<1>();

  L1LinearModel model;
  model.lambda = lambda;
  model.loss = loss;

  for (int iter = 0; iter < max_iter; ++iter) {
    const Vector g = detail::l1_gradient(data, loss, momentum);
    const double f_y = detail::l1_smooth_value(data, loss, momentum);

    // Backtrack until the quadratic upper bound holds at the prox point.
    Vector theta_new;
    for (;;) {
      theta_new = detail::soft_threshold(momentum - step * g, step * lambda);
      const Vector diff = theta_new - momentum;
      const double f_new = detail::l1_smooth_value(data, loss, theta_new);
      const double bound =
          f_y + g.dot(diff) + diff.squaredNorm() / (2.0 * step);
      if (f_new <= bound + 1e-15 * std::abs(bound)) break;
      step *= 0.5;
      if (step < 1e-18)
        throw ConvergenceError("fit_l1: line search failed", f_new);
    }

    // Monotone variant: fall back to the previous iterate when the
    // accelerated step raises the objective.
    const double obj_new = detail::l1_smooth_value(data, loss, theta_new) +
                           lambda * theta_new.lpNorm<1>();
    double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t_acc * t_acc)) / 2.0;
    if (obj_new > obj_prev + 1e-12 * (1.0 + std::abs(obj_prev))) {
      momentum = theta;  // restart acceleration
      t_acc = 1.0;
      const double res = kkt_residual_l1(theta, lambda, loss, data);
      if (res <= tol) {
        model.theta = theta;
        model.kkt_residual = res;
        model.iterations = iter + 1;
        return model;
      }
      continue;
    }
    momentum = theta_new + ((t_acc - 1.0) / t_next) * (theta_new - theta);
    theta = theta_new;
    t_acc = t_next;
    obj_prev = obj_new;

    const double res = kkt_residual_l1(theta, lambda, loss, data);
    if (res <= tol) {
      model.theta = theta;
      model.kkt_residual = res;
      model.iterations = iter + 1;
      return model;
    }
    step *= 1.5;  // allow the step to grow back after backtracking
  }
  model.theta = theta;
  model.kkt_residual = kkt_residual_l1(theta, lambda, loss, data);
  model.iterations = max_iter;
  throw L1ConvergenceError("fit_l1: no convergence within " +
                               std::to_string(max_iter) +
                               " iterations (residual " +
                               std::to_string(model.kkt_residual) + ")",
                           model);
}

}  // namespace hidrep
