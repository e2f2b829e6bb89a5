#pragma once

#include <cmath>
#include <string>

#include "hidrep/errors.hpp"

namespace hidrep {

enum class LossKind { Squared, Logistic, Bce };

inline double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// Pointwise loss ell(y, t) with derivatives taken in the prediction t.
///
/// Conventions: squared loss 0.5*(t-y)^2; logistic log(1+exp(-y*t)) with
/// labels in {-1,+1}; BCE on sigmoid(t) with labels in {0,1}.
struct LossFunction {
  LossKind kind = LossKind::Squared;

  double value(double y, double t) const {
    switch (kind) {
      case LossKind::Squared:
        return 0.5 * (t - y) * (t - y);
      case LossKind::Logistic: {
        const double m = -y * t;
        // log(1 + exp(m)) without overflow
        return m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
      }
      case LossKind::Bce: {
        const double p = sigmoid(t);
        const double eps = 1e-300;
        return -y * std::log(p + eps) - (1.0 - y) * std::log(1.0 - p + eps);
      }
    }
    return 0;
  }

  double derivative(double y, double t) const {
    switch (kind) {
      case LossKind::Squared:
        return t - y;
      case LossKind::Logistic:
        return -y * sigmoid(-y * t);
      case LossKind::Bce:
        return sigmoid(t) - y;
    }
    return 0;
  }

  double second_derivative(double y, double t) const {
    switch (kind) {
      case LossKind::Squared:
        return 1.0;
      case LossKind::Logistic: {
        const double s = sigmoid(y * t);
        return s * (1.0 - s);
      }
      case LossKind::Bce: {
        const double s = sigmoid(t);
        return s * (1.0 - s);
      }
    }
    return 0;
  }

  std::string name() const {
    switch (kind) {
      case LossKind::Squared:
        return "squared";
      case LossKind::Logistic:
        return "logistic";
      case LossKind::Bce:
        return "bce";
    }
    return "?";
  }

  static LossFunction from_name(const std::string& s) {
    if (s == "squared") return {LossKind::Squared};
    if (s == "logistic") return {LossKind::Logistic};
    if (s == "bce") return {LossKind::Bce};
    throw InvalidInputError("unknown loss: " + s);
  }
};

}  // namespace hidrep
