#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "hidrep/errors.hpp"

namespace hidrep {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Sparse vector in R^p stored as sorted (index, value) pairs.
struct SparseVector {
  Eigen::Index dim = 0;
  std::vector<std::pair<Eigen::Index, double>> entries;

  SparseVector() = default;
  SparseVector(Eigen::Index p,
               std::vector<std::pair<Eigen::Index, double>> e)
      : dim(p), entries(std::move(e)) {
    validate();
  }

  void validate() const {
    Eigen::Index prev = -1;
    for (const auto& [idx, val] : entries) {
      if (idx <= prev || idx >= dim)
        throw InvalidInputError("SparseVector: indices must be strictly "
                                "increasing and < dim");
      if (!std::isfinite(val))
        throw InvalidInputError("SparseVector: non-finite value");
      prev = idx;
    }
  }

  Vector dense() const {
    Vector v = Vector::Zero(dim);
    for (const auto& [idx, val] : entries) v[idx] = val;
    return v;
  }

  double l1_norm() const {
    double s = 0;
    for (const auto& [idx, val] : entries) s += std::abs(val);
    return s;
  }

  static SparseVector from_dense(const Vector& v, double tol = 0.0) {
    SparseVector out;
    out.dim = v.size();
    for (Eigen::Index j = 0; j < v.size(); ++j)
      if (std::abs(v[j]) > tol) out.entries.emplace_back(j, v[j]);
    return out;
  }
};

inline double sparse_inner(const SparseVector& a, const SparseVector& b) {
  if (a.dim != b.dim)
    throw InvalidInputError("sparse_inner: dimension mismatch");
  double s = 0;
  auto ia = a.entries.begin();
  auto ib = b.entries.begin();
  while (ia != a.entries.end() && ib != b.entries.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      s += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return s;
}

/// Inner product of a sparse vector with a dense vector.
inline double sparse_dense_inner(const SparseVector& a, const Vector& v) {
  if (a.dim != v.size())
    throw InvalidInputError("sparse_dense_inner: dimension mismatch");
  double s = 0;
  for (const auto& [idx, val] : a.entries) s += val * v[idx];
  return s;
}

/// Classification / regression dataset of sparse rows with labels.
struct LabeledDataset {
  std::vector<SparseVector> samples;
  std::vector<double> labels;

  Eigen::Index size() const {
    return static_cast<Eigen::Index>(samples.size());
  }
  Eigen::Index dim() const { return samples.empty() ? 0 : samples[0].dim; }

  void validate() const {
    if (samples.size() != labels.size())
      throw InvalidInputError("LabeledDataset: samples/labels length mismatch");
    for (const auto& s : samples)
      if (s.dim != dim())
        throw InvalidInputError("LabeledDataset: inconsistent dimension");
  }
};

/// A single observed (user, item, rating) triple.
struct Interaction {
  int user = 0;
  int item = 0;
  double rating = 0.0;
  std::optional<std::int64_t> timestamp;
};

/// Observed entries of an incomplete |U| x |I| rating matrix.
struct InteractionSet {
  int n_users = 0;
  int n_items = 0;
  std::vector<Interaction> interactions;

  std::size_t size() const { return interactions.size(); }

  void validate() const {
    std::vector<std::pair<int, int>> seen;
    seen.reserve(interactions.size());
    for (const auto& it : interactions) {
      if (it.user < 0 || it.user >= n_users || it.item < 0 ||
          it.item >= n_items)
        throw InvalidInputError("InteractionSet: id out of range");
      if (!std::isfinite(it.rating))
        throw InvalidInputError("InteractionSet: non-finite rating");
      seen.emplace_back(it.user, it.item);
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
      throw InvalidInputError("InteractionSet: duplicate (user, item) pair");
  }
};

/// User and item embedding matrices with a shared inner dimension.
struct EmbeddingPair {
  Matrix user_mat;  // |U| x k
  Matrix item_mat;  // |I| x k
  bool normalized = false;

  Eigen::Index k() const { return user_mat.cols(); }

  void validate() const {
    if (user_mat.cols() != item_mat.cols())
      throw InvalidInputError("EmbeddingPair: inner dimension mismatch");
    if (!user_mat.allFinite() || !item_mat.allFinite())
      throw InvalidInputError("EmbeddingPair: non-finite entries");
  }
};

}  // namespace hidrep
