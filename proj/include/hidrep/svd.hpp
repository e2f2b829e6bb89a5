#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <random>

#include "hidrep/errors.hpp"
#include "hidrep/types.hpp"

namespace hidrep {

/// Thin SVD M = U * diag(S) * V^T with S sorted non-increasing.
struct SvdTriple {
  Matrix U;  // m x r
  Vector S;  // r
  Matrix V;  // n x r

  Eigen::Index rank() const { return S.size(); }

  Matrix reconstruct() const {
    if (rank() == 0) return Matrix::Zero(U.rows(), V.rows());
    return U * S.asDiagonal() * V.transpose();
  }
};

namespace detail {

// First nonzero entry of each left singular vector is made nonnegative.
inline void fix_signs(Matrix& U, Matrix& V) {
  for (Eigen::Index c = 0; c < U.cols(); ++c) {
    double lead = 0;
    for (Eigen::Index r = 0; r < U.rows(); ++r) {
      if (std::abs(U(r, c)) > 1e-300) {
        lead = U(r, c);
        break;
      }
    }
    if (lead < 0) {
      U.col(c) = -U.col(c);
      V.col(c) = -V.col(c);
    }
  }
}

inline SvdTriple truncate(const Matrix& U, const Vector& S, const Matrix& V,
                          double rank_tol) {
  Eigen::Index r = 0;
  const double smax = S.size() > 0 ? S[0] : 0.0;
  for (Eigen::Index i = 0; i < S.size(); ++i)
    if (S[i] > rank_tol * smax && S[i] > 0) ++r;
  SvdTriple t;
  t.U = U.leftCols(r);
  t.S = S.head(r);
  t.V = V.leftCols(r);
  fix_signs(t.U, t.V);
  return t;
}

}  // namespace detail

constexpr double kDefaultRankTol = 1e-12;

inline SvdTriple thin_svd(const Matrix& M, double rank_tol = kDefaultRankTol) {
  if (!M.allFinite()) throw InvalidInputError("thin_svd: non-finite input");
  if (rank_tol < 0) throw InvalidInputError("thin_svd: rank_tol must be >= 0");
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return detail::truncate(svd.matrixU(), svd.singularValues(), svd.matrixV(),
                          rank_tol);
}

/// Gaussian-sketch randomized SVD with subspace (power) iterations.
inline SvdTriple randomized_svd(const Matrix& M, Eigen::Index k,
                                Eigen::Index oversample = 8,
                                Eigen::Index power_iters = 2,
                                std::uint64_t seed = 0) {
  if (!M.allFinite())
    throw InvalidInputError("randomized_svd: non-finite input");
  const Eigen::Index mindim = std::min(M.rows(), M.cols());
  if (k < 1 || k > mindim)
    throw InvalidInputError("randomized_svd: k must be in [1, min(rows, cols)]");

  const Eigen::Index l = std::min(k + oversample, mindim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix omega(M.cols(), l);
  for (Eigen::Index j = 0; j < l; ++j)
    for (Eigen::Index i = 0; i < M.cols(); ++i) omega(i, j) = gauss(rng);

  auto orth = [](const Matrix& A) -> Matrix {
    Eigen::HouseholderQR<Matrix> qr(A);
    return qr.householderQ() * Matrix::Identity(A.rows(), A.cols());
  };

  Matrix Q = orth(M * omega);
  for (Eigen::Index t = 0; t < power_iters; ++t) {
    Q = orth(M.transpose() * Q);
    Q = orth(M * Q);
  }

  Matrix B = Q.transpose() * M;  // l x n
  Eigen::JacobiSVD<Matrix> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Matrix U = Q * svd.matrixU();
  const Eigen::Index r = std::min<Eigen::Index>(k, svd.singularValues().size());
  SvdTriple out;
  out.U = U.leftCols(r);
  out.S = svd.singularValues().head(r);
  out.V = svd.matrixV().leftCols(r);
  detail::fix_signs(out.U, out.V);
  return out;
}

/// Singular-value soft-threshold: singular values become max(S_i - tau, 0),
/// zeroed directions dropped.
inline SvdTriple svt(const Matrix& M, double tau,
                     double rank_tol = kDefaultRankTol) {
  if (tau < 0) throw InvalidInputError("svt: tau must be >= 0");
  SvdTriple t = thin_svd(M, rank_tol);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < t.S.size(); ++i)
    if (t.S[i] > tau) ++r;
  SvdTriple out;
  out.U = t.U.leftCols(r);
  out.S = t.S.head(r).array() - tau;
  out.V = t.V.leftCols(r);
  return out;
}

}  // namespace hidrep
