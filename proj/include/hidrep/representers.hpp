#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "hidrep/errors.hpp"
#include "hidrep/l1_solver.hpp"
#include "hidrep/loss.hpp"
#include "hidrep/soft_impute.hpp"
#include "hidrep/svd.hpp"
#include "hidrep/types.hpp"

namespace hidrep {

enum class Side { Na, User, Item, Column, Row };

inline const char* side_name(Side s) {
  switch (s) {
    case Side::Na: return "na";
    case Side::User: return "user";
    case Side::Item: return "item";
    case Side::Column: return "column";
    case Side::Row: return "row";
  }
  return "?";
}

/// One training point's contribution to a test prediction:
/// importance = global * local.
struct AttributionRecord {
  int train_index = -1;                // l1 / nuclear sample index
  int train_user = -1;                 // CF only
  int train_item = -1;                 // CF only
  double observed = 0.0;               // label or rating
  double global = 0.0;
  double local = 0.0;
  double importance = 0.0;
  Side side = Side::Na;
};

/// Sort by |importance| descending, stable tie-break by train identifier.
inline void sort_records(std::vector<AttributionRecord>& recs) {
  std::stable_sort(recs.begin(), recs.end(),
                   [](const AttributionRecord& a, const AttributionRecord& b) {
                     const double ma = std::abs(a.importance);
                     const double mb = std::abs(b.importance);
                     if (ma != mb) return ma > mb;
                     return std::tie(a.train_index, a.train_user,
                                     a.train_item) <
                            std::tie(b.train_index, b.train_user,
                                     b.train_item);
                   });
}

// ---------------------------------------------------------------------------
// l1 representers.
// ---------------------------------------------------------------------------

/// Global importances alpha_i = -(1/(n*lambda)) * ell'(y_i, <x_i, theta>).
inline std::vector<double> l1_global(const L1LinearModel& model,
                                     const LabeledDataset& data) {
  if (data.dim() != model.theta.size())
    throw InvalidInputError("l1_global: dimension mismatch");
  const double n = static_cast<double>(data.size());
  std::vector<double> alpha(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double t = sparse_dense_inner(data.samples[i], model.theta);
    alpha[i] =
        -model.loss.derivative(data.labels[i], t) / (n * model.lambda);
  }
  return alpha;
}

/// Precomputed sparse projector sqrt(|theta|) with the training samples
/// already projected, so each query is a pass of sparse inner products.
class L1Attributor {
 public:
  L1Attributor(const L1LinearModel& model, const LabeledDataset& data)
      : model_(model), alpha_(l1_global(model, data)), labels_(data.labels) {
    weights_ = model.theta.array().abs().sqrt();
    projected_.reserve(data.samples.size());
    for (const auto& s : data.samples) projected_.push_back(project(s));
  }

  std::vector<AttributionRecord> attribute(const SparseVector& x_test) const {
    if (x_test.dim != weights_.size())
      throw InvalidInputError("l1_attribute: dimension mismatch");
    const SparseVector px = project(x_test);
    std::vector<AttributionRecord> recs(projected_.size());
    for (std::size_t i = 0; i < projected_.size(); ++i) {
      AttributionRecord& r = recs[i];
      r.train_index = static_cast<int>(i);
      r.observed = labels_[i];
      r.global = alpha_[i];
      r.local = sparse_inner(projected_[i], px);
      r.importance = r.global * r.local;
    }
    return recs;
  }

  const std::vector<double>& globals() const { return alpha_; }

 private:
  SparseVector project(const SparseVector& x) const {
    SparseVector out;
    out.dim = x.dim;
    for (const auto& [idx, val] : x.entries)
      if (weights_[idx] != 0.0) out.entries.emplace_back(idx, weights_[idx] * val);
    return out;
  }

  const L1LinearModel& model_;
  Vector weights_;  // sqrt(|theta|) per coordinate
  std::vector<double> alpha_;
  std::vector<double> labels_;
  std::vector<SparseVector> projected_;
};

inline std::vector<AttributionRecord> l1_attribute(
    const L1LinearModel& model, const LabeledDataset& data,
    const SparseVector& x_test) {
  return L1Attributor(model, data).attribute(x_test);
}

// ---------------------------------------------------------------------------
// Nuclear-norm representers for general matrix samples.
// ---------------------------------------------------------------------------

enum class NuclearSide { Column, Row, Average };

struct MatrixSample {
  Matrix x;
  double y = 0.0;
};

/// Attribution for nuclear-norm minimizers given as an SVD triple, with
/// training samples as general d1 x d2 matrices.
inline std::vector<AttributionRecord> nuclear_attribute(
    const SvdTriple& svd, double lambda, const LossFunction& loss,
    const std::vector<MatrixSample>& samples, const Matrix& x_test,
    NuclearSide side) {
  const Eigen::Index d1 = svd.U.rows();
  const Eigen::Index d2 = svd.V.rows();
  if (x_test.rows() != d1 || x_test.cols() != d2)
    throw InvalidInputError("nuclear_attribute: test sample shape mismatch");
  const double n = static_cast<double>(samples.size());
  const Vector sqrt_s = svd.S.array().sqrt();
  const Matrix theta = svd.reconstruct();
  // Column projector sqrt(S)*U^T, row projector V*sqrt(S).
  const Matrix pc = sqrt_s.asDiagonal() * svd.U.transpose();  // k x d1
  const Matrix pr = svd.V * sqrt_s.asDiagonal();              // d2 x k
  const Matrix test_col = pc * x_test;                        // k x d2
  const Matrix test_row = x_test * pr;                        // d1 x k

  std::vector<AttributionRecord> recs(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const MatrixSample& s = samples[i];
    if (s.x.rows() != d1 || s.x.cols() != d2)
      throw InvalidInputError("nuclear_attribute: train sample shape mismatch");
    AttributionRecord& r = recs[i];
    r.train_index = static_cast<int>(i);
    r.observed = s.y;
    const double pred = (s.x.array() * theta.array()).sum();
    r.global = -loss.derivative(s.y, pred) / (n * lambda);
    const double col = ((pc * s.x).array() * test_col.array()).sum();
    const double row = ((s.x * pr).array() * test_row.array()).sum();
    switch (side) {
      case NuclearSide::Column:
        r.local = col;
        r.side = Side::Column;
        break;
      case NuclearSide::Row:
        r.local = row;
        r.side = Side::Row;
        break;
      case NuclearSide::Average:
        r.local = 0.5 * (col + row);
        r.side = Side::Na;
        break;
    }
    r.importance = r.global * r.local;
  }
  return recs;
}

/// Entry-sample specialization for completion models: the training samples
/// are the observed entries, each a unit matrix e_i e_j^T.
inline std::vector<AttributionRecord> nuclear_attribute_entries(
    const LowRankModel& model, int test_user, int test_item,
    NuclearSide side) {
  const auto& svd = model.svd;
  if (test_user < 0 || test_user >= svd.U.rows() || test_item < 0 ||
      test_item >= svd.V.rows())
    throw InvalidInputError("nuclear_attribute_entries: test entry out of "
                            "range");
  const double n = static_cast<double>(model.observed.size());
  const Vector sqrt_s = svd.S.array().sqrt();
  // Normalized rows: u_t[i] = sqrt(S) .* U_i, v_t[j] = sqrt(S) .* V_j.
  const Matrix u_t = svd.U * sqrt_s.asDiagonal();
  const Matrix v_t = svd.V * sqrt_s.asDiagonal();

  std::vector<AttributionRecord> recs(model.observed.size());
  for (std::size_t idx = 0; idx < model.observed.size(); ++idx) {
    const Interaction& it = model.observed.interactions[idx];
    AttributionRecord& r = recs[idx];
    r.train_index = static_cast<int>(idx);
    r.train_user = it.user;
    r.train_item = it.item;
    r.observed = it.rating;
    const double pred = model.predict(it.user, it.item);
    r.global = -model.loss.derivative(it.rating, pred) / (n * model.lambda);
    const double col = it.item == test_item
                           ? u_t.row(it.user).dot(u_t.row(test_user))
                           : 0.0;
    const double row = it.user == test_user
                           ? v_t.row(it.item).dot(v_t.row(test_item))
                           : 0.0;
    switch (side) {
      case NuclearSide::Column:
        r.local = col;
        r.side = Side::Column;
        break;
      case NuclearSide::Row:
        r.local = row;
        r.side = Side::Row;
        break;
      case NuclearSide::Average:
        r.local = 0.5 * (col + row);
        r.side = Side::Na;
        break;
    }
    r.importance = r.global * r.local;
  }
  return recs;
}

// ---------------------------------------------------------------------------
// Collaborative-filtering representers.
// ---------------------------------------------------------------------------

/// Factored normalization of an embedding pair: U~ V~^T equals U^ V^^T while
/// U~^T U~ = V~^T V~ = diag(sigma).
struct NormalizedEmbeddings {
  Matrix u_tilde;  // |U| x k
  Matrix v_tilde;  // |I| x k
  Vector sigma;    // k

  double predict(int user, int item) const {
    return u_tilde.row(user).dot(v_tilde.row(item));
  }
};

/// Factored SVD of U^ V^^T without forming the |U| x |I| product:
/// SVD(U^) = U1 S1 V1^T, SVD(V^^T) = U2 S2 V2^T,
/// SVD(S1 V1^T U2 S2) = U3 S3 V3^T, then
/// U~ = U1 U3 sqrt(S3) and V~ = V2 V3 sqrt(S3).
inline NormalizedEmbeddings normalize_factors(const EmbeddingPair& pair) {
  pair.validate();
  NormalizedEmbeddings out;
  const SvdTriple s1 = thin_svd(pair.user_mat);
  const SvdTriple s2 = thin_svd(pair.item_mat.transpose());
  if (s1.rank() == 0 || s2.rank() == 0) {
    out.u_tilde = Matrix::Zero(pair.user_mat.rows(), 0);
    out.v_tilde = Matrix::Zero(pair.item_mat.rows(), 0);
    out.sigma = Vector::Zero(0);
    return out;
  }
  // Core k x k problem: S1 V1^T U2 S2.
  const Matrix core = s1.S.asDiagonal() * s1.V.transpose() * s2.U *
                      s2.S.asDiagonal();
  const SvdTriple s3 = thin_svd(core);
  const Vector sqrt_s3 = s3.S.array().sqrt();
  out.u_tilde = s1.U * s3.U * sqrt_s3.asDiagonal();
  out.v_tilde = s2.V * s3.V * sqrt_s3.asDiagonal();
  out.sigma = s3.S;
  return out;
}

/// Normalized embeddings taken directly from an SVD triple (exact
/// nuclear-norm minimizers): U~ = U sqrt(S), V~ = V sqrt(S).
inline NormalizedEmbeddings normalized_from_svd(const SvdTriple& svd) {
  NormalizedEmbeddings out;
  const Vector sqrt_s = svd.S.array().sqrt();
  out.u_tilde = svd.U * sqrt_s.asDiagonal();
  out.v_tilde = svd.V * sqrt_s.asDiagonal();
  out.sigma = svd.S;
  return out;
}

struct CfScore {
  std::optional<double> user_side;  // shared test item
  std::optional<double> item_side;  // shared test user
};

/// Importance of training interaction (i, j) to test pair (i', j').
/// Zero unless they share a user or an item; the self pair yields both sides.
inline CfScore cf_importance(const NormalizedEmbeddings& norm,
                             const LossFunction& loss, double y_train,
                             int i, int j, int i_test, int j_test,
                             std::optional<double> scale = {}) {
  const double s = scale.value_or(1.0);
  const double dloss = loss.derivative(y_train, norm.predict(i, j));
  CfScore out;
  if (j == j_test)
    out.user_side = -s * dloss * norm.u_tilde.row(i).dot(norm.u_tilde.row(i_test));
  if (i == i_test)
    out.item_side = -s * dloss * norm.v_tilde.row(j).dot(norm.v_tilde.row(j_test));
  return out;
}

inline CfScore cf_importance(const NormalizedEmbeddings& norm,
                             const LossFunction& loss,
                             const InteractionSet& train, int i, int j,
                             int i_test, int j_test,
                             std::optional<double> scale = {}) {
  const Interaction* found = nullptr;
  for (const auto& it : train.interactions)
    if (it.user == i && it.item == j) {
      found = &it;
      break;
    }
  if (!found)
    throw InvalidInputError("cf_importance: (i, j) not in the training set");
  return cf_importance(norm, loss, found->rating, i, j, i_test, j_test, scale);
}

/// One record per training interaction sharing the test user (side=item) or
/// the test item (side=user), sorted by |importance| descending.
inline std::vector<AttributionRecord> cf_explain(
    const NormalizedEmbeddings& norm, const LossFunction& loss,
    const InteractionSet& train, int i_test, int j_test,
    std::optional<double> scale = {}) {
  std::vector<AttributionRecord> recs;
  const double s = scale.value_or(1.0);
  for (std::size_t idx = 0; idx < train.interactions.size(); ++idx) {
    const Interaction& it = train.interactions[idx];
    const bool shares_item = it.item == j_test;
    const bool shares_user = it.user == i_test;
    if (!shares_item && !shares_user) continue;
    const double pred = norm.predict(it.user, it.item);
    const double g = -s * loss.derivative(it.rating, pred);
    if (shares_item) {
      AttributionRecord r;
      r.train_index = static_cast<int>(idx);
      r.train_user = it.user;
      r.train_item = it.item;
      r.observed = it.rating;
      r.global = g;
      r.local = norm.u_tilde.row(it.user).dot(norm.u_tilde.row(i_test));
      r.importance = r.global * r.local;
      r.side = Side::User;
      recs.push_back(r);
    }
    if (shares_user) {
      AttributionRecord r;
      r.train_index = static_cast<int>(idx);
      r.train_user = it.user;
      r.train_item = it.item;
      r.observed = it.rating;
      r.global = g;
      r.local = norm.v_tilde.row(it.item).dot(norm.v_tilde.row(j_test));
      r.importance = r.global * r.local;
      r.side = Side::Item;
      recs.push_back(r);
    }
  }
  sort_records(recs);
  return recs;
}

// ---------------------------------------------------------------------------
// Negative-sample aggregation.
// ---------------------------------------------------------------------------

/// I_neg((i,j)) = sum over positives (i',j') of I((i,j),(i',j')), computed
/// via per-user and per-item sums of normalized embeddings in
/// O((|P|+|N|) k) time.
inline std::map<std::pair<int, int>, double> aggregate_negative_importance(
    const NormalizedEmbeddings& norm, const LossFunction& loss,
    const InteractionSet& positives, const InteractionSet& negatives,
    std::optional<double> scale = {}) {
  const double s = scale.value_or(1.0);
  {
    std::map<std::pair<int, int>, char> pos_set;
    for (const auto& p : positives.interactions)
      pos_set[{p.user, p.item}] = 1;
    for (const auto& n : negatives.interactions)
      if (pos_set.count({n.user, n.item}))
        throw InvalidInputError(
            "aggregate_negative_importance: positives and negatives overlap");
  }

  const Eigen::Index k = norm.u_tilde.cols();
  // Per item: sum of U~ rows over positives of that item; per user: sum of
  // V~ rows over that user's positives.
  Matrix item_user_sum = Matrix::Zero(norm.v_tilde.rows(), k);
  Matrix user_item_sum = Matrix::Zero(norm.u_tilde.rows(), k);
  for (const auto& p : positives.interactions) {
    item_user_sum.row(p.item) += norm.u_tilde.row(p.user);
    user_item_sum.row(p.user) += norm.v_tilde.row(p.item);
  }

  std::map<std::pair<int, int>, double> out;
  for (const auto& n : negatives.interactions) {
    const double dloss =
        loss.derivative(n.rating, norm.predict(n.user, n.item));
    const double user_side =
        norm.u_tilde.row(n.user).dot(item_user_sum.row(n.item));
    const double item_side =
        norm.v_tilde.row(n.item).dot(user_item_sum.row(n.user));
    out[{n.user, n.item}] = -s * dloss * (user_side + item_side);
  }
  return out;
}

}  // namespace hidrep
