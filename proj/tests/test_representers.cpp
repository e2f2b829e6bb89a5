#include <gtest/gtest.h>

#include <random>
#include <set>

#include "hidrep/representers.hpp"

using namespace hidrep;

namespace {

LabeledDataset random_dataset(Eigen::Index n, Eigen::Index p,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  LabeledDataset ds;
  for (Eigen::Index i = 0; i < n; ++i) {
    SparseVector x;
    x.dim = p;
    for (Eigen::Index j = 0; j < p; ++j) x.entries.emplace_back(j, g(rng));
    ds.samples.push_back(std::move(x));
    ds.labels.push_back(g(rng));
  }
  return ds;
}

SparseVector random_query(Eigen::Index p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  SparseVector x;
  x.dim = p;
  for (Eigen::Index j = 0; j < p; ++j) x.entries.emplace_back(j, g(rng));
  return x;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

InteractionSet random_interactions(int n_users, int n_items, double density,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  InteractionSet s;
  s.n_users = n_users;
  s.n_items = n_items;
  for (int i = 0; i < n_users; ++i)
    for (int j = 0; j < n_items; ++j)
      if (u(rng) < density) s.interactions.push_back({i, j, g(rng), {}});
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// l1.
// ---------------------------------------------------------------------------

TEST(L1Representer, GlobalMatchesDirectFormula) {
  LabeledDataset ds = random_dataset(15, 4, 3);
  L1LinearModel m =
      fit_l1(ds, LossFunction{LossKind::Squared}, 0.05, 1e-10, 100000);
  std::vector<double> alpha = l1_global(m, ds);
  const double n = static_cast<double>(ds.size());
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const double t = sparse_dense_inner(ds.samples[i], m.theta);
    const double expected =
        -m.loss.derivative(ds.labels[i], t) / (n * m.lambda);
    EXPECT_NEAR(alpha[i], expected, 1e-14);
  }
}

TEST(L1Representer, LocalMatchesDenseProjection) {
  LabeledDataset ds = random_dataset(10, 5, 7);
  L1LinearModel m =
      fit_l1(ds, LossFunction{LossKind::Squared}, 0.03, 1e-10, 100000);
  SparseVector q = random_query(5, 8);
  std::vector<AttributionRecord> recs = l1_attribute(m, ds, q);
  const Vector w = m.theta.array().abs().sqrt();
  const Vector qd = q.dense();
  for (const auto& r : recs) {
    const Vector xi = ds.samples[r.train_index].dense();
    const double expected =
        (w.asDiagonal() * xi).dot(w.asDiagonal() * qd);
    EXPECT_NEAR(r.local, expected, 1e-12);
    EXPECT_NEAR(r.importance, r.global * r.local, 1e-15);
  }
}

TEST(L1Representer, DecompositionRecoversPrediction) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    LabeledDataset ds = random_dataset(30, 10, 50 + seed);
    L1LinearModel m =
        fit_l1(ds, LossFunction{LossKind::Squared}, 0.02, 1e-11, 200000);
    SparseVector q = random_query(10, 90 + seed);
    std::vector<AttributionRecord> recs = l1_attribute(m, ds, q);
    double total = 0;
    for (const auto& r : recs) total += r.importance;
    const double pred = sparse_dense_inner(q, m.theta);
    EXPECT_NEAR(total, pred, 1e-7 * (1.0 + std::abs(pred)));
  }
}

TEST(L1Representer, RejectsDimensionMismatch) {
  LabeledDataset ds = random_dataset(6, 4, 1);
  L1LinearModel m =
      fit_l1(ds, LossFunction{LossKind::Squared}, 0.1, 1e-8, 50000);
  EXPECT_THROW(l1_attribute(m, ds, random_query(5, 2)), InvalidInputError);
}

TEST(SortRecords, OrdersByMagnitudeWithStableTies) {
  std::vector<AttributionRecord> recs(3);
  recs[0].train_index = 0;
  recs[0].importance = -0.5;
  recs[1].train_index = 1;
  recs[1].importance = 0.5;
  recs[2].train_index = 2;
  recs[2].importance = 2.0;
  sort_records(recs);
  EXPECT_EQ(recs[0].train_index, 2);
  EXPECT_EQ(recs[1].train_index, 0);  // tie broken by index
  EXPECT_EQ(recs[2].train_index, 1);
}

// ---------------------------------------------------------------------------
// Nuclear.
// ---------------------------------------------------------------------------

TEST(NuclearRepresenter, EntryDecompositionRecoversPrediction) {
  InteractionSet obs = random_interactions(8, 6, 0.7, 4);
  LowRankModel m = soft_impute(obs, 0.02, -1, 1e-12, 5000);
  ASSERT_GT(m.rank(), 0);
  for (auto side : {NuclearSide::Column, NuclearSide::Row,
                    NuclearSide::Average}) {
    for (int iu = 0; iu < 3; ++iu) {
      for (int jt = 0; jt < 3; ++jt) {
        std::vector<AttributionRecord> recs =
            nuclear_attribute_entries(m, iu, jt, side);
        double total = 0;
        for (const auto& r : recs) total += r.importance;
        const double pred = m.predict(iu, jt);
        EXPECT_NEAR(total, pred, 1e-6 * (1.0 + std::abs(pred)))
            << "side " << static_cast<int>(side) << " (" << iu << "," << jt
            << ")";
      }
    }
  }
}

TEST(NuclearRepresenter, EntrySpecializationMatchesGeneralForm) {
  InteractionSet obs = random_interactions(7, 5, 0.6, 9);
  LowRankModel m = soft_impute(obs, 0.03, -1, 1e-12, 5000);
  ASSERT_GT(m.rank(), 0);
  std::vector<MatrixSample> samples;
  for (const auto& it : obs.interactions) {
    MatrixSample s;
    s.x = Matrix::Zero(7, 5);
    s.x(it.user, it.item) = 1.0;
    s.y = it.rating;
    samples.push_back(std::move(s));
  }
  const int iu = 2, jt = 3;
  Matrix x_test = Matrix::Zero(7, 5);
  x_test(iu, jt) = 1.0;
  for (auto side : {NuclearSide::Column, NuclearSide::Row}) {
    std::vector<AttributionRecord> gen =
        nuclear_attribute(m.svd, m.lambda, m.loss, samples, x_test, side);
    std::vector<AttributionRecord> ent =
        nuclear_attribute_entries(m, iu, jt, side);
    ASSERT_EQ(gen.size(), ent.size());
    for (std::size_t i = 0; i < gen.size(); ++i) {
      EXPECT_NEAR(gen[i].global, ent[i].global, 1e-12);
      EXPECT_NEAR(gen[i].local, ent[i].local, 1e-12);
    }
  }
}

TEST(NuclearRepresenter, RejectsShapeMismatch) {
  InteractionSet obs = random_interactions(5, 4, 0.8, 2);
  LowRankModel m = soft_impute(obs, 0.05, -1, 1e-10, 2000);
  EXPECT_THROW(nuclear_attribute_entries(m, 5, 0, NuclearSide::Column),
               InvalidInputError);
  EXPECT_THROW(nuclear_attribute_entries(m, 0, -1, NuclearSide::Row),
               InvalidInputError);
}

// ---------------------------------------------------------------------------
// Factored normalization.
// ---------------------------------------------------------------------------

TEST(NormalizeFactors, PreservesProductAndBalances) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EmbeddingPair pair;
    pair.user_mat = random_matrix(12, 4, 100 + seed);
    pair.item_mat = random_matrix(9, 4, 200 + seed);
    NormalizedEmbeddings norm = normalize_factors(pair);
    const Matrix prod_hat = pair.user_mat * pair.item_mat.transpose();
    const Matrix prod_tilde = norm.u_tilde * norm.v_tilde.transpose();
    EXPECT_LT((prod_hat - prod_tilde).cwiseAbs().maxCoeff(), 1e-10);
    const Matrix gram_u = norm.u_tilde.transpose() * norm.u_tilde;
    const Matrix gram_v = norm.v_tilde.transpose() * norm.v_tilde;
    const Matrix diag = Matrix(norm.sigma.asDiagonal());
    EXPECT_LT((gram_u - diag).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((gram_v - diag).cwiseAbs().maxCoeff(), 1e-10);
    // sigma are the singular values of the product.
    SvdTriple direct = thin_svd(prod_hat);
    ASSERT_EQ(direct.rank(), norm.sigma.size());
    for (Eigen::Index c = 0; c < norm.sigma.size(); ++c)
      EXPECT_NEAR(norm.sigma[c], direct.S[c], 1e-10);
  }
}

TEST(NormalizeFactors, RankDeficientFactors) {
  EmbeddingPair pair;
  pair.user_mat = random_matrix(8, 3, 7);
  pair.item_mat = random_matrix(6, 3, 8);
  pair.user_mat.col(2).setZero();  // effective rank at most 2
  NormalizedEmbeddings norm = normalize_factors(pair);
  EXPECT_LE(norm.sigma.size(), 2);
  const Matrix prod_hat = pair.user_mat * pair.item_mat.transpose();
  EXPECT_LT((prod_hat - norm.u_tilde * norm.v_tilde.transpose())
                .cwiseAbs()
                .maxCoeff(),
            1e-10);
}

TEST(NormalizeFactors, ZeroFactorsGiveEmpty) {
  EmbeddingPair pair;
  pair.user_mat = Matrix::Zero(5, 2);
  pair.item_mat = Matrix::Zero(4, 2);
  NormalizedEmbeddings norm = normalize_factors(pair);
  EXPECT_EQ(norm.sigma.size(), 0);
  EXPECT_EQ(norm.u_tilde.cols(), 0);
  EXPECT_EQ(norm.v_tilde.cols(), 0);
}

TEST(NormalizedFromSvd, MatchesNormalizeFactorsOnBalancedInput) {
  Matrix y = random_matrix(6, 5, 31);
  SvdTriple svd = thin_svd(y);
  NormalizedEmbeddings a = normalized_from_svd(svd);
  EmbeddingPair pair;
  pair.user_mat = a.u_tilde;
  pair.item_mat = a.v_tilde;
  NormalizedEmbeddings b = normalize_factors(pair);
  ASSERT_EQ(a.sigma.size(), b.sigma.size());
  for (Eigen::Index c = 0; c < a.sigma.size(); ++c)
    EXPECT_NEAR(a.sigma[c], b.sigma[c], 1e-9);
  EXPECT_LT((a.u_tilde * a.v_tilde.transpose() -
             b.u_tilde * b.v_tilde.transpose())
                .cwiseAbs()
                .maxCoeff(),
            1e-9);
}

// ---------------------------------------------------------------------------
// Collaborative filtering.
// ---------------------------------------------------------------------------

TEST(CfImportance, ZeroWhenNoSharedIndex) {
  EmbeddingPair pair;
  pair.user_mat = random_matrix(4, 2, 1);
  pair.item_mat = random_matrix(4, 2, 2);
  NormalizedEmbeddings norm = normalize_factors(pair);
  CfScore s = cf_importance(norm, LossFunction{LossKind::Squared}, 1.0,
                            /*i=*/0, /*j=*/0, /*i_test=*/1, /*j_test=*/1);
  EXPECT_FALSE(s.user_side.has_value());
  EXPECT_FALSE(s.item_side.has_value());
}

TEST(CfImportance, SharedItemUsesUserEmbeddings) {
  EmbeddingPair pair;
  pair.user_mat = random_matrix(4, 3, 5);
  pair.item_mat = random_matrix(5, 3, 6);
  NormalizedEmbeddings norm = normalize_factors(pair);
  const LossFunction loss{LossKind::Squared};
  const double y = 0.7;
  const int i = 2, j = 1, i_test = 3;
  CfScore s = cf_importance(norm, loss, y, i, j, i_test, j);
  ASSERT_TRUE(s.user_side.has_value());
  EXPECT_FALSE(s.item_side.has_value());
  const double dloss = loss.derivative(y, norm.predict(i, j));
  const double expected =
      -dloss * norm.u_tilde.row(i).dot(norm.u_tilde.row(i_test));
  EXPECT_NEAR(*s.user_side, expected, 1e-12);
}

TEST(CfImportance, SelfPairYieldsBothSides) {
  EmbeddingPair pair;
  pair.user_mat = random_matrix(3, 2, 9);
  pair.item_mat = random_matrix(3, 2, 10);
  NormalizedEmbeddings norm = normalize_factors(pair);
  CfScore s = cf_importance(norm, LossFunction{LossKind::Squared}, 1.0, 1, 2,
                            1, 2, 0.25);
  EXPECT_TRUE(s.user_side.has_value());
  EXPECT_TRUE(s.item_side.has_value());
}

TEST(CfImportance, ScaleIsLinear) {
  EmbeddingPair pair;
  pair.user_mat = random_matrix(3, 2, 11);
  pair.item_mat = random_matrix(4, 2, 12);
  NormalizedEmbeddings norm = normalize_factors(pair);
  const LossFunction loss{LossKind::Squared};
  CfScore a = cf_importance(norm, loss, 0.3, 0, 1, 2, 1);
  CfScore b = cf_importance(norm, loss, 0.3, 0, 1, 2, 1, 0.5);
  ASSERT_TRUE(a.user_side && b.user_side);
  EXPECT_NEAR(*b.user_side, 0.5 * *a.user_side, 1e-14);
}

TEST(CfImportance, LookupOverloadRejectsUnknownPair) {
  EmbeddingPair pair;
  pair.user_mat = random_matrix(3, 2, 13);
  pair.item_mat = random_matrix(3, 2, 14);
  NormalizedEmbeddings norm = normalize_factors(pair);
  InteractionSet train;
  train.n_users = 3;
  train.n_items = 3;
  train.interactions = {{0, 0, 1.0, {}}};
  EXPECT_THROW(cf_importance(norm, LossFunction{LossKind::Squared}, train, 1,
                             1, 0, 0),
               InvalidInputError);
}

TEST(CfExplain, MatchesPairwiseScoresAndSorted) {
  InteractionSet train = random_interactions(6, 7, 0.5, 21);
  EmbeddingPair pair;
  pair.user_mat = random_matrix(6, 3, 22);
  pair.item_mat = random_matrix(7, 3, 23);
  NormalizedEmbeddings norm = normalize_factors(pair);
  const LossFunction loss{LossKind::Squared};
  const int iu = 1, jt = 2;
  std::vector<AttributionRecord> recs = cf_explain(norm, loss, train, iu, jt);
  for (const auto& r : recs) {
    CfScore s = cf_importance(norm, loss, r.observed, r.train_user,
                              r.train_item, iu, jt);
    const double expected = r.side == Side::User ? *s.user_side : *s.item_side;
    EXPECT_NEAR(r.importance, expected, 1e-12);
  }
  for (std::size_t i = 1; i < recs.size(); ++i)
    EXPECT_GE(std::abs(recs[i - 1].importance), std::abs(recs[i].importance));
  // Every sharing interaction is present; self pairs appear on both sides.
  std::size_t expected_count = 0;
  for (const auto& it : train.interactions) {
    if (it.item == jt) ++expected_count;
    if (it.user == iu) ++expected_count;
  }
  EXPECT_EQ(recs.size(), expected_count);
}

// ---------------------------------------------------------------------------
// Negative aggregation.
// ---------------------------------------------------------------------------

TEST(AggregateNegatives, MatchesNaiveDoubleLoop) {
  InteractionSet pos = random_interactions(8, 9, 0.4, 33);
  InteractionSet neg;
  neg.n_users = 8;
  neg.n_items = 9;
  {
    std::set<std::pair<int, int>> taken;
    for (const auto& p : pos.interactions) taken.insert({p.user, p.item});
    std::mt19937_64 rng(34);
    std::uniform_int_distribution<int> du(0, 7), dj(0, 8);
    while (neg.interactions.size() < 10) {
      const int u = du(rng), j = dj(rng);
      if (taken.count({u, j})) continue;
      taken.insert({u, j});
      neg.interactions.push_back({u, j, 0.0, {}});
    }
  }
  EmbeddingPair pair;
  pair.user_mat = random_matrix(8, 3, 35);
  pair.item_mat = random_matrix(9, 3, 36);
  NormalizedEmbeddings norm = normalize_factors(pair);
  const LossFunction loss{LossKind::Bce};
  const double scale = 0.1;
  auto fast = aggregate_negative_importance(norm, loss, pos, neg, scale);
  for (const auto& n : neg.interactions) {
    double naive = 0;
    for (const auto& p : pos.interactions) {
      CfScore s = cf_importance(norm, loss, n.rating, n.user, n.item, p.user,
                                p.item, scale);
      naive += s.user_side.value_or(0.0) + s.item_side.value_or(0.0);
    }
    EXPECT_NEAR(fast.at({n.user, n.item}), naive, 1e-9)
        << "(" << n.user << "," << n.item << ")";
  }
}

TEST(AggregateNegatives, RejectsOverlap) {
  InteractionSet pos;
  pos.n_users = 2;
  pos.n_items = 2;
  pos.interactions = {{0, 0, 1.0, {}}};
  InteractionSet neg = pos;
  EmbeddingPair pair;
  pair.user_mat = random_matrix(2, 2, 40);
  pair.item_mat = random_matrix(2, 2, 41);
  NormalizedEmbeddings norm = normalize_factors(pair);
  EXPECT_THROW(aggregate_negative_importance(
                   norm, LossFunction{LossKind::Bce}, pos, neg),
               InvalidInputError);
}
