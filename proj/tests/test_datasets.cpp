#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "hidrep/datasets.hpp"

using namespace hidrep;

TEST(ParseLibsvm, BasicLine) {
  std::istringstream in("+1 1:0.5 3:2.0\n");
  LabeledDataset ds = parse_libsvm(in);
  ASSERT_EQ(ds.size(), 1);
  EXPECT_EQ(ds.labels[0], 1.0);
  ASSERT_EQ(ds.samples[0].entries.size(), 2u);
  EXPECT_EQ(ds.samples[0].entries[0], (std::pair<Eigen::Index, double>{0, 0.5}));
  EXPECT_EQ(ds.samples[0].entries[1], (std::pair<Eigen::Index, double>{2, 2.0}));
  EXPECT_EQ(ds.dim(), 3);
}

TEST(ParseLibsvm, EmptyFeatureList) {
  std::istringstream in("-1 \n");
  LabeledDataset ds = parse_libsvm(in);
  ASSERT_EQ(ds.size(), 1);
  EXPECT_EQ(ds.labels[0], -1.0);
  EXPECT_TRUE(ds.samples[0].entries.empty());
}

TEST(ParseLibsvm, MalformedValueReportsLine) {
  std::istringstream in("1 2:x\n");
  try {
    parse_libsvm(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1);
  }
}

TEST(ParseLibsvm, NonIncreasingIndicesRejected) {
  std::istringstream in("1 3:1 2:1\n");
  EXPECT_THROW(parse_libsvm(in), ParseError);
}

TEST(ParseLibsvm, DimHint) {
  std::istringstream in("1 2:1\n");
  LabeledDataset ds = parse_libsvm(in, 10);
  EXPECT_EQ(ds.dim(), 10);
}

TEST(ParseLibsvm, RoundTrip) {
  std::istringstream in("1 1:0.25 7:-3\n-1 2:1e-3\n0.5 \n");
  LabeledDataset ds = parse_libsvm(in);
  std::ostringstream out;
  write_libsvm(out, ds);
  std::istringstream in2(out.str());
  LabeledDataset ds2 = parse_libsvm(in2, ds.dim());
  ASSERT_EQ(ds2.size(), ds.size());
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(ds2.labels[i], ds.labels[i]);
    EXPECT_EQ(ds2.samples[i].entries, ds.samples[i].entries);
  }
}

TEST(ParseMovielens, BasicLine) {
  std::istringstream in("196\t242\t3\t881250949\n");
  ParsedInteractions p = parse_movielens(in);
  ASSERT_EQ(p.set.size(), 1u);
  EXPECT_EQ(p.set.interactions[0].user, 0);
  EXPECT_EQ(p.set.interactions[0].item, 0);
  EXPECT_EQ(p.set.interactions[0].rating, 3.0);
  EXPECT_EQ(p.user_raw_ids[0], 196);
  EXPECT_EQ(p.item_raw_ids[0], 242);
}

TEST(ParseMovielens, EmptyStream) {
  std::istringstream in("");
  ParsedInteractions p = parse_movielens(in);
  EXPECT_EQ(p.set.n_users, 0);
  EXPECT_EQ(p.set.n_items, 0);
  EXPECT_TRUE(p.set.interactions.empty());
}

TEST(ParseMovielens, DuplicatePairRejected) {
  std::istringstream in("1\t2\t3\t0\n1\t2\t4\t0\n");
  EXPECT_THROW(parse_movielens(in), ParseError);
}

TEST(ParseMovielens, NonNumericFieldRejected) {
  std::istringstream in("1\tx\t3\t0\n");
  EXPECT_THROW(parse_movielens(in), ParseError);
}

TEST(ParseMovielens, RoundTrip) {
  std::istringstream in("9\t7\t4.5\t100\n9\t8\t2\t200\n3\t7\t1\t300\n");
  ParsedInteractions p = parse_movielens(in);
  std::ostringstream out;
  write_movielens(out, p);
  std::istringstream in2(out.str());
  ParsedInteractions p2 = parse_movielens(in2);
  ASSERT_EQ(p2.set.size(), p.set.size());
  for (std::size_t i = 0; i < p.set.size(); ++i) {
    EXPECT_EQ(p2.set.interactions[i].user, p.set.interactions[i].user);
    EXPECT_EQ(p2.set.interactions[i].item, p.set.interactions[i].item);
    EXPECT_EQ(p2.set.interactions[i].rating, p.set.interactions[i].rating);
  }
}

TEST(NormalizeRatings, EndpointsAndMidpoint) {
  InteractionSet s;
  s.n_users = 1;
  s.n_items = 3;
  s.interactions = {{0, 0, 5.0, {}}, {0, 1, 1.0, {}}, {0, 2, 3.0, {}}};
  InteractionSet out = normalize_ratings(s, 1.0, 5.0);
  EXPECT_EQ(out.interactions[0].rating, 1.0);
  EXPECT_EQ(out.interactions[1].rating, -1.0);
  EXPECT_EQ(out.interactions[2].rating, 0.0);
}

TEST(NormalizeRatings, RejectsOutOfRange) {
  InteractionSet s;
  s.n_users = 1;
  s.n_items = 1;
  s.interactions = {{0, 0, 6.0, {}}};
  EXPECT_THROW(normalize_ratings(s, 1.0, 5.0), InvalidInputError);
}

TEST(NormalizeRatings, PreservesOrdering) {
  InteractionSet s;
  s.n_users = 1;
  s.n_items = 5;
  for (int j = 0; j < 5; ++j)
    s.interactions.push_back({0, j, 1.0 + j, {}});
  InteractionSet out = normalize_ratings(s, 1.0, 5.0);
  for (int j = 1; j < 5; ++j)
    EXPECT_LT(out.interactions[j - 1].rating, out.interactions[j].rating);
}

namespace {

InteractionSet grid_set(int users, int items_per_user) {
  InteractionSet s;
  s.n_users = users;
  s.n_items = items_per_user;
  for (int u = 0; u < users; ++u)
    for (int j = 0; j < items_per_user; ++j)
      s.interactions.push_back({u, j, 1.0 + (u + j) % 5, {}});
  return s;
}

}  // namespace

TEST(SplitPerUserHoldout, Counts) {
  InteractionSet s = grid_set(3, 10);
  HoldoutSplit split = split_per_user_holdout(s, 1, 7);
  EXPECT_EQ(split.train.size(), 3u * 8u);
  EXPECT_EQ(split.validation.size(), 3u);
  EXPECT_EQ(split.test.size(), 3u);
}

TEST(SplitPerUserHoldout, Deterministic) {
  InteractionSet s = grid_set(4, 9);
  HoldoutSplit a = split_per_user_holdout(s, 2, 123);
  HoldoutSplit b = split_per_user_holdout(s, 2, 123);
  ASSERT_EQ(a.train.size(), b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    EXPECT_EQ(a.train.interactions[i].user, b.train.interactions[i].user);
    EXPECT_EQ(a.train.interactions[i].item, b.train.interactions[i].item);
  }
}

TEST(SplitPerUserHoldout, DifferentSeedsDiffer) {
  InteractionSet s = grid_set(10, 10);
  HoldoutSplit a = split_per_user_holdout(s, 1, 1);
  HoldoutSplit b = split_per_user_holdout(s, 1, 2);
  bool differ = false;
  for (std::size_t i = 0; i < a.test.size() && !differ; ++i)
    differ = a.test.interactions[i].item != b.test.interactions[i].item;
  EXPECT_TRUE(differ);
}

TEST(SplitPerUserHoldout, ZeroHoldoutKeepsEverything) {
  InteractionSet s = grid_set(2, 3);
  HoldoutSplit split = split_per_user_holdout(s, 0, 5);
  EXPECT_EQ(split.train.size(), s.size());
  EXPECT_TRUE(split.validation.interactions.empty());
  EXPECT_TRUE(split.test.interactions.empty());
}

TEST(SplitPerUserHoldout, RejectsUserWithTooFewInteractions) {
  InteractionSet s = grid_set(1, 2);
  EXPECT_THROW(split_per_user_holdout(s, 1, 0), InvalidInputError);
}

TEST(FilterMinInteractions, NoOpCases) {
  InteractionSet s = grid_set(3, 4);
  EXPECT_EQ(filter_min_interactions(s, 0).size(), s.size());
  // Every user has 4 interactions, every item 3.
  EXPECT_EQ(filter_min_interactions(s, 3).size(), s.size());
}

TEST(FilterMinInteractions, RemovesSparseUser) {
  InteractionSet s;
  s.n_users = 1;
  s.n_items = 1;
  s.interactions = {{0, 0, 1.0, {}}};
  InteractionSet out = filter_min_interactions(s, 2);
  EXPECT_TRUE(out.interactions.empty());
  EXPECT_EQ(out.n_users, 0);
  EXPECT_EQ(out.n_items, 0);
}

TEST(FilterMinInteractions, FixpointSatisfiesPredicate) {
  // Chain where removing one item cascades.
  InteractionSet s;
  s.n_users = 4;
  s.n_items = 4;
  s.interactions = {{0, 0, 1, {}}, {0, 1, 1, {}}, {1, 0, 1, {}},
                    {1, 1, 1, {}}, {2, 1, 1, {}}, {2, 2, 1, {}},
                    {3, 3, 1, {}}};
  InteractionSet out = filter_min_interactions(s, 2);
  std::vector<int> ucount(out.n_users, 0), icount(out.n_items, 0);
  for (const auto& it : out.interactions) {
    ++ucount[it.user];
    ++icount[it.item];
  }
  for (int c : ucount) EXPECT_GE(c, 2);
  for (int c : icount) EXPECT_GE(c, 2);
}

TEST(Binarize, ThresholdFiltering) {
  InteractionSet s;
  s.n_users = 1;
  s.n_items = 3;
  s.interactions = {{0, 0, 2.0, {}}, {0, 1, 4.0, {}}, {0, 2, 5.0, {}}};
  InteractionSet out = binarize(s, 4.0);
  ASSERT_EQ(out.size(), 2u);
  for (const auto& it : out.interactions) EXPECT_EQ(it.rating, 1.0);
}

TEST(Binarize, NoThresholdKeepsAll) {
  InteractionSet s;
  s.n_users = 1;
  s.n_items = 2;
  s.interactions = {{0, 0, 1.0, {}}, {0, 1, 5.0, {}}};
  InteractionSet out =
      binarize(s, -std::numeric_limits<double>::infinity());
  EXPECT_EQ(out.size(), 2u);
  EXPECT_EQ(out.interactions[0].rating, 1.0);
}

TEST(LoadEmbeddings, BasicFiles) {
  std::istringstream users("2 2\n1 0\n0 1\n");
  std::istringstream items("1 2\n1 1\n");
  EmbeddingPair p = load_embeddings(users, items);
  EXPECT_EQ(p.user_mat.rows(), 2);
  EXPECT_EQ(p.item_mat.rows(), 1);
  EXPECT_EQ(p.k(), 2);
  EXPECT_FALSE(p.normalized);
}

TEST(LoadEmbeddings, MismatchedKRejected) {
  std::istringstream users("1 3\n1 2 3\n");
  std::istringstream items("1 2\n1 1\n");
  EXPECT_THROW(load_embeddings(users, items), InvalidInputError);
}

TEST(LoadEmbeddings, RowCountMismatchRejected) {
  std::istringstream users("3 2\n1 0\n0 1\n");
  std::istringstream items("1 2\n1 1\n");
  EXPECT_THROW(load_embeddings(users, items), ParseError);
}

TEST(LoadEmbeddings, NonFiniteRejected) {
  std::istringstream users("1 2\nnan 0\n");
  std::istringstream items("1 2\n1 1\n");
  EXPECT_THROW(load_embeddings(users, items), ParseError);
}

TEST(LoadEmbeddings, RoundTrip) {
  Matrix m(2, 3);
  m << 0.1, -2.5, 3.25, 1e-7, 0, 42;
  std::ostringstream out;
  write_embedding_matrix(out, m);
  std::istringstream in(out.str());
  Matrix m2 = read_embedding_matrix(in);
  EXPECT_EQ(m, m2);
}
