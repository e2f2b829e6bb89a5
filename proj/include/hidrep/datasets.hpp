#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hidrep/errors.hpp"
#include "hidrep/types.hpp"

namespace hidrep {

// ---------------------------------------------------------------------------
// libsvm text format: "<label> <idx>:<val> ...", 1-based indices.
// ---------------------------------------------------------------------------

inline LabeledDataset parse_libsvm(std::istream& in,
                                   std::optional<Eigen::Index> dim_hint = {}) {
  LabeledDataset ds;
  Eigen::Index max_index = 0;  // 1-based max seen
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double label;
    if (!(ls >> label)) throw ParseError("libsvm: bad label", lineno);
    SparseVector v;
    std::string tok;
    Eigen::Index prev = 0;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw ParseError("libsvm: expected idx:val, got '" + tok + "'", lineno);
      Eigen::Index idx;
      double val;
      try {
        std::size_t pos;
        idx = std::stoll(tok.substr(0, colon), &pos);
        if (pos != colon) throw std::invalid_argument("");
        val = std::stod(tok.substr(colon + 1), &pos);
        if (pos != tok.size() - colon - 1) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ParseError("libsvm: malformed feature '" + tok + "'", lineno);
      }
      if (idx <= prev)
        throw ParseError("libsvm: indices must be increasing and >= 1", lineno);
      if (!std::isfinite(val))
        throw ParseError("libsvm: non-finite value", lineno);
      if (val != 0.0) v.entries.emplace_back(idx - 1, val);
      prev = idx;
      max_index = std::max(max_index, idx);
    }
    ds.samples.push_back(std::move(v));
    ds.labels.push_back(label);
  }
  Eigen::Index p = dim_hint.value_or(max_index);
  if (p < max_index)
    throw ParseError("libsvm: dim_hint smaller than max feature index");
  for (auto& s : ds.samples) s.dim = p;
  return ds;
}

inline void write_libsvm(std::ostream& out, const LabeledDataset& ds) {
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    out << ds.labels[i];
    for (const auto& [idx, val] : ds.samples[i].entries)
      out << ' ' << (idx + 1) << ':' << val;
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// MovieLens u.data format: "<user>\t<item>\t<rating>\t<timestamp>".
// ---------------------------------------------------------------------------

/// Parsed interactions plus the raw-id -> dense-id maps (dense id = position).
struct ParsedInteractions {
  InteractionSet set;
  std::vector<std::int64_t> user_raw_ids;
  std::vector<std::int64_t> item_raw_ids;
};

inline ParsedInteractions parse_movielens(std::istream& in) {
  ParsedInteractions out;
  std::map<std::int64_t, int> user_map, item_map;
  std::string line;
  long lineno = 0;
  std::vector<std::pair<int, int>> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::int64_t raw_user, raw_item;
    double rating;
    std::int64_t ts;
    if (!(ls >> raw_user >> raw_item >> rating >> ts))
      throw ParseError("movielens: expected 'user item rating timestamp'",
                       lineno);
    if (!std::isfinite(rating))
      throw ParseError("movielens: non-finite rating", lineno);
    auto [uit, unew] = user_map.try_emplace(
        raw_user, static_cast<int>(out.user_raw_ids.size()));
    if (unew) out.user_raw_ids.push_back(raw_user);
    auto [iit, inew] = item_map.try_emplace(
        raw_item, static_cast<int>(out.item_raw_ids.size()));
    if (inew) out.item_raw_ids.push_back(raw_item);
    out.set.interactions.push_back(
        {uit->second, iit->second, rating, ts});
  }
  out.set.n_users = static_cast<int>(out.user_raw_ids.size());
  out.set.n_items = static_cast<int>(out.item_raw_ids.size());
  seen.reserve(out.set.interactions.size());
  for (const auto& it : out.set.interactions)
    seen.emplace_back(it.user, it.item);
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw ParseError("movielens: duplicate (user, item) pair");
  return out;
}

inline void write_movielens(std::ostream& out, const ParsedInteractions& p) {
  out << std::setprecision(17);
  for (const auto& it : p.set.interactions)
    out << p.user_raw_ids[it.user] << '\t' << p.item_raw_ids[it.item] << '\t'
        << it.rating << '\t' << it.timestamp.value_or(0) << '\n';
}

inline void write_id_map(std::ostream& out,
                         const std::vector<std::int64_t>& raw_ids) {
  for (std::size_t dense = 0; dense < raw_ids.size(); ++dense)
    out << raw_ids[dense] << ' ' << dense << '\n';
}

// ---------------------------------------------------------------------------
// Preprocessing.
// ---------------------------------------------------------------------------

/// Affine map of ratings from a declared raw range onto a target range.
inline InteractionSet normalize_ratings(const InteractionSet& s, double lo_raw,
                                        double hi_raw, double lo_target = -1.0,
                                        double hi_target = 1.0) {
  if (lo_raw >= hi_raw)
    throw InvalidInputError("normalize_ratings: need lo_raw < hi_raw");
  InteractionSet out = s;
  for (auto& it : out.interactions) {
    if (it.rating < lo_raw || it.rating > hi_raw)
      throw InvalidInputError("normalize_ratings: rating outside declared "
                              "raw range");
    const double t = (it.rating - lo_raw) / (hi_raw - lo_raw);
    it.rating = lo_target + t * (hi_target - lo_target);
  }
  return out;
}

struct HoldoutSplit {
  InteractionSet train;
  InteractionSet validation;
  InteractionSet test;
};

/// Per user, holds out `per_user` interactions for validation and `per_user`
/// for test, uniformly at random under the seed.
inline HoldoutSplit split_per_user_holdout(const InteractionSet& s,
                                           int per_user, std::uint64_t seed) {
  HoldoutSplit out;
  out.train.n_users = out.validation.n_users = out.test.n_users = s.n_users;
  out.train.n_items = out.validation.n_items = out.test.n_items = s.n_items;
  std::vector<std::vector<std::size_t>> by_user(s.n_users);
  for (std::size_t idx = 0; idx < s.interactions.size(); ++idx)
    by_user[s.interactions[idx].user].push_back(idx);
  std::mt19937_64 rng(seed);
  for (int u = 0; u < s.n_users; ++u) {
    auto& idxs = by_user[u];
    if (per_user > 0 &&
        idxs.size() < static_cast<std::size_t>(2 * per_user + 1))
      throw InvalidInputError("split_per_user_holdout: user " +
                              std::to_string(u) + " has too few interactions");
    std::shuffle(idxs.begin(), idxs.end(), rng);
    for (std::size_t r = 0; r < idxs.size(); ++r) {
      const auto& it = s.interactions[idxs[r]];
      if (r < static_cast<std::size_t>(per_user))
        out.validation.interactions.push_back(it);
      else if (r < static_cast<std::size_t>(2 * per_user))
        out.test.interactions.push_back(it);
      else
        out.train.interactions.push_back(it);
    }
  }
  auto canon = [](InteractionSet& x) {
    std::sort(x.interactions.begin(), x.interactions.end(),
              [](const Interaction& a, const Interaction& b) {
                return std::tie(a.user, a.item) < std::tie(b.user, b.item);
              });
  };
  canon(out.train);
  canon(out.validation);
  canon(out.test);
  return out;
}

struct FilterResult {
  InteractionSet set;
  std::vector<int> kept_users;  // new dense id -> old id
  std::vector<int> kept_items;
};

/// Iteratively removes users/items with fewer than min_count interactions
/// until fixpoint; surviving ids are re-densified.
inline FilterResult filter_min_interactions_mapped(const InteractionSet& s,
                                                   int min_count) {
  std::vector<char> keep_user(s.n_users, 1), keep_item(s.n_items, 1);
  for (;;) {
    std::vector<int> ucount(s.n_users, 0), icount(s.n_items, 0);
    for (const auto& it : s.interactions)
      if (keep_user[it.user] && keep_item[it.item]) {
        ++ucount[it.user];
        ++icount[it.item];
      }
    bool changed = false;
    for (int u = 0; u < s.n_users; ++u)
      if (keep_user[u] && ucount[u] < min_count) {
        keep_user[u] = 0;
        changed = true;
      }
    for (int i = 0; i < s.n_items; ++i)
      if (keep_item[i] && icount[i] < min_count) {
        keep_item[i] = 0;
        changed = true;
      }
    if (!changed) break;
  }
  FilterResult out;
  std::vector<int> umap(s.n_users, -1), imap(s.n_items, -1);
  for (int u = 0; u < s.n_users; ++u)
    if (keep_user[u]) {
      umap[u] = static_cast<int>(out.kept_users.size());
      out.kept_users.push_back(u);
    }
  for (int i = 0; i < s.n_items; ++i)
    if (keep_item[i]) {
      imap[i] = static_cast<int>(out.kept_items.size());
      out.kept_items.push_back(i);
    }
  out.set.n_users = static_cast<int>(out.kept_users.size());
  out.set.n_items = static_cast<int>(out.kept_items.size());
  for (const auto& it : s.interactions)
    if (keep_user[it.user] && keep_item[it.item])
      out.set.interactions.push_back(
          {umap[it.user], imap[it.item], it.rating, it.timestamp});
  return out;
}

inline InteractionSet filter_min_interactions(const InteractionSet& s,
                                              int min_count) {
  return filter_min_interactions_mapped(s, min_count).set;
}

/// Keeps interactions with rating >= threshold and sets them to 1.0.
inline InteractionSet binarize(const InteractionSet& s, double threshold) {
  InteractionSet out;
  out.n_users = s.n_users;
  out.n_items = s.n_items;
  for (const auto& it : s.interactions)
    if (it.rating >= threshold)
      out.interactions.push_back({it.user, it.item, 1.0, it.timestamp});
  return out;
}

// ---------------------------------------------------------------------------
// Embedding files: first line "<count> <k>", then rows of k decimals.
// ---------------------------------------------------------------------------

inline Matrix read_embedding_matrix(std::istream& in) {
  long count, k;
  if (!(in >> count >> k) || count < 0 || k < 1)
    throw ParseError("embedding file: bad header, expected '<count> <k>'", 1);
  Matrix m(count, k);
  for (long r = 0; r < count; ++r)
    for (long c = 0; c < k; ++c) {
      double v;
      if (!(in >> v))
        throw ParseError("embedding file: row count does not match header",
                         r + 2);
      if (!std::isfinite(v))
        throw ParseError("embedding file: non-finite entry", r + 2);
      m(r, c) = v;
    }
  double extra;
  if (in >> extra)
    throw ParseError("embedding file: more rows than header declares");
  return m;
}

inline EmbeddingPair load_embeddings(std::istream& user_file,
                                     std::istream& item_file) {
  EmbeddingPair pair;
  pair.user_mat = read_embedding_matrix(user_file);
  pair.item_mat = read_embedding_matrix(item_file);
  pair.normalized = false;
  if (pair.user_mat.cols() != pair.item_mat.cols())
    throw InvalidInputError("load_embeddings: user/item k mismatch");
  return pair;
}

inline void write_embedding_matrix(std::ostream& out, const Matrix& m) {
  out << std::setprecision(17);
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out << (c ? " " : "") << m(r, c);
    out << '\n';
  }
}

}  // namespace hidrep
