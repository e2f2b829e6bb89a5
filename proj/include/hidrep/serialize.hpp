#pragma once

#include <json.hpp>

#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "hidrep/errors.hpp"
#include "hidrep/evaluation.hpp"
#include "hidrep/experiments.hpp"
#include "hidrep/l1_solver.hpp"
#include "hidrep/representers.hpp"
#include "hidrep/soft_impute.hpp"
#include "hidrep/svd.hpp"
#include "hidrep/types.hpp"

namespace hidrep {

using nlohmann::json;

constexpr int kModelFormatVersion = 1;

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

inline Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto& rows = j.at("data");
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = rows.at(r).at(c).get<double>();
  return m;
}

inline json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Vector vector_from_json(const json& j) {
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

// ---------------------------------------------------------------------------
// Model documents. Each is a versioned JSON object with a "family" tag.
// ---------------------------------------------------------------------------

inline json to_json(const L1LinearModel& m) {
  return json{{"version", kModelFormatVersion},
              {"family", "l1"},
              {"theta", vector_to_json(m.theta)},
              {"lambda", m.lambda},
              {"loss", m.loss.name()},
              {"kkt_residual", m.kkt_residual},
              {"iterations", m.iterations}};
}

inline L1LinearModel l1_model_from_json(const json& j) {
  if (j.at("family") != "l1")
    throw InvalidInputError("expected an l1 model document");
  L1LinearModel m;
  m.theta = vector_from_json(j.at("theta"));
  m.lambda = j.at("lambda").get<double>();
  m.loss = LossFunction::from_name(j.at("loss").get<std::string>());
  m.kkt_residual = j.at("kkt_residual").get<double>();
  m.iterations = j.at("iterations").get<int>();
  return m;
}

inline json to_json(const InteractionSet& s) {
  json rows = json::array();
  for (const auto& it : s.interactions)
    rows.push_back(json::array({it.user, it.item, it.rating}));
  return json{
      {"n_users", s.n_users}, {"n_items", s.n_items}, {"interactions", rows}};
}

inline InteractionSet interaction_set_from_json(const json& j) {
  InteractionSet s;
  s.n_users = j.at("n_users").get<int>();
  s.n_items = j.at("n_items").get<int>();
  for (const auto& row : j.at("interactions"))
    s.interactions.push_back({row.at(0).get<int>(), row.at(1).get<int>(),
                              row.at(2).get<double>(),
                              {}});
  return s;
}

inline json to_json(const LowRankModel& m) {
  return json{{"version", kModelFormatVersion},
              {"family", "nuclear"},
              {"U", matrix_to_json(m.svd.U)},
              {"S", vector_to_json(m.svd.S)},
              {"V", matrix_to_json(m.svd.V)},
              {"lambda", m.lambda},
              {"loss", m.loss.name()},
              {"observed", to_json(m.observed)},
              {"converged_delta", m.converged_delta},
              {"iterations", m.iterations}};
}

inline LowRankModel low_rank_model_from_json(const json& j) {
  if (j.at("family") != "nuclear")
    throw InvalidInputError("expected a nuclear model document");
  LowRankModel m;
  m.svd.U = matrix_from_json(j.at("U"));
  m.svd.S = vector_from_json(j.at("S"));
  m.svd.V = matrix_from_json(j.at("V"));
  m.lambda = j.at("lambda").get<double>();
  m.loss = LossFunction::from_name(j.at("loss").get<std::string>());
  m.observed = interaction_set_from_json(j.at("observed"));
  m.converged_delta = j.at("converged_delta").get<double>();
  m.iterations = j.at("iterations").get<int>();
  return m;
}

inline json to_json(const EmbeddingPair& p, const std::string& loss_name) {
  return json{{"version", kModelFormatVersion},
              {"family", "mf"},
              {"user_mat", matrix_to_json(p.user_mat)},
              {"item_mat", matrix_to_json(p.item_mat)},
              {"normalized", p.normalized},
              {"loss", loss_name}};
}

inline EmbeddingPair embedding_pair_from_json(const json& j) {
  if (j.at("family") != "mf")
    throw InvalidInputError("expected an mf model document");
  EmbeddingPair p;
  p.user_mat = matrix_from_json(j.at("user_mat"));
  p.item_mat = matrix_from_json(j.at("item_mat"));
  p.normalized = j.at("normalized").get<bool>();
  return p;
}

// ---------------------------------------------------------------------------
// Attribution report CSV.
// ---------------------------------------------------------------------------

/// CF schema: side,train_user,train_item,observed_rating,global,local,importance
inline void write_cf_report_csv(std::ostream& out,
                                const std::vector<AttributionRecord>& recs,
                                const std::string& method = "") {
  out << std::setprecision(17);
  out << (method.empty() ? "" : "method,")
      << "side,train_user,train_item,observed_rating,global,local,importance\n";
  for (const auto& r : recs) {
    if (!method.empty()) out << method << ',';
    out << side_name(r.side) << ',' << r.train_user << ',' << r.train_item
        << ',' << r.observed << ',' << r.global << ',' << r.local << ','
        << r.importance << '\n';
  }
}

/// l1/nuclear schema: index,label,global,local,importance
inline void write_linear_report_csv(std::ostream& out,
                                    const std::vector<AttributionRecord>& recs,
                                    const std::string& method = "") {
  out << std::setprecision(17);
  out << (method.empty() ? "" : "method,")
      << "index,label,global,local,importance\n";
  for (const auto& r : recs) {
    if (!method.empty()) out << method << ',';
    out << r.train_index << ',' << r.observed << ',' << r.global << ','
        << r.local << ',' << r.importance << '\n';
  }
}

// ---------------------------------------------------------------------------
// Deletion report JSON.
// ---------------------------------------------------------------------------

inline json to_json(const DeletionReport& r) {
  return json{{"trial_aucs", r.trial_aucs},
              {"mean", r.mean},
              {"ci_half_width", r.ci_half_width},
              {"trials", r.trials},
              {"tests_per_trial", r.tests_per_trial}};
}

inline json to_json(const NegativeAuditReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back(json{{"fraction", row.fraction},
                        {"removed", row.removed},
                        {"false_negative_hits", row.false_negative_hits},
                        {"recall_before", row.recall_before},
                        {"recall_after", row.recall_after}});
  return json{{"rows", rows}};
}

}  // namespace hidrep
