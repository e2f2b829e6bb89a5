// hidrep: training-data attribution for sparse linear models, nuclear-norm
// completion, and matrix-factorization recommenders.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "hidrep/baselines.hpp"
#include "hidrep/datasets.hpp"
#include "hidrep/evaluation.hpp"
#include "hidrep/experiments.hpp"
#include "hidrep/l1_solver.hpp"
#include "hidrep/mf_sgd.hpp"
#include "hidrep/representers.hpp"
#include "hidrep/serialize.hpp"
#include "hidrep/soft_impute.hpp"

namespace {

using hidrep::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open input file: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open output file: " + path);
  return out;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in = open_input(path);
  json cfg;
  try {
    in >> cfg;
  } catch (const std::exception& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config must be a JSON object");
  return cfg;
}

// Config-file values fill in anything the command line left untouched;
// explicit flags always win.
template <typename T>
void overlay(const CLI::Option* opt, const json& cfg, const char* key,
             T& value) {
  if (opt != nullptr && opt->count() > 0) return;
  if (cfg.contains(key)) {
    try {
      value = cfg.at(key).get<T>();
    } catch (const std::exception&) {
      throw UsageError(std::string("config key '") + key +
                       "' has the wrong type");
    }
  }
}

void reject_unknown_keys(const json& cfg,
                         const std::set<std::string>& known) {
  for (const auto& [key, v] : cfg.items())
    if (!known.count(key)) throw UsageError("unknown config key: " + key);
}

hidrep::InteractionSet load_interactions(const std::string& path) {
  std::ifstream in = open_input(path);
  return hidrep::parse_movielens(in).set;
}

hidrep::LabeledDataset load_labeled(const std::string& path,
                                    std::optional<Eigen::Index> dim_hint = {}) {
  std::ifstream in = open_input(path);
  return hidrep::parse_libsvm(in, dim_hint);
}

json read_model(const std::string& path) {
  std::ifstream in = open_input(path);
  json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw UsageError("model " + path + ": " + e.what());
  }
  return doc;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config, family, dataset, loss_name, output;
  double lambda = 0.01;
  double lambda_n = -1.0;  // lambda * n convention; wins over --lambda if set
  double tol = 1e-8;
  int max_iter = 100000;
  int k = 8;
  double lr = 0.05;
  int epochs = 50;
  int batch = 128;
  double init_scale = -1.0;
  std::uint64_t seed = 0;
};

int cmd_train(TrainArgs& a, const std::map<std::string, CLI::Option*>& opts,
              std::uint64_t master_seed) {
  const json cfg = load_config(a.config);
  reject_unknown_keys(cfg, {"family", "dataset", "loss", "lambda", "lambda_n",
                            "tol", "max_iter", "k", "lr", "epochs", "batch",
                            "init_scale", "output"});
  overlay(opts.at("family"), cfg, "family", a.family);
  overlay(opts.at("dataset"), cfg, "dataset", a.dataset);
  overlay(opts.at("loss"), cfg, "loss", a.loss_name);
  overlay(opts.at("lambda"), cfg, "lambda", a.lambda);
  overlay(opts.at("lambda_n"), cfg, "lambda_n", a.lambda_n);
  overlay(opts.at("tol"), cfg, "tol", a.tol);
  overlay(opts.at("max_iter"), cfg, "max_iter", a.max_iter);
  overlay(opts.at("k"), cfg, "k", a.k);
  overlay(opts.at("lr"), cfg, "lr", a.lr);
  overlay(opts.at("epochs"), cfg, "epochs", a.epochs);
  overlay(opts.at("batch"), cfg, "batch", a.batch);
  overlay(opts.at("init_scale"), cfg, "init_scale", a.init_scale);
  overlay(opts.at("output"), cfg, "output", a.output);
  if (a.family.empty()) throw UsageError("train: --family is required");
  if (a.dataset.empty()) throw UsageError("train: --dataset is required");
  if (a.output.empty()) throw UsageError("train: --output is required");
  if (a.loss_name.empty())
    a.loss_name = a.family == "l1" ? "logistic" : "squared";
  const hidrep::LossFunction loss = hidrep::LossFunction::from_name(a.loss_name);

  json doc;
  if (a.family == "l1") {
    const hidrep::LabeledDataset ds = load_labeled(a.dataset);
    const double lambda =
        a.lambda_n > 0 ? a.lambda_n / static_cast<double>(ds.size()) : a.lambda;
    try {
      const hidrep::L1LinearModel model =
          hidrep::fit_l1(ds, loss, lambda, a.tol, a.max_iter);
      std::cerr << "converged: kkt residual " << model.kkt_residual << " after "
                << model.iterations << " iterations\n";
      doc = hidrep::to_json(model);
    } catch (const hidrep::L1ConvergenceError& e) {
      std::cerr << "solver did not converge: " << e.what() << "\n";
      return 1;
    }
  } else if (a.family == "nuclear") {
    const hidrep::InteractionSet obs = load_interactions(a.dataset);
    const double lambda = a.lambda_n > 0
                              ? a.lambda_n / static_cast<double>(obs.size())
                              : a.lambda;
    const hidrep::LowRankModel model =
        hidrep::soft_impute(obs, lambda, -1, a.tol, a.max_iter);
    std::cerr << "converged: rank " << model.rank() << ", relative delta "
              << model.converged_delta << " after " << model.iterations
              << " iterations\n";
    doc = hidrep::to_json(model);
  } else if (a.family == "mf") {
    const hidrep::InteractionSet train = load_interactions(a.dataset);
    hidrep::MfSgdOptions opt;
    opt.k = a.k;
    opt.lr = a.lr;
    opt.epochs = a.epochs;
    opt.batch = a.batch;
    opt.loss = loss;
    opt.init_scale = a.init_scale;
    opt.seed = hidrep::derive_seed(master_seed, 1, 0);
    const hidrep::EmbeddingPair factors = hidrep::fit_mf_sgd(train, opt).factors;
    std::cerr << "trained mf factors: " << train.n_users << " users, "
              << train.n_items << " items, k=" << a.k << "\n";
    doc = hidrep::to_json(factors, loss.name());
  } else {
    throw UsageError("train: unknown family '" + a.family +
                     "' (expected l1, nuclear, or mf)");
  }
  open_output(a.output) << doc.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// explain
// ---------------------------------------------------------------------------

struct ExplainArgs {
  std::string config, model, dataset, method = "hidrep", output, side = "average";
  std::string test_file;
  int test_row = 0;
  int test_user = -1;
  int test_item = -1;
  int top = -1;  // < 0: all rows
};

void truncate_records(std::vector<hidrep::AttributionRecord>& recs, int top) {
  hidrep::sort_records(recs);
  if (top >= 0 && static_cast<int>(recs.size()) > top) recs.resize(top);
}

int cmd_explain(ExplainArgs& a, const std::map<std::string, CLI::Option*>& opts,
                std::uint64_t master_seed) {
  const json cfg = load_config(a.config);
  reject_unknown_keys(cfg, {"model", "dataset", "method", "output", "side",
                            "test_file", "test_row", "test_user", "test_item",
                            "top"});
  overlay(opts.at("model"), cfg, "model", a.model);
  overlay(opts.at("dataset"), cfg, "dataset", a.dataset);
  overlay(opts.at("method"), cfg, "method", a.method);
  overlay(opts.at("output"), cfg, "output", a.output);
  overlay(opts.at("side"), cfg, "side", a.side);
  overlay(opts.at("test_file"), cfg, "test_file", a.test_file);
  overlay(opts.at("test_row"), cfg, "test_row", a.test_row);
  overlay(opts.at("test_user"), cfg, "test_user", a.test_user);
  overlay(opts.at("test_item"), cfg, "test_item", a.test_item);
  overlay(opts.at("top"), cfg, "top", a.top);
  if (a.model.empty()) throw UsageError("explain: --model is required");
  if (a.output.empty()) throw UsageError("explain: --output is required");

  const json doc = read_model(a.model);
  const std::string family = doc.at("family").get<std::string>();
  std::ofstream out = open_output(a.output);

  if (family == "l1") {
    if (a.dataset.empty()) throw UsageError("explain: --dataset is required");
    if (a.test_file.empty())
      throw UsageError("explain: --test-file is required for l1 models");
    const hidrep::L1LinearModel model = hidrep::l1_model_from_json(doc);
    const hidrep::LabeledDataset ds =
        load_labeled(a.dataset, model.theta.size());
    const hidrep::LabeledDataset tests =
        load_labeled(a.test_file, model.theta.size());
    if (a.test_row < 0 || a.test_row >= tests.size())
      throw UsageError("explain: --test-row out of range");
    const hidrep::SparseVector& x_test = tests.samples[a.test_row];

    std::vector<hidrep::AttributionRecord> recs;
    const hidrep::AttributionMethod method = hidrep::method_from_name(a.method);
    if (method == hidrep::AttributionMethod::HighDimRep) {
      recs = hidrep::l1_attribute(model, ds, x_test);
    } else {
      std::vector<double> scores;
      switch (method) {
        case hidrep::AttributionMethod::L2Rep:
          scores = hidrep::l2_representer(model, ds, x_test);
          break;
        case hidrep::AttributionMethod::Influence:
          scores = hidrep::influence_l1(model, ds, x_test);
          break;
        default:
          scores = hidrep::random_scores(ds.samples.size(),
                                         hidrep::derive_seed(master_seed, 2, 0));
      }
      recs.resize(scores.size());
      for (std::size_t i = 0; i < scores.size(); ++i) {
        recs[i].train_index = static_cast<int>(i);
        recs[i].observed = ds.labels[i];
        recs[i].importance = scores[i];
      }
    }
    truncate_records(recs, a.top);
    hidrep::write_linear_report_csv(out, recs, a.method);
    return 0;
  }

  if (family == "nuclear") {
    if (a.method != "hidrep")
      throw UsageError("explain: method '" + a.method +
                       "' is not available for nuclear models");
    if (a.test_user < 0 || a.test_item < 0)
      throw UsageError("explain: --test-user and --test-item are required");
    const hidrep::LowRankModel model = hidrep::low_rank_model_from_json(doc);
    hidrep::NuclearSide side;
    if (a.side == "column") side = hidrep::NuclearSide::Column;
    else if (a.side == "row") side = hidrep::NuclearSide::Row;
    else if (a.side == "average") side = hidrep::NuclearSide::Average;
    else throw UsageError("explain: unknown --side '" + a.side + "'");
    std::vector<hidrep::AttributionRecord> recs =
        hidrep::nuclear_attribute_entries(model, a.test_user, a.test_item,
                                          side);
    truncate_records(recs, a.top);
    hidrep::write_cf_report_csv(out, recs, a.method);
    return 0;
  }

  if (family == "mf") {
    if (a.method == "l2" || a.method == "influence")
      throw UsageError("explain: the " + a.method +
                       " baseline is not applicable to models with two "
                       "separate encoders");
    if (a.method != "hidrep")
      throw UsageError("explain: method '" + a.method +
                       "' is not available for mf models");
    if (a.dataset.empty()) throw UsageError("explain: --dataset is required");
    if (a.test_user < 0 || a.test_item < 0)
      throw UsageError("explain: --test-user and --test-item are required");
    const hidrep::EmbeddingPair pair = hidrep::embedding_pair_from_json(doc);
    const hidrep::LossFunction loss =
        hidrep::LossFunction::from_name(doc.at("loss").get<std::string>());
    const hidrep::InteractionSet train = load_interactions(a.dataset);
    if (train.n_users > pair.user_mat.rows() ||
        train.n_items > pair.item_mat.rows())
      throw UsageError("explain: dataset ids exceed the model's embeddings");
    hidrep::NormalizedEmbeddings norm;
    if (pair.normalized) {
      norm.u_tilde = pair.user_mat;
      norm.v_tilde = pair.item_mat;
    } else {
      norm = hidrep::normalize_factors(pair);
    }
    std::vector<hidrep::AttributionRecord> recs =
        hidrep::cf_explain(norm, loss, train, a.test_user, a.test_item);
    truncate_records(recs, a.top);
    hidrep::write_cf_report_csv(out, recs, a.method);
    return 0;
  }

  throw UsageError("explain: unknown model family '" + family + "'");
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string config, family, dataset, test_file, method = "hidrep",
              sign = "plus", output;
  std::vector<int> ks;
  int trials = 1;
  int tests_per_trial = 1;
  double lambda = 0.01;
  double tol = 1e-7;
  int max_iter = 100000;
  std::string loss_name;
  int k = 8;
  double lr = 0.05;
  int epochs = 50;
  int batch = 128;
  int holdout_per_user = 1;
};

int cmd_evaluate(EvaluateArgs& a,
                 const std::map<std::string, CLI::Option*>& opts,
                 std::uint64_t master_seed) {
  const json cfg = load_config(a.config);
  reject_unknown_keys(cfg, {"family", "dataset", "test_file", "method", "sign",
                            "output", "ks", "trials", "tests_per_trial",
                            "lambda", "tol", "max_iter", "loss", "k", "lr",
                            "epochs", "batch", "holdout_per_user"});
  overlay(opts.at("family"), cfg, "family", a.family);
  overlay(opts.at("dataset"), cfg, "dataset", a.dataset);
  overlay(opts.at("test_file"), cfg, "test_file", a.test_file);
  overlay(opts.at("method"), cfg, "method", a.method);
  overlay(opts.at("sign"), cfg, "sign", a.sign);
  overlay(opts.at("output"), cfg, "output", a.output);
  overlay(opts.at("ks"), cfg, "ks", a.ks);
  overlay(opts.at("trials"), cfg, "trials", a.trials);
  overlay(opts.at("tests_per_trial"), cfg, "tests_per_trial",
          a.tests_per_trial);
  overlay(opts.at("lambda"), cfg, "lambda", a.lambda);
  overlay(opts.at("tol"), cfg, "tol", a.tol);
  overlay(opts.at("max_iter"), cfg, "max_iter", a.max_iter);
  overlay(opts.at("loss"), cfg, "loss", a.loss_name);
  overlay(opts.at("k"), cfg, "k", a.k);
  overlay(opts.at("lr"), cfg, "lr", a.lr);
  overlay(opts.at("epochs"), cfg, "epochs", a.epochs);
  overlay(opts.at("batch"), cfg, "batch", a.batch);
  overlay(opts.at("holdout_per_user"), cfg, "holdout_per_user",
          a.holdout_per_user);
  if (a.family.empty()) throw UsageError("evaluate: --family is required");
  if (a.dataset.empty()) throw UsageError("evaluate: --dataset is required");
  if (a.output.empty()) throw UsageError("evaluate: --output is required");
  if (a.ks.empty()) throw UsageError("evaluate: a ks schedule is required");
  const hidrep::DeletionSign sign =
      a.sign == "plus" ? hidrep::DeletionSign::Plus
      : a.sign == "minus"
          ? hidrep::DeletionSign::Minus
          : throw UsageError("evaluate: --sign must be plus or minus");

  hidrep::DeletionReport report;
  if (a.family == "l1") {
    if (a.test_file.empty())
      throw UsageError("evaluate: --test-file is required for l1");
    hidrep::L1DeletionConfig dc;
    dc.train = load_labeled(a.dataset);
    dc.test_pool = load_labeled(a.test_file, dc.train.dim()).samples;
    dc.method = hidrep::method_from_name(a.method);
    dc.loss = hidrep::LossFunction::from_name(
        a.loss_name.empty() ? "logistic" : a.loss_name);
    dc.lambda = a.lambda;
    dc.tol = a.tol;
    dc.max_iter = a.max_iter;
    dc.ks = a.ks;
    dc.trials = a.trials;
    dc.tests_per_trial = a.tests_per_trial;
    dc.seed = master_seed;
    dc.sign = sign;
    report = hidrep::run_case_deletion_l1(dc);
  } else if (a.family == "mf") {
    const hidrep::InteractionSet all = load_interactions(a.dataset);
    const hidrep::HoldoutSplit split = hidrep::split_per_user_holdout(
        all, a.holdout_per_user, hidrep::derive_seed(master_seed, 3, 0));
    hidrep::MfDeletionConfig dc;
    dc.train = split.train;
    for (const auto& it : split.test.interactions)
      dc.test_pool.push_back({it.user, it.item});
    dc.method = hidrep::method_from_name(a.method);
    dc.mf.k = a.k;
    dc.mf.lr = a.lr;
    dc.mf.epochs = a.epochs;
    dc.mf.batch = a.batch;
    dc.mf.loss = hidrep::LossFunction::from_name(
        a.loss_name.empty() ? "squared" : a.loss_name);
    dc.ks = a.ks;
    dc.trials = a.trials;
    dc.tests_per_trial = a.tests_per_trial;
    dc.seed = master_seed;
    dc.sign = sign;
    report = hidrep::run_case_deletion_mf(dc);
  } else {
    throw UsageError("evaluate: unknown family '" + a.family + "'");
  }
  open_output(a.output) << hidrep::to_json(report).dump(2) << '\n';
  std::cout << "AUC-DEL" << (sign == hidrep::DeletionSign::Plus ? "+" : "-")
            << " " << report.mean << " ± " << report.ci_half_width
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// audit-negatives
// ---------------------------------------------------------------------------

struct AuditArgs {
  std::string config, dataset, method = "representer", output;
  double binarize_threshold = 4.0;
  int min_interactions = 10;
  int holdout_per_user = 1;
  std::int64_t negative_count = -1;  // < 0: all unobserved pairs
  double negative_weight = 0.05;
  std::vector<double> fractions;
  bool remove_smallest = false;
  int recall_k = 20;
  int k = 8;
  double lr = 0.05;
  int epochs = 50;
  int batch = 128;
};

int cmd_audit(AuditArgs& a, const std::map<std::string, CLI::Option*>& opts,
              std::uint64_t master_seed) {
  const json cfg = load_config(a.config);
  reject_unknown_keys(cfg, {"dataset", "method", "output",
                            "binarize_threshold", "min_interactions",
                            "holdout_per_user", "negative_count",
                            "negative_weight", "fractions", "remove_smallest",
                            "recall_k", "k", "lr", "epochs", "batch"});
  overlay(opts.at("dataset"), cfg, "dataset", a.dataset);
  overlay(opts.at("method"), cfg, "method", a.method);
  overlay(opts.at("output"), cfg, "output", a.output);
  overlay(opts.at("binarize_threshold"), cfg, "binarize_threshold",
          a.binarize_threshold);
  overlay(opts.at("min_interactions"), cfg, "min_interactions",
          a.min_interactions);
  overlay(opts.at("holdout_per_user"), cfg, "holdout_per_user",
          a.holdout_per_user);
  overlay(opts.at("negative_count"), cfg, "negative_count", a.negative_count);
  overlay(opts.at("negative_weight"), cfg, "negative_weight",
          a.negative_weight);
  overlay(opts.at("fractions"), cfg, "fractions", a.fractions);
  overlay(opts.at("remove_smallest"), cfg, "remove_smallest",
          a.remove_smallest);
  overlay(opts.at("recall_k"), cfg, "recall_k", a.recall_k);
  overlay(opts.at("k"), cfg, "k", a.k);
  overlay(opts.at("lr"), cfg, "lr", a.lr);
  overlay(opts.at("epochs"), cfg, "epochs", a.epochs);
  overlay(opts.at("batch"), cfg, "batch", a.batch);
  if (a.dataset.empty()) throw UsageError("audit-negatives: --dataset is required");
  if (a.output.empty()) throw UsageError("audit-negatives: --output is required");
  if (a.fractions.empty())
    throw UsageError("audit-negatives: removal fractions are required");

  hidrep::InteractionSet positives =
      hidrep::binarize(load_interactions(a.dataset), a.binarize_threshold);
  positives = hidrep::filter_min_interactions(positives, a.min_interactions);
  const hidrep::HoldoutSplit split = hidrep::split_per_user_holdout(
      positives, a.holdout_per_user, hidrep::derive_seed(master_seed, 4, 0));

  hidrep::NegativeAuditConfig nc;
  nc.train_positives = split.train;
  nc.test_positives = split.test;
  if (a.negative_count >= 0)
    nc.negative_count = static_cast<std::size_t>(a.negative_count);
  nc.negative_weight = a.negative_weight;
  nc.mf.k = a.k;
  nc.mf.lr = a.lr;
  nc.mf.epochs = a.epochs;
  nc.mf.batch = a.batch;
  nc.mf.loss = hidrep::LossFunction{hidrep::LossKind::Bce};
  nc.removal_fractions = a.fractions;
  nc.method = hidrep::neg_audit_method_from_name(a.method);
  nc.remove_largest = !a.remove_smallest;
  nc.recall_k = a.recall_k;
  nc.seed = master_seed;

  const hidrep::NegativeAuditReport report =
      hidrep::negative_audit_experiment(nc);
  open_output(a.output) << hidrep::to_json(report).dump(2) << '\n';
  for (const auto& row : report.rows)
    std::cout << "fraction " << row.fraction << ": removed " << row.removed
              << ", false negatives " << row.false_negative_hits
              << ", recall@" << a.recall_k << " " << row.recall_before
              << " -> " << row.recall_after << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// normalize-factors
// ---------------------------------------------------------------------------

struct NormalizeArgs {
  std::string user_file, item_file, output_user, output_item, output_model;
  std::string loss_name = "squared";
};

int cmd_normalize(NormalizeArgs& a) {
  if (a.user_file.empty() || a.item_file.empty())
    throw UsageError(
        "normalize-factors: --user-embeddings and --item-embeddings are "
        "required");
  if (a.output_model.empty() && (a.output_user.empty() || a.output_item.empty()))
    throw UsageError(
        "normalize-factors: either --output-model or both --output-user and "
        "--output-item are required");
  std::ifstream uf = open_input(a.user_file);
  std::ifstream vf = open_input(a.item_file);
  const hidrep::EmbeddingPair pair = hidrep::load_embeddings(uf, vf);
  const hidrep::NormalizedEmbeddings norm = hidrep::normalize_factors(pair);
  if (!a.output_user.empty()) {
    std::ofstream out = open_output(a.output_user);
    hidrep::write_embedding_matrix(out, norm.u_tilde);
  }
  if (!a.output_item.empty()) {
    std::ofstream out = open_output(a.output_item);
    hidrep::write_embedding_matrix(out, norm.v_tilde);
  }
  if (!a.output_model.empty()) {
    hidrep::EmbeddingPair out;
    out.user_mat = norm.u_tilde;
    out.item_mat = norm.v_tilde;
    out.normalized = true;
    open_output(a.output_model)
        << hidrep::to_json(out, a.loss_name).dump(2) << '\n';
  }
  std::cout << "rank " << norm.sigma.size();
  if (norm.sigma.size() > 0)
    std::cout << ", spectrum [" << norm.sigma[norm.sigma.size() - 1] << ", "
              << norm.sigma[0] << "]";
  std::cout << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// datasets info
// ---------------------------------------------------------------------------

int cmd_datasets_info(const std::string& format, const std::string& path) {
  if (format == "libsvm") {
    const hidrep::LabeledDataset ds = load_labeled(path);
    std::size_t nnz = 0;
    for (const auto& s : ds.samples) nnz += s.entries.size();
    std::cout << "format: libsvm\nsamples: " << ds.size()
              << "\ndimension: " << ds.dim() << "\nnonzeros: " << nnz << "\n";
    return 0;
  }
  if (format == "movielens") {
    const hidrep::InteractionSet s = load_interactions(path);
    double lo = 0, hi = 0;
    if (!s.interactions.empty()) {
      lo = hi = s.interactions[0].rating;
      for (const auto& it : s.interactions) {
        lo = std::min(lo, it.rating);
        hi = std::max(hi, it.rating);
      }
    }
    std::cout << "format: movielens\nusers: " << s.n_users
              << "\nitems: " << s.n_items
              << "\ninteractions: " << s.size() << "\nrating range: [" << lo
              << ", " << hi << "]\n";
    return 0;
  }
  throw UsageError("datasets info: unknown format '" + format +
                   "' (expected libsvm or movielens)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-data attribution toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  app.add_option("--seed", seed, "Master seed; all randomness derives from it");
  app.add_option("--threads", threads, "Worker pool size")
      ->check(CLI::PositiveNumber);

  std::map<std::string, CLI::Option*> train_opts;
  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Fit a model and save it");
  train->add_option("--config", train_args.config, "JSON config file");
  train_opts["family"] =
      train->add_option("--family", train_args.family, "l1, nuclear, or mf");
  train_opts["dataset"] =
      train->add_option("--dataset", train_args.dataset, "Training data path");
  train_opts["loss"] = train->add_option("--loss", train_args.loss_name,
                                         "squared, logistic, or bce");
  train_opts["lambda"] =
      train->add_option("--lambda", train_args.lambda, "Regularization weight");
  train_opts["lambda_n"] = train->add_option(
      "--lambda-n", train_args.lambda_n,
      "Regularization as lambda*n; wins over --lambda when set");
  train_opts["tol"] = train->add_option("--tol", train_args.tol);
  train_opts["max_iter"] = train->add_option("--max-iter", train_args.max_iter);
  train_opts["k"] = train->add_option("--k", train_args.k, "Embedding rank");
  train_opts["lr"] = train->add_option("--lr", train_args.lr);
  train_opts["epochs"] = train->add_option("--epochs", train_args.epochs);
  train_opts["batch"] = train->add_option("--batch", train_args.batch);
  train_opts["init_scale"] =
      train->add_option("--init-scale", train_args.init_scale);
  train_opts["output"] =
      train->add_option("--output", train_args.output, "Model file to write");

  std::map<std::string, CLI::Option*> explain_opts;
  ExplainArgs explain_args;
  CLI::App* explain =
      app.add_subcommand("explain", "Attribute a prediction to training data");
  explain->add_option("--config", explain_args.config, "JSON config file");
  explain_opts["model"] = explain->add_option("--model", explain_args.model);
  explain_opts["dataset"] =
      explain->add_option("--dataset", explain_args.dataset);
  explain_opts["method"] = explain->add_option(
      "--method", explain_args.method, "hidrep, l2, influence, or random");
  explain_opts["test_file"] =
      explain->add_option("--test-file", explain_args.test_file);
  explain_opts["test_row"] =
      explain->add_option("--test-row", explain_args.test_row);
  explain_opts["test_user"] =
      explain->add_option("--test-user", explain_args.test_user);
  explain_opts["test_item"] =
      explain->add_option("--test-item", explain_args.test_item);
  explain_opts["side"] = explain->add_option("--side", explain_args.side,
                                             "column, row, or average");
  explain_opts["top"] =
      explain->add_option("--top", explain_args.top, "Keep the top N rows");
  explain_opts["output"] = explain->add_option("--output", explain_args.output);

  std::map<std::string, CLI::Option*> eval_opts;
  EvaluateArgs eval_args;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Case-deletion evaluation");
  evaluate->add_option("--config", eval_args.config, "JSON config file");
  eval_opts["family"] = evaluate->add_option("--family", eval_args.family);
  eval_opts["dataset"] = evaluate->add_option("--dataset", eval_args.dataset);
  eval_opts["test_file"] =
      evaluate->add_option("--test-file", eval_args.test_file);
  eval_opts["method"] = evaluate->add_option("--method", eval_args.method);
  eval_opts["sign"] =
      evaluate->add_option("--sign", eval_args.sign, "plus or minus");
  eval_opts["ks"] = evaluate->add_option("--ks", eval_args.ks,
                                         "Deletion schedule, strictly "
                                         "increasing");
  eval_opts["trials"] = evaluate->add_option("--trials", eval_args.trials);
  eval_opts["tests_per_trial"] =
      evaluate->add_option("--tests-per-trial", eval_args.tests_per_trial);
  eval_opts["lambda"] = evaluate->add_option("--lambda", eval_args.lambda);
  eval_opts["tol"] = evaluate->add_option("--tol", eval_args.tol);
  eval_opts["max_iter"] = evaluate->add_option("--max-iter", eval_args.max_iter);
  eval_opts["loss"] = evaluate->add_option("--loss", eval_args.loss_name);
  eval_opts["k"] = evaluate->add_option("--k", eval_args.k);
  eval_opts["lr"] = evaluate->add_option("--lr", eval_args.lr);
  eval_opts["epochs"] = evaluate->add_option("--epochs", eval_args.epochs);
  eval_opts["batch"] = evaluate->add_option("--batch", eval_args.batch);
  eval_opts["holdout_per_user"] =
      evaluate->add_option("--holdout-per-user", eval_args.holdout_per_user);
  eval_opts["output"] = evaluate->add_option("--output", eval_args.output);

  std::map<std::string, CLI::Option*> audit_opts;
  AuditArgs audit_args;
  CLI::App* audit = app.add_subcommand(
      "audit-negatives", "Score sampled negatives and audit false negatives");
  audit->add_option("--config", audit_args.config, "JSON config file");
  audit_opts["dataset"] = audit->add_option("--dataset", audit_args.dataset);
  audit_opts["method"] = audit->add_option("--method", audit_args.method,
                                           "representer, loss, or random");
  audit_opts["binarize_threshold"] = audit->add_option(
      "--binarize-threshold", audit_args.binarize_threshold);
  audit_opts["min_interactions"] =
      audit->add_option("--min-interactions", audit_args.min_interactions);
  audit_opts["holdout_per_user"] =
      audit->add_option("--holdout-per-user", audit_args.holdout_per_user);
  audit_opts["negative_count"] =
      audit->add_option("--negative-count", audit_args.negative_count,
                        "Negatives to sample; omit for all unobserved pairs");
  audit_opts["negative_weight"] =
      audit->add_option("--negative-weight", audit_args.negative_weight);
  audit_opts["fractions"] = audit->add_option(
      "--fractions", audit_args.fractions, "Removal fractions, e.g. 0.01 0.05");
  audit_opts["remove_smallest"] = audit->add_flag(
      "--remove-smallest", audit_args.remove_smallest,
      "Remove the smallest-scored negatives instead of the largest");
  audit_opts["recall_k"] = audit->add_option("--recall-k", audit_args.recall_k);
  audit_opts["k"] = audit->add_option("--k", audit_args.k);
  audit_opts["lr"] = audit->add_option("--lr", audit_args.lr);
  audit_opts["epochs"] = audit->add_option("--epochs", audit_args.epochs);
  audit_opts["batch"] = audit->add_option("--batch", audit_args.batch);
  audit_opts["output"] = audit->add_option("--output", audit_args.output);

  NormalizeArgs norm_args;
  CLI::App* normalize = app.add_subcommand(
      "normalize-factors", "Rebalance a factor pair without changing its "
                           "product");
  normalize->add_option("--user-embeddings", norm_args.user_file);
  normalize->add_option("--item-embeddings", norm_args.item_file);
  normalize->add_option("--output-user", norm_args.output_user);
  normalize->add_option("--output-item", norm_args.output_item);
  normalize->add_option("--output-model", norm_args.output_model);
  normalize->add_option("--loss", norm_args.loss_name,
                        "Loss tag recorded in --output-model");

  std::string ds_format, ds_path;
  CLI::App* datasets = app.add_subcommand("datasets", "Dataset utilities");
  datasets->require_subcommand(1);
  CLI::App* info = datasets->add_subcommand("info", "Summarize a dataset file");
  info->add_option("--format", ds_format, "libsvm or movielens")->required();
  info->add_option("path", ds_path, "Dataset file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) return cmd_train(train_args, train_opts, seed);
    if (explain->parsed()) return cmd_explain(explain_args, explain_opts, seed);
    if (evaluate->parsed()) return cmd_evaluate(eval_args, eval_opts, seed);
    if (audit->parsed()) return cmd_audit(audit_args, audit_opts, seed);
    if (normalize->parsed()) return cmd_normalize(norm_args);
    if (datasets->parsed()) return cmd_datasets_info(ds_format, ds_path);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const hidrep::InvalidInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
