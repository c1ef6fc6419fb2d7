#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "compile/encode.hpp"
#include "compile/facts.hpp"
#include "compile/labels.hpp"
#include "error.hpp"
#include "explain/case.hpp"
#include "learn/discretize.hpp"
#include "learn/grid_search.hpp"
#include "learn/metrics.hpp"
#include "learn/select.hpp"
#include "learn/stratify.hpp"
#include "learn/tree_builder.hpp"
#include "model.hpp"
#include "model_io.hpp"
#include "rules/parser.hpp"
#include "rules/printer.hpp"

namespace treelp {

namespace fs = std::filesystem;

struct PipelineConfig {
  fs::path dataset;
  std::string target = "goal_death";
  double train_fraction = 0.75;
  std::optional<learn::ParamGrid> grid;  // fixed `params` when absent
  TrainParams params;
  std::size_t k = 0;  // features to keep, 0 for all
  std::size_t max_thresholds = 4;
  std::uint64_t seed = 0;
  fs::path outdir = ".";
};

struct TrainReport {
  DecisionTree tree;
  double accuracy = 0.0;
  std::optional<double> kappa;
  TrainParams best_params;
  learn::FeatureRanking ranking;
  std::vector<learn::CVResult> cv;
};

/// Runs `fn`, prefixing any pipeline error with the stage it came from.
template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    rethrow_as(e, name + ": " + e.what());
  }
}

inline nlohmann::ordered_json params_json(const TrainParams& p) {
  nlohmann::ordered_json j;
  j["max_depth"] = p.max_depth;
  j["criterion"] = to_string(p.criterion);
  j["max_features"] = to_string(p.max_features);
  j["min_samples_leaf"] = p.min_samples_leaf;
  return j;
}

/// discretize -> select -> split -> grid search -> train -> score.
inline TrainReport run_training(const Dataset& ds, const PipelineConfig& cfg) {
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) throw UsageError("train fraction must lie in (0,1)");
  TrainReport r;
  auto bins = stage("discretize", [&] { return learn::discretize_dataset(ds, cfg.max_thresholds); });
  r.ranking = stage("select", [&] {
    return cfg.k == 0 ? learn::rank_features(ds, bins) : learn::select_features(ds, cfg.k, bins);
  });
  std::vector<std::string> keep;
  for (const auto& e : r.ranking) keep.push_back(e.feature);
  auto selected = learn::project(ds, keep);
  auto split = stage("split", [&] { return learn::stratified_split(selected, cfg.train_fraction, cfg.seed); });

  r.best_params = cfg.params;
  if (cfg.grid) {
    auto grid = *cfg.grid;
    grid.seed = cfg.seed;
    auto result = stage("grid_search", [&] { return learn::grid_search(split.train, grid); });
    r.best_params = result.best;
    r.cv = std::move(result.all);
  }
  r.best_params.rng_seed = cfg.seed;
  r.tree = stage("train", [&] {
    r.best_params.validate();
    return learn::train_tree(split.train, r.best_params);
  });
  stage("evaluate", [&] {
    auto predicted = learn::predict_rows(r.tree, split.test);
    auto actual = learn::actual_labels(split.test);
    r.accuracy = learn::accuracy(predicted, actual);
    r.kappa = learn::cohen_kappa(predicted, actual);
  });
  return r;
}

inline std::string metrics_json(const TrainReport& r) {
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy;
  j["kappa"] = r.kappa ? nlohmann::ordered_json(*r.kappa) : nlohmann::ordered_json(nullptr);
  j["best_params"] = params_json(r.best_params);
  j["ranking"] = nlohmann::ordered_json::array();
  for (const auto& e : r.ranking)
    j["ranking"].push_back({{"feature", e.feature}, {"statistic", e.statistic}, {"p_value", e.p_value}});
  return j.dump(2) + "\n";
}

/// Trains on the configured dataset and writes model.json and metrics.json
/// into the output directory. Cross-validation results go to `log`.
inline TrainReport cmd_train(const PipelineConfig& cfg, std::ostream& log) {
  auto ds = stage("load", [&] { return load_dataset(cfg.dataset, format_from_path(cfg.dataset), cfg.target); });
  auto r = run_training(ds, cfg);
  for (const auto& cv : r.cv)
    log << "cv " << params_json(cv.params).dump() << " mean_accuracy=" << format_number(cv.mean_accuracy) << "\n";
  log << "test accuracy=" << format_number(r.accuracy) << " kappa=" << (r.kappa ? format_number(*r.kappa) : "undefined") << "\n";
  stage("write", [&] {
    fs::create_directories(cfg.outdir);
    save_tree(r.tree, cfg.outdir / "model.json");
    write_file(cfg.outdir / "metrics.json", metrics_json(r));
  });
  return r;
}

inline compile::LabelMap load_labels(const std::optional<fs::path>& path, const FeatureSchema& target) {
  if (!path) return compile::default_labels(target);
  return compile::parse_labels(read_file(*path), target);
}

inline compile::CompiledModel load_compiled(const fs::path& model, const std::optional<fs::path>& labels = std::nullopt) {
  auto tree = load_tree(model);
  auto map = load_labels(labels, tree.target());
  return stage("compile", [&] { return compile::compile_model(std::move(tree), std::move(map)); });
}

/// Cases from a CSV table or an `.lp` fact file.
inline std::vector<Case> load_cases(const fs::path& path, const compile::CompiledModel& model) {
  auto text = read_file(path);
  if (path.extension() == ".lp")
    return compile::cases_from_facts(rules::parse_program(text), model.tree.schema(), model.thresholds);
  return parse_cases_csv(text, model.tree.schema(), model.tree.target().name);
}

/// Writes nodes.lp, paths.lp and extra.lp, plus cases.lp when cases are
/// given. Returns the written paths.
inline std::vector<fs::path> cmd_compile(const fs::path& model, const fs::path& outdir,
                                         const std::optional<fs::path>& labels = std::nullopt,
                                         const std::optional<fs::path>& cases = std::nullopt) {
  auto m = load_compiled(model, labels);
  std::vector<fs::path> written;
  fs::create_directories(outdir);
  auto put = [&](const std::string& name, const std::string& text) {
    write_file(outdir / name, text);
    written.push_back(outdir / name);
  };
  put("nodes.lp", rules::serialize_program(m.nodes));
  put("paths.lp", rules::serialize_program(m.paths));
  put("extra.lp", rules::serialize_program(m.extra));
  if (cases) put("cases.lp", compile::cases_program(load_cases(*cases, m), m.tree));
  return written;
}

inline const Case& find_case(const std::vector<Case>& cases, std::int64_t id) {
  for (const auto& c : cases)
    if (c.id == id) return c;
  throw DataError("no case with id " + std::to_string(id));
}

/// Rendered explanation of `prediction(id)`.
inline std::string cmd_explain(const fs::path& model, const fs::path& cases, std::int64_t id, compile::Encoding encoding,
                               const std::optional<fs::path>& labels = std::nullopt) {
  auto m = load_compiled(model, labels);
  auto all = load_cases(cases, m);
  return explain::explain_case(m, find_case(all, id), encoding).text();
}

/// `id,prediction` CSV for every case.
inline std::string cmd_predict(const fs::path& model, const fs::path& cases, compile::Encoding encoding,
                               const std::optional<fs::path>& labels = std::nullopt) {
  auto m = load_compiled(model, labels);
  auto all = load_cases(cases, m);
  auto predicted = explain::predict_cases(m, all, encoding);
  std::string out = "id,prediction\n";
  for (std::size_t i = 0; i < all.size(); ++i) out += std::to_string(all[i].id) + "," + predicted[i] + "\n";
  return out;
}

/// Chi-square ranking of every feature as CSV.
inline std::string cmd_rank(const fs::path& dataset, const std::string& target, std::size_t max_thresholds) {
  auto ds = stage("load", [&] { return load_dataset(dataset, format_from_path(dataset), target); });
  auto bins = stage("discretize", [&] { return learn::discretize_dataset(ds, max_thresholds); });
  return learn::ranking_to_csv(stage("select", [&] { return learn::rank_features(ds, bins); }));
}

}  // namespace treelp
