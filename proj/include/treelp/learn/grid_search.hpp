#pragma once

#include <algorithm>
#include <cstdint>
#include <future>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../error.hpp"
#include "../model.hpp"
#include "metrics.hpp"
#include "stratify.hpp"
#include "tree_builder.hpp"

namespace treelp::learn {

struct ParamGrid {
  std::vector<int> max_depth{5, 9, 11};
  std::vector<Criterion> criterion{Criterion::entropy, Criterion::gini};
  std::vector<MaxFeatures> max_features{MaxFeatures::sqrt, MaxFeatures::log2};
  std::vector<int> min_samples_leaf{1};
  std::uint64_t seed = 0;
  std::size_t folds = 5;

  std::size_t size() const { return max_depth.size() * criterion.size() * max_features.size() * min_samples_leaf.size(); }

  /// Grid points in nesting order depth > criterion > max_features > min_samples_leaf.
  std::vector<TrainParams> points() const {
    std::vector<TrainParams> out;
    for (int d : max_depth)
      for (auto c : criterion)
        for (auto m : max_features)
          for (int l : min_samples_leaf) out.push_back(TrainParams{d, c, m, l, seed});
    return out;
  }
};

/// Reads `{max_depth:[...], criterion:[...], max_features:[...],
/// min_samples_leaf:[...], seed:N, folds:K}`; absent keys keep the defaults.
inline ParamGrid parse_grid(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(std::string("invalid grid file: ") + e.what());
  }
  ParamGrid g;
  try {
    if (j.contains("max_depth")) g.max_depth = j.at("max_depth").get<std::vector<int>>();
    if (j.contains("criterion")) {
      g.criterion.clear();
      for (const auto& c : j.at("criterion")) g.criterion.push_back(parse_criterion(c.get<std::string>()));
    }
    if (j.contains("max_features")) {
      g.max_features.clear();
      for (const auto& m : j.at("max_features")) g.max_features.push_back(parse_max_features(m.get<std::string>()));
    }
    if (j.contains("min_samples_leaf")) g.min_samples_leaf = j.at("min_samples_leaf").get<std::vector<int>>();
    if (j.contains("seed")) g.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("folds")) g.folds = j.at("folds").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("invalid grid file: ") + e.what());
  }
  if (g.size() == 0) throw UsageError("grid has no points");
  return g;
}

struct CVResult {
  TrainParams params;
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
};

struct GridSearchResult {
  TrainParams best;
  std::vector<CVResult> all;  // grid order
};

/// k-fold cross-validated accuracy of one parameter setting over fixed folds.
inline CVResult cross_validate(const std::vector<Partition>& folds, const TrainParams& params) {
  CVResult r{params, {}, 0.0};
  double sum = 0.0;
  for (const auto& fold : folds) {
    auto tree = train_tree(fold.train, params);
    double acc = accuracy(predict_rows(tree, fold.test), actual_labels(fold.test));
    r.fold_accuracies.push_back(acc);
    sum += acc;
  }
  r.mean_accuracy = sum / static_cast<double>(r.fold_accuracies.size());
  return r;
}

namespace detail {
template <typename T>
std::size_t position(const std::vector<T>& v, const T& x) {
  return static_cast<std::size_t>(std::find(v.begin(), v.end(), x) - v.begin());
}
}  // namespace detail

/// True when `a` should be preferred over `b`: higher mean accuracy, then
/// smaller depth, entropy before gini, then earlier grid position for
/// max_features and min_samples_leaf.
inline bool better_point(const CVResult& a, const CVResult& b, const ParamGrid& grid) {
  if (a.mean_accuracy != b.mean_accuracy) return a.mean_accuracy > b.mean_accuracy;
  if (a.params.max_depth != b.params.max_depth) return a.params.max_depth < b.params.max_depth;
  if (a.params.criterion != b.params.criterion) return a.params.criterion == Criterion::entropy;
  auto ma = detail::position(grid.max_features, a.params.max_features), mb = detail::position(grid.max_features, b.params.max_features);
  if (ma != mb) return ma < mb;
  return detail::position(grid.min_samples_leaf, a.params.min_samples_leaf) <
         detail::position(grid.min_samples_leaf, b.params.min_samples_leaf);
}

/// Exhaustive stratified k-fold grid search. Every point sees the same folds;
/// points are evaluated concurrently and collected in grid order.
inline GridSearchResult grid_search(const Dataset& ds, const ParamGrid& grid) {
  if (grid.size() == 0) throw UsageError("grid has no points");
  const auto folds = stratified_kfold(ds, grid.folds, grid.seed);
  const auto points = grid.points();
  std::vector<std::future<CVResult>> jobs;
  jobs.reserve(points.size());
  for (const auto& p : points) {
    p.validate();
    jobs.push_back(std::async(std::launch::async, [&folds, p] { return cross_validate(folds, p); }));
  }
  GridSearchResult out;
  for (auto& j : jobs) out.all.push_back(j.get());
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.all.size(); ++i)
    if (better_point(out.all[i], out.all[best], grid)) best = i;
  out.best = out.all[best].params;
  return out;
}

}  // namespace treelp::learn
