#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "../error.hpp"
#include "../model.hpp"
#include "tree_builder.hpp"

namespace treelp::learn {

/// Cut points for one numeric column, learned by a single-feature entropy tree
/// grown best-first (largest total impurity decrease first) up to
/// `max_thresholds` splits and depth ceil(log2(max_thresholds + 1)).
/// Returns the thresholds in ascending order; constant columns yield none.
inline std::vector<double> discretize_feature(const std::vector<double>& values, const std::vector<std::string>& targets,
                                              std::size_t max_thresholds) {
  if (values.size() != targets.size()) throw DataError("discretize: values and targets differ in length");
  if (values.size() < 2) throw DataError("discretize: need at least two values");
  if (max_thresholds == 0) throw UsageError("discretize: max_thresholds must be positive");

  auto classes = categorical_feature("y", targets);
  std::vector<Row> rows;
  rows.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) rows.push_back(Row{{values[i]}, *classes.encode(targets[i])});
  const std::size_t k = classes.categories.size();
  const int max_depth = static_cast<int>(std::ceil(std::log2(static_cast<double>(max_thresholds) + 1.0)));

  struct Leaf {
    std::vector<std::size_t> idx;
    int depth;
    std::optional<SplitCandidate> split;
    double score;  // impurity decrease weighted by leaf size
  };
  auto evaluate = [&](std::vector<std::size_t> idx, int depth) {
    Leaf leaf{std::move(idx), depth, std::nullopt, 0.0};
    if (depth < max_depth) {
      auto counts = detail::count_classes(rows, leaf.idx, k);
      double parent = entropy(counts);
      if (parent > 0.0) leaf.split = detail::best_numeric_split(rows, leaf.idx, 0, k, Criterion::entropy, 1, parent);
      if (leaf.split) leaf.score = leaf.split->gain * static_cast<double>(leaf.idx.size());
    }
    return leaf;
  };

  std::vector<std::size_t> all(rows.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<Leaf> frontier;
  frontier.push_back(evaluate(all, 0));
  std::vector<double> thresholds;
  while (thresholds.size() < max_thresholds) {
    // Leaves stay ordered by value range; ties pick the leftmost.
    std::size_t best = frontier.size();
    for (std::size_t i = 0; i < frontier.size(); ++i)
      if (frontier[i].split && (best == frontier.size() || frontier[i].score > frontier[best].score + kMinGain)) best = i;
    if (best == frontier.size()) break;
    Leaf chosen = std::move(frontier[best]);
    thresholds.push_back(chosen.split->threshold);
    auto left = evaluate(std::move(chosen.split->left), chosen.depth + 1);
    auto right = evaluate(std::move(chosen.split->right), chosen.depth + 1);
    frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(best));
    frontier.insert(frontier.begin() + static_cast<std::ptrdiff_t>(best), std::move(right));
    frontier.insert(frontier.begin() + static_cast<std::ptrdiff_t>(best), std::move(left));
  }
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  return thresholds;
}

using Discretization = std::map<std::string, std::vector<double>>;

/// Thresholds for every numeric feature of a dataset.
inline Discretization discretize_dataset(const Dataset& ds, std::size_t max_thresholds) {
  Discretization out;
  std::vector<std::string> targets;
  targets.reserve(ds.size());
  for (const auto& r : ds.rows) targets.push_back(ds.target.decode(r.y));
  for (std::size_t f = 0; f < ds.schema.size(); ++f) {
    if (!ds.schema[f].is_numeric()) continue;
    std::vector<double> values;
    values.reserve(ds.size());
    for (const auto& r : ds.rows) values.push_back(r.x[f]);
    out[ds.schema[f].name] = ds.size() < 2 ? std::vector<double>{} : discretize_feature(values, targets, max_thresholds);
  }
  return out;
}

/// Bin of `x` given ascending cut points: the number of thresholds below x.
inline std::size_t bin_of(double x, const std::vector<double>& thresholds) {
  return static_cast<std::size_t>(std::lower_bound(thresholds.begin(), thresholds.end(), x) - thresholds.begin());
}

}  // namespace treelp::learn
