#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "../error.hpp"
#include "../model.hpp"
#include "../random.hpp"
#include "impurity.hpp"

namespace treelp::learn {

/// Smallest impurity decrease a split must achieve to be kept.
inline constexpr double kMinGain = 1e-12;

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;  // numeric features
  int category = -1;       // categorical features
  double gain = 0.0;
  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
};

namespace detail {

inline std::vector<std::size_t> count_classes(const std::vector<Row>& rows, const std::vector<std::size_t>& idx, std::size_t k) {
  std::vector<std::size_t> counts(k, 0);
  for (auto i : idx) ++counts[static_cast<std::size_t>(rows[i].y)];
  return counts;
}

/// Midpoint strictly below `hi`, so `lo <= t < hi` even for adjacent doubles.
inline double midpoint(double lo, double hi) {
  double t = lo + (hi - lo) / 2.0;
  return t < hi ? t : lo;
}

inline double children_impurity(Criterion crit, const std::vector<std::size_t>& left, std::size_t n_left,
                                 const std::vector<std::size_t>& right, std::size_t n_right) {
  const double n = static_cast<double>(n_left + n_right);
  return static_cast<double>(n_left) / n * impurity(crit, left) + static_cast<double>(n_right) / n * impurity(crit, right);
}

/// Best `x <= t` split of one numeric column over `idx`; candidates are the
/// midpoints between consecutive distinct values, scanned in ascending order.
inline std::optional<SplitCandidate> best_numeric_split(const std::vector<Row>& rows, const std::vector<std::size_t>& idx,
                                                        std::size_t feature, std::size_t num_classes, Criterion crit,
                                                        std::size_t min_leaf, double parent_impurity) {
  std::vector<std::size_t> order = idx;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rows[a].x[feature] < rows[b].x[feature]; });
  std::vector<std::size_t> left(num_classes, 0), right = count_classes(rows, order, num_classes);
  std::optional<SplitCandidate> best;
  std::size_t best_pos = 0;
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    auto y = static_cast<std::size_t>(rows[order[i]].y);
    ++left[y];
    --right[y];
    double lo = rows[order[i]].x[feature], hi = rows[order[i + 1]].x[feature];
    if (lo == hi) continue;
    std::size_t n_left = i + 1, n_right = order.size() - n_left;
    if (n_left < min_leaf || n_right < min_leaf) continue;
    double gain = parent_impurity - children_impurity(crit, left, n_left, right, n_right);
    if (gain > kMinGain && (!best || gain > best->gain + kMinGain)) {
      best = SplitCandidate{feature, midpoint(lo, hi), -1, gain, {}, {}};
      best_pos = n_left;
    }
  }
  if (best) {
    best->left.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(best_pos));
    best->right.assign(order.begin() + static_cast<std::ptrdiff_t>(best_pos), order.end());
    std::sort(best->left.begin(), best->left.end());
    std::sort(best->right.begin(), best->right.end());
  }
  return best;
}

/// Best one-vs-rest `x == v` split of a categorical column, categories in
/// encoding order.
inline std::optional<SplitCandidate> best_categorical_split(const std::vector<Row>& rows, const std::vector<std::size_t>& idx,
                                                            std::size_t feature, std::size_t num_categories,
                                                            std::size_t num_classes, Criterion crit, std::size_t min_leaf,
                                                            double parent_impurity) {
  std::vector<std::vector<std::size_t>> per_cat(num_categories, std::vector<std::size_t>(num_classes, 0));
  std::vector<std::size_t> cat_n(num_categories, 0);
  auto total = count_classes(rows, idx, num_classes);
  for (auto i : idx) {
    auto v = static_cast<std::size_t>(rows[i].x[feature]);
    ++per_cat[v][static_cast<std::size_t>(rows[i].y)];
    ++cat_n[v];
  }
  std::optional<SplitCandidate> best;
  for (std::size_t v = 0; v < num_categories; ++v) {
    std::size_t n_left = cat_n[v], n_right = idx.size() - n_left;
    if (n_left == 0 || n_right == 0 || n_left < min_leaf || n_right < min_leaf) continue;
    std::vector<std::size_t> right(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) right[c] = total[c] - per_cat[v][c];
    double gain = parent_impurity - children_impurity(crit, per_cat[v], n_left, right, n_right);
    if (gain > kMinGain && (!best || gain > best->gain + kMinGain))
      best = SplitCandidate{feature, 0.0, static_cast<int>(v), gain, {}, {}};
  }
  if (best)
    for (auto i : idx) (static_cast<int>(rows[i].x[feature]) == best->category ? best->left : best->right).push_back(i);
  return best;
}

inline std::size_t features_per_node(MaxFeatures mf, std::size_t n) {
  if (n == 0) return 0;
  switch (mf) {
    case MaxFeatures::sqrt: return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n)))));
    case MaxFeatures::log2: return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::log2(static_cast<double>(n)))));
    case MaxFeatures::all: return n;
  }
  return n;
}

inline std::size_t majority(const std::vector<std::size_t>& counts) {
  return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& ds, const TrainParams& params)
      : ds_(ds), params_(params), rng_(params.rng_seed),
        mtry_(features_per_node(params.max_features, ds.schema.size())) {}

  DecisionTree build() {
    std::vector<std::size_t> all(ds_.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    grow(all, 0);
    return DecisionTree(ds_.schema, ds_.target, std::move(nodes_));
  }

 private:
  void grow(const std::vector<std::size_t>& idx, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(TreeNode{id, LeafNode{}});
    auto counts = count_classes(ds_.rows, idx, ds_.num_classes());
    const double parent = impurity(params_.criterion, counts);

    std::optional<SplitCandidate> best;
    if (depth < params_.max_depth && parent > 0.0) best = choose_split(idx, parent);
    if (!best) {
      nodes_[static_cast<std::size_t>(id)].body = LeafNode{ds_.target.decode(static_cast<int>(majority(counts))), counts};
      return;
    }

    const auto& f = ds_.schema[best->feature];
    Condition cond = f.is_numeric() ? Condition::le(f.name, best->threshold) : Condition::eq(f.name, f.decode(best->category));
    grow(best->left, depth + 1);
    const int false_child = static_cast<int>(nodes_.size());
    grow(best->right, depth + 1);
    nodes_[static_cast<std::size_t>(id)].body = SplitNode{std::move(cond), id + 1, false_child};
  }

  std::optional<SplitCandidate> choose_split(const std::vector<std::size_t>& idx, double parent) {
    const std::size_t n = ds_.schema.size();
    std::vector<std::size_t> features;
    if (mtry_ >= n) {
      for (std::size_t f = 0; f < n; ++f) features.push_back(f);
    } else {
      features = rng_.sample(n, mtry_);
      std::sort(features.begin(), features.end());
    }
    const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
    std::optional<SplitCandidate> best;
    for (auto f : features) {
      const auto& fs = ds_.schema[f];
      auto cand = fs.is_numeric()
                      ? best_numeric_split(ds_.rows, idx, f, ds_.num_classes(), params_.criterion, min_leaf, parent)
                      : best_categorical_split(ds_.rows, idx, f, fs.categories.size(), ds_.num_classes(), params_.criterion,
                                               min_leaf, parent);
      if (cand && (!best || cand->gain > best->gain + kMinGain)) best = std::move(cand);
    }
    return best;
  }

  const Dataset& ds_;
  TrainParams params_;
  Rng rng_;
  std::size_t mtry_;
  std::vector<TreeNode> nodes_;
};

}  // namespace detail

/// Greedy top-down induction. Numeric features split on `x <= midpoint`,
/// categorical ones on `x == category`; the condition-true rows go to the
/// first (left) child. Ties go to the lower schema index, then the lower
/// threshold or category code.
inline DecisionTree train_tree(const Dataset& ds, const TrainParams& params) {
  params.validate();
  if (ds.rows.empty()) throw DataError("cannot train on an empty dataset");
  return detail::TreeBuilder(ds, params).build();
}

/// Predicted class labels for every row.
inline std::vector<std::string> predict_rows(const DecisionTree& tree, const Dataset& ds) {
  std::vector<std::string> out;
  out.reserve(ds.size());
  for (const auto& r : ds.rows) out.push_back(tree.route(r).leaf().label);
  return out;
}

inline std::vector<std::string> actual_labels(const Dataset& ds) {
  std::vector<std::string> out;
  out.reserve(ds.size());
  for (const auto& r : ds.rows) out.push_back(ds.target.decode(r.y));
  return out;
}

}  // namespace treelp::learn
