#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "error.hpp"
#include "numfmt.hpp"

namespace treelp {

enum class FeatureKind { numeric, categorical };

inline const char* to_string(FeatureKind k) { return k == FeatureKind::numeric ? "numeric" : "categorical"; }

inline bool is_feature_name(const std::string& s) {
  if (s.empty() || s.front() < 'a' || s.front() > 'z') return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; });
}

/// One column of a dataset. Categorical columns carry their category tokens in
/// lexicographic order; a token's position is its label encoding.
struct FeatureSchema {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  std::vector<std::string> categories;

  bool is_numeric() const { return kind == FeatureKind::numeric; }
  bool is_categorical() const { return kind == FeatureKind::categorical; }
  bool is_binary() const { return is_categorical() && categories.size() == 2; }

  std::optional<int> encode(const std::string& token) const {
    auto it = std::lower_bound(categories.begin(), categories.end(), token);
    if (it == categories.end() || *it != token) return std::nullopt;
    return static_cast<int>(it - categories.begin());
  }

  const std::string& decode(int code) const { return categories.at(static_cast<std::size_t>(code)); }

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

/// Makes a categorical schema from arbitrary tokens (sorted, deduplicated).
inline FeatureSchema categorical_feature(std::string name, std::vector<std::string> tokens) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return FeatureSchema{std::move(name), FeatureKind::categorical, std::move(tokens)};
}

inline FeatureSchema numeric_feature(std::string name) {
  return FeatureSchema{std::move(name), FeatureKind::numeric, {}};
}

using Schema = std::vector<FeatureSchema>;

inline std::optional<std::size_t> find_feature(const Schema& schema, const std::string& name) {
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (schema[i].name == name) return i;
  return std::nullopt;
}

/// Checks the schema-level invariants: valid, unique names; sorted categories.
inline void validate_schema(const Schema& schema) {
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema[i];
    if (!is_feature_name(f.name)) throw DataError("invalid feature name '" + f.name + "' (expected [a-z][a-z0-9_]*)");
    for (std::size_t j = 0; j < i; ++j)
      if (schema[j].name == f.name) throw DataError("duplicate feature name '" + f.name + "'");
    if (f.is_categorical()) {
      if (f.categories.empty()) throw DataError("categorical feature '" + f.name + "' has no categories");
      for (std::size_t c = 1; c < f.categories.size(); ++c)
        if (!(f.categories[c - 1] < f.categories[c]))
          throw DataError("categories of '" + f.name + "' must be strictly ascending");
    } else if (!f.categories.empty()) {
      throw DataError("numeric feature '" + f.name + "' must not list categories");
    }
  }
}

/// Training rows are stored densely: numeric cells hold the value, categorical
/// cells the category code.
struct Row {
  std::vector<double> x;
  int y = 0;
  friend bool operator==(const Row&, const Row&) = default;
};

struct Dataset {
  Schema schema;
  FeatureSchema target;
  std::vector<Row> rows;

  std::size_t size() const { return rows.size(); }
  std::size_t num_classes() const { return target.categories.size(); }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(num_classes(), 0);
    for (const auto& r : rows) ++counts[static_cast<std::size_t>(r.y)];
    return counts;
  }

  /// Same schema, a subset of rows.
  Dataset subset(const std::vector<std::size_t>& indices) const {
    Dataset out{schema, target, {}};
    out.rows.reserve(indices.size());
    for (auto i : indices) out.rows.push_back(rows.at(i));
    return out;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// A feature value as supplied by a user: a number or a category token.
using Value = std::variant<double, std::string>;

inline std::string value_text(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
  return std::get<std::string>(v);
}

struct Case {
  std::int64_t id = 0;
  std::map<std::string, Value> values;
  friend bool operator==(const Case&, const Case&) = default;
};

enum class Op { le, gt, eq };

inline const char* to_string(Op op) {
  switch (op) {
    case Op::le: return "le";
    case Op::gt: return "gt";
    case Op::eq: return "eq";
  }
  return "?";
}

/// A single feature test. `threshold` is used by le/gt, `category` by eq.
struct Condition {
  std::string feature;
  Op op = Op::le;
  double threshold = 0.0;
  std::string category;

  static Condition le(std::string f, double t) { return {std::move(f), Op::le, t, {}}; }
  static Condition gt(std::string f, double t) { return {std::move(f), Op::gt, t, {}}; }
  static Condition eq(std::string f, std::string v) { return {std::move(f), Op::eq, 0.0, std::move(v)}; }

  /// Evaluates against a numeric value or category token.
  bool holds(const Value& v) const {
    if (op == Op::eq) {
      const auto* s = std::get_if<std::string>(&v);
      if (!s) throw DataError("feature '" + feature + "' expects a category, got a number");
      return *s == category;
    }
    const auto* d = std::get_if<double>(&v);
    if (!d) throw DataError("feature '" + feature + "' expects a number, got '" + std::get<std::string>(v) + "'");
    return op == Op::le ? *d <= threshold : *d > threshold;
  }

  friend bool operator==(const Condition&, const Condition&) = default;
};

struct SplitNode {
  Condition condition;
  int true_child = -1;
  int false_child = -1;
  friend bool operator==(const SplitNode&, const SplitNode&) = default;
};

struct LeafNode {
  std::string label;
  std::vector<std::size_t> counts;
  friend bool operator==(const LeafNode&, const LeafNode&) = default;
};

struct TreeNode {
  int id = 0;
  std::variant<SplitNode, LeafNode> body;

  bool is_leaf() const { return std::holds_alternative<LeafNode>(body); }
  const SplitNode& split() const { return std::get<SplitNode>(body); }
  const LeafNode& leaf() const { return std::get<LeafNode>(body); }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Binary decision tree whose node ids are the pre-order sequence from 0, so
/// `nodes[i].id == i` and the root is node 0. The condition-true child is
/// always `id + 1`.
class DecisionTree {
 public:
  DecisionTree() = default;

  /// Validates and adopts a node list. Throws ModelError on any violation.
  DecisionTree(Schema schema, FeatureSchema target, std::vector<TreeNode> nodes)
      : schema_(std::move(schema)), target_(std::move(target)), nodes_(std::move(nodes)) {
    validate();
  }

  const Schema& schema() const { return schema_; }
  const FeatureSchema& target() const { return target_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const TreeNode& root() const { return nodes_.front(); }
  std::size_t size() const { return nodes_.size(); }

  std::vector<int> parents() const {
    std::vector<int> parent(nodes_.size(), -1);
    for (const auto& n : nodes_)
      if (!n.is_leaf()) {
        parent[static_cast<std::size_t>(n.split().true_child)] = n.id;
        parent[static_cast<std::size_t>(n.split().false_child)] = n.id;
      }
    return parent;
  }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
  }

  /// Longest root-to-leaf path, counted in edges.
  std::size_t depth() const {
    std::vector<std::size_t> d(nodes_.size(), 0);
    std::size_t best = 0;
    for (const auto& n : nodes_) {
      if (n.is_leaf()) continue;
      auto next = d[static_cast<std::size_t>(n.id)] + 1;
      d[static_cast<std::size_t>(n.split().true_child)] = next;
      d[static_cast<std::size_t>(n.split().false_child)] = next;
      best = std::max(best, next);
    }
    return best;
  }

  /// Sorted, distinct thresholds the tree tests on each numeric feature.
  std::map<std::string, std::vector<double>> thresholds() const {
    std::map<std::string, std::vector<double>> out;
    for (const auto& f : schema_)
      if (f.is_numeric()) out[f.name];
    for (const auto& n : nodes_) {
      if (n.is_leaf() || n.split().condition.op == Op::eq) continue;
      out[n.split().condition.feature].push_back(n.split().condition.threshold);
    }
    for (auto& [_, ts] : out) {
      std::sort(ts.begin(), ts.end());
      ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    }
    return out;
  }

  /// Leaf reached by a case; throws DataError when a tested feature is absent.
  const TreeNode& route(const std::map<std::string, Value>& values) const {
    const TreeNode* n = &root();
    while (!n->is_leaf()) {
      const auto& s = n->split();
      auto it = values.find(s.condition.feature);
      if (it == values.end()) throw DataError("missing value for feature '" + s.condition.feature + "'");
      n = &node(s.condition.holds(it->second) ? s.true_child : s.false_child);
    }
    return *n;
  }

  /// Same as route() over an encoded training row.
  const TreeNode& route(const Row& row) const {
    const TreeNode* n = &root();
    while (!n->is_leaf()) {
      const auto& s = n->split();
      auto idx = feature_index_.at(static_cast<std::size_t>(n->id));
      const auto& f = schema_[idx];
      double x = row.x[idx];
      bool ok = s.condition.op == Op::eq ? f.decode(static_cast<int>(x)) == s.condition.category
              : s.condition.op == Op::le ? x <= s.condition.threshold
                                         : x > s.condition.threshold;
      n = &node(ok ? s.true_child : s.false_child);
    }
    return *n;
  }

  friend bool operator==(const DecisionTree& a, const DecisionTree& b) {
    return a.schema_ == b.schema_ && a.target_ == b.target_ && a.nodes_ == b.nodes_;
  }

 private:
  void validate() {
    validate_schema(schema_);
    if (!target_.is_categorical() || target_.categories.empty())
      throw ModelError("target must be categorical with at least one class");
    if (nodes_.empty()) throw ModelError("tree has no nodes");
    if (nodes_.front().id != 0) throw ModelError("ids must be pre-order from 0 (root id is " + std::to_string(nodes_.front().id) + ")");
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].id != static_cast<int>(i)) throw ModelError("ids must be pre-order from 0 (node at position " + std::to_string(i) + " has id " + std::to_string(nodes_[i].id) + ")");

    const int n = static_cast<int>(nodes_.size());
    feature_index_.assign(nodes_.size(), 0);
    for (const auto& node : nodes_) {
      if (node.is_leaf()) {
        const auto& leaf = node.leaf();
        if (!target_.encode(leaf.label)) throw ModelError("leaf " + std::to_string(node.id) + " has unknown class '" + leaf.label + "'");
        if (!leaf.counts.empty() && leaf.counts.size() != target_.categories.size())
          throw ModelError("leaf " + std::to_string(node.id) + " has " + std::to_string(leaf.counts.size()) + " class counts");
        continue;
      }
      const auto& s = node.split();
      for (int child : {s.true_child, s.false_child})
        if (child < 0 || child >= n) throw ModelError("node " + std::to_string(node.id) + " references missing child " + std::to_string(child));
      auto fi = find_feature(schema_, s.condition.feature);
      if (!fi) throw ModelError("node " + std::to_string(node.id) + " tests unknown feature '" + s.condition.feature + "'");
      const auto& f = schema_[*fi];
      if (s.condition.op == Op::eq) {
        if (!f.is_categorical()) throw ModelError("node " + std::to_string(node.id) + ": equality test on numeric feature '" + f.name + "'");
        if (!f.encode(s.condition.category))
          throw ModelError("node " + std::to_string(node.id) + ": unknown category '" + s.condition.category + "' for '" + f.name + "'");
      } else {
        if (!f.is_numeric()) throw ModelError("node " + std::to_string(node.id) + ": threshold test on categorical feature '" + f.name + "'");
        if (!std::isfinite(s.condition.threshold)) throw ModelError("node " + std::to_string(node.id) + ": non-finite threshold");
      }
      feature_index_[static_cast<std::size_t>(node.id)] = *fi;
    }

    // Walking the tree in pre-order must visit ids 0,1,2,... exactly once.
    int expected = 0;
    std::vector<int> stack{0};
    std::vector<bool> seen(nodes_.size(), false);
    while (!stack.empty()) {
      int id = stack.back();
      stack.pop_back();
      if (seen[static_cast<std::size_t>(id)]) throw ModelError("node " + std::to_string(id) + " is reachable twice (not a tree)");
      seen[static_cast<std::size_t>(id)] = true;
      if (id != expected) throw ModelError("ids must be pre-order from 0 (visited " + std::to_string(id) + " where " + std::to_string(expected) + " was expected)");
      ++expected;
      const auto& node = nodes_[static_cast<std::size_t>(id)];
      if (!node.is_leaf()) {
        stack.push_back(node.split().false_child);
        stack.push_back(node.split().true_child);
      }
    }
    if (expected != n) throw ModelError("tree has " + std::to_string(n - expected) + " unreachable node(s)");
  }

  Schema schema_;
  FeatureSchema target_;
  std::vector<TreeNode> nodes_;
  std::vector<std::size_t> feature_index_;
};

enum class Criterion { entropy, gini };
enum class MaxFeatures { sqrt, log2, all };

inline const char* to_string(Criterion c) { return c == Criterion::entropy ? "entropy" : "gini"; }
inline const char* to_string(MaxFeatures m) {
  switch (m) {
    case MaxFeatures::sqrt: return "sqrt";
    case MaxFeatures::log2: return "log2";
    case MaxFeatures::all: return "all";
  }
  return "?";
}

inline Criterion parse_criterion(const std::string& s) {
  if (s == "entropy") return Criterion::entropy;
  if (s == "gini") return Criterion::gini;
  throw UsageError("unknown criterion '" + s + "' (expected entropy or gini)");
}

inline MaxFeatures parse_max_features(const std::string& s) {
  if (s == "sqrt") return MaxFeatures::sqrt;
  if (s == "log2") return MaxFeatures::log2;
  if (s == "all") return MaxFeatures::all;
  throw UsageError("unknown max_features '" + s + "' (expected sqrt, log2 or all)");
}

struct TrainParams {
  int max_depth = 5;
  Criterion criterion = Criterion::entropy;
  MaxFeatures max_features = MaxFeatures::all;
  int min_samples_leaf = 1;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (max_depth < 1) throw UsageError("max_depth must be >= 1");
    if (min_samples_leaf < 1) throw UsageError("min_samples_leaf must be >= 1");
  }

  friend bool operator==(const TrainParams&, const TrainParams&) = default;
};

}  // namespace treelp
