#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "../error.hpp"
#include "../model.hpp"
#include "../numfmt.hpp"

namespace treelp::compile {

/// A tree test as traversed on a path: `negated` when the path took the
/// condition-false branch.
struct PathCondition {
  Condition condition;
  bool negated = false;
  friend bool operator==(const PathCondition&, const PathCondition&) = default;
};

struct EqualTo {
  std::string category;
  friend bool operator==(const EqualTo&, const EqualTo&) = default;
};

/// Half-open interval (lower, upper]; an absent bound is infinite.
struct Interval {
  std::optional<double> lower;
  std::optional<double> upper;

  bool contains(double x) const { return (!lower || x > *lower) && (!upper || x <= *upper); }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct PathConstraint {
  std::string feature;
  std::variant<EqualTo, Interval> form;

  bool is_interval() const { return std::holds_alternative<Interval>(form); }
  const Interval& interval() const { return std::get<Interval>(form); }
  const EqualTo& equal_to() const { return std::get<EqualTo>(form); }

  bool satisfied_by(const Value& v) const {
    if (is_interval()) {
      const auto* d = std::get_if<double>(&v);
      return d && interval().contains(*d);
    }
    const auto* s = std::get_if<std::string>(&v);
    return s && *s == equal_to().category;
  }

  friend bool operator==(const PathConstraint&, const PathConstraint&) = default;
};

/// Thrown when a path's conditions admit no value for some feature.
class InfeasiblePathError : public ModelError {
 public:
  InfeasiblePathError(const std::string& feature, const std::string& why)
      : ModelError("infeasible path: feature '" + feature + "' " + why), feature_(feature) {}
  const std::string& feature() const { return feature_; }

 private:
  std::string feature_;
};

/// The category a binary feature takes when `x == v` fails.
inline std::string complement_category(const FeatureSchema& f, const std::string& v) {
  if (!f.is_binary())
    throw ModelError("feature '" + f.name + "' has " + std::to_string(f.categories.size()) +
                     " categories; a failed equality test can only be expressed for binary features");
  return f.categories[0] == v ? f.categories[1] : f.categories[0];
}

/// Condition as it holds on the path: le/gt with the polarity folded in, or
/// an equality on the category actually taken.
inline Condition effective_condition(const PathCondition& pc, const Schema& schema) {
  const auto& c = pc.condition;
  if (!pc.negated) return c;
  switch (c.op) {
    case Op::le: return Condition::gt(c.feature, c.threshold);
    case Op::gt: return Condition::le(c.feature, c.threshold);
    case Op::eq: {
      auto fi = find_feature(schema, c.feature);
      if (!fi) throw ModelError("unknown feature '" + c.feature + "'");
      return Condition::eq(c.feature, complement_category(schema[*fi], c.category));
    }
  }
  return c;
}

/// Merges a path's conditions so that each feature appears once: numeric
/// tests collapse into the tightest (lower, upper] interval, equalities into a
/// single category. Equalities come first, then intervals; within each group
/// features are ordered by their last test on the path, nearest the leaf
/// first. The result admits exactly the same values as the raw conjunction.
inline std::vector<PathConstraint> simplify_conditions(const std::vector<PathCondition>& raw, const Schema& schema) {
  struct Acc {
    std::size_t last = 0;
    bool numeric = false;
    Interval interval;
    std::optional<std::string> category;
  };
  std::map<std::string, Acc> acc;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto c = effective_condition(raw[i], schema);
    auto fi = find_feature(schema, c.feature);
    if (!fi) throw ModelError("unknown feature '" + c.feature + "'");
    bool numeric = c.op != Op::eq;
    if (numeric != schema[*fi].is_numeric())
      throw ModelError("condition on '" + c.feature + "' does not match the feature's kind");
    auto& a = acc[c.feature];
    a.last = i;
    a.numeric = numeric;
    if (c.op == Op::le) {
      a.interval.upper = a.interval.upper ? std::min(*a.interval.upper, c.threshold) : c.threshold;
    } else if (c.op == Op::gt) {
      a.interval.lower = a.interval.lower ? std::max(*a.interval.lower, c.threshold) : c.threshold;
    } else {
      if (a.category && *a.category != c.category)
        throw InfeasiblePathError(c.feature, "must equal both '" + *a.category + "' and '" + c.category + "'");
      a.category = c.category;
    }
  }

  std::vector<std::pair<std::size_t, PathConstraint>> equalities, intervals;
  for (const auto& [name, a] : acc) {
    if (a.numeric) {
      if (a.interval.lower && a.interval.upper && *a.interval.lower >= *a.interval.upper)
        throw InfeasiblePathError(name, "has an empty interval (" + format_number(*a.interval.lower) + "," +
                                            format_number(*a.interval.upper) + "]");
      intervals.push_back({a.last, PathConstraint{name, a.interval}});
    } else {
      equalities.push_back({a.last, PathConstraint{name, EqualTo{*a.category}}});
    }
  }
  auto nearest_leaf_first = [](const auto& x, const auto& y) { return x.first > y.first; };
  std::sort(equalities.begin(), equalities.end(), nearest_leaf_first);
  std::sort(intervals.begin(), intervals.end(), nearest_leaf_first);

  std::vector<PathConstraint> out;
  for (auto& [_, c] : equalities) out.push_back(std::move(c));
  for (auto& [_, c] : intervals) out.push_back(std::move(c));
  return out;
}

/// Human-readable form used in explanation labels.
inline std::string constraint_text(const PathConstraint& c) {
  if (!c.is_interval()) return c.feature + " is " + c.equal_to().category;
  const auto& iv = c.interval();
  if (iv.lower && iv.upper) return c.feature + " in (" + format_number(*iv.lower) + "," + format_number(*iv.upper) + "]";
  if (iv.upper) return c.feature + " <= " + format_number(*iv.upper);
  if (iv.lower) return c.feature + " > " + format_number(*iv.lower);
  return c.feature + " is any value";
}

inline std::string condition_text(const Condition& c) {
  switch (c.op) {
    case Op::le: return c.feature + " <= " + format_number(c.threshold);
    case Op::gt: return c.feature + " > " + format_number(c.threshold);
    case Op::eq: return c.feature + " is " + c.category;
  }
  return {};
}

}  // namespace treelp::compile
