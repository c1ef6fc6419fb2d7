#pragma once

// Reference implementations used only by tests. Each one is written the
// slow, obvious way and shares no code with the library routine it checks.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treelp/compile/simplify.hpp"
#include "treelp/model.hpp"
#include "treelp/rules/program.hpp"

namespace treelp::testing {

// ---------------------------------------------------------------------------
// impurity

inline double entropy_oracle(const std::vector<double>& counts) {
  double n = 0;
  for (double c : counts) n += c;
  double h = 0;
  for (double c : counts)
    if (c > 0) h -= (c / n) * std::log2(c / n);
  return h;
}

inline double gini_oracle(const std::vector<double>& counts) {
  double n = 0;
  for (double c : counts) n += c;
  double s = 0;
  for (double c : counts) s += (c / n) * (c / n);
  return 1.0 - s;
}

// ---------------------------------------------------------------------------
// chi-square

inline double pearson_statistic(const std::vector<std::vector<double>>& t) {
  std::vector<double> rows(t.size(), 0), cols(t[0].size(), 0);
  double n = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t[i].size(); ++j) rows[i] += t[i][j], cols[j] += t[i][j], n += t[i][j];
  double x = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t[i].size(); ++j) {
      double e = rows[i] * cols[j] / n;
      x += (t[i][j] - e) * (t[i][j] - e) / e;
    }
  return x;
}

/// Upper tail of the chi-square distribution in closed form. Q(k/2, x/2)
/// reduces to erfc and exp terms for the small degrees of freedom used here.
inline double chi_square_sf_closed(double x, int dof) {
  switch (dof) {
    case 1: return std::erfc(std::sqrt(x / 2));
    case 2: return std::exp(-x / 2);
    case 3: return std::erfc(std::sqrt(x / 2)) + std::sqrt(2 * x / std::numbers::pi) * std::exp(-x / 2);
    case 4: return std::exp(-x / 2) * (1 + x / 2);
  }
  throw std::invalid_argument("closed form only for dof 1..4");
}

// ---------------------------------------------------------------------------
// metrics

inline double accuracy_oracle(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  int same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

// ---------------------------------------------------------------------------
// rule evaluation

/// Iterates every rule over every assignment of its variables to the given
/// constants until nothing new appears.
inline std::set<rules::Atom> naive_fixpoint(const rules::RuleProgram& p, const std::vector<rules::Atom>& facts,
                                            const std::vector<std::string>& constants) {
  std::set<rules::Atom> known(facts.begin(), facts.end());
  auto bind = [](const rules::Atom& a, const std::map<std::string, std::string>& env) {
    rules::Atom g = a;
    for (auto& t : g.args)
      if (t.is_variable()) t.text = env.at(t.text);
    return g;
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& r : p.rules) {
      auto vars = r.variables();
      std::vector<std::size_t> digit(vars.size(), 0);
      for (;;) {
        std::map<std::string, std::string> env;
        for (std::size_t i = 0; i < vars.size(); ++i) env[vars[i]] = constants[digit[i]];
        bool ok = true;
        for (const auto& b : r.body)
          if (!known.count(bind(b, env))) {
            ok = false;
            break;
          }
        if (ok && known.insert(bind(r.head, env)).second) changed = true;
        std::size_t i = 0;
        while (i < digit.size() && ++digit[i] == constants.size()) digit[i++] = 0;
        if (i == digit.size()) break;
      }
    }
  }
  return known;
}

struct RandomProgram {
  rules::RuleProgram program;
  std::vector<rules::Atom> facts;
  std::vector<rules::Atom> extra_facts;  // candidates for monotonicity checks
  std::vector<std::string> constants;
};

/// Acyclic definite program: predicate i only depends on predicates < i.
/// The lowest predicates are extensional.
inline RandomProgram random_program(std::mt19937_64& g) {
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(std::uniform_int_distribution<std::size_t>(0, n - 1)(g)); };
  RandomProgram out;
  const std::size_t nconst = 1 + pick(4);
  for (std::size_t i = 0; i < nconst; ++i) out.constants.push_back("c" + std::to_string(i));
  const std::size_t npred = 4 + pick(5);
  const std::size_t nbase = 2 + pick(2);
  std::vector<std::size_t> arity(npred);
  for (auto& a : arity) a = pick(3);
  const std::vector<std::string> var_names{"X", "Y", "Z", "W"};
  auto pred = [](std::size_t i) { return "p" + std::to_string(i); };
  auto ground = [&](std::size_t p) {
    rules::Atom a{pred(p), {}};
    for (std::size_t k = 0; k < arity[p]; ++k) a.args.push_back(rules::Term::constant(out.constants[pick(nconst)]));
    return a;
  };
  for (std::size_t p = 0; p < nbase; ++p)
    for (std::size_t k = 0, m = 1 + pick(5); k < m; ++k) out.facts.push_back(ground(p));
  for (int k = 0; k < 20; ++k) out.extra_facts.push_back(ground(pick(nbase)));

  const std::size_t nrules = 1 + pick(30);
  for (std::size_t r = 0; r < nrules; ++r) {
    std::size_t head = nbase + pick(npred - nbase);
    rules::Rule rule;
    std::set<std::string> body_vars;
    for (std::size_t b = 0, nb = 1 + pick(3); b < nb; ++b) {
      std::size_t p = pick(head);
      rules::Atom a{pred(p), {}};
      for (std::size_t k = 0; k < arity[p]; ++k) {
        if (pick(4) == 0) {
          a.args.push_back(rules::Term::constant(out.constants[pick(nconst)]));
        } else {
          auto v = var_names[pick(var_names.size())];
          body_vars.insert(v);
          a.args.push_back(rules::Term::var(v));
        }
      }
      rule.body.push_back(std::move(a));
    }
    rule.head = rules::Atom{pred(head), {}};
    std::vector<std::string> vs(body_vars.begin(), body_vars.end());
    for (std::size_t k = 0; k < arity[head]; ++k) {
      if (!vs.empty() && pick(4) != 0)
        rule.head.args.push_back(rules::Term::var(vs[pick(vs.size())]));
      else
        rule.head.args.push_back(rules::Term::constant(out.constants[pick(nconst)]));
    }
    out.program.rules.push_back(std::move(rule));
  }
  return out;
}

// ---------------------------------------------------------------------------
// condition simplification

/// Values at and around every threshold mentioned for each numeric feature,
/// and every category of each categorical one.
inline std::map<std::string, std::vector<Value>> boundary_samples(const std::vector<compile::PathCondition>& raw, const Schema& schema) {
  std::map<std::string, std::vector<Value>> out;
  std::map<std::string, std::set<double>> cuts;
  for (const auto& pc : raw)
    if (pc.condition.op != Op::eq) cuts[pc.condition.feature].insert(pc.condition.threshold);
  for (const auto& f : schema) {
    auto& v = out[f.name];
    if (f.is_categorical()) {
      for (const auto& c : f.categories) v.push_back(c);
      continue;
    }
    v.push_back(-1e300);
    v.push_back(1e300);
    for (double t : cuts[f.name]) {
      v.push_back(t);
      v.push_back(std::nextafter(t, -INFINITY));
      v.push_back(std::nextafter(t, INFINITY));
    }
  }
  return out;
}

inline bool raw_conjunction_holds(const std::vector<compile::PathCondition>& raw, const std::map<std::string, Value>& x) {
  for (const auto& pc : raw)
    if (pc.condition.holds(x.at(pc.condition.feature)) == pc.negated) return false;
  return true;
}

// ---------------------------------------------------------------------------
// random trees

struct RandomTreeSpec {
  int max_depth = 9;
  std::size_t max_features = 7;
  std::size_t max_domain = 4000;
};

/// Every value needed to exercise each tree interval: one point inside each
/// interval between consecutive thresholds plus each threshold.
inline std::vector<double> numeric_domain(const std::vector<double>& thresholds) {
  std::vector<double> v;
  if (thresholds.empty()) return {0.0};
  v.push_back(thresholds.front() - 1.0);
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    v.push_back(thresholds[i]);
    v.push_back(i + 1 < thresholds.size() ? (thresholds[i] + thresholds[i + 1]) / 2 : thresholds[i] + 1.0);
  }
  return v;
}

/// Cartesian product of the discretized domains of every feature.
inline std::vector<Case> exhaustive_cases(const DecisionTree& tree) {
  auto thresholds = tree.thresholds();
  std::vector<std::pair<std::string, std::vector<Value>>> axes;
  for (const auto& f : tree.schema()) {
    std::vector<Value> vals;
    if (f.is_categorical())
      for (const auto& c : f.categories) vals.push_back(c);
    else
      for (double x : numeric_domain(thresholds[f.name])) vals.push_back(x);
    axes.push_back({f.name, std::move(vals)});
  }
  std::vector<Case> out;
  std::vector<std::size_t> digit(axes.size(), 0);
  for (std::int64_t id = 0;; ++id) {
    Case c;
    c.id = id;
    for (std::size_t i = 0; i < axes.size(); ++i) c.values[axes[i].first] = axes[i].second[digit[i]];
    out.push_back(std::move(c));
    std::size_t i = 0;
    while (i < digit.size() && ++digit[i] == axes[i].second.size()) digit[i++] = 0;
    if (i == digit.size()) break;
  }
  return out;
}

/// Random tree over numeric and binary categorical features whose every path
/// is satisfiable. Thresholds come from small per-feature pools so that the
/// exhaustive case set stays bounded.
inline DecisionTree random_tree(std::mt19937_64& g, const RandomTreeSpec& spec = {}) {
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(g); };
  auto chance = [&](double p) { return std::uniform_real_distribution<double>(0, 1)(g) < p; };

  const std::size_t nnum = 1 + pick(std::min<std::size_t>(4, spec.max_features - 1));
  const std::size_t ncat = 1 + pick(std::min<std::size_t>(3, spec.max_features - nnum));
  Schema schema;
  std::map<std::string, std::vector<double>> pool;
  std::size_t domain = 1;
  for (std::size_t i = 0; i < nnum; ++i) {
    auto name = "num" + std::to_string(i);
    schema.push_back(numeric_feature(name));
    std::set<double> p;
    std::size_t want = 1 + pick(3);
    while (want > 1 && (domain * (2 * want + 1) << ncat) > spec.max_domain) --want;
    while (p.size() < want) p.insert(static_cast<double>(pick(200)) / 4.0 - 10.0);
    pool[name].assign(p.begin(), p.end());
    domain *= 2 * p.size() + 1;
  }
  static const std::vector<std::vector<std::string>> kTokens{{"false", "true"}, {"no", "yes"}, {"a", "b"}};
  for (std::size_t i = 0; i < ncat; ++i) schema.push_back(categorical_feature("cat" + std::to_string(i), kTokens[pick(kTokens.size())]));
  std::shuffle(schema.begin(), schema.end(), g);

  auto target = categorical_feature("goal_death", {"0", "1"});
  std::vector<TreeNode> nodes;
  std::map<std::string, std::pair<double, double>> bounds;
  std::set<std::string> fixed;
  const int depth_limit = 1 + static_cast<int>(pick(static_cast<std::size_t>(spec.max_depth)));

  auto grow = [&](auto&& self, int depth) -> void {
    const int id = static_cast<int>(nodes.size());
    std::vector<Condition> options;
    if (depth < depth_limit && !(depth > 0 && chance(0.15))) {
      for (const auto& f : schema) {
        if (f.is_categorical()) {
          if (!fixed.count(f.name)) options.push_back(Condition::eq(f.name, f.categories[pick(2)]));
          continue;
        }
        auto [lo, hi] = bounds.count(f.name) ? bounds[f.name] : std::pair<double, double>{-INFINITY, INFINITY};
        std::vector<double> inside;
        for (double t : pool[f.name])
          if (t > lo && t < hi) inside.push_back(t);
        if (!inside.empty()) options.push_back(chance(0.5) ? Condition::le(f.name, inside[pick(inside.size())])
                                                           : Condition::gt(f.name, inside[pick(inside.size())]));
      }
    }
    if (options.empty()) {
      nodes.push_back(TreeNode{id, LeafNode{pick(2) ? "1" : "0", {}}});
      return;
    }
    auto c = options[pick(options.size())];
    nodes.push_back(TreeNode{id, SplitNode{c, id + 1, -1}});
    for (bool truth : {true, false}) {
      if (!truth) std::get<SplitNode>(nodes[static_cast<std::size_t>(id)].body).false_child = static_cast<int>(nodes.size());
      auto saved_bounds = bounds;
      auto saved_fixed = fixed;
      if (c.op == Op::eq) {
        fixed.insert(c.feature);
      } else {
        auto b = bounds.count(c.feature) ? bounds[c.feature] : std::pair<double, double>{-INFINITY, INFINITY};
        bool upper = (c.op == Op::le) == truth;
        if (upper)
          b.second = c.threshold;
        else
          b.first = c.threshold;
        bounds[c.feature] = b;
      }
      self(self, depth + 1);
      bounds = std::move(saved_bounds);
      fixed = std::move(saved_fixed);
    }
  };
  grow(grow, 0);
  return DecisionTree(schema, target, std::move(nodes));
}

// ---------------------------------------------------------------------------
// JSON schema (the subset the service publishes)

inline void validate_json(const nlohmann::ordered_json& v, const nlohmann::ordered_json& schema, const nlohmann::ordered_json& root,
                          const std::string& path, std::vector<std::string>& errors) {
  if (schema.contains("$ref")) {
    auto ref = schema["$ref"].get<std::string>();
    const std::string prefix = "#/definitions/";
    validate_json(v, root["definitions"][ref.substr(prefix.size())], root, path, errors);
    return;
  }
  auto is_type = [&](const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "integer") return v.is_number_integer();
    if (t == "number") return v.is_number();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    return false;
  };
  if (schema.contains("type")) {
    const auto& t = schema["type"];
    bool ok = false;
    if (t.is_string())
      ok = is_type(t.get<std::string>());
    else
      for (const auto& x : t) ok = ok || is_type(x.get<std::string>());
    if (!ok) {
      errors.push_back(path + ": wrong type");
      return;
    }
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& e : schema["enum"]) ok = ok || e == v;
    if (!ok) errors.push_back(path + ": not in enum");
  }
  if (schema.contains("minimum") && v.is_number() && v.get<double>() < schema["minimum"].get<double>())
    errors.push_back(path + ": below minimum");
  if (v.is_object()) {
    if (schema.contains("required"))
      for (const auto& r : schema["required"])
        if (!v.contains(r.get<std::string>())) errors.push_back(path + ": missing " + r.get<std::string>());
    for (const auto& [k, x] : v.items()) {
      if (schema.contains("properties") && schema["properties"].contains(k))
        validate_json(x, schema["properties"][k], root, path + "." + k, errors);
      else if (schema.contains("additionalProperties") && schema["additionalProperties"].is_object())
        validate_json(x, schema["additionalProperties"], root, path + "." + k, errors);
    }
  }
  if (v.is_array() && schema.contains("items"))
    for (std::size_t i = 0; i < v.size(); ++i) validate_json(v[i], schema["items"], root, path + "[" + std::to_string(i) + "]", errors);
}

}  // namespace treelp::testing
