#pragma once

#include <string>
#include <vector>

#include "../error.hpp"
#include "../model.hpp"
#include "../rules/evaluator.hpp"
#include "../rules/printer.hpp"
#include "../rules/program.hpp"
#include "facts.hpp"
#include "labels.hpp"
#include "simplify.hpp"

namespace treelp::compile {

using rules::Rule;
using rules::RuleProgram;
using rules::TraceTemplate;

struct LeafPath {
  int leaf = 0;
  std::string label;
  std::vector<PathCondition> raw;  // root to leaf
};

/// One path per leaf, in leaf-id order.
inline std::vector<LeafPath> extract_paths(const DecisionTree& tree) {
  std::vector<LeafPath> out;
  std::vector<PathCondition> trail;
  auto walk = [&](auto&& self, int id) -> void {
    const auto& n = tree.node(id);
    if (n.is_leaf()) {
      out.push_back(LeafPath{id, n.leaf().label, trail});
      return;
    }
    trail.push_back({n.split().condition, false});
    self(self, n.split().true_child);
    trail.back().negated = true;
    self(self, n.split().false_child);
    trail.pop_back();
  };
  walk(walk, 0);
  return out;
}

inline const std::string kPatient = "P";

namespace detail {

inline Term patient() { return Term::var(kPatient); }

/// `le(P,f,t)`, `gt(P,f,t)` or `holds(P,f,v)` for a condition as it holds.
inline Atom condition_atom(const Condition& c) {
  switch (c.op) {
    case Op::le: return make_atom("le", {patient(), Term::constant(c.feature), number_term(c.threshold)});
    case Op::gt: return make_atom("gt", {patient(), Term::constant(c.feature), number_term(c.threshold)});
    case Op::eq: return make_atom("holds", {patient(), Term::constant(c.feature), token_term(c.category)});
  }
  return {};
}

inline Atom tree_node_atom(int node, bool left) {
  return make_atom("tree_node", {Term::constant(std::to_string(node)), patient(), Term::constant(left ? "left" : "right")});
}

inline Atom class_atom(const LabelMap& labels, const std::string& cls) { return make_atom(labels.at(cls).predicate, {patient()}); }

inline Atom case_atom() { return make_atom("case", {patient()}); }

inline Rule traced(Atom head, std::vector<Atom> body, std::string text) {
  return Rule{std::move(head), std::move(body), TraceTemplate{std::move(text), {}}, {}};
}

}  // namespace detail

/// Structure-preserving encoding: one rule per tree edge,
/// `tree_node(N,P,Dir) :- <test of N for Dir>, tree_node(Parent,P,ParentDir).`,
/// where `left` is the condition-true branch, and one rule per leaf deriving
/// its class from the edge that reaches it. Each rule carries the text of its
/// test or class as trace. Rules follow a depth-first walk, true branch first.
inline RuleProgram compile_node_encoding(const DecisionTree& tree, const LabelMap& labels) {
  validate_labels(labels, tree.target());
  RuleProgram program;
  if (tree.root().is_leaf()) {
    const auto& cls = tree.root().leaf().label;
    program.rules.push_back(detail::traced(detail::class_atom(labels, cls), {detail::case_atom()}, labels.at(cls).cascade));
    return program;
  }
  auto emit = [&](auto&& self, int id, int parent, bool parent_left) -> void {
    const auto& n = tree.node(id);
    if (n.is_leaf()) {
      const auto& cls = n.leaf().label;
      program.rules.push_back(
          detail::traced(detail::class_atom(labels, cls), {detail::tree_node_atom(parent, parent_left)}, labels.at(cls).cascade));
      return;
    }
    const auto& s = n.split();
    for (bool left : {true, false}) {
      auto cond = effective_condition(PathCondition{s.condition, !left}, tree.schema());
      std::vector<Atom> body{detail::condition_atom(cond)};
      if (parent >= 0) body.push_back(detail::tree_node_atom(parent, parent_left));
      program.rules.push_back(detail::traced(detail::tree_node_atom(id, left), std::move(body), condition_text(cond)));
      self(self, left ? s.true_child : s.false_child, id, left);
    }
  };
  emit(emit, 0, -1, true);
  return program;
}

/// Body atoms for one merged constraint: one atom, or two for a bounded
/// interval.
inline std::vector<Atom> constraint_atoms(const PathConstraint& c) {
  if (!c.is_interval()) return {detail::condition_atom(Condition::eq(c.feature, c.equal_to().category))};
  const auto& iv = c.interval();
  std::vector<Atom> out;
  if (iv.lower) out.push_back(detail::condition_atom(Condition::gt(c.feature, *iv.lower)));
  if (iv.upper) out.push_back(detail::condition_atom(Condition::le(c.feature, *iv.upper)));
  return out;
}

/// Flat encoding: one rule per leaf whose body is the simplified path. The
/// leaf rule is traced with the class text and each merged constraint gets a
/// trace scoped to that rule, so an interval's two atoms explain as one line.
inline RuleProgram compile_path_encoding(const DecisionTree& tree, const LabelMap& labels) {
  validate_labels(labels, tree.target());
  RuleProgram program;
  for (const auto& path : extract_paths(tree)) {
    const auto& label = labels.at(path.label);
    Rule rule = detail::traced(detail::class_atom(labels, path.label), {}, label.flat);
    for (const auto& c : simplify_conditions(path.raw, tree.schema())) {
      auto atoms = constraint_atoms(c);
      rule.body.insert(rule.body.end(), atoms.begin(), atoms.end());
      rule.scoped_traces.push_back(rules::AtomTrace{std::move(atoms), TraceTemplate{constraint_text(c), {}}});
    }
    if (rule.body.empty()) rule.body.push_back(detail::case_atom());
    program.rules.push_back(std::move(rule));
  }
  return program;
}

/// Shared rules mapping every class atom to `prediction(P)`.
inline RuleProgram compile_extra(const FeatureSchema& target, const LabelMap& labels) {
  RuleProgram program;
  for (const auto& cls : target.categories)
    program.rules.push_back(Rule{make_atom("prediction", {detail::patient()}), {detail::class_atom(labels, cls)}, std::nullopt, {}});
  return program;
}

/// Case facts as a `cases.lp` text.
inline std::string cases_program(const std::vector<Case>& cases, const DecisionTree& tree) {
  RuleProgram p;
  const auto thresholds = tree.thresholds();
  for (const auto& c : cases) {
    auto facts = case_to_facts(c, tree.schema(), thresholds);
    p.rules.insert(p.rules.end(), facts.begin(), facts.end());
  }
  return rules::serialize_program(p);
}

enum class Encoding { nodes, paths };

inline Encoding parse_encoding(const std::string& s) {
  if (s == "nodes") return Encoding::nodes;
  if (s == "paths") return Encoding::paths;
  throw UsageError("unknown encoding '" + s + "' (expected nodes or paths)");
}

inline const char* to_string(Encoding e) { return e == Encoding::nodes ? "nodes" : "paths"; }

/// Everything needed to evaluate cases against one tree.
struct CompiledModel {
  DecisionTree tree;
  LabelMap labels;
  RuleProgram nodes;
  RuleProgram paths;
  RuleProgram extra;
  std::map<std::string, std::vector<double>> thresholds;

  const RuleProgram& program(Encoding e) const { return e == Encoding::nodes ? nodes : paths; }

  /// Encoding program followed by the shared prediction rules.
  RuleProgram full_program(Encoding e) const {
    RuleProgram p = program(e);
    p.append(extra);
    return p;
  }
};

inline CompiledModel compile_model(DecisionTree tree, LabelMap labels) {
  CompiledModel m;
  m.nodes = compile_node_encoding(tree, labels);
  m.paths = compile_path_encoding(tree, labels);
  m.extra = compile_extra(tree.target(), labels);
  m.thresholds = tree.thresholds();
  m.tree = std::move(tree);
  m.labels = std::move(labels);
  return m;
}

inline CompiledModel compile_model(DecisionTree tree) {
  auto labels = default_labels(tree.target());
  return compile_model(std::move(tree), std::move(labels));
}

/// Classes whose atom was derived for case `id`, in target order.
inline std::vector<std::string> derived_classes(const rules::DerivationGraph& graph, const LabelMap& labels,
                                                const FeatureSchema& target, std::int64_t id) {
  std::vector<std::string> out;
  for (const auto& cls : target.categories)
    if (graph.contains(make_atom(labels.at(cls).predicate, {Term::constant(std::to_string(id))}))) out.push_back(cls);
  return out;
}

/// Class reached by walking the tree.
inline std::string predict_by_traversal(const DecisionTree& tree, const Case& c) { return tree.route(c.values).leaf().label; }

}  // namespace treelp::compile
