#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "../compile/encode.hpp"
#include "../compile/facts.hpp"
#include "../error.hpp"
#include "../rules/evaluator.hpp"
#include "explain.hpp"

namespace treelp::explain {

struct CaseExplanation {
  std::int64_t id = 0;
  std::string prediction;
  Atom atom;  // prediction(id)
  std::vector<ExplanationTree> explanations;

  std::string text() const { return render_ascii(atom, explanations); }
  nlohmann::json json() const { return explanations_to_json(atom, explanations); }
};

inline Atom prediction_atom(std::int64_t id) { return compile::make_atom("prediction", {compile::Term::constant(std::to_string(id))}); }

namespace detail {

inline std::string single_class(const rules::DerivationGraph& graph, const compile::CompiledModel& model, std::int64_t id) {
  auto classes = compile::derived_classes(graph, model.labels, model.tree.target(), id);
  if (classes.size() != 1)
    throw ModelError("case " + std::to_string(id) + ": program derived " + std::to_string(classes.size()) + " classes, expected exactly one");
  return classes.front();
}

}  // namespace detail

/// Evaluates the chosen encoding on one case and explains `prediction(id)`.
inline CaseExplanation explain_case(const compile::CompiledModel& model, const Case& c, compile::Encoding encoding) {
  auto program = model.full_program(encoding);
  auto facts = compile::case_to_facts(c, model.tree.schema(), model.thresholds);
  auto graph = rules::evaluate(program, facts);
  CaseExplanation out;
  out.id = c.id;
  out.prediction = detail::single_class(graph, model, c.id);
  out.atom = prediction_atom(c.id);
  out.explanations = build_explanations(graph, program, out.atom);
  return out;
}

/// Program predictions for many cases from a single evaluation.
inline std::vector<std::string> predict_cases(const compile::CompiledModel& model, const std::vector<Case>& cases,
                                              compile::Encoding encoding) {
  std::vector<rules::Rule> facts;
  std::set<std::int64_t> ids;
  for (const auto& c : cases) {
    if (!ids.insert(c.id).second) throw DataError("duplicate case id " + std::to_string(c.id));
    auto f = compile::case_to_facts(c, model.tree.schema(), model.thresholds);
    facts.insert(facts.end(), std::make_move_iterator(f.begin()), std::make_move_iterator(f.end()));
  }
  auto graph = rules::evaluate(model.full_program(encoding), facts);
  std::vector<std::string> out;
  out.reserve(cases.size());
  for (const auto& c : cases) out.push_back(detail::single_class(graph, model, c.id));
  return out;
}

}  // namespace treelp::explain
