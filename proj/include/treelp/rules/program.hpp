#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "../error.hpp"

namespace treelp::rules {

/// A variable (capitalized identifier) or a constant. Constants are kept in
/// their source spelling: integers and decimals (`55`, `2.5`), identifiers
/// (`true`), or quoted strings including the quotes (`"Male"`).
struct Term {
  std::string text;

  bool is_variable() const { return !text.empty() && std::isupper(static_cast<unsigned char>(text.front())); }

  static Term var(std::string name) { return Term{std::move(name)}; }
  static Term constant(std::string spelling) { return Term{std::move(spelling)}; }

  friend auto operator<=>(const Term&, const Term&) = default;
};

struct Atom {
  std::string predicate;
  std::vector<Term> args;

  bool is_ground() const {
    return std::none_of(args.begin(), args.end(), [](const Term& t) { return t.is_variable(); });
  }

  std::size_t arity() const { return args.size(); }

  std::string to_string() const {
    if (args.empty()) return predicate;
    std::string s = predicate + "(";
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) s += ',';
      s += args[i].text;
    }
    return s + ")";
  }

  void collect_variables(std::vector<std::string>& out) const {
    for (const auto& t : args)
      if (t.is_variable() && std::find(out.begin(), out.end(), t.text) == out.end()) out.push_back(t.text);
  }

  friend auto operator<=>(const Atom&, const Atom&) = default;
};

/// Text with `%` placeholders, each filled by the next listed variable.
struct TraceTemplate {
  std::string text;
  std::vector<std::string> vars;

  std::size_t placeholders() const { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '%')); }

  friend bool operator==(const TraceTemplate&, const TraceTemplate&) = default;
};

/// Label for atoms matching `pattern`. Program-level traces have a single
/// pattern atom and label any derivation of a matching atom. Traces scoped to
/// a rule may list several atoms; they label that group of the rule's body
/// atoms as one unit.
struct AtomTrace {
  std::vector<Atom> pattern;
  TraceTemplate label;

  friend bool operator==(const AtomTrace&, const AtomTrace&) = default;
};

struct Rule {
  Atom head;
  std::vector<Atom> body;
  std::optional<TraceTemplate> trace;
  std::vector<AtomTrace> scoped_traces;

  bool is_fact() const { return body.empty(); }

  std::vector<std::string> variables() const {
    std::vector<std::string> vars;
    for (const auto& a : body) a.collect_variables(vars);
    head.collect_variables(vars);
    return vars;
  }

  friend bool operator==(const Rule&, const Rule&) = default;
};

struct RuleProgram {
  std::vector<Rule> rules;
  std::vector<AtomTrace> atom_traces;

  /// Rules and traces of `other` follow this program's.
  void append(const RuleProgram& other) {
    rules.insert(rules.end(), other.rules.begin(), other.rules.end());
    atom_traces.insert(atom_traces.end(), other.atom_traces.begin(), other.atom_traces.end());
  }

  friend bool operator==(const RuleProgram&, const RuleProgram&) = default;
};

inline std::size_t count_placeholders(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '%'));
}

/// Fills the template's placeholders left to right.
inline std::string fill_template(const std::string& text, const std::vector<std::string>& values) {
  std::string out;
  std::size_t next = 0;
  for (char c : text) {
    if (c == '%' && next < values.size())
      out += values[next++];
    else
      out += c;
  }
  return out;
}

namespace detail {
inline bool mentions(const std::vector<std::string>& vars, const std::string& v) {
  return std::find(vars.begin(), vars.end(), v) != vars.end();
}
}  // namespace detail

/// Safety and trace consistency of one rule; `where` prefixes messages.
inline void validate_rule(const Rule& rule, const std::string& where) {
  std::vector<std::string> body_vars;
  for (const auto& a : rule.body) a.collect_variables(body_vars);
  std::vector<std::string> head_vars;
  rule.head.collect_variables(head_vars);
  for (const auto& v : head_vars)
    if (!detail::mentions(body_vars, v))
      throw DataError(where + ": unsafe rule, variable " + v + " in '" + rule.head.to_string() + "' does not occur in the body");

  const auto vars = rule.variables();
  if (rule.trace) {
    if (rule.trace->placeholders() != rule.trace->vars.size())
      throw DataError(where + ": trace_rule has " + std::to_string(rule.trace->placeholders()) + " placeholder(s) but " +
                      std::to_string(rule.trace->vars.size()) + " variable(s)");
    for (const auto& v : rule.trace->vars)
      if (!detail::mentions(vars, v)) throw DataError(where + ": trace_rule variable " + v + " does not occur in the rule");
  } else if (!rule.scoped_traces.empty()) {
    throw DataError(where + ": rule-scoped traces require a trace_rule annotation");
  }
  for (const auto& t : rule.scoped_traces) {
    if (t.pattern.empty()) throw DataError(where + ": trace without a pattern");
    std::vector<std::string> pattern_vars;
    for (const auto& a : t.pattern) a.collect_variables(pattern_vars);
    for (const auto& v : pattern_vars)
      if (!detail::mentions(vars, v)) throw DataError(where + ": trace pattern variable " + v + " does not occur in the rule");
    if (t.label.placeholders() != t.label.vars.size())
      throw DataError(where + ": trace has " + std::to_string(t.label.placeholders()) + " placeholder(s) but " +
                      std::to_string(t.label.vars.size()) + " variable(s)");
    for (const auto& v : t.label.vars)
      if (!detail::mentions(pattern_vars, v)) throw DataError(where + ": trace variable " + v + " does not occur in its pattern");
  }
}

inline void validate_atom_trace(const AtomTrace& t, const std::string& where) {
  if (t.pattern.size() != 1) throw DataError(where + ": a program-level trace takes exactly one atom");
  std::vector<std::string> vars;
  t.pattern.front().collect_variables(vars);
  if (t.label.placeholders() != t.label.vars.size())
    throw DataError(where + ": trace has " + std::to_string(t.label.placeholders()) + " placeholder(s) but " +
                    std::to_string(t.label.vars.size()) + " variable(s)");
  for (const auto& v : t.label.vars)
    if (!detail::mentions(vars, v)) throw DataError(where + ": trace variable " + v + " does not occur in its pattern");
}

inline void validate_program(const RuleProgram& p) {
  for (std::size_t i = 0; i < p.rules.size(); ++i) validate_rule(p.rules[i], "rule " + std::to_string(i));
  for (std::size_t i = 0; i < p.atom_traces.size(); ++i) validate_atom_trace(p.atom_traces[i], "trace " + std::to_string(i));
}

/// A ground fact `atom.`
inline Rule fact(Atom atom) { return Rule{std::move(atom), {}, std::nullopt, {}}; }

}  // namespace treelp::rules
