#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "../error.hpp"
#include "../model.hpp"
#include "../numfmt.hpp"
#include "../rules/printer.hpp"
#include "../rules/program.hpp"
#include "labels.hpp"

namespace treelp::compile {

using rules::Atom;
using rules::Term;

/// Rule-language constant for a category token: bare when it is an
/// identifier or an integer, quoted otherwise.
inline Term token_term(const std::string& token) {
  if (token.empty()) return Term::constant("\"\"");
  auto digits = token.front() == '-' ? token.substr(1) : token;
  bool integer = !digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; });
  if (is_identifier(token) || integer) return Term::constant(token);
  return Term::constant(rules::quote(token));
}

inline Term number_term(double x) { return Term::constant(format_number(x)); }

inline Atom make_atom(std::string predicate, std::vector<Term> args) { return Atom{std::move(predicate), std::move(args)}; }

/// Every way a case can be incomplete or ill-typed, one message per feature.
struct CaseIssue {
  std::string feature;
  std::string message;
};

inline std::vector<CaseIssue> check_case(const Case& c, const Schema& schema) {
  std::vector<CaseIssue> issues;
  for (const auto& [name, value] : c.values)
    if (!find_feature(schema, name)) issues.push_back({name, "unknown feature"});
  for (const auto& f : schema) {
    auto it = c.values.find(f.name);
    if (it == c.values.end()) {
      issues.push_back({f.name, "missing value"});
      continue;
    }
    if (f.is_numeric()) {
      if (!std::holds_alternative<double>(it->second)) issues.push_back({f.name, "expects a number"});
    } else if (const auto* s = std::get_if<std::string>(&it->second)) {
      if (!f.encode(*s)) issues.push_back({f.name, "unknown category '" + *s + "'"});
    } else {
      issues.push_back({f.name, "expects a category token"});
    }
  }
  return issues;
}

inline void require_valid_case(const Case& c, const Schema& schema) {
  auto issues = check_case(c, schema);
  if (issues.empty()) return;
  std::string msg = "case " + std::to_string(c.id) + ":";
  for (const auto& i : issues) msg += " " + i.feature + ": " + i.message + ";";
  msg.pop_back();
  throw DataError(msg);
}

/// Ground facts describing one case: `case(id)`, `holds(id,f,v)` for each
/// categorical feature, and for each numeric feature one `le(id,f,t)` or
/// `gt(id,f,t)` per threshold the model tests on it.
inline std::vector<rules::Rule> case_to_facts(const Case& c, const Schema& schema,
                                              const std::map<std::string, std::vector<double>>& thresholds) {
  require_valid_case(c, schema);
  const Term id = Term::constant(std::to_string(c.id));
  std::vector<rules::Rule> facts;
  facts.push_back(rules::fact(make_atom("case", {id})));
  for (const auto& f : schema) {
    const auto& v = c.values.at(f.name);
    if (f.is_categorical()) {
      facts.push_back(rules::fact(make_atom("holds", {id, Term::constant(f.name), token_term(std::get<std::string>(v))})));
      continue;
    }
    auto it = thresholds.find(f.name);
    if (it == thresholds.end()) continue;
    double x = std::get<double>(v);
    for (double t : it->second)
      facts.push_back(rules::fact(make_atom(x <= t ? "le" : "gt", {id, Term::constant(f.name), number_term(t)})));
  }
  return facts;
}

/// Inverse of token_term.
inline std::string term_token(const Term& t) {
  const auto& s = t.text;
  if (s.size() < 2 || s.front() != '"') return s;
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '\\' && i + 2 < s.size()) {
      ++i;
      out += s[i] == 'n' ? '\n' : s[i];
    } else {
      out += s[i];
    }
  }
  return out;
}

/// Reads cases back from `case`, `holds`, `le` and `gt` facts. A numeric
/// value is only known up to the interval its facts pin down, so the case
/// gets a representative of that interval: the upper bound when there is
/// one, else a point above the lower bound. Numeric features the model never
/// tests carry no facts and are filled with 0.
inline std::vector<Case> cases_from_facts(const rules::RuleProgram& program, const Schema& schema,
                                          const std::map<std::string, std::vector<double>>& thresholds) {
  struct Bounds {
    std::optional<double> lower, upper;
  };
  std::map<std::int64_t, Case> cases;
  std::map<std::pair<std::int64_t, std::string>, Bounds> bounds;
  auto case_id = [](const Term& t) {
    auto x = parse_number(t.text);
    if (!x || *x < 0 || *x != static_cast<double>(static_cast<std::int64_t>(*x)))
      throw DataError("case id '" + t.text + "' is not a non-negative integer");
    return static_cast<std::int64_t>(*x);
  };
  for (const auto& r : program.rules) {
    if (!r.is_fact()) throw DataError("case file may only contain facts, found '" + rules::to_text(r) + "'");
    const auto& a = r.head;
    if (a.predicate == "case" && a.arity() == 1) {
      auto id = case_id(a.args[0]);
      cases[id].id = id;
    } else if (a.predicate == "holds" && a.arity() == 3) {
      auto id = case_id(a.args[0]);
      cases[id].id = id;
      cases[id].values[a.args[1].text] = term_token(a.args[2]);
    } else if ((a.predicate == "le" || a.predicate == "gt") && a.arity() == 3) {
      auto id = case_id(a.args[0]);
      auto t = parse_number(a.args[2].text);
      if (!t) throw DataError("threshold '" + a.args[2].text + "' in " + a.to_string() + " is not a number");
      cases[id].id = id;
      auto& b = bounds[{id, a.args[1].text}];
      if (a.predicate == "le")
        b.upper = b.upper ? std::min(*b.upper, *t) : *t;
      else
        b.lower = b.lower ? std::max(*b.lower, *t) : *t;
    } else {
      throw DataError("unexpected fact '" + a.to_string() + "' in case file");
    }
  }
  for (const auto& [key, b] : bounds) {
    if (b.lower && b.upper && *b.lower >= *b.upper)
      throw DataError("case " + std::to_string(key.first) + ": contradictory bounds on '" + key.second + "'");
    double v = b.upper ? *b.upper : *b.lower + std::max(1.0, std::abs(*b.lower));
    cases[key.first].values[key.second] = v;
  }
  std::vector<Case> out;
  for (auto& [id, c] : cases) {
    for (const auto& f : schema)
      if (f.is_numeric() && !c.values.count(f.name) && !thresholds.count(f.name)) c.values[f.name] = 0.0;
    out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<Atom> fact_atoms(const std::vector<rules::Rule>& facts) {
  std::vector<Atom> out;
  out.reserve(facts.size());
  for (const auto& f : facts) out.push_back(f.head);
  return out;
}

}  // namespace treelp::compile
