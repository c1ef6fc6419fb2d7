#pragma once

#include <string>

#include "program.hpp"

namespace treelp::rules {

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

inline std::string to_text(const Rule& r) {
  std::string s = r.head.to_string();
  if (!r.body.empty()) {
    s += " :- ";
    for (std::size_t i = 0; i < r.body.size(); ++i) {
      if (i) s += ", ";
      s += r.body[i].to_string();
    }
  }
  return s + ".";
}

namespace detail {
inline std::string template_tail(const TraceTemplate& t) {
  std::string s = quote(t.text);
  for (const auto& v : t.vars) s += " " + v;
  return s;
}

inline std::string trace_line(const AtomTrace& t) {
  std::string s = "%!trace ";
  for (std::size_t i = 0; i < t.pattern.size(); ++i) {
    if (i) s += ", ";
    s += t.pattern[i].to_string();
  }
  return s + " " + template_tail(t.label) + "\n";
}
}  // namespace detail

/// One rule per line, each preceded by its directives; program-level traces
/// come first. Output is LF-terminated and parses back to an equal program.
inline std::string serialize_program(const RuleProgram& p) {
  std::string out;
  for (const auto& t : p.atom_traces) out += detail::trace_line(t);
  for (const auto& r : p.rules) {
    if (r.trace) out += "%!trace_rule " + detail::template_tail(*r.trace) + "\n";
    for (const auto& t : r.scoped_traces) out += detail::trace_line(t);
    out += to_text(r) + "\n";
  }
  return out;
}

}  // namespace treelp::rules
