#pragma once

#include <cctype>
#include <string>
#include <string_view>

#include "../error.hpp"
#include "program.hpp"

namespace treelp::rules {

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& msg)
      : DataError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_, column_;
};

namespace detail {

/// Recursive-descent reader for
///
///   program   := (directive | rule)*
///   rule      := atom (":-" atom ("," atom)*)? "."
///   atom      := ident ("(" term ("," term)* ")")?
///   term      := number | ident | string | Variable
///   directive := "%!trace_rule" string Variable* EOL
///              | "%!trace" atom ("," atom)* string Variable* EOL
///
/// Any other `%` starts a comment that runs to the end of the line.
class Parser {
 public:
  explicit Parser(std::string_view text) : src_(text) {}

  RuleProgram parse() {
    RuleProgram program;
    std::optional<TraceTemplate> pending_trace;
    std::vector<AtomTrace> pending_scoped;
    std::size_t pending_line = 0, pending_col = 0;

    for (;;) {
      skip_space_and_comments();
      if (at_end()) break;
      if (peek() == '%') {
        // skip_space_and_comments() stops only at directives
        std::size_t line = line_, col = col_;
        advance();
        advance();
        auto name = read_while([](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
        if (name == "trace_rule") {
          if (pending_trace) throw ParseError(pending_line, pending_col, "trace directive not followed by a rule");
          skip_inline_space();
          TraceTemplate t;
          t.text = parse_string();
          t.vars = parse_variables_to_eol();
          pending_trace = std::move(t);
          pending_line = line;
          pending_col = col;
        } else if (name == "trace") {
          AtomTrace t;
          skip_inline_space();
          t.pattern.push_back(parse_atom());
          skip_inline_space();
          while (peek() == ',') {
            advance();
            skip_inline_space();
            t.pattern.push_back(parse_atom());
            skip_inline_space();
          }
          t.label.text = parse_string();
          t.label.vars = parse_variables_to_eol();
          if (pending_trace) {
            pending_scoped.push_back(std::move(t));
          } else {
            try {
              validate_atom_trace(t, "trace");
            } catch (const DataError& e) {
              throw ParseError(line, col, e.what());
            }
            program.atom_traces.push_back(std::move(t));
          }
        } else {
          throw ParseError(line, col, "unknown directive '%!" + name + "'");
        }
        continue;
      }

      std::size_t line = line_, col = col_;
      Rule rule = parse_rule();
      rule.trace = std::move(pending_trace);
      rule.scoped_traces = std::move(pending_scoped);
      pending_trace.reset();
      pending_scoped.clear();
      try {
        validate_rule(rule, "rule");
      } catch (const DataError& e) {
        throw ParseError(line, col, e.what());
      }
      program.rules.push_back(std::move(rule));
    }
    if (pending_trace) throw ParseError(pending_line, pending_col, "trace directive not followed by a rule");
    return program;
  }

 private:
  bool at_end() const { return pos_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const { return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0'; }

  void advance() {
    if (at_end()) return;
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, col_, msg); }

  template <typename Pred>
  std::string read_while(Pred pred) {
    std::string out;
    while (!at_end() && pred(peek())) {
      out += peek();
      advance();
    }
    return out;
  }

  void skip_inline_space() {
    while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
  }

  void skip_space_and_comments() {
    for (;;) {
      while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
      if (peek() == '%' && peek(1) != '!') {
        while (!at_end() && peek() != '\n') advance();
        continue;
      }
      return;
    }
  }

  // Inside a rule, directives are not allowed but comments are.
  void skip_rule_space() {
    skip_space_and_comments();
    if (peek() == '%') fail("directive inside a rule");
  }

  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  std::string parse_identifier() {
    if (!std::islower(static_cast<unsigned char>(peek()))) fail("expected an identifier");
    return read_while(ident_char);
  }

  std::string parse_number() {
    std::string out;
    if (peek() == '-') {
      out += '-';
      advance();
    }
    if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected a digit");
    out += read_while([](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
    if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      out += '.';
      advance();
      out += read_while([](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
    }
    if ((peek() == 'e' || peek() == 'E') &&
        (std::isdigit(static_cast<unsigned char>(peek(1))) ||
         ((peek(1) == '+' || peek(1) == '-') && std::isdigit(static_cast<unsigned char>(peek(2)))))) {
      out += peek();
      advance();
      if (peek() == '+' || peek() == '-') {
        out += peek();
        advance();
      }
      out += read_while([](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
    }
    return out;
  }

  /// Returns the unescaped contents of a double-quoted string.
  std::string parse_string() {
    if (peek() != '"') fail("expected a quoted string");
    advance();
    std::string out;
    for (;;) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      char c = peek();
      advance();
      if (c == '"') break;
      if (c == '\\') {
        char e = peek();
        advance();
        switch (e) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'n': out += '\n'; break;
          default: fail(std::string("unknown escape '\\") + e + "'");
        }
        continue;
      }
      out += c;
    }
    return out;
  }

  std::vector<std::string> parse_variables_to_eol() {
    std::vector<std::string> vars;
    for (;;) {
      skip_inline_space();
      if (at_end() || peek() == '\n') break;
      if (!std::isupper(static_cast<unsigned char>(peek()))) fail("expected a variable or end of line");
      vars.push_back(read_while(ident_char));
    }
    return vars;
  }

  Term parse_term() {
    char c = peek();
    if (std::isupper(static_cast<unsigned char>(c))) return Term::var(read_while(ident_char));
    if (std::islower(static_cast<unsigned char>(c))) return Term::constant(parse_identifier());
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-') return Term::constant(parse_number());
    if (c == '"') {
      std::size_t start = pos_;
      parse_string();
      return Term::constant(std::string(src_.substr(start, pos_ - start)));
    }
    fail("expected a term");
  }

  Atom parse_atom() {
    Atom a;
    a.predicate = parse_identifier();
    if (peek() != '(') return a;
    advance();
    for (;;) {
      skip_rule_space();
      a.args.push_back(parse_term());
      skip_rule_space();
      if (peek() == ',') {
        advance();
        continue;
      }
      if (peek() == ')') {
        advance();
        break;
      }
      fail("expected ',' or ')'");
    }
    return a;
  }

  Rule parse_rule() {
    Rule r;
    r.head = parse_atom();
    skip_rule_space();
    if (peek() == ':' && peek(1) == '-') {
      advance();
      advance();
      for (;;) {
        skip_rule_space();
        r.body.push_back(parse_atom());
        skip_rule_space();
        if (peek() == ',') {
          advance();
          continue;
        }
        break;
      }
    }
    if (peek() != '.') fail("expected '.' at end of rule");
    advance();
    return r;
  }

  std::string_view src_;
  std::size_t pos_ = 0, line_ = 1, col_ = 1;
};

}  // namespace detail

/// Parses rule text. Throws ParseError (a DataError) with a line/column on
/// syntax errors, unsafe rules, dangling trace directives and placeholder
/// count mismatches.
inline RuleProgram parse_program(std::string_view text) { return detail::Parser(text).parse(); }

}  // namespace treelp::rules
