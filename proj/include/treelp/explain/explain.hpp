#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../error.hpp"
#include "../rules/evaluator.hpp"
#include "../rules/program.hpp"

namespace treelp::explain {

using rules::Atom;

struct ExplanationTree {
  std::string label;
  std::vector<ExplanationTree> children;

  std::size_t depth() const {
    std::size_t d = 0;
    for (const auto& c : children) d = std::max(d, c.depth());
    return d + 1;
  }

  std::size_t node_count() const {
    std::size_t n = 1;
    for (const auto& c : children) n += c.node_count();
    return n;
  }

  friend bool operator==(const ExplanationTree&, const ExplanationTree&) = default;
};

namespace detail {

/// Binds the variables of `pattern` against a ground atom.
inline std::optional<std::map<std::string, std::string>> unify(const Atom& pattern, const Atom& ground) {
  if (pattern.predicate != ground.predicate || pattern.arity() != ground.arity()) return std::nullopt;
  std::map<std::string, std::string> env;
  for (std::size_t i = 0; i < pattern.arity(); ++i) {
    const auto& p = pattern.args[i];
    const auto& g = ground.args[i].text;
    if (!p.is_variable()) {
      if (p.text != g) return std::nullopt;
      continue;
    }
    auto [it, fresh] = env.emplace(p.text, g);
    if (!fresh && it->second != g) return std::nullopt;
  }
  return env;
}

inline Atom substitute(const Atom& a, const rules::Firing& f) {
  Atom out = a;
  for (auto& t : out.args)
    if (t.is_variable())
      if (auto v = f.value_of(t.text)) t = rules::Term::constant(*v);
  return out;
}

class Builder {
 public:
  Builder(const rules::DerivationGraph& graph, const rules::RuleProgram& program) : graph_(graph), program_(program) {}

  const std::vector<ExplanationTree>& explain(const Atom& atom) {
    if (auto it = memo_.find(atom); it != memo_.end()) return it->second;
    std::vector<ExplanationTree> out;
    for (const auto& f : graph_.firings(atom)) {
      const rules::Rule* rule = f.rule ? &program_.rules.at(*f.rule) : nullptr;
      auto label = firing_label(atom, f, rule);
      auto children = explain_body(f, rule);
      if (label)
        out.push_back(ExplanationTree{std::move(*label), std::move(children)});
      else
        for (auto& c : children) out.push_back(std::move(c));
    }
    return memo_.emplace(atom, std::move(out)).first->second;
  }

 private:
  /// Rule trace first; otherwise the first program-level atom trace that
  /// matches. No label means the firing is transparent.
  std::optional<std::string> firing_label(const Atom& atom, const rules::Firing& f, const rules::Rule* rule) const {
    if (rule && rule->trace) {
      std::vector<std::string> values;
      for (const auto& v : rule->trace->vars) values.push_back(f.value_of(v).value_or(v));
      return rules::fill_template(rule->trace->text, values);
    }
    for (const auto& t : program_.atom_traces) {
      auto env = unify(t.pattern.front(), atom);
      if (!env) continue;
      std::vector<std::string> values;
      for (const auto& v : t.label.vars) values.push_back(env->at(v));
      return rules::fill_template(t.label.text, values);
    }
    return std::nullopt;
  }

  std::vector<ExplanationTree> explain_body(const rules::Firing& f, const rules::Rule* rule) {
    const auto n = f.body.size();
    struct Group {
      std::string label;
      std::vector<std::size_t> members;
    };
    std::vector<std::optional<Group>> group_at(n);
    std::vector<bool> covered(n, false);
    if (rule) {
      for (const auto& t : rule->scoped_traces) {
        std::vector<std::size_t> members;
        std::vector<bool> taken = covered;
        for (const auto& p : t.pattern) {
          auto g = substitute(p, f);
          std::size_t hit = n;
          for (std::size_t i = 0; i < n && hit == n; ++i)
            if (!taken[i] && f.body[i] == g) hit = i;
          if (hit == n) break;
          taken[hit] = true;
          members.push_back(hit);
        }
        if (members.size() != t.pattern.size()) continue;
        std::vector<std::string> values;
        for (const auto& v : t.label.vars) values.push_back(f.value_of(v).value_or(v));
        covered = std::move(taken);
        auto first = *std::min_element(members.begin(), members.end());
        std::sort(members.begin(), members.end());
        group_at[first] = Group{rules::fill_template(t.label.text, values), std::move(members)};
      }
    }

    std::vector<ExplanationTree> out;
    for (std::size_t i = 0; i < n; ++i) {
      if (group_at[i]) {
        ExplanationTree node{group_at[i]->label, {}};
        for (auto m : group_at[i]->members) {
          const auto& sub = explain(f.body[m]);
          node.children.insert(node.children.end(), sub.begin(), sub.end());
        }
        out.push_back(std::move(node));
      } else if (!covered[i]) {
        const auto& sub = explain(f.body[i]);
        out.insert(out.end(), sub.begin(), sub.end());
      }
    }
    return out;
  }

  const rules::DerivationGraph& graph_;
  const rules::RuleProgram& program_;
  std::map<Atom, std::vector<ExplanationTree>> memo_;
};

}  // namespace detail

/// Explanations of a derived atom, one per alternative firing that is
/// labelled. A firing is labelled by its rule's trace or by a matching atom
/// trace; its children are the explanations of its body atoms, in body order.
/// Unlabelled firings pass their body explanations up unchanged, so untraced
/// facts contribute nothing. Body atoms claimed by a trace scoped to the rule
/// form a single child labelled by that trace.
inline std::vector<ExplanationTree> build_explanations(const rules::DerivationGraph& graph, const rules::RuleProgram& program,
                                                       const Atom& atom) {
  if (!atom.is_ground()) throw DataError("cannot explain non-ground atom '" + atom.to_string() + "'");
  if (!graph.contains(atom)) throw DataError("atom '" + atom.to_string() + "' was not derived");
  return detail::Builder(graph, program).explain(atom);
}

inline std::string quote_label(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\')
      out += '\\', out += c;
    else if (c == '\n')
      out += "\\n";
    else
      out += c;
  }
  return out + "\"";
}

/// Text rendering:
///
///   >> prediction(14)<TAB>[1]
///     *
///     |__"Bad (<5years)"
///     |  |__"rec_afp > 509"
///
/// One `*` line opens each explanation; a node at depth d is written as
/// `|__"label"` after d-1 copies of `|  `, all under a two-space margin.
inline std::string render_ascii(const Atom& atom, const std::vector<ExplanationTree>& explanations) {
  std::string out = ">> " + atom.to_string() + "\t[" + std::to_string(explanations.size()) + "]\n";
  auto node = [&](auto&& self, const ExplanationTree& t, std::size_t depth) -> void {
    out += "  ";
    for (std::size_t i = 1; i < depth; ++i) out += "|  ";
    out += "|__" + quote_label(t.label) + "\n";
    for (const auto& c : t.children) self(self, c, depth + 1);
  };
  for (const auto& e : explanations) {
    out += "  *\n";
    node(node, e, 1);
  }
  return out;
}

inline nlohmann::json tree_to_json(const ExplanationTree& t) {
  nlohmann::json j;
  j["label"] = t.label;
  j["children"] = nlohmann::json::array();
  for (const auto& c : t.children) j["children"].push_back(tree_to_json(c));
  return j;
}

inline nlohmann::json explanations_to_json(const Atom& atom, const std::vector<ExplanationTree>& explanations) {
  nlohmann::json j;
  j["atom"] = atom.to_string();
  j["count"] = explanations.size();
  j["explanations"] = nlohmann::json::array();
  for (const auto& e : explanations) j["explanations"].push_back(tree_to_json(e));
  return j;
}

}  // namespace treelp::explain
