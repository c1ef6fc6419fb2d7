#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "../error.hpp"
#include "program.hpp"

namespace treelp::rules {

/// One way an atom was obtained: the rule (absent for externally supplied
/// facts), the variable binding in first-occurrence order, and the ground
/// body atoms in body order.
struct Firing {
  std::optional<std::size_t> rule;
  std::vector<std::pair<std::string, std::string>> binding;
  std::vector<Atom> body;

  std::optional<std::string> value_of(const std::string& var) const {
    for (const auto& [v, c] : binding)
      if (v == var) return c;
    return std::nullopt;
  }
};

namespace detail {

class SymbolTable {
 public:
  int intern(const std::string& s) {
    auto [it, inserted] = ids_.try_emplace(s, static_cast<int>(texts_.size()));
    if (inserted) texts_.push_back(s);
    return it->second;
  }
  std::optional<int> find(const std::string& s) const {
    auto it = ids_.find(s);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  const std::string& text(int id) const { return texts_[static_cast<std::size_t>(id)]; }

 private:
  std::vector<std::string> texts_;
  std::unordered_map<std::string, int> ids_;
};

struct TupleHash {
  std::size_t operator()(const std::vector<int>& t) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (int v : t) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ULL;
    return h;
  }
};

using TupleRef = std::pair<std::uint32_t, std::uint32_t>;  // relation, tuple

struct FiringRecord {
  int rule;  // -1 for external facts
  std::vector<int> binding;
  std::vector<TupleRef> body;
};

struct Relation {
  std::string name;
  std::size_t arity = 0;
  std::vector<std::vector<int>> tuples;
  std::vector<std::vector<FiringRecord>> firings;
  std::unordered_map<std::vector<int>, std::uint32_t, TupleHash> lookup;
  std::vector<std::unordered_map<int, std::vector<std::uint32_t>>> index;

  std::pair<std::uint32_t, bool> insert(const std::vector<int>& t) {
    auto it = lookup.find(t);
    if (it != lookup.end()) return {it->second, false};
    auto id = static_cast<std::uint32_t>(tuples.size());
    tuples.push_back(t);
    firings.emplace_back();
    lookup.emplace(t, id);
    if (index.size() < arity) index.resize(arity);
    for (std::size_t i = 0; i < arity; ++i) index[i][t[i]].push_back(id);
    return {id, true};
  }

  std::optional<std::uint32_t> find(const std::vector<int>& t) const {
    auto it = lookup.find(t);
    if (it == lookup.end()) return std::nullopt;
    return it->second;
  }
};

}  // namespace detail

/// Result of evaluating a program: the least model and, per atom, the
/// firings that produced it in deterministic order.
class DerivationGraph {
 public:
  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& r : relations_) n += r.tuples.size();
    return n;
  }

  bool contains(const Atom& a) const { return locate(a).has_value(); }

  /// All derived atoms, sorted.
  std::vector<Atom> derived() const {
    std::vector<Atom> out;
    for (std::uint32_t r = 0; r < relations_.size(); ++r)
      for (std::uint32_t t = 0; t < relations_[r].tuples.size(); ++t) out.push_back(to_atom({r, t}));
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Firings of a derived atom in the order they happened; empty if the atom
  /// was not derived.
  std::vector<Firing> firings(const Atom& a) const {
    std::vector<Firing> out;
    auto ref = locate(a);
    if (!ref) return out;
    for (const auto& f : relations_[ref->first].firings[ref->second]) {
      Firing x;
      if (f.rule >= 0) {
        x.rule = static_cast<std::size_t>(f.rule);
        const auto& names = rule_vars_[static_cast<std::size_t>(f.rule)];
        for (std::size_t i = 0; i < names.size(); ++i) x.binding.emplace_back(names[i], symbols_->text(f.binding[i]));
      }
      for (auto b : f.body) x.body.push_back(to_atom(b));
      out.push_back(std::move(x));
    }
    return out;
  }

  /// Derived atoms unifying with `pattern`, sorted.
  std::vector<Atom> query(const Atom& pattern) const {
    std::vector<Atom> out;
    auto rel = relation_of(pattern.predicate, pattern.arity());
    if (!rel) return out;
    for (std::uint32_t t = 0; t < relations_[*rel].tuples.size(); ++t) {
      const auto& tuple = relations_[*rel].tuples[t];
      std::map<std::string, int> bound;
      bool ok = true;
      for (std::size_t i = 0; i < tuple.size() && ok; ++i) {
        const auto& term = pattern.args[i];
        if (term.is_variable()) {
          auto [it, fresh] = bound.emplace(term.text, tuple[i]);
          ok = fresh || it->second == tuple[i];
        } else {
          ok = symbols_->text(tuple[i]) == term.text;
        }
      }
      if (ok) out.push_back(to_atom({*rel, t}));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  friend class Evaluator;

  std::optional<std::uint32_t> relation_of(const std::string& name, std::size_t arity) const {
    auto it = relation_ids_.find({name, arity});
    if (it == relation_ids_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<detail::TupleRef> locate(const Atom& a) const {
    auto rel = relation_of(a.predicate, a.arity());
    if (!rel) return std::nullopt;
    std::vector<int> t;
    for (const auto& term : a.args) {
      auto id = symbols_->find(term.text);
      if (!id) return std::nullopt;
      t.push_back(*id);
    }
    auto idx = relations_[*rel].find(t);
    if (!idx) return std::nullopt;
    return detail::TupleRef{*rel, *idx};
  }

  Atom to_atom(detail::TupleRef ref) const {
    const auto& rel = relations_[ref.first];
    Atom a{rel.name, {}};
    for (int v : rel.tuples[ref.second]) a.args.push_back(Term::constant(symbols_->text(v)));
    return a;
  }

  std::shared_ptr<detail::SymbolTable> symbols_ = std::make_shared<detail::SymbolTable>();
  std::vector<detail::Relation> relations_;
  std::map<std::pair<std::string, std::size_t>, std::uint32_t> relation_ids_;
  std::vector<std::vector<std::string>> rule_vars_;
};

/// Forward chaining for definite programs. Strongly connected components of
/// the predicate dependency graph run in topological order (ties by name,
/// arity); a recursive component is iterated until nothing new fires.
/// Ground derivations must be acyclic.
class Evaluator {
 public:
  DerivationGraph run(const RuleProgram& program, const std::vector<Atom>& facts) {
    compile(program);
    for (const auto& f : facts) {
      if (!f.is_ground()) throw DataError("non-ground fact '" + f.to_string() + "'");
      std::vector<int> t;
      for (const auto& term : f.args) t.push_back(g_.symbols_->intern(term.text));
      add_fact(relation(f.predicate, f.arity()), t, -1);
    }

    seen_.assign(rules_.size(), {});
    for (const auto& component : components()) {
      std::vector<std::size_t> members;
      for (std::size_t r = 0; r < rules_.size(); ++r)
        if (component.count(rules_[r].head.rel)) members.push_back(r);
      bool recursive = false;
      for (auto r : members)
        for (const auto& b : rules_[r].body) recursive = recursive || component.count(b.rel);
      bool changed = true;
      while (changed) {
        changed = false;
        for (auto r : members) changed = fire(r) || changed;
        if (!recursive) break;
      }
    }
    check_ground_cycles();
    return std::move(g_);
  }

 private:
  // Argument encoding: >= 0 constant symbol, < 0 variable -(index + 1).
  struct CAtom {
    std::uint32_t rel;
    std::vector<int> args;
  };
  struct CRule {
    CAtom head;
    std::vector<CAtom> body;
    std::size_t num_vars;
  };

  std::uint32_t relation(const std::string& name, std::size_t arity) {
    auto [it, inserted] = g_.relation_ids_.try_emplace({name, arity}, static_cast<std::uint32_t>(g_.relations_.size()));
    if (inserted) {
      detail::Relation rel;
      rel.name = name;
      rel.arity = arity;
      rel.index.resize(arity);
      g_.relations_.push_back(std::move(rel));
    }
    return it->second;
  }

  void compile(const RuleProgram& program) {
    for (std::size_t i = 0; i < program.rules.size(); ++i) {
      const auto& rule = program.rules[i];
      validate_rule(rule, "rule " + std::to_string(i));
      std::vector<std::string> vars;
      for (const auto& a : rule.body) a.collect_variables(vars);
      auto encode = [&](const Atom& a) {
        CAtom c{relation(a.predicate, a.arity()), {}};
        for (const auto& t : a.args) {
          if (t.is_variable()) {
            auto pos = static_cast<int>(std::find(vars.begin(), vars.end(), t.text) - vars.begin());
            c.args.push_back(-(pos + 1));
          } else {
            c.args.push_back(g_.symbols_->intern(t.text));
          }
        }
        return c;
      };
      CRule cr{encode(rule.head), {}, vars.size()};
      for (const auto& a : rule.body) cr.body.push_back(encode(a));
      rules_.push_back(std::move(cr));
      g_.rule_vars_.push_back(std::move(vars));
    }
  }

  /// Strongly connected components, dependencies first.
  std::vector<std::set<std::uint32_t>> components() {
    const auto n = g_.relations_.size();
    std::vector<std::set<std::uint32_t>> out_edges(n);
    for (const auto& r : rules_)
      for (const auto& b : r.body) out_edges[b.rel].insert(r.head.rel);

    // Tarjan, then a name-ordered topological sort of the condensation.
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<char> on_stack(n, 0);
    std::vector<std::uint32_t> stack;
    int counter = 0, ncomp = 0;
    std::function<void(std::uint32_t)> visit = [&](std::uint32_t v) {
      index[v] = low[v] = counter++;
      stack.push_back(v);
      on_stack[v] = 1;
      for (auto w : out_edges[v]) {
        if (index[w] < 0) {
          visit(w);
          low[v] = std::min(low[v], low[w]);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
      }
      if (low[v] == index[v]) {
        std::uint32_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = ncomp;
        } while (w != v);
        ++ncomp;
      }
    };
    for (std::uint32_t i = 0; i < n; ++i)
      if (index[i] < 0) visit(i);

    std::vector<std::set<std::uint32_t>> members(static_cast<std::size_t>(ncomp));
    for (std::uint32_t i = 0; i < n; ++i) members[static_cast<std::size_t>(comp[i])].insert(i);
    std::vector<std::set<int>> succ(members.size());
    std::vector<std::size_t> indegree(members.size(), 0);
    for (std::uint32_t v = 0; v < n; ++v)
      for (auto w : out_edges[v])
        if (comp[v] != comp[w] && succ[static_cast<std::size_t>(comp[v])].insert(comp[w]).second)
          ++indegree[static_cast<std::size_t>(comp[w])];

    auto key = [&](int c) {
      auto rel = *members[static_cast<std::size_t>(c)].begin();
      for (auto r : members[static_cast<std::size_t>(c)])
        if (std::make_pair(g_.relations_[r].name, g_.relations_[r].arity) <
            std::make_pair(g_.relations_[rel].name, g_.relations_[rel].arity))
          rel = r;
      return std::make_pair(std::make_pair(g_.relations_[rel].name, g_.relations_[rel].arity), c);
    };
    std::set<std::pair<std::pair<std::string, std::size_t>, int>> ready;
    for (int c = 0; c < ncomp; ++c)
      if (indegree[static_cast<std::size_t>(c)] == 0) ready.insert(key(c));
    std::vector<std::set<std::uint32_t>> order;
    while (!ready.empty()) {
      int c = ready.begin()->second;
      ready.erase(ready.begin());
      order.push_back(members[static_cast<std::size_t>(c)]);
      for (int d : succ[static_cast<std::size_t>(c)])
        if (--indegree[static_cast<std::size_t>(d)] == 0) ready.insert(key(d));
    }
    return order;
  }

  /// Rejects an atom whose only support runs through itself.
  void check_ground_cycles() const {
    std::vector<std::vector<char>> state(g_.relations_.size());
    for (std::size_t r = 0; r < g_.relations_.size(); ++r) state[r].assign(g_.relations_[r].tuples.size(), 0);
    auto edges = [&](detail::TupleRef t) {
      std::vector<detail::TupleRef> out;
      for (const auto& f : g_.relations_[t.first].firings[t.second]) out.insert(out.end(), f.body.begin(), f.body.end());
      return out;
    };
    for (std::uint32_t r = 0; r < g_.relations_.size(); ++r) {
      for (std::uint32_t t = 0; t < g_.relations_[r].tuples.size(); ++t) {
        if (state[r][t]) continue;
        std::vector<std::pair<detail::TupleRef, std::vector<detail::TupleRef>>> path;
        std::vector<std::size_t> next;
        path.push_back({{r, t}, edges({r, t})});
        next.push_back(0);
        state[r][t] = 1;
        while (!path.empty()) {
          auto& [at, out] = path.back();
          if (next.back() == out.size()) {
            state[at.first][at.second] = 2;
            path.pop_back();
            next.pop_back();
            continue;
          }
          auto w = out[next.back()++];
          auto& s = state[w.first][w.second];
          if (s == 1)
            throw ModelError("derivation of '" + g_.to_atom(w).to_string() + "' depends on itself");
          if (s == 0) {
            s = 1;
            path.push_back({w, edges(w)});
            next.push_back(0);
          }
        }
      }
    }
  }

  void add_fact(std::uint32_t rel, const std::vector<int>& tuple, int rule) {
    auto [id, fresh] = g_.relations_[rel].insert(tuple);
    auto& firings = g_.relations_[rel].firings[id];
    // a fact is recorded once, however often it is asserted
    for (const auto& f : firings)
      if (f.body.empty()) return;
    firings.push_back(detail::FiringRecord{rule, {}, {}});
  }

  /// Records every binding of rule `r` not seen before; true if one was new.
  bool fire(std::size_t r) {
    const auto& rule = rules_[r];
    if (rule.body.empty()) {
      if (!seen_[r].insert(std::vector<int>{}).second) return false;
      add_fact(rule.head.rel, rule.head.args, static_cast<int>(r));
      return true;
    }
    std::vector<std::vector<int>> bindings;
    std::vector<int> binding(rule.num_vars, -1);
    std::vector<char> used(rule.body.size(), 0);
    join(rule, binding, used, rule.body.size(), bindings);

    const auto& syms = *g_.symbols_;
    std::sort(bindings.begin(), bindings.end(), [&](const std::vector<int>& a, const std::vector<int>& b) {
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) continue;
        return syms.text(a[i]) < syms.text(b[i]);
      }
      return false;
    });

    auto ground = [](const CAtom& a, const std::vector<int>& b) {
      std::vector<int> t;
      t.reserve(a.args.size());
      for (int v : a.args) t.push_back(v >= 0 ? v : b[static_cast<std::size_t>(-v - 1)]);
      return t;
    };
    bool any = false;
    for (auto& b : bindings) {
      if (!seen_[r].insert(b).second) continue;
      any = true;
      detail::FiringRecord rec{static_cast<int>(r), b, {}};
      for (const auto& atom : rule.body) rec.body.emplace_back(atom.rel, *g_.relations_[atom.rel].find(ground(atom, b)));
      auto [id, _] = g_.relations_[rule.head.rel].insert(ground(rule.head, b));
      g_.relations_[rule.head.rel].firings[id].push_back(std::move(rec));
    }
    return any;
  }

  /// Enumerates complete bindings, always extending with the body atom that
  /// has the fewest candidate tuples under the current partial binding.
  void join(const CRule& rule, std::vector<int>& binding, std::vector<char>& used, std::size_t remaining,
            std::vector<std::vector<int>>& out) {
    if (remaining == 0) {
      out.push_back(binding);
      return;
    }
    static const std::vector<std::uint32_t> kEmpty;
    std::size_t best = rule.body.size(), best_cost = SIZE_MAX;
    const std::vector<std::uint32_t>* best_list = nullptr;
    for (std::size_t i = 0; i < rule.body.size(); ++i) {
      if (used[i]) continue;
      const auto& atom = rule.body[i];
      const auto& rel = g_.relations_[atom.rel];
      const std::vector<std::uint32_t>* list = nullptr;
      for (std::size_t p = 0; p < atom.args.size(); ++p) {
        int v = atom.args[p] >= 0 ? atom.args[p] : binding[static_cast<std::size_t>(-atom.args[p] - 1)];
        if (v < 0) continue;
        auto it = rel.index[p].find(v);
        const auto* posting = it == rel.index[p].end() ? &kEmpty : &it->second;
        if (!list || posting->size() < list->size()) list = posting;
      }
      std::size_t cost = list ? list->size() : rel.tuples.size();
      if (cost < best_cost) {
        best = i;
        best_cost = cost;
        best_list = list;
      }
      if (cost == 0) break;
    }
    if (best_cost == 0) return;

    const auto& atom = rule.body[best];
    const auto& rel = g_.relations_[atom.rel];
    used[best] = 1;
    auto visit = [&](std::uint32_t t) {
      const auto& tuple = rel.tuples[t];
      std::vector<std::size_t> newly;
      bool ok = true;
      for (std::size_t p = 0; p < atom.args.size() && ok; ++p) {
        int a = atom.args[p];
        if (a >= 0) {
          ok = tuple[p] == a;
        } else {
          auto& slot = binding[static_cast<std::size_t>(-a - 1)];
          if (slot < 0) {
            slot = tuple[p];
            newly.push_back(static_cast<std::size_t>(-a - 1));
          } else {
            ok = slot == tuple[p];
          }
        }
      }
      if (ok) join(rule, binding, used, remaining - 1, out);
      for (auto v : newly) binding[v] = -1;
    };
    if (best_list) {
      for (auto t : *best_list) visit(t);
    } else {
      for (std::uint32_t t = 0; t < rel.tuples.size(); ++t) visit(t);
    }
    used[best] = 0;
  }

  DerivationGraph g_;
  std::vector<CRule> rules_;
  std::vector<std::set<std::vector<int>>> seen_;
};

/// Least model of `program` plus `facts`. Throws DataError on non-ground
/// facts or unsafe rules and ModelError on cyclic derivations.
inline DerivationGraph evaluate(const RuleProgram& program, const std::vector<Atom>& facts) {
  return Evaluator().run(program, facts);
}

/// Overload taking facts as bodiless rules.
inline DerivationGraph evaluate(const RuleProgram& program, const std::vector<Rule>& facts) {
  std::vector<Atom> atoms;
  atoms.reserve(facts.size());
  for (const auto& f : facts) {
    if (!f.is_fact()) throw DataError("expected a fact, got rule '" + f.head.to_string() + " :- ...'");
    atoms.push_back(f.head);
  }
  return evaluate(program, atoms);
}

inline std::vector<Atom> query(const DerivationGraph& graph, const Atom& pattern) { return graph.query(pattern); }

}  // namespace treelp::rules
