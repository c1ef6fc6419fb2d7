#pragma once

#include <algorithm>
#include <map>
#include <cctype>
#include <string>

#include <nlohmann/json.hpp>

#include "../error.hpp"
#include "../model.hpp"

namespace treelp::compile {

/// How one class appears in compiled programs: the head predicate of its
/// leaf rules and the two leaf trace texts.
struct ClassLabel {
  std::string predicate;
  std::string cascade;  // node encoding
  std::string flat;     // path encoding
  friend bool operator==(const ClassLabel&, const ClassLabel&) = default;
};

/// Class token -> label, for every class of a tree's target.
using LabelMap = std::map<std::string, ClassLabel>;

inline bool is_reserved_predicate(const std::string& p) {
  return p == "tree_node" || p == "holds" || p == "le" || p == "gt" || p == "case" || p == "prediction";
}

inline bool is_identifier(const std::string& s) {
  if (s.empty() || !std::islower(static_cast<unsigned char>(s.front()))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

/// Survival targets (`0`/`1` or `false`/`true`, the positive value meaning
/// death within five years) map to not_alive/alive with the forecast texts;
/// other targets use the class token itself where it is a usable predicate.
inline LabelMap default_labels(const FeatureSchema& target) {
  LabelMap out;
  const auto& cats = target.categories;
  auto is = [&](std::initializer_list<const char*> want) {
    return cats.size() == want.size() && std::equal(cats.begin(), cats.end(), want.begin());
  };
  if (is({"0", "1"}) || is({"false", "true"})) {
    out[cats[0]] = {"alive", "Good (>=5years)", "Good forecast (>=5years)"};
    out[cats[1]] = {"not_alive", "Bad (<5years)", "Bad forecast (<5years)"};
    return out;
  }
  for (std::size_t i = 0; i < cats.size(); ++i) {
    const auto& c = cats[i];
    std::string pred = is_identifier(c) && !is_reserved_predicate(c) ? c : "class_" + std::to_string(i);
    out[c] = {pred, c, c};
  }
  return out;
}

inline void validate_labels(const LabelMap& labels, const FeatureSchema& target) {
  for (const auto& c : target.categories)
    if (!labels.count(c)) throw ModelError("label map has no entry for class '" + c + "'");
  for (auto a = labels.begin(); a != labels.end(); ++a) {
    if (!is_identifier(a->second.predicate) || is_reserved_predicate(a->second.predicate))
      throw ModelError("class '" + a->first + "': '" + a->second.predicate + "' is not a usable predicate name");
    if (a->second.cascade.empty() || a->second.flat.empty()) throw ModelError("class '" + a->first + "': empty label text");
    for (auto b = std::next(a); b != labels.end(); ++b)
      if (a->second.predicate == b->second.predicate)
        throw ModelError("classes '" + a->first + "' and '" + b->first + "' share predicate '" + a->second.predicate + "'");
  }
}

/// Reads `{"<class>": {"predicate": ..., "cascade": ..., "flat": ...}}`;
/// entries override the defaults for `target`.
inline LabelMap parse_labels(const std::string& text, const FeatureSchema& target) {
  auto labels = default_labels(target);
  try {
    auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw ModelError("invalid label map: expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!labels.count(it.key())) throw ModelError("label map names unknown class '" + it.key() + "'");
      auto& l = labels[it.key()];
      if (it->contains("predicate")) l.predicate = it->at("predicate").get<std::string>();
      if (it->contains("cascade")) l.cascade = it->at("cascade").get<std::string>();
      if (it->contains("flat")) l.flat = it->at("flat").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("invalid label map: ") + e.what());
  }
  validate_labels(labels, target);
  return labels;
}

inline nlohmann::json labels_to_json(const LabelMap& labels) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [cls, l] : labels) j[cls] = {{"predicate", l.predicate}, {"cascade", l.cascade}, {"flat", l.flat}};
  return j;
}

}  // namespace treelp::compile
