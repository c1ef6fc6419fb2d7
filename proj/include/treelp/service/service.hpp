#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../compile/encode.hpp"
#include "../compile/facts.hpp"
#include "../error.hpp"
#include "../explain/case.hpp"
#include "../model.hpp"
#include "../numfmt.hpp"
#include "../rules/printer.hpp"

namespace treelp::service {

using json = nlohmann::ordered_json;

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// A model compiled once at startup and never modified afterwards.
struct LoadedModel {
  compile::CompiledModel compiled;
  std::string nodes_text;
  std::string paths_text;

  explicit LoadedModel(compile::CompiledModel m)
      : compiled(std::move(m)),
        nodes_text(rules::serialize_program(compiled.full_program(compile::Encoding::nodes))),
        paths_text(rules::serialize_program(compiled.full_program(compile::Encoding::paths))) {}

  const DecisionTree& tree() const { return compiled.tree; }
  const Schema& schema() const { return compiled.tree.schema(); }
};

struct FieldError {
  std::string field;
  std::string message;
};

namespace detail {

inline Response json_response(int status, const json& j) { return Response{status, "application/json", j.dump() + "\n"}; }

inline Response error_response(int status, const std::string& message) { return json_response(status, json{{"error", message}}); }

inline Response field_errors(const std::vector<FieldError>& errors) {
  json list = json::array();
  for (const auto& e : errors) list.push_back({{"field", e.field}, {"message", e.message}});
  return json_response(422, json{{"errors", list}});
}

/// Typed value of a JSON cell for feature `f`. Categorical features take
/// string tokens; booleans and integers are accepted as their spelling.
inline std::optional<Value> value_from_json(const FeatureSchema& f, const json& v, std::string& problem) {
  if (f.is_numeric()) {
    if (v.is_number()) return Value{v.get<double>()};
    problem = "expects a number";
    return std::nullopt;
  }
  std::string token;
  if (v.is_string())
    token = v.get<std::string>();
  else if (v.is_boolean())
    token = v.get<bool>() ? "true" : "false";
  else if (v.is_number_integer())
    token = std::to_string(v.get<std::int64_t>());
  else {
    problem = "expects a category token";
    return std::nullopt;
  }
  if (!f.encode(token)) {
    problem = "unknown category '" + token + "'";
    return std::nullopt;
  }
  return Value{token};
}

inline Case case_from_json(const json& j, const Schema& schema, std::int64_t id, std::vector<FieldError>& errors) {
  Case c;
  c.id = id;
  if (!j.is_object()) {
    errors.push_back({"case", "must be an object of feature values"});
    return c;
  }
  for (const auto& [name, v] : j.items()) {
    auto fi = find_feature(schema, name);
    if (!fi) {
      errors.push_back({name, "unknown feature"});
      continue;
    }
    std::string problem;
    if (auto value = value_from_json(schema[*fi], v, problem))
      c.values[name] = *value;
    else
      errors.push_back({name, problem});
  }
  for (const auto& f : schema)
    if (!j.contains(f.name)) errors.push_back({f.name, "missing value"});
  return c;
}

inline json value_json(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::get<std::string>(v);
}

inline json explain_json(const explain::CaseExplanation& e) {
  json j;
  j["prediction"] = e.prediction;
  j["explanation"] = json::parse(e.json().dump());
  j["text"] = e.text();
  return j;
}

struct Request {
  json body;
  compile::Encoding encoding = compile::Encoding::paths;
  std::int64_t id = 0;
};

/// Common envelope of /explain and /whatif: JSON object, optional encoding
/// and id. Returns an error response when the envelope itself is bad.
inline std::optional<Response> parse_request(const std::string& text, Request& out) {
  try {
    out.body = json::parse(text);
  } catch (const json::parse_error& e) {
    return error_response(400, std::string("body is not valid JSON: ") + e.what());
  }
  if (!out.body.is_object()) return error_response(400, "body must be a JSON object");
  if (out.body.contains("encoding")) {
    const auto& e = out.body["encoding"];
    if (!e.is_string()) return error_response(400, "encoding must be \"nodes\" or \"paths\"");
    try {
      out.encoding = compile::parse_encoding(e.get<std::string>());
    } catch (const UsageError& err) {
      return error_response(400, err.what());
    }
  }
  if (out.body.contains("id")) {
    const auto& id = out.body["id"];
    if (!id.is_number_integer() || id.get<std::int64_t>() < 0)
      return field_errors({{"id", "must be a non-negative integer"}});
    out.id = id.get<std::int64_t>();
  }
  if (!out.body.contains("case")) return field_errors({{"case", "missing"}});
  return std::nullopt;
}

}  // namespace detail

/// Request handlers over an optional loaded model. All handlers are const
/// and share nothing mutable, so they may run concurrently.
class Service {
 public:
  Service() = default;
  explicit Service(std::shared_ptr<const LoadedModel> model) : model_(std::move(model)) {}

  bool loaded() const { return model_ != nullptr; }

  Response health() const { return detail::json_response(200, json{{"status", "ok"}, {"model_loaded", loaded()}}); }

  Response model() const {
    if (!model_) return unavailable();
    const auto& tree = model_->tree();
    const auto thresholds = model_->compiled.thresholds;
    json features = json::array();
    for (const auto& f : tree.schema()) {
      json j;
      j["name"] = f.name;
      j["kind"] = to_string(f.kind);
      if (f.is_categorical()) {
        j["categories"] = f.categories;
      } else {
        auto it = thresholds.find(f.name);
        j["thresholds"] = it == thresholds.end() ? std::vector<double>{} : it->second;
      }
      features.push_back(std::move(j));
    }
    json labels = json::object();
    for (const auto& cls : tree.target().categories) {
      const auto& l = model_->compiled.labels.at(cls);
      labels[cls] = {{"predicate", l.predicate}, {"cascade", l.cascade}, {"flat", l.flat}};
    }
    json out;
    out["target"] = {{"name", tree.target().name}, {"categories", tree.target().categories}};
    out["features"] = std::move(features);
    out["labels"] = std::move(labels);
    out["encodings"] = {"nodes", "paths"};
    return detail::json_response(200, out);
  }

  Response program(const std::string& name) const {
    if (!model_) return unavailable();
    if (name == "nodes") return Response{200, "text/plain; charset=utf-8", model_->nodes_text};
    if (name == "paths") return Response{200, "text/plain; charset=utf-8", model_->paths_text};
    return detail::error_response(404, "unknown program '" + name + "' (expected nodes or paths)");
  }

  Response explain(const std::string& body) const {
    if (!model_) return unavailable();
    detail::Request req;
    if (auto bad = detail::parse_request(body, req)) return *bad;
    std::vector<FieldError> errors;
    auto c = detail::case_from_json(req.body["case"], model_->schema(), req.id, errors);
    if (!errors.empty()) return detail::field_errors(errors);
    return run([&] { return detail::json_response(200, detail::explain_json(explain_case(c, req.encoding))); });
  }

  /// Body: `{case, overrides: [{feature, value}], encoding?, id?}`. Replies
  /// with one result per override, in request order, or a single 422 when
  /// the base case or any override is invalid.
  Response whatif(const std::string& body) const {
    if (!model_) return unavailable();
    detail::Request req;
    if (auto bad = detail::parse_request(body, req)) return *bad;
    const auto& schema = model_->schema();
    std::vector<FieldError> errors;
    auto base = detail::case_from_json(req.body["case"], schema, req.id, errors);

    std::vector<std::pair<std::string, Value>> overrides;
    const json* list = req.body.contains("overrides") ? &req.body["overrides"] : nullptr;
    if (list && !list->is_array()) errors.push_back({"overrides", "must be an array"});
    if (list && list->is_array()) {
      for (std::size_t i = 0; i < list->size(); ++i) {
        const auto& o = (*list)[i];
        const std::string where = "overrides[" + std::to_string(i) + "]";
        if (!o.is_object() || !o.contains("feature") || !o["feature"].is_string() || !o.contains("value")) {
          errors.push_back({where, "must be an object with 'feature' and 'value'"});
          continue;
        }
        auto name = o["feature"].get<std::string>();
        auto fi = find_feature(schema, name);
        if (!fi) {
          errors.push_back({where + ".feature", "unknown feature '" + name + "'"});
          continue;
        }
        std::string problem;
        if (auto v = detail::value_from_json(schema[*fi], o["value"], problem))
          overrides.emplace_back(name, *v);
        else
          errors.push_back({where + ".value", name + " " + problem});
      }
    }
    if (!errors.empty()) return detail::field_errors(errors);

    return run([&] {
      json out = json::array();
      if (overrides.empty()) return detail::json_response(200, out);
      const auto base_prediction = explain_case(base, req.encoding).prediction;
      for (const auto& [name, value] : overrides) {
        Case c = base;
        c.values[name] = value;
        auto e = explain_case(c, req.encoding);
        json item;
        item["override"] = {{"feature", name}, {"value", detail::value_json(value)}};
        item["prediction"] = e.prediction;
        item["changed"] = e.prediction != base_prediction;
        auto ex = detail::explain_json(e);
        item["explanation"] = std::move(ex["explanation"]);
        item["text"] = std::move(ex["text"]);
        out.push_back(std::move(item));
      }
      return detail::json_response(200, out);
    });
  }

  Response schema() const;

 private:
  static Response unavailable() { return detail::error_response(503, "no model loaded"); }

  explain::CaseExplanation explain_case(const Case& c, compile::Encoding e) const {
    return explain::explain_case(model_->compiled, c, e);
  }

  template <typename Fn>
  static Response run(Fn&& fn) {
    try {
      return fn();
    } catch (const DataError& e) {
      return detail::field_errors({{"case", e.what()}});
    } catch (const Error& e) {
      return detail::error_response(500, e.what());
    }
  }

  std::shared_ptr<const LoadedModel> model_;
};

/// JSON schemas of every request and response body.
inline json api_schemas() {
  const json value = {{"type", json::array({"number", "string", "boolean"})}};
  const json case_obj = {{"type", "object"}, {"additionalProperties", value}};
  json tree_node = {{"type", "object"},
                    {"required", {"label", "children"}},
                    {"properties", {{"label", {{"type", "string"}}}, {"children", {{"type", "array"}, {"items", {{"$ref", "#/definitions/explanation_node"}}}}}}}};
  json explanation = {{"type", "object"},
                      {"required", {"atom", "count", "explanations"}},
                      {"properties",
                       {{"atom", {{"type", "string"}}},
                        {"count", {{"type", "integer"}}},
                        {"explanations", {{"type", "array"}, {"items", {{"$ref", "#/definitions/explanation_node"}}}}}}}};
  json feature = {{"type", "object"},
                  {"required", {"name", "kind"}},
                  {"properties",
                   {{"name", {{"type", "string"}}},
                    {"kind", {{"enum", {"numeric", "categorical"}}}},
                    {"categories", {{"type", "array"}, {"items", {{"type", "string"}}}}},
                    {"thresholds", {{"type", "array"}, {"items", {{"type", "number"}}}}}}}};
  json label = {{"type", "object"},
                {"required", {"predicate", "cascade", "flat"}},
                {"properties", {{"predicate", {{"type", "string"}}}, {"cascade", {{"type", "string"}}}, {"flat", {{"type", "string"}}}}}};
  json model = {{"type", "object"},
                {"required", {"target", "features", "labels", "encodings"}},
                {"properties",
                 {{"target",
                   {{"type", "object"},
                    {"required", {"name", "categories"}},
                    {"properties", {{"name", {{"type", "string"}}}, {"categories", {{"type", "array"}, {"items", {{"type", "string"}}}}}}}}},
                  {"features", {{"type", "array"}, {"items", feature}}},
                  {"labels", {{"type", "object"}, {"additionalProperties", label}}},
                  {"encodings", {{"type", "array"}, {"items", {{"enum", {"nodes", "paths"}}}}}}}}};
  json explain_request = {{"type", "object"},
                          {"required", {"case"}},
                          {"properties",
                           {{"case", case_obj}, {"encoding", {{"enum", {"nodes", "paths"}}}}, {"id", {{"type", "integer"}, {"minimum", 0}}}}}};
  json explain_response = {{"type", "object"},
                           {"required", {"prediction", "explanation", "text"}},
                           {"properties", {{"prediction", {{"type", "string"}}}, {"explanation", explanation}, {"text", {{"type", "string"}}}}}};
  json override_obj = {{"type", "object"}, {"required", {"feature", "value"}}, {"properties", {{"feature", {{"type", "string"}}}, {"value", value}}}};
  json whatif_request = explain_request;
  whatif_request["properties"]["overrides"] = {{"type", "array"}, {"items", override_obj}};
  json whatif_item = {{"type", "object"},
                      {"required", {"override", "prediction", "changed", "explanation", "text"}},
                      {"properties",
                       {{"override", override_obj},
                        {"prediction", {{"type", "string"}}},
                        {"changed", {{"type", "boolean"}}},
                        {"explanation", explanation},
                        {"text", {{"type", "string"}}}}}};
  json errors = {{"type", "object"},
                 {"required", {"errors"}},
                 {"properties",
                  {{"errors",
                    {{"type", "array"},
                     {"items",
                      {{"type", "object"},
                       {"required", {"field", "message"}},
                       {"properties", {{"field", {{"type", "string"}}}, {"message", {{"type", "string"}}}}}}}}}}}};
  json out;
  out["definitions"] = {{"explanation_node", tree_node}};
  out["model_response"] = model;
  out["explain_request"] = explain_request;
  out["explain_response"] = explain_response;
  out["whatif_request"] = whatif_request;
  out["whatif_response"] = {{"type", "array"}, {"items", whatif_item}};
  out["validation_error"] = errors;
  return out;
}

inline Response Service::schema() const { return detail::json_response(200, api_schemas()); }

}  // namespace treelp::service
