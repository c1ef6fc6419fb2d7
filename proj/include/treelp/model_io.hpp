#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "model.hpp"
#include "numfmt.hpp"

namespace treelp {

using ordered_json = nlohmann::ordered_json;

enum class DataFormat { csv, json };

inline DataFormat format_from_path(const std::filesystem::path& p) {
  return p.extension() == ".json" ? DataFormat::json : DataFormat::csv;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

/// RFC-4180 records. Quoted fields may contain commas, CR/LF and doubled
/// quotes. A trailing line break does not start a new record.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) throw DataError("line " + std::to_string(line) + ": stray quote inside unquoted field");
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) throw DataError("line " + std::to_string(line) + ": unterminated quoted field");
  if (field_started || !record.empty()) end_record();
  return records;
}

namespace detail {

/// Builds a Dataset from a string table, inferring column kinds.
/// `row_label(i)` names the i-th data row in error messages.
template <typename RowLabel>
Dataset build_dataset(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& cells,
                      const std::string& target, RowLabel row_label) {
  if (cells.empty()) throw DataError("dataset has no data rows");
  std::size_t target_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == target) target_col = c;
    for (std::size_t d = 0; d < c; ++d)
      if (header[d] == header[c]) throw DataError("column " + std::to_string(c + 1) + ": duplicate column '" + header[c] + "'");
  }
  if (target_col == header.size()) throw DataError("missing target column '" + target + "'");

  for (std::size_t r = 0; r < cells.size(); ++r)
    for (std::size_t c = 0; c < header.size(); ++c)
      if (cells[r][c].empty())
        throw DataError(row_label(r) + ", column " + std::to_string(c + 1) + " ('" + header[c] + "'): missing value");

  Dataset ds;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::vector<std::string> col;
    col.reserve(cells.size());
    for (const auto& row : cells) col.push_back(row[c]);
    if (c == target_col) {
      ds.target = categorical_feature(header[c], col);
      continue;
    }
    if (!is_feature_name(header[c]))
      throw DataError("column " + std::to_string(c + 1) + ": invalid feature name '" + header[c] + "' (expected [a-z][a-z0-9_]*)");
    bool numeric = std::all_of(col.begin(), col.end(), [](const std::string& s) { return parse_number(s).has_value(); });
    ds.schema.push_back(numeric ? numeric_feature(header[c]) : categorical_feature(header[c], col));
    feature_cols.push_back(c);
  }

  ds.rows.reserve(cells.size());
  for (const auto& row : cells) {
    Row out;
    out.x.reserve(feature_cols.size());
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const auto& cell = row[feature_cols[f]];
      const auto& fs = ds.schema[f];
      out.x.push_back(fs.is_numeric() ? *parse_number(cell) : static_cast<double>(*fs.encode(cell)));
    }
    out.y = *ds.target.encode(row[target_col]);
    ds.rows.push_back(std::move(out));
  }
  return ds;
}

inline std::string json_scalar_text(const ordered_json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_number(v.get<double>());
  if (v.is_null()) return {};
  throw DataError(where + ": expected a scalar value");
}

}  // namespace detail

inline Dataset parse_csv_dataset(std::string_view text, const std::string& target) {
  auto records = parse_csv(text);
  if (records.empty()) throw DataError("empty file: no header row");
  const auto header = records.front();
  std::vector<std::vector<std::string>> cells(records.begin() + 1, records.end());
  for (std::size_t r = 0; r < cells.size(); ++r)
    if (cells[r].size() != header.size())
      throw DataError("row " + std::to_string(r + 2) + ": expected " + std::to_string(header.size()) + " fields, found " +
                      std::to_string(cells[r].size()));
  return detail::build_dataset(header, cells, target, [](std::size_t r) { return "row " + std::to_string(r + 2); });
}

inline Dataset parse_json_dataset(std::string_view text, const std::string& target) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw DataError("JSON dataset must be an array of objects");
  if (doc.empty()) throw DataError("empty file: no records");
  std::vector<std::string> header;
  for (auto it = doc.front().begin(); it != doc.front().end(); ++it) header.push_back(it.key());
  std::vector<std::vector<std::string>> cells;
  for (std::size_t r = 0; r < doc.size(); ++r) {
    const auto& obj = doc[r];
    std::string where = "record " + std::to_string(r + 1);
    if (!obj.is_object()) throw DataError(where + ": expected an object");
    if (obj.size() != header.size())
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, found " + std::to_string(obj.size()));
    std::vector<std::string> row;
    for (std::size_t c = 0; c < header.size(); ++c) {
      auto it = obj.find(header[c]);
      if (it == obj.end()) throw DataError(where + ", column " + std::to_string(c + 1) + ": missing field '" + header[c] + "'");
      row.push_back(detail::json_scalar_text(*it, where + ", column " + std::to_string(c + 1)));
    }
    cells.push_back(std::move(row));
  }
  return detail::build_dataset(header, cells, target, [](std::size_t r) { return "record " + std::to_string(r + 1); });
}

inline Dataset load_dataset(const std::filesystem::path& path, DataFormat format, const std::string& target = "goal_death") {
  auto text = read_file(path);
  return format == DataFormat::json ? parse_json_dataset(text, target) : parse_csv_dataset(text, target);
}

// ---------------------------------------------------------------------------
// Tree model file

inline ordered_json feature_to_json(const FeatureSchema& f) {
  ordered_json j;
  j["name"] = f.name;
  j["kind"] = to_string(f.kind);
  if (f.is_categorical()) j["categories"] = f.categories;
  return j;
}

inline FeatureSchema feature_from_json(const ordered_json& j) {
  if (!j.is_object() || !j.contains("name") || !j.contains("kind")) throw ModelError("feature entry needs 'name' and 'kind'");
  FeatureSchema f;
  f.name = j.at("name").get<std::string>();
  auto kind = j.at("kind").get<std::string>();
  if (kind == "numeric") {
    f.kind = FeatureKind::numeric;
  } else if (kind == "categorical") {
    f.kind = FeatureKind::categorical;
    if (!j.contains("categories")) throw ModelError("categorical feature '" + f.name + "' lacks 'categories'");
    f.categories = j.at("categories").get<std::vector<std::string>>();
  } else {
    throw ModelError("feature '" + f.name + "' has unknown kind '" + kind + "'");
  }
  return f;
}

inline std::string tree_to_json(const DecisionTree& tree) {
  ordered_json doc;
  doc["schema"] = ordered_json::array();
  for (const auto& f : tree.schema()) doc["schema"].push_back(feature_to_json(f));
  doc["target"] = feature_to_json(tree.target());
  doc["root"] = 0;
  doc["nodes"] = ordered_json::array();
  for (const auto& n : tree.nodes()) {
    ordered_json j;
    j["id"] = n.id;
    if (n.is_leaf()) {
      j["kind"] = "leaf";
      j["class"] = n.leaf().label;
      j["counts"] = n.leaf().counts;
    } else {
      const auto& s = n.split();
      j["kind"] = "split";
      j["feature"] = s.condition.feature;
      j["op"] = to_string(s.condition.op);
      if (s.condition.op == Op::eq)
        j["bound"] = s.condition.category;
      else
        j["bound"] = s.condition.threshold;
      j["true_child"] = s.true_child;
      j["false_child"] = s.false_child;
    }
    doc["nodes"].push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

inline DecisionTree tree_from_json(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError(std::string("malformed model file: ") + e.what());
  }
  try {
    if (!doc.is_object()) throw ModelError("malformed model file: expected an object");
    for (const char* key : {"schema", "target", "root", "nodes"})
      if (!doc.contains(key)) throw ModelError(std::string("malformed model file: missing '") + key + "'");
    Schema schema;
    for (const auto& f : doc.at("schema")) schema.push_back(feature_from_json(f));
    auto target = feature_from_json(doc.at("target"));
    if (doc.at("root").get<int>() != 0) throw ModelError("ids must be pre-order from 0 (root is " + doc.at("root").dump() + ")");

    std::vector<TreeNode> nodes;
    for (const auto& j : doc.at("nodes")) {
      TreeNode n;
      n.id = j.at("id").get<int>();
      auto kind = j.at("kind").get<std::string>();
      if (kind == "leaf") {
        LeafNode leaf;
        leaf.label = j.at("class").get<std::string>();
        if (j.contains("counts")) leaf.counts = j.at("counts").get<std::vector<std::size_t>>();
        n.body = std::move(leaf);
      } else if (kind == "split") {
        SplitNode s;
        s.condition.feature = j.at("feature").get<std::string>();
        auto op = j.at("op").get<std::string>();
        if (op == "le" || op == "gt") {
          s.condition.op = op == "le" ? Op::le : Op::gt;
          s.condition.threshold = j.at("bound").get<double>();
        } else if (op == "eq") {
          s.condition.op = Op::eq;
          s.condition.category = j.at("bound").get<std::string>();
        } else {
          throw ModelError("node " + std::to_string(n.id) + ": unknown op '" + op + "'");
        }
        s.true_child = j.at("true_child").get<int>();
        s.false_child = j.at("false_child").get<int>();
        n.body = std::move(s);
      } else {
        throw ModelError("node " + std::to_string(n.id) + ": unknown kind '" + kind + "'");
      }
      nodes.push_back(std::move(n));
    }
    // The tree is stored in id order; tolerate files listing nodes out of order.
    std::stable_sort(nodes.begin(), nodes.end(), [](const TreeNode& a, const TreeNode& b) { return a.id < b.id; });
    return DecisionTree(std::move(schema), std::move(target), std::move(nodes));
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed model file: ") + e.what());
  } catch (const DataError& e) {
    throw ModelError(std::string("malformed model file: ") + e.what());
  }
}

inline void save_tree(const DecisionTree& tree, const std::filesystem::path& path) { write_file(path, tree_to_json(tree)); }

inline DecisionTree load_tree(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError& e) {
    throw ModelError(e.what());
  }
  return tree_from_json(text);
}

// ---------------------------------------------------------------------------
// Cases

/// Reads cases from a CSV table with an integer `id` column. Cells are typed
/// by the schema: numeric features must parse as numbers, other cells are
/// category tokens. Columns not in the schema are an error, except the
/// optional target column named by `ignore`.
inline std::vector<Case> parse_cases_csv(std::string_view text, const Schema& schema, const std::string& ignore = "goal_death") {
  auto records = parse_csv(text);
  if (records.empty()) throw DataError("case file is empty");
  const auto& header = records.front();
  std::size_t id_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == "id") id_col = c;
  if (id_col == header.size()) throw DataError("case file lacks an 'id' column");

  std::vector<Case> cases;
  std::set<std::int64_t> ids;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    std::string where = "row " + std::to_string(r + 1);
    if (rec.size() != header.size())
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, found " + std::to_string(rec.size()));
    Case c;
    auto id = parse_number(rec[id_col]);
    if (!id || *id < 0 || *id != static_cast<double>(static_cast<std::int64_t>(*id)))
      throw DataError(where + ": id must be a non-negative integer");
    c.id = static_cast<std::int64_t>(*id);
    if (!ids.insert(c.id).second) throw DataError(where + ": duplicate case id " + std::to_string(c.id));
    for (std::size_t col = 0; col < header.size(); ++col) {
      if (col == id_col || header[col] == ignore) continue;
      auto fi = find_feature(schema, header[col]);
      if (!fi) throw DataError(where + ", column " + std::to_string(col + 1) + ": unknown feature '" + header[col] + "'");
      if (rec[col].empty()) continue;
      if (schema[*fi].is_numeric()) {
        auto x = parse_number(rec[col]);
        if (!x) throw DataError(where + ", column " + std::to_string(col + 1) + ": '" + header[col] + "' expects a number");
        c.values[header[col]] = *x;
      } else {
        c.values[header[col]] = rec[col];
      }
    }
    cases.push_back(std::move(c));
  }
  return cases;
}

}  // namespace treelp
