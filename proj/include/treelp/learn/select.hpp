#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "../error.hpp"
#include "../model.hpp"
#include "chi_square.hpp"
#include "discretize.hpp"

namespace treelp::learn {

struct RankEntry {
  std::string feature;
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Features ordered by ascending p-value, ties by name.
using FeatureRanking = std::vector<RankEntry>;

/// Contingency table of one feature against the target, restricted to the
/// feature values and classes that actually occur.
inline Table contingency(const Dataset& ds, std::size_t feature, const Discretization& bins) {
  const auto& f = ds.schema[feature];
  const std::vector<double>* cuts = nullptr;
  if (f.is_numeric()) {
    auto it = bins.find(f.name);
    if (it == bins.end()) throw DataError("feature '" + f.name + "' is numeric and has not been discretized");
    cuts = &it->second;
  }
  std::map<std::size_t, std::map<int, double>> cells;
  std::map<int, bool> seen_classes;
  for (const auto& r : ds.rows) {
    auto level = cuts ? bin_of(r.x[feature], *cuts) : static_cast<std::size_t>(r.x[feature]);
    cells[level][r.y] += 1;
    seen_classes[r.y] = true;
  }
  Table t;
  for (const auto& [level, by_class] : cells) {
    std::vector<double> row;
    for (const auto& [cls, _] : seen_classes) {
      auto it = by_class.find(cls);
      row.push_back(it == by_class.end() ? 0.0 : it->second);
    }
    t.push_back(std::move(row));
  }
  return t;
}

inline FeatureRanking rank_features(const Dataset& ds, const Discretization& bins = {}) {
  FeatureRanking ranking;
  for (std::size_t f = 0; f < ds.schema.size(); ++f) {
    ChiSquareResult r;
    try {
      r = chi_square_test(contingency(ds, f, bins));
    } catch (const DataError& e) {
      throw DataError("feature '" + ds.schema[f].name + "': " + e.what());
    }
    ranking.push_back(RankEntry{ds.schema[f].name, r.statistic, r.p_value});
  }
  std::sort(ranking.begin(), ranking.end(), [](const RankEntry& a, const RankEntry& b) {
    return a.p_value != b.p_value ? a.p_value < b.p_value : a.feature < b.feature;
  });
  return ranking;
}

/// The k features with the lowest chi-square p-value against the target.
inline FeatureRanking select_features(const Dataset& ds, std::size_t k, const Discretization& bins = {}) {
  if (k == 0 || k > ds.schema.size())
    throw UsageError("k must lie in [1, " + std::to_string(ds.schema.size()) + "], got " + std::to_string(k));
  auto ranking = rank_features(ds, bins);
  ranking.resize(k);
  return ranking;
}

/// Dataset restricted to the named features, in their original schema order.
inline Dataset project(const Dataset& ds, const std::vector<std::string>& features) {
  for (const auto& name : features)
    if (!find_feature(ds.schema, name)) throw UsageError("unknown feature '" + name + "'");
  std::vector<std::size_t> keep;
  for (std::size_t f = 0; f < ds.schema.size(); ++f)
    if (std::find(features.begin(), features.end(), ds.schema[f].name) != features.end()) keep.push_back(f);
  Dataset out{{}, ds.target, {}};
  for (auto f : keep) out.schema.push_back(ds.schema[f]);
  out.rows.reserve(ds.size());
  for (const auto& r : ds.rows) {
    Row row{{}, r.y};
    for (auto f : keep) row.x.push_back(r.x[f]);
    out.rows.push_back(std::move(row));
  }
  return out;
}

inline std::string ranking_to_csv(const FeatureRanking& ranking) {
  std::string out = "feature,statistic,p_value\n";
  for (const auto& e : ranking) out += e.feature + "," + format_number(e.statistic) + "," + format_number(e.p_value) + "\n";
  return out;
}

}  // namespace treelp::learn
