#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "../error.hpp"
#include "../model.hpp"
#include "../random.hpp"

namespace treelp::learn {

/// Row indices of a dataset partitioned into two parts, with the matching
/// materialized datasets.
struct Partition {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  Dataset train;
  Dataset test;
};

namespace detail {

/// Row indices per class, each list shuffled by one generator in class order.
inline std::vector<std::vector<std::size_t>> shuffled_by_class(const Dataset& ds, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes());
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.rows[i].y)].push_back(i);
  Rng rng(seed);
  for (auto& rows : by_class) rng.shuffle(rows);
  return by_class;
}

inline Partition materialize(const Dataset& ds, std::vector<std::size_t> train, std::vector<std::size_t> test) {
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  Partition p;
  p.train = ds.subset(train);
  p.test = ds.subset(test);
  p.train_rows = std::move(train);
  p.test_rows = std::move(test);
  return p;
}

}  // namespace detail

/// Train/test split that keeps each class's share: class c contributes
/// round(n_c * f) training rows, then the largest class absorbs whatever is
/// needed to make the training set exactly round(n * f) rows.
inline Partition stratified_split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw UsageError("train fraction must lie in (0, 1)");
  auto by_class = detail::shuffled_by_class(ds, seed);
  for (std::size_t c = 0; c < by_class.size(); ++c)
    if (by_class[c].size() == 1)
      throw DataError("class '" + ds.target.decode(static_cast<int>(c)) + "' has a single row; cannot stratify");

  std::vector<std::size_t> take(by_class.size());
  std::size_t sum = 0, largest = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    take[c] = static_cast<std::size_t>(std::lround(static_cast<double>(by_class[c].size()) * train_fraction));
    sum += take[c];
    if (by_class[c].size() > by_class[largest].size()) largest = c;
  }
  const auto target = static_cast<std::size_t>(std::lround(static_cast<double>(ds.size()) * train_fraction));
  while (sum < target && take[largest] < by_class[largest].size()) ++take[largest], ++sum;
  while (sum > target && take[largest] > 0) --take[largest], --sum;

  std::vector<std::size_t> train, test;
  for (std::size_t c = 0; c < by_class.size(); ++c)
    for (std::size_t i = 0; i < by_class[c].size(); ++i) (i < take[c] ? train : test).push_back(by_class[c][i]);
  return detail::materialize(ds, std::move(train), std::move(test));
}

/// k stratified folds. Shuffled rows are dealt round-robin, class after class,
/// so every fold holds floor or ceil of each class's n/k share. In each
/// returned Partition, `test` is the validation fold.
inline std::vector<Partition> stratified_kfold(const Dataset& ds, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw UsageError("k-fold needs k >= 2");
  auto by_class = detail::shuffled_by_class(ds, seed);
  for (std::size_t c = 0; c < by_class.size(); ++c)
    if (!by_class[c].empty() && by_class[c].size() < k)
      throw DataError("class '" + ds.target.decode(static_cast<int>(c)) + "' has " + std::to_string(by_class[c].size()) +
                      " rows, fewer than " + std::to_string(k) + " folds");

  std::vector<std::size_t> fold_of(ds.size());
  std::size_t pos = 0;
  for (const auto& rows : by_class)
    for (auto r : rows) fold_of[r] = pos++ % k;

  std::vector<Partition> folds;
  folds.reserve(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train, valid;
    for (std::size_t r = 0; r < ds.size(); ++r) (fold_of[r] == f ? valid : train).push_back(r);
    folds.push_back(detail::materialize(ds, std::move(train), std::move(valid)));
  }
  return folds;
}

}  // namespace treelp::learn
