#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "../error.hpp"
#include "../model.hpp"

namespace treelp::learn {

namespace detail {
inline double total(std::span<const std::size_t> counts) {
  double n = 0;
  for (auto c : counts) n += static_cast<double>(c);
  if (n <= 0) throw DataError("impurity of an empty node: all class counts are zero");
  return n;
}
}  // namespace detail

/// Shannon entropy in bits.
inline double entropy(std::span<const std::size_t> counts) {
  const double n = detail::total(counts);
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

inline double gini(std::span<const std::size_t> counts) {
  const double n = detail::total(counts);
  double s = 0.0;
  for (auto c : counts) {
    double p = static_cast<double>(c) / n;
    s += p * p;
  }
  return 1.0 - s;
}

inline double impurity(Criterion criterion, std::span<const std::size_t> counts) {
  return criterion == Criterion::entropy ? entropy(counts) : gini(counts);
}

}  // namespace treelp::learn
