#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "../error.hpp"

namespace treelp::learn {

namespace detail {
inline void check_lengths(const std::vector<std::string>& predicted, const std::vector<std::string>& actual) {
  if (predicted.size() != actual.size())
    throw DataError("label lists differ in length (" + std::to_string(predicted.size()) + " vs " + std::to_string(actual.size()) + ")");
  if (predicted.empty()) throw DataError("label lists are empty");
}
}  // namespace detail

inline double accuracy(const std::vector<std::string>& predicted, const std::vector<std::string>& actual) {
  detail::check_lengths(predicted, actual);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == actual[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

/// Cohen's kappa. Empty optional when chance agreement is 1 and kappa is
/// undefined (both raters always emit the same single label).
inline std::optional<double> cohen_kappa(const std::vector<std::string>& predicted, const std::vector<std::string>& actual) {
  detail::check_lengths(predicted, actual);
  const double n = static_cast<double>(predicted.size());
  std::map<std::string, double> pred_marginal, actual_marginal;
  double agree = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    pred_marginal[predicted[i]] += 1;
    actual_marginal[actual[i]] += 1;
    agree += predicted[i] == actual[i];
  }
  const double po = agree / n;
  double pe = 0;
  for (const auto& [label, count] : pred_marginal) {
    auto it = actual_marginal.find(label);
    if (it != actual_marginal.end()) pe += (count / n) * (it->second / n);
  }
  if (pe >= 1.0) return std::nullopt;
  return (po - pe) / (1.0 - pe);
}

}  // namespace treelp::learn
