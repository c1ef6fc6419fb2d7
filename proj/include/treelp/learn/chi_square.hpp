#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "../error.hpp"

namespace treelp::learn {

/// Regularized upper incomplete gamma Q(a, x) = Γ(a, x) / Γ(a).
/// Series for P when x < a + 1, Lentz continued fraction for Q otherwise.
inline double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw DataError("gamma_q: requires a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  const double log_prefix = -x + a * std::log(x) - std::lgamma(a);

  if (x < a + 1.0) {
    double ap = a, del = 1.0 / a, sum = del;
    for (int i = 0; i < kMaxIter; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * kEps) break;
    }
    double p = sum * std::exp(log_prefix);
    return p >= 1.0 ? 0.0 : 1.0 - p;
  }

  constexpr double kTiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a, c = 1.0 / kTiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return std::exp(log_prefix) * h;
}

/// Upper tail of the chi-square distribution.
inline double chi_square_sf(double statistic, double dof) { return gamma_q(dof / 2.0, statistic / 2.0); }

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int dof = 0;
};

using Table = std::vector<std::vector<double>>;

/// Pearson's test of independence on an r x c contingency table.
inline ChiSquareResult chi_square_test(const Table& observed) {
  const std::size_t rows = observed.size();
  if (rows < 2) throw DataError("degenerate contingency table: need at least 2 rows");
  const std::size_t cols = observed.front().size();
  if (cols < 2) throw DataError("degenerate contingency table: need at least 2 columns");

  std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
  double n = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (observed[r].size() != cols) throw DataError("contingency table rows have different lengths");
    for (std::size_t c = 0; c < cols; ++c) {
      double o = observed[r][c];
      if (o < 0 || !std::isfinite(o)) throw DataError("contingency table counts must be non-negative");
      row_sum[r] += o;
      col_sum[c] += o;
      n += o;
    }
  }
  for (std::size_t r = 0; r < rows; ++r)
    if (row_sum[r] == 0) throw DataError("degenerate contingency table: row " + std::to_string(r) + " sums to zero");
  for (std::size_t c = 0; c < cols; ++c)
    if (col_sum[c] == 0) throw DataError("degenerate contingency table: column " + std::to_string(c) + " sums to zero");

  ChiSquareResult out;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      // (O - E)^2 / E scaled by n^2: exact for integer counts, so an
      // independent table yields exactly zero.
      double rc = row_sum[r] * col_sum[c];
      double d = observed[r][c] * n - rc;
      out.statistic += d * d / (rc * n);
    }
  out.dof = static_cast<int>((rows - 1) * (cols - 1));
  out.p_value = chi_square_sf(out.statistic, out.dof);
  return out;
}

}  // namespace treelp::learn
