#include <random>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "treelp/learn/chi_square.hpp"
#include "treelp/learn/impurity.hpp"
#include "treelp/learn/metrics.hpp"

using namespace treelp;
using namespace treelp::learn;
using treelp::testing::chi_square_sf_closed;

TEST(Impurity, KnownValues) {
  std::vector<std::size_t> even{5, 5}, pure{4, 0}, skew{3, 1};
  EXPECT_DOUBLE_EQ(entropy(even), 1.0);
  EXPECT_DOUBLE_EQ(entropy(pure), 0.0);
  EXPECT_DOUBLE_EQ(gini(even), 0.5);
  EXPECT_DOUBLE_EQ(gini(pure), 0.0);
  EXPECT_NEAR(entropy(skew), 0.8112781244591328, 1e-15);
  EXPECT_DOUBLE_EQ(gini(skew), 0.375);
  std::vector<std::size_t> empty{0, 0};
  EXPECT_THROW(entropy(empty), DataError);
}

TEST(Impurity, MatchesDirectFormulas) {
  std::mt19937_64 g(3);
  for (int i = 0; i < 500; ++i) {
    std::size_t k = 2 + g() % 5;
    std::vector<std::size_t> c(k);
    std::vector<double> d(k);
    for (std::size_t j = 0; j < k; ++j) d[j] = static_cast<double>(c[j] = g() % 50);
    if (std::all_of(c.begin(), c.end(), [](auto x) { return x == 0; })) c[0] = 1, d[0] = 1;
    EXPECT_NEAR(entropy(c), treelp::testing::entropy_oracle(d), 1e-12);
    EXPECT_NEAR(gini(c), treelp::testing::gini_oracle(d), 1e-12);
  }
}

TEST(GammaQ, ClosedForms) {
  for (double x : {0.01, 0.5, 1.0, 3.84, 10.0, 40.0}) {
    EXPECT_NEAR(chi_square_sf(x, 1), chi_square_sf_closed(x, 1), 1e-12);
    EXPECT_NEAR(chi_square_sf(x, 2), chi_square_sf_closed(x, 2), 1e-12);
    EXPECT_NEAR(chi_square_sf(x, 3), chi_square_sf_closed(x, 3), 1e-12);
    EXPECT_NEAR(chi_square_sf(x, 4), chi_square_sf_closed(x, 4), 1e-12);
  }
  EXPECT_DOUBLE_EQ(chi_square_sf(0, 3), 1.0);
  EXPECT_NEAR(chi_square_sf(3.841458820694124, 1), 0.05, 1e-12);
}

TEST(ChiSquare, KnownTable) {
  // 2x2 with expected counts 15/15/15/15.
  auto r = chi_square_test({{20, 10}, {10, 20}});
  EXPECT_NEAR(r.statistic, 20.0 / 3.0, 1e-12);
  EXPECT_EQ(r.dof, 1);
  EXPECT_NEAR(r.p_value, std::erfc(std::sqrt(10.0 / 3.0)), 1e-12);
}

TEST(ChiSquare, IndependentTablesGiveZeroAndOne) {
  for (const auto& t : std::vector<Table>{{{2, 4}, {3, 6}}, {{1, 2, 3}, {2, 4, 6}}, {{7, 7}, {7, 7}}, {{10, 30, 20}, {1, 3, 2}}}) {
    auto r = chi_square_test(t);
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_EQ(r.p_value, 1.0);
  }
}

TEST(ChiSquare, MatchesOracleOnRandomTables) {
  std::mt19937_64 g(5);
  for (int i = 0; i < 300; ++i) {
    std::size_t cols = 2 + g() % 3;
    Table t(2, std::vector<double>(cols));
    for (auto& row : t)
      for (auto& c : row) c = static_cast<double>(1 + g() % 40);
    auto r = chi_square_test(t);
    double x = treelp::testing::pearson_statistic(t);
    EXPECT_NEAR(r.statistic, x, 1e-9 * std::max(1.0, x));
    EXPECT_EQ(r.dof, static_cast<int>(cols - 1));
    EXPECT_NEAR(r.p_value, chi_square_sf_closed(x, r.dof), 1e-8);
  }
}

TEST(ChiSquare, DegenerateTables) {
  EXPECT_THROW(chi_square_test({{1, 2}}), DataError);
  EXPECT_THROW(chi_square_test({{0, 0}, {0, 0}}), DataError);
  EXPECT_THROW(chi_square_test({{1, 2}, {3}}), DataError);
  EXPECT_THROW(chi_square_test({{1, -2}, {3, 4}}), DataError);
}

TEST(Metrics, Accuracy) {
  std::vector<std::string> a{"0", "1", "1", "0"}, b{"0", "1", "0", "0"};
  EXPECT_DOUBLE_EQ(accuracy(a, b), 0.75);
  EXPECT_DOUBLE_EQ(accuracy(a, b), treelp::testing::accuracy_oracle(a, b));
  EXPECT_THROW(accuracy({"0"}, {"0", "1"}), DataError);
  EXPECT_THROW(accuracy({}, {}), DataError);
}

TEST(Metrics, Kappa) {
  std::vector<std::string> y{"0", "1", "0", "1", "1", "0"};
  EXPECT_DOUBLE_EQ(*cohen_kappa(y, y), 1.0);
  // Half agreement with balanced marginals: po = pe = 0.5.
  EXPECT_DOUBLE_EQ(*cohen_kappa({"0", "0", "1", "1"}, {"0", "1", "0", "1"}), 0.0);
  // Single class everywhere leaves kappa undefined.
  EXPECT_FALSE(cohen_kappa({"1", "1"}, {"1", "1"}).has_value());
  // po = 0.7, pe = 0.5*0.6 + 0.5*0.4 = 0.5.
  EXPECT_NEAR(*cohen_kappa({"1", "1", "1", "1", "1", "0", "0", "0", "0", "0"}, {"1", "1", "1", "1", "0", "0", "0", "0", "1", "1"}),
              0.4, 1e-12);
}
