// Copyright 2026 The rspcert Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rspcert/rspcert.hpp"

using namespace rspcert;

namespace {

CountsTable counts_for(double z, std::uint64_t per_setting) {
  return expected_counts(exact_distribution(chsh_optimal(werner_state(z))), per_setting);
}

}  // namespace

TEST(Hoeffding, HalfWidthValues) {
  EXPECT_NEAR(hoeffding_halfwidth(10000, 0.01), 0.0162762363071873, 1e-13);
  EXPECT_NEAR(hoeffding_halfwidth(1000000, 0.0025), 0.0018281974356819, 1e-13);
  EXPECT_DOUBLE_EQ(hoeffding_halfwidth(1, 0.01), 1.0);
  EXPECT_THROW(hoeffding_halfwidth(0, 0.01), std::invalid_argument);
  EXPECT_THROW(hoeffding_halfwidth(10, 0.0), std::invalid_argument);
}

TEST(SLowerBound, MillionPerSettingExample) {
  // E = 0.675 on every setting (sign on 11), S = 2.7
  const auto p = oracle::correlator_distribution({{{0.675, 0.675}, {0.675, -0.675}}});
  CountsTable c;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
          c.n(a, b, x, y) = std::uint64_t(std::llround(p(a, b, x, y) * 1e6));
  EXPECT_NEAR(chsh_s(c).S, 2.7, 1e-12);
  EXPECT_NEAR(s_lower_bound(c, {}), 2.68537442051454, 1e-10);
}

TEST(SLowerBound, FlooredAtZeroAndBelowEstimate) {
  auto c = oracle::fill_counts([] { return std::uint64_t{3}; });
  EXPECT_DOUBLE_EQ(s_lower_bound(c, {}), 0.0);
  for (auto method : {ConfidenceMethod::hoeffding_union, ConfidenceMethod::clopper_pearson_union,
                      ConfidenceMethod::azuma_martingale}) {
    const auto counts = counts_for(0.95, 20000);
    const double lb = s_lower_bound(counts, {0.99, method});
    EXPECT_LT(lb, chsh_s(counts).S) << to_string(method);
    EXPECT_GT(lb, 2.0) << to_string(method);
  }
}

TEST(SLowerBound, AsymptoticEqualsPointEstimate) {
  const auto counts = counts_for(0.9, 1000);
  EXPECT_DOUBLE_EQ(s_lower_bound(counts, {0.99, ConfidenceMethod::asymptotic}), chsh_s(counts).S);
  EXPECT_DOUBLE_EQ(w_lower_bound(counts, {0.99, ConfidenceMethod::asymptotic}),
                   rsp_witness(counts).w_rsp);
}

TEST(SLowerBound, MonotoneInSampleSizeAndLevel) {
  double previous = 0.0;
  for (std::uint64_t n : {1000u, 10000u, 100000u, 1000000u}) {
    const double lb = s_lower_bound(counts_for(1.0, n), {});
    EXPECT_GE(lb, previous);
    previous = lb;
  }
  const auto counts = counts_for(1.0, 100000);
  EXPECT_GT(s_lower_bound(counts, {0.9, ConfidenceMethod::hoeffding_union}),
            s_lower_bound(counts, {0.9999, ConfidenceMethod::hoeffding_union}));
}

TEST(SLowerBound, ClopperPearsonTighterThanHoeffding) {
  const auto counts = counts_for(0.95, 50000);
  EXPECT_GT(s_lower_bound(counts, {0.99, ConfidenceMethod::clopper_pearson_union}),
            s_lower_bound(counts, {0.99, ConfidenceMethod::hoeffding_union}));
}

TEST(SLowerBound, AzumaClosedForm) {
  const auto counts = counts_for(1.0, 25000);
  const double n = 100000.0;
  const double expected =
      chsh_s(counts).S - (4.0 + kTsirelson) * std::sqrt(2.0 * std::log(1.0 / 0.01) / n);
  EXPECT_NEAR(s_lower_bound(counts, {0.99, ConfidenceMethod::azuma_martingale}), expected, 1e-12);
}

TEST(ConfidenceSpec, Validation) {
  EXPECT_THROW(s_lower_bound(counts_for(1.0, 10), {1.0, ConfidenceMethod::hoeffding_union}),
               std::invalid_argument);
  EXPECT_THROW(s_lower_bound(counts_for(1.0, 10), {0.0, ConfidenceMethod::hoeffding_union}),
               std::invalid_argument);
  EXPECT_EQ(parse_confidence_method("clopper_pearson_union"), ConfidenceMethod::clopper_pearson_union);
  EXPECT_FALSE(parse_confidence_method("bootstrap"));
}

TEST(ClopperPearson, KnownIntervals) {
  // k = 0: upper end 1 - (delta/2)^(1/n)
  auto ci = clopper_pearson(0, 20, 0.05);
  EXPECT_DOUBLE_EQ(ci.lo, 0.0);
  EXPECT_NEAR(ci.hi, 1.0 - std::pow(0.025, 1.0 / 20.0), 1e-12);
  ci = clopper_pearson(20, 20, 0.05);
  EXPECT_NEAR(ci.lo, std::pow(0.025, 1.0 / 20.0), 1e-12);
  EXPECT_DOUBLE_EQ(ci.hi, 1.0);
  ci = clopper_pearson(50, 100, 0.05);
  EXPECT_LT(ci.lo, 0.5);
  EXPECT_GT(ci.hi, 0.5);
  EXPECT_NEAR(ci.lo + ci.hi, 1.0, 1e-12);
}

TEST(MinAbsDeterminant, AgreesWithGridSearch) {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> width(0.0, 0.15);
  for (int trial = 0; trial < 100; ++trial) {
    CellBox box;
    for (auto& row : box)
      for (auto& iv : row) {
        const double c = u(rng);
        const double h = width(rng);
        iv = {std::max(0.0, c - h), std::min(1.0, c + h)};
      }
    const double exact = min_abs_determinant(box);
    const double grid = oracle::grid_min_abs_det(box, 3);
    // the exact minimum never exceeds any sampled point of the box
    EXPECT_LE(exact, grid + 1e-9);
    if (exact > 0.0) {
      // when positive it is attained at a vertex, which the 3-point grid visits
      EXPECT_NEAR(exact, grid, 1e-12);
    }
  }
}

TEST(MinAbsDeterminant, DegenerateBoxes) {
  CellBox half;
  for (auto& row : half)
    for (auto& iv : row) iv = {0.5, 0.5};
  EXPECT_DOUBLE_EQ(min_abs_determinant(half), 0.0);
  CellBox point;
  const std::array<std::array<double, 2>, 4> p1{{{1, 0.5}, {0, 0.5}, {0.5, 1}, {0.5, 0}}};
  for (int xp = 0; xp < 4; ++xp)
    for (int y = 0; y < 2; ++y) point[xp][y] = {p1[xp][y], p1[xp][y]};
  EXPECT_DOUBLE_EQ(min_abs_determinant(point), 1.0);
}

TEST(WLowerBound, BelowEstimateAndTightening) {
  double previous = 0.0;
  for (std::uint64_t n : {10000u, 100000u, 1000000u}) {
    const auto counts = counts_for(0.95, n);
    const double lb = w_lower_bound(counts, {});
    EXPECT_LE(lb, rsp_witness(counts).w_rsp);
    EXPECT_GE(lb, previous);
    previous = lb;
  }
  EXPECT_GT(previous, 0.85);
}

TEST(WLowerBound, UninformativeDataGivesZero) {
  auto c = oracle::fill_counts([] { return std::uint64_t{100}; });
  EXPECT_DOUBLE_EQ(w_lower_bound(c, {}), 0.0);
  EXPECT_DOUBLE_EQ(w_lower_bound(counts_for(0.95, 50), {}), 0.0);
}

TEST(WLowerBound, ClopperPearsonPathWorks) {
  const auto counts = counts_for(0.95, 100000);
  const double cp = w_lower_bound(counts, {0.99, ConfidenceMethod::clopper_pearson_union});
  EXPECT_GT(cp, w_lower_bound(counts, {}));
  EXPECT_LT(cp, rsp_witness(counts).w_rsp);
}

TEST(WLowerBound, AzumaFallsBackToHoeffding) {
  const auto counts = counts_for(0.9, 40000);
  EXPECT_DOUBLE_EQ(w_lower_bound(counts, {0.99, ConfidenceMethod::azuma_martingale}),
                   w_lower_bound(counts, {0.99, ConfidenceMethod::hoeffding_union}));
}

TEST(Budgets, PsiPlusSmallSampleHasNoDiEntropy) {
  const auto counts = oracle::summary_equivalent_counts(2.085, 0.542, 27885);
  EXPECT_NEAR(chsh_s(counts).S, 2.085, 2e-3);
  EXPECT_NEAR(rsp_witness(counts).w_rsp, 0.542, 2e-3);
  EXPECT_LT(s_lower_bound(counts, {}), 2.0);
  EXPECT_EQ(di_total(counts, {}).total_bits, 0u);
  EXPECT_GT(sdi_total(counts, {}).total_min_entropy_bits, 0.0);
}
