// Copyright 2026 The rspcert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "rspcert/events.hpp"

namespace rspcert {

using Warnings = std::vector<std::string>;

inline constexpr double kTsirelson = 2.0 * std::numbers::sqrt2;

struct ChshStatistics {
  /// E[x][y] = p(a=b|xy) - p(a!=b|xy)
  std::array<std::array<double, 2>, 2> E{};
  /// E00 + E01 + E10 - E11, before the absolute value.
  double signed_sum = 0.0;
  double S = 0.0;
  /// max over the sign conventions with one negated correlator; diagnostic only.
  double max_convention_S = 0.0;
  std::array<std::array<std::uint64_t, 2>, 2> n_xy{};
};

/// (-1)^{xy}
constexpr int chsh_sign(int x, int y) { return (x & y) ? -1 : 1; }

inline ChshStatistics chsh_s(const JointProbabilities& p) {
  ChshStatistics out;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      out.E[x][y] = p(0, 0, x, y) + p(1, 1, x, y) - p(0, 1, x, y) - p(1, 0, x, y);
      out.signed_sum += chsh_sign(x, y) * out.E[x][y];
    }
  out.S = std::abs(out.signed_sum);
  const double total = out.E[0][0] + out.E[0][1] + out.E[1][0] + out.E[1][1];
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      out.max_convention_S = std::max(out.max_convention_S, std::abs(total - 2.0 * out.E[x][y]));
  return out;
}

inline ChshStatistics chsh_s(const CountsTable& counts) {
  if (!counts.all_settings_populated())
    throw AnalysisError("CHSH statistic needs events in all four setting pairs");
  auto out = chsh_s(JointProbabilities::from_counts(counts));
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) out.n_xy[x][y] = counts.n_xy(x, y);
  return out;
}

/// Device-independent min-entropy per event as a function of the CHSH value:
/// f(S) = 1 - log2(1 + sqrt(2 - S^2/4)) above the classical bound, zero at or below it.
/// Values above 2*sqrt(2) are clamped (and reported through `warnings` when given).
inline double di_rate(double s, Warnings* warnings = nullptr) {
  if (s < 0.0 || std::isnan(s)) throw std::invalid_argument("CHSH value must be non-negative");
  if (s <= 2.0) return 0.0;
  if (s >= kTsirelson) {
    if (s > kTsirelson && warnings)
      warnings->push_back("CHSH value " + std::to_string(s) +
                          " exceeds 2*sqrt(2); clamped for the rate evaluation");
    return 1.0;
  }
  return 1.0 - std::log2(1.0 + std::sqrt(2.0 - s * s / 4.0));
}

}  // namespace rspcert
