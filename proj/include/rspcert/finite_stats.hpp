// Copyright 2026 The rspcert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string_view>
#include <optional>

#include <boost/math/distributions/beta.hpp>

#include "rspcert/chsh.hpp"
#include "rspcert/events.hpp"
#include "rspcert/witness.hpp"

namespace rspcert {

enum class ConfidenceMethod {
  hoeffding_union,
  clopper_pearson_union,
  /// Bounded-difference martingale bound on the CHSH estimator. Applies to S only;
  /// witness bounds fall back to hoeffding_union.
  azuma_martingale,
  /// No finite-size correction: the lower bounds equal the point estimates.
  asymptotic,
};

inline std::string_view to_string(ConfidenceMethod m) {
  switch (m) {
    case ConfidenceMethod::hoeffding_union: return "hoeffding_union";
    case ConfidenceMethod::clopper_pearson_union: return "clopper_pearson_union";
    case ConfidenceMethod::azuma_martingale: return "azuma_martingale";
    case ConfidenceMethod::asymptotic: return "asymptotic";
  }
  return "";
}

inline std::optional<ConfidenceMethod> parse_confidence_method(std::string_view text) {
  for (auto m : {ConfidenceMethod::hoeffding_union, ConfidenceMethod::clopper_pearson_union,
                 ConfidenceMethod::azuma_martingale, ConfidenceMethod::asymptotic})
    if (text == to_string(m)) return m;
  return std::nullopt;
}

struct ConfidenceSpec {
  double level = 0.99;
  ConfidenceMethod method = ConfidenceMethod::hoeffding_union;

  double failure_probability() const { return 1.0 - level; }

  void validate() const {
    if (!(level > 0.0 && level < 1.0))
      throw std::invalid_argument("confidence level must lie in (0,1)");
  }
};

/// Two-sided Hoeffding half-width sqrt(ln(2/delta)/(2n)) for a mean of [0,1] variables,
/// capped at 1 (an interval on a probability never needs to be wider).
inline double hoeffding_halfwidth(std::uint64_t n, double delta) {
  if (n == 0) throw std::invalid_argument("Hoeffding half-width needs n >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
  return std::min(1.0, std::sqrt(std::log(2.0 / delta) / (2.0 * double(n))));
}

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Exact binomial interval for k successes in n trials, two-sided failure probability delta.
inline Interval clopper_pearson(std::uint64_t k, std::uint64_t n, double delta) {
  if (n == 0) throw std::invalid_argument("Clopper-Pearson interval needs n >= 1");
  Interval out;
  if (k > 0)
    out.lo = boost::math::quantile(boost::math::beta_distribution<>(double(k), double(n - k + 1)),
                                   delta / 2.0);
  if (k < n)
    out.hi = boost::math::quantile(
        boost::math::complement(boost::math::beta_distribution<>(double(k + 1), double(n - k)),
                                delta / 2.0));
  return out;
}

/// Confidence interval on a probability estimated as k/n, clipped to [0,1].
inline Interval proportion_interval(std::uint64_t k, std::uint64_t n, double delta,
                                    ConfidenceMethod method) {
  const double p = double(k) / double(n);
  switch (method) {
    case ConfidenceMethod::asymptotic: return {p, p};
    case ConfidenceMethod::clopper_pearson_union: return clopper_pearson(k, n, delta);
    case ConfidenceMethod::hoeffding_union:
    case ConfidenceMethod::azuma_martingale: break;
  }
  const double h = hoeffding_halfwidth(n, delta);
  return {std::max(0.0, p - h), std::min(1.0, p + h)};
}

/// Lower confidence bound on S. Hoeffding: S - sum_xy 2*halfwidth(n_xy, (1-level)/4).
inline double s_lower_bound(const CountsTable& counts, const ConfidenceSpec& spec) {
  spec.validate();
  const auto stats = chsh_s(counts);
  const double delta = spec.failure_probability();
  double bound = stats.S;
  switch (spec.method) {
    case ConfidenceMethod::asymptotic: break;
    case ConfidenceMethod::hoeffding_union:
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) bound -= 2.0 * hoeffding_halfwidth(counts.n_xy(x, y), delta / 4.0);
      break;
    case ConfidenceMethod::clopper_pearson_union: {
      // Worst case of the signed combination over the per-setting intervals on p(a=b|xy).
      const double orientation = stats.signed_sum >= 0.0 ? 1.0 : -1.0;
      bound = 0.0;
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
          const auto equal = counts.n(0, 0, x, y) + counts.n(1, 1, x, y);
          const auto ci = clopper_pearson(equal, counts.n_xy(x, y), delta / 4.0);
          const double weight = orientation * chsh_sign(x, y);
          bound += weight > 0 ? 2.0 * ci.lo - 1.0 : -(2.0 * ci.hi - 1.0);
        }
      break;
    }
    case ConfidenceMethod::azuma_martingale: {
      const double n = double(counts.n_total());
      double q_min = 1.0;
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) q_min = std::min(q_min, double(counts.n_xy(x, y)) / n);
      bound -= (1.0 / q_min + kTsirelson) * std::sqrt(2.0 * std::log(1.0 / delta) / n);
      break;
    }
  }
  return std::max(0.0, bound);
}

using CellBox = std::array<std::array<Interval, 2>, 4>;

/// Exact minimum of |det| over a box of p1 tables. The determinant is multilinear in the
/// eight cells, so its range over the box is spanned by the 256 vertices; |det| reaches 0
/// inside the box whenever the vertex values change sign.
inline double min_abs_determinant(const CellBox& box) {
  double lo = INFINITY;
  double hi = -INFINITY;
  std::array<std::array<double, 2>, 4> vertex{};
  for (unsigned mask = 0; mask < 256; ++mask) {
    for (int cell = 0; cell < 8; ++cell) {
      const auto& iv = box[cell / 2][cell % 2];
      vertex[cell / 2][cell % 2] = (mask >> cell) & 1 ? iv.hi : iv.lo;
    }
    const double det = (vertex[0][0] - vertex[1][0]) * (vertex[2][1] - vertex[3][1]) -
                       (vertex[2][0] - vertex[3][0]) * (vertex[0][1] - vertex[1][1]);
    lo = std::min(lo, det);
    hi = std::max(hi, det);
  }
  if (lo <= 0.0 && hi >= 0.0) return 0.0;
  return std::min(std::abs(lo), std::abs(hi));
}

/// Box of per-cell intervals, each at failure probability delta_cell.
inline CellBox witness_cell_box(const RspTable& table, double delta_cell, ConfidenceMethod method) {
  if (!table.cells) throw AnalysisError("witness bound needs a table built from counts");
  CellBox box{};
  for (int xp = 0; xp < 4; ++xp)
    for (int y = 0; y < 2; ++y) {
      const auto& c = (*table.cells)[xp][y];
      box[xp][y] = proportion_interval(c.ones, c.trials, delta_cell, method);
    }
  return box;
}

/// Lower confidence bound on W_rsp: per-cell intervals at (1-level)/16 (8 cells x 2 sides),
/// minimum |det| over each side's box, then the minimum over the two sides.
inline double w_lower_bound(const CountsTable& counts, const ConfidenceSpec& spec) {
  spec.validate();
  const double delta_cell = spec.failure_probability() / 16.0;
  double bound = INFINITY;
  for (auto side : {PreparingSide::alice_prepares, PreparingSide::bob_prepares}) {
    const auto table = rsp_table(counts, side);
    bound = std::min(bound, min_abs_determinant(witness_cell_box(table, delta_cell, spec.method)));
  }
  return std::max(0.0, bound);
}

}  // namespace rspcert
