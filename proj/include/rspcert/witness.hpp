// Copyright 2026 The rspcert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rspcert/chsh.hpp"
#include "rspcert/events.hpp"

namespace rspcert {

/// Which party's measurement prepares the remote states.
/// alice_prepares yields the witness for Bob's side (W_B), bob_prepares the one for Alice (W_A).
enum class PreparingSide { alice_prepares, bob_prepares };

inline const char* to_string(PreparingSide side) {
  return side == PreparingSide::alice_prepares ? "alice_prepares" : "bob_prepares";
}

/// Conditional frequency of outcome 1 in one (prepared state, measurement) cell.
struct CellCount {
  std::uint64_t ones = 0;
  std::uint64_t trials = 0;
};

/// Table of p(1|x',y) for the four remotely prepared states x' = 2*setting + outcome
/// of the preparing party, measured with the other party's setting y.
struct RspTable {
  PreparingSide side = PreparingSide::alice_prepares;
  std::array<std::array<double, 2>, 4> p1{};
  /// p(outcome|setting) of the preparing party, pooled over the remote setting. [setting][outcome]
  std::array<std::array<double, 2>, 2> preparation_weights{};
  /// Present when built from counts; these are the conditioning sample sizes.
  std::optional<std::array<std::array<CellCount, 2>, 4>> cells;
  /// max |p(outcome|setting, remote=0) - p(outcome|setting, remote=1)| of the preparing party.
  double marginal_shift = 0.0;
  bool signaling_warning = false;
};

namespace detail {

// Joint probability with the preparing party's (setting, outcome) first.
inline double oriented(const JointProbabilities& p, PreparingSide side, int s, int o, int t,
                       int m) {
  return side == PreparingSide::alice_prepares ? p(o, m, s, t) : p(m, o, t, s);
}

inline std::uint64_t oriented(const CountsTable& c, PreparingSide side, int s, int o, int t,
                              int m) {
  return side == PreparingSide::alice_prepares ? c.n(o, m, s, t) : c.n(m, o, t, s);
}

inline constexpr double kExactSignalingTolerance = 1e-9;

}  // namespace detail

inline RspTable rsp_table(const JointProbabilities& p, PreparingSide side) {
  RspTable table;
  table.side = side;
  for (int s = 0; s < 2; ++s) {
    for (int o = 0; o < 2; ++o) {
      double pooled = 0.0;
      std::array<double, 2> marginal{};
      for (int t = 0; t < 2; ++t) {
        marginal[t] = detail::oriented(p, side, s, o, t, 0) + detail::oriented(p, side, s, o, t, 1);
        if (!(marginal[t] > 0.0))
          throw AnalysisError(std::string("prepared state x'=") + std::to_string(2 * s + o) +
                              " never occurs for remote setting " + std::to_string(t) +
                              "; witness undefined");
        table.p1[2 * s + o][t] = detail::oriented(p, side, s, o, t, 1) / marginal[t];
        pooled += marginal[t];
      }
      table.preparation_weights[s][o] = pooled / 2.0;
      table.marginal_shift = std::max(table.marginal_shift, std::abs(marginal[0] - marginal[1]));
    }
  }
  table.signaling_warning = table.marginal_shift > detail::kExactSignalingTolerance;
  return table;
}

/// Counts route. The signaling warning uses the two-proportion test of no_signaling_check.
inline RspTable rsp_table(const CountsTable& counts, PreparingSide side,
                          double significance = 0.01) {
  if (!counts.all_settings_populated())
    throw AnalysisError("witness needs events in all four setting pairs");
  RspTable table = rsp_table(JointProbabilities::from_counts(counts), side);
  std::array<std::array<CellCount, 2>, 4> cells{};
  for (int s = 0; s < 2; ++s)
    for (int o = 0; o < 2; ++o) {
      std::uint64_t prepared = 0;
      std::uint64_t total = 0;
      for (int t = 0; t < 2; ++t) {
        auto& cell = cells[2 * s + o][t];
        cell.ones = detail::oriented(counts, side, s, o, t, 1);
        cell.trials = cell.ones + detail::oriented(counts, side, s, o, t, 0);
        prepared += cell.trials;
        total += side == PreparingSide::alice_prepares ? counts.n_xy(s, t) : counts.n_xy(t, s);
      }
      table.preparation_weights[s][o] = double(prepared) / double(total);
    }
  table.cells = cells;
  const auto ns = no_signaling_check(counts, significance);
  table.signaling_warning = side == PreparingSide::alice_prepares
                                ? ns.alice_max_z > ns.critical_z
                                : ns.bob_max_z > ns.critical_z;
  return table;
}

/// Grouping of the four prepared states into the two contrasted pairs of the determinant.
struct Pairing {
  std::array<int, 2> first;
  std::array<int, 2> second;
};

inline constexpr Pairing kCertifiedPairing{{0, 1}, {2, 3}};
inline constexpr std::array<Pairing, 2> kAlternativePairings{Pairing{{0, 2}, {1, 3}},
                                                             Pairing{{0, 3}, {1, 2}}};

inline double witness_value(const std::array<std::array<double, 2>, 4>& p1,
                            const Pairing& pairing = kCertifiedPairing) {
  const auto diff = [&](const std::array<int, 2>& pair, int y) {
    return p1[pair[0]][y] - p1[pair[1]][y];
  };
  return std::abs(diff(pairing.first, 0) * diff(pairing.second, 1) -
                  diff(pairing.second, 0) * diff(pairing.first, 1));
}

/// |det| of the 2x2 matrix of contrasts p(1|2s,y) - p(1|2s+1,y).
inline double witness_value(const RspTable& table) { return witness_value(table.p1); }

struct WitnessResult {
  double w_a = 0.0;
  double w_b = 0.0;
  double w_rsp = 0.0;
  RspTable bob_side;    // alice_prepares, gives w_b
  RspTable alice_side;  // bob_prepares, gives w_a
  /// Raw witness above 1 is not quantum-consistent; flagged, and clamped only in the guessing-probability bound.
  bool above_one = false;
  /// Witness values for the two non-certified pairings, per side [b, a].
  std::array<std::array<double, 2>, 2> alternative_pairings{};
};

inline WitnessResult witness_from_tables(RspTable bob_side, RspTable alice_side) {
  WitnessResult result;
  result.w_b = witness_value(bob_side);
  result.w_a = witness_value(alice_side);
  result.w_rsp = std::min(result.w_a, result.w_b);
  result.above_one = result.w_a > 1.0 || result.w_b > 1.0;
  for (std::size_t i = 0; i < kAlternativePairings.size(); ++i) {
    result.alternative_pairings[0][i] = witness_value(bob_side.p1, kAlternativePairings[i]);
    result.alternative_pairings[1][i] = witness_value(alice_side.p1, kAlternativePairings[i]);
  }
  result.bob_side = std::move(bob_side);
  result.alice_side = std::move(alice_side);
  return result;
}

inline WitnessResult rsp_witness(const JointProbabilities& p) {
  return witness_from_tables(rsp_table(p, PreparingSide::alice_prepares),
                             rsp_table(p, PreparingSide::bob_prepares));
}

inline WitnessResult rsp_witness(const CountsTable& counts, double significance = 0.01) {
  return witness_from_tables(rsp_table(counts, PreparingSide::alice_prepares, significance),
                             rsp_table(counts, PreparingSide::bob_prepares, significance));
}

/// Upper bound on the probability of guessing the outcome pair (a,b) given the settings,
/// for witness value w:
///   ((1 + sqrt(1-w^2))/2) * (1/2) * (1 + sqrt((1 + sqrt(1-w^2))/2))
/// Witness values above 1 are clamped to 1.
inline double sdi_guessing_probability(double w, Warnings* warnings = nullptr) {
  if (w < 0.0 || std::isnan(w)) throw std::invalid_argument("witness value must be non-negative");
  if (w > 1.0) {
    if (warnings)
      warnings->push_back("witness value " + std::to_string(w) +
                          " exceeds 1; clamped for the guessing-probability bound");
    w = 1.0;
  }
  const double marginal = (1.0 + std::sqrt(1.0 - w * w)) / 2.0;
  return marginal * 0.5 * (1.0 + std::sqrt(marginal));
}

/// H_min(AB|XY) per event, -log2 p_guess.
inline double sdi_rate(double w, Warnings* warnings = nullptr) {
  return -std::log2(sdi_guessing_probability(w, warnings));
}

/// Witness recomputed on consecutive blocks of the log (memorylessness diagnostic).
struct StationarityReport {
  std::vector<std::optional<double>> block_w_rsp;
  double max_spread = 0.0;
};

inline StationarityReport stationarity_check(const std::vector<EventRecord>& events,
                                             std::size_t blocks = 2,
                                             std::optional<StateLabel> filter = std::nullopt) {
  if (blocks == 0) throw std::invalid_argument("need at least one block");
  std::vector<EventRecord> kept;
  for (const auto& ev : events)
    if (!filter || ev.state == *filter) kept.push_back(ev);
  StationarityReport report;
  double lo = INFINITY;
  double hi = -INFINITY;
  for (std::size_t k = 0; k < blocks; ++k) {
    const auto begin = kept.begin() + static_cast<std::ptrdiff_t>(k * kept.size() / blocks);
    const auto end = kept.begin() + static_cast<std::ptrdiff_t>((k + 1) * kept.size() / blocks);
    try {
      const double w = rsp_witness(JointProbabilities::from_counts(tally({begin, end}))).w_rsp;
      report.block_w_rsp.push_back(w);
      lo = std::min(lo, w);
      hi = std::max(hi, w);
    } catch (const AnalysisError&) {
      report.block_w_rsp.push_back(std::nullopt);
    }
  }
  report.max_spread = hi >= lo ? hi - lo : 0.0;
  return report;
}

}  // namespace rspcert
