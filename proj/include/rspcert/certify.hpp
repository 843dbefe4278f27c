// Copyright 2026 The rspcert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "rspcert/chsh.hpp"
#include "rspcert/finite_stats.hpp"
#include "rspcert/witness.hpp"

namespace rspcert {

/// Device-independent min-entropy of a dataset.
struct DiBudget {
  double s_estimate = 0.0;
  double s_lower_bound = 0.0;
  double rate_per_event = 0.0;  // evaluated at s_lower_bound
  std::uint64_t n_total = 0;
  std::uint64_t total_bits = 0;  // floor(n_total * rate_per_event)
  ConfidenceSpec confidence;
  Warnings warnings;
};

/// Semi-device-independent min-entropy of a dataset from the RSP witness.
struct SdiBudget {
  double w_estimate = 0.0;
  double w_lower_bound = 0.0;
  double p_guess = 1.0;
  double rate_per_event = 0.0;
  std::uint64_t n_total = 0;
  double total_min_entropy_bits = 0.0;  // n_total * rate_per_event
  ConfidenceSpec confidence;
  Warnings warnings;
};

namespace detail {

inline DiBudget finish_di(double s_hat, double s_lb, std::uint64_t n, const ConfidenceSpec& spec) {
  DiBudget budget;
  budget.s_estimate = s_hat;
  budget.s_lower_bound = s_lb;
  budget.rate_per_event = di_rate(s_lb, &budget.warnings);
  budget.n_total = n;
  budget.total_bits = static_cast<std::uint64_t>(
      std::max(0.0, std::floor(double(n) * budget.rate_per_event)));
  budget.confidence = spec;
  return budget;
}

inline SdiBudget finish_sdi(double w_hat, double w_lb, std::uint64_t n, const ConfidenceSpec& spec) {
  SdiBudget budget;
  budget.w_estimate = w_hat;
  budget.w_lower_bound = w_lb;
  budget.p_guess = sdi_guessing_probability(w_lb, &budget.warnings);
  budget.rate_per_event = -std::log2(budget.p_guess);
  budget.n_total = n;
  budget.total_min_entropy_bits = double(n) * budget.rate_per_event;
  budget.confidence = spec;
  return budget;
}

}  // namespace detail

inline DiBudget di_total(const CountsTable& counts, const ConfidenceSpec& spec) {
  const auto stats = chsh_s(counts);
  return detail::finish_di(stats.S, s_lower_bound(counts, spec), counts.n_total(), spec);
}

inline SdiBudget sdi_total(const CountsTable& counts, const ConfidenceSpec& spec) {
  const auto witness = rsp_witness(counts);
  auto budget = detail::finish_sdi(witness.w_rsp, w_lower_bound(counts, spec), counts.n_total(), spec);
  if (witness.above_one)
    budget.warnings.push_back("raw witness above 1; data is not quantum-consistent");
  return budget;
}

/// Budgets on exact (noise-free) tables, as if n_total events had exactly these frequencies.
inline DiBudget di_total(const JointProbabilities& p, std::uint64_t n_total) {
  const double s = chsh_s(p).S;
  return detail::finish_di(s, s, n_total, {0.99, ConfidenceMethod::asymptotic});
}

inline SdiBudget sdi_total(const JointProbabilities& p, std::uint64_t n_total) {
  const double w = rsp_witness(p).w_rsp;
  return detail::finish_sdi(w, w, n_total, {0.99, ConfidenceMethod::asymptotic});
}

enum class Pipeline { di, sdi };

inline std::string_view to_string(Pipeline p) { return p == Pipeline::di ? "di" : "sdi"; }

/// Certified min-entropy handed to the extractor.
struct EntropyBudget {
  Pipeline pipeline = Pipeline::sdi;
  double h_total = 0.0;
  std::uint64_t n_events = 0;

  static EntropyBudget from(const DiBudget& b) {
    return {Pipeline::di, double(b.total_bits), b.n_total};
  }
  static EntropyBudget from(const SdiBudget& b) {
    return {Pipeline::sdi, b.total_min_entropy_bits, b.n_total};
  }
};

}  // namespace rspcert
