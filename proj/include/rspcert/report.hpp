// Copyright 2026 The rspcert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rspcert/certify.hpp"
#include "rspcert/chsh.hpp"
#include "rspcert/events.hpp"
#include "rspcert/extractor.hpp"
#include "rspcert/finite_stats.hpp"
#include "rspcert/witness.hpp"

namespace rspcert {

inline constexpr const char* kReportSchemaVersion = "1.0";

struct AnalysisConfig {
  ConfidenceSpec confidence{};
  double eps_hash = 0.001;
  std::optional<StateLabel> state_filter;
  double signaling_significance = 0.01;
  double balance_tolerance = 0.02;
  std::size_t stationarity_blocks = 2;
};

struct AnalysisReport {
  AnalysisConfig config;
  CountsTable counts;
  ChshStatistics chsh;
  WitnessResult witness;
  double w_lower_bound = 0.0;
  DiBudget di;
  SdiBudget sdi;
  NoSignalingReport no_signaling;
  BalanceReport balance;
  StationarityReport stationarity;
};

/// The single analysis path behind both `analyze` and `extract`.
inline AnalysisReport analyze(const std::vector<EventRecord>& events, const AnalysisConfig& config) {
  config.confidence.validate();
  AnalysisReport report;
  report.config = config;
  report.counts = tally(events, config.state_filter);
  if (report.counts.n_total() == 0) throw AnalysisError("no events to analyze");
  report.chsh = chsh_s(report.counts);
  report.witness = rsp_witness(report.counts, config.signaling_significance);
  report.di = di_total(report.counts, config.confidence);
  report.sdi = sdi_total(report.counts, config.confidence);
  report.w_lower_bound = report.sdi.w_lower_bound;
  report.no_signaling = no_signaling_check(report.counts, config.signaling_significance);
  report.balance = setting_balance_check(report.counts, config.balance_tolerance);
  report.stationarity = stationarity_check(events, config.stationarity_blocks, config.state_filter);
  return report;
}

/// The filtered event list the report's counts were built from.
inline std::vector<EventRecord> select_events(const std::vector<EventRecord>& events,
                                              std::optional<StateLabel> filter) {
  if (!filter) return events;
  std::vector<EventRecord> kept;
  for (const auto& ev : events)
    if (ev.state == *filter) kept.push_back(ev);
  return kept;
}

inline nlohmann::json to_json(const RspTable& table) {
  nlohmann::json p1 = nlohmann::json::array();
  for (const auto& row : table.p1) p1.push_back({row[0], row[1]});
  return {{"side", to_string(table.side)},
          {"p1", p1},
          {"preparation_weights", table.preparation_weights},
          {"marginal_shift", table.marginal_shift},
          {"signaling_warning", table.signaling_warning}};
}

inline nlohmann::json to_json(const ConfidenceSpec& spec) {
  return {{"level", spec.level}, {"method", to_string(spec.method)}};
}

inline nlohmann::json to_json(const AnalysisReport& r) {
  using nlohmann::json;
  json n_xy = json::array();
  for (int x = 0; x < 2; ++x) n_xy.push_back({r.counts.n_xy(x, 0), r.counts.n_xy(x, 1)});
  json cells = json::array();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
          cells.push_back({{"a", a}, {"b", b}, {"x", x}, {"y", y}, {"n", r.counts.n(a, b, x, y)}});

  json blocks = json::array();
  for (const auto& w : r.stationarity.block_w_rsp) blocks.push_back(w ? json(*w) : json(nullptr));

  return {
      {"schema_version", kReportSchemaVersion},
      {"kind", "analysis"},
      {"dataset",
       {{"n_total", r.counts.n_total()},
        {"n_xy", n_xy},
        {"counts", cells},
        {"state_filter", r.config.state_filter ? json(to_string(*r.config.state_filter)) : json(nullptr)}}},
      {"chsh",
       {{"E", r.chsh.E},
        {"S", r.chsh.S},
        {"S_lower_bound", r.di.s_lower_bound},
        {"max_convention_S", r.chsh.max_convention_S}}},
      {"witness",
       {{"W_A", r.witness.w_a},
        {"W_B", r.witness.w_b},
        {"W_rsp", r.witness.w_rsp},
        {"W_lower_bound", r.w_lower_bound},
        {"above_one", r.witness.above_one},
        {"alternative_pairings", {{"W_B", r.witness.alternative_pairings[0]},
                                  {"W_A", r.witness.alternative_pairings[1]}}},
        {"tables", {to_json(r.witness.bob_side), to_json(r.witness.alice_side)}}}},
      {"di_budget",
       {{"S_estimate", r.di.s_estimate},
        {"S_lower_bound", r.di.s_lower_bound},
        {"rate_per_event", r.di.rate_per_event},
        {"total_bits", r.di.total_bits},
        {"confidence", to_json(r.di.confidence)},
        {"warnings", r.di.warnings}}},
      {"sdi_budget",
       {{"W_estimate", r.sdi.w_estimate},
        {"W_lower_bound", r.sdi.w_lower_bound},
        {"p_guess", r.sdi.p_guess},
        {"rate_per_event", r.sdi.rate_per_event},
        {"total_min_entropy_bits", r.sdi.total_min_entropy_bits},
        {"extractable_bits", output_length(r.sdi.total_min_entropy_bits, r.config.eps_hash)},
        {"confidence", to_json(r.sdi.confidence)},
        {"warnings", r.sdi.warnings}}},
      {"checks",
       {{"no_signaling",
         {{"alice_max_deviation", r.no_signaling.alice_max_deviation},
          {"bob_max_deviation", r.no_signaling.bob_max_deviation},
          {"alice_max_z", r.no_signaling.alice_max_z},
          {"bob_max_z", r.no_signaling.bob_max_z},
          {"critical_z", r.no_signaling.critical_z},
          {"significance", r.no_signaling.significance},
          {"pass", r.no_signaling.pass}}},
        {"balance",
         {{"max_deviation", r.balance.max_deviation},
          {"tolerance", r.balance.tolerance},
          {"pass", r.balance.pass}}},
        {"stationarity", {{"block_W_rsp", blocks}, {"max_spread", r.stationarity.max_spread}}}}},
      {"config", {{"confidence", to_json(r.config.confidence)}, {"eps_hash", r.config.eps_hash}}},
  };
}

inline nlohmann::json to_json(const ExtractionReport& r) {
  return {{"schema_version", kReportSchemaVersion},
          {"kind", "extraction"},
          {"pipeline", to_string(r.pipeline)},
          {"n_in", r.n_in},
          {"h_total", r.h_total},
          {"eps_hash", r.eps_hash},
          {"m_out", r.m_out},
          {"seed_bits", r.seed_bits},
          {"seed_sha256", r.seed_sha256},
          {"output_sha256", r.output_sha256},
          {"note", r.note}};
}

}  // namespace rspcert
