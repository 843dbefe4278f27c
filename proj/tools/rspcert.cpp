// Copyright 2026 The rspcert Authors
// SPDX-License-Identifier: Apache-2.0

// rspcert: simulate Bell-test logs, certify their randomness (DI and SDI), extract output bits.
//
// Exit codes: 0 success (including zero-bit extraction), 2 input error, 3 environment error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rspcert/rspcert.hpp"

namespace {

using namespace rspcert;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kEnvironmentError = 3;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EnvironmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string config_path;
  double confidence = 0.99;
  std::string method = "hoeffding_union";
  double eps_hash = 0.001;
  std::string state;
  std::string format = "auto";
  std::string report_path;
  CLI::Option* confidence_opt = nullptr;
  CLI::Option* method_opt = nullptr;
  CLI::Option* eps_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON config file (confidence, method, eps_hash)");
  o.confidence_opt = cmd->add_option("--confidence", o.confidence, "confidence level")
                         ->check(CLI::Range(0.0, 1.0));
  o.method_opt = cmd->add_option("--method", o.method, "finite-size method")
                     ->check(CLI::IsMember({"hoeffding_union", "clopper_pearson_union",
                                            "azuma_martingale", "asymptotic"}));
  o.eps_opt = cmd->add_option("--eps-hash", o.eps_hash, "hashing error")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--state", o.state, "only analyze events with this label")
      ->check(CLI::IsMember({"psi_plus", "psi_minus"}));
  cmd->add_option("--format", o.format, "log format")->check(CLI::IsMember({"auto", "csv", "bin"}));
  cmd->add_option("--report", o.report_path, "write the JSON report here instead of stdout");
}

/// flags > config file > defaults
AnalysisConfig resolve_config(const CommonOptions& o) {
  AnalysisConfig config;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw InputError("cannot read config file " + o.config_path);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw InputError("config file: " + std::string(e.what()));
    }
    config.confidence.level = doc.value("confidence", config.confidence.level);
    config.eps_hash = doc.value("eps_hash", config.eps_hash);
    if (doc.contains("method")) {
      const auto m = parse_confidence_method(doc.at("method").get<std::string>());
      if (!m) throw InputError("config file: unknown method");
      config.confidence.method = *m;
    }
  }
  if (o.confidence_opt->count()) config.confidence.level = o.confidence;
  if (o.method_opt->count()) config.confidence.method = *parse_confidence_method(o.method);
  if (o.eps_opt->count()) config.eps_hash = o.eps_hash;
  if (!o.state.empty()) config.state_filter = parse_state_label(o.state);
  if (!(config.confidence.level > 0.0 && config.confidence.level < 1.0))
    throw InputError("confidence level must lie in (0,1)");
  if (!(config.eps_hash > 0.0 && config.eps_hash < 1.0))
    throw InputError("eps_hash must lie in (0,1)");
  return config;
}

std::vector<EventRecord> read_log(const std::string& path, const std::string& format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read event log " + path);
  LogFormat fmt = format == "csv" ? LogFormat::csv
                  : format == "bin" ? LogFormat::packed_binary
                                    : detect_format(in);
  try {
    return parse_event_log(in, fmt);
  } catch (const ParseError& e) {
    throw InputError(path + ": " + e.what());
  }
}

void emit_json(const json& doc, const std::string& path) {
  if (path.empty()) {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw EnvironmentError("cannot write report " + path);
  out << doc.dump(2) << '\n';
}

void summarize(const AnalysisReport& r) {
  std::fprintf(stderr,
               "events %llu  S %.4f (lb %.4f)  W_rsp %.4f (lb %.4f)\n"
               "DI  %.5f bits/event, %llu bits\n"
               "SDI %.5f bits/event, %.1f bits min-entropy\n"
               "checks: no-signaling %s, balance %s\n",
               static_cast<unsigned long long>(r.counts.n_total()), r.chsh.S, r.di.s_lower_bound,
               r.witness.w_rsp, r.w_lower_bound, r.di.rate_per_event,
               static_cast<unsigned long long>(r.di.total_bits), r.sdi.rate_per_event,
               r.sdi.total_min_entropy_bits, r.no_signaling.pass ? "pass" : "FAIL",
               r.balance.pass ? "pass" : "FAIL");
  for (const auto& w : r.di.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  for (const auto& w : r.sdi.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (r.witness.bob_side.signaling_warning || r.witness.alice_side.signaling_warning)
    std::fprintf(stderr, "warning: preparing-side marginals depend on the remote setting\n");
}

struct SimulateOptions {
  std::string preset;
  std::string scenario_path;
  double werner_z = -1.0;
  std::string bell;
  std::uint64_t n = 0;
  std::uint64_t seed = 1;
  std::string out = "-";
  std::string format = "csv";
};

int run_simulate(const SimulateOptions& o) {
  std::optional<Scenario> sc;
  if (!o.scenario_path.empty()) {
    std::ifstream in(o.scenario_path);
    if (!in) throw InputError("cannot read scenario file " + o.scenario_path);
    try {
      sc = scenario_from_json(json::parse(in));
    } catch (const std::exception& e) {
      throw InputError("scenario file: " + std::string(e.what()));
    }
  } else {
    if (o.preset.empty()) throw InputError("give --preset or --scenario");
    if ((o.werner_z >= 0.0) == !o.bell.empty())
      throw InputError("give exactly one of --werner-z and --bell");
    std::optional<TwoQubitState> state;
    StateLabel label = StateLabel::unlabeled;
    if (!o.bell.empty()) {
      const bool plus = o.bell == "psi_plus";
      state = bell_state(plus ? BellState::psi_plus : BellState::psi_minus);
      label = plus ? StateLabel::psi_plus : StateLabel::psi_minus;
    } else {
      if (o.werner_z > 1.0) throw InputError("--werner-z must lie in [0,1]");
      state = werner_state(o.werner_z);
    }
    sc = make_preset(o.preset, *state, label);
    if (!sc) throw InputError("unknown preset '" + o.preset + "'");
  }

  const auto events = sample_events(*sc, o.n, o.seed);
  const auto fmt = o.format == "bin" ? LogFormat::packed_binary : LogFormat::csv;
  if (o.out == "-") {
    if (fmt == LogFormat::packed_binary) throw InputError("binary output needs --out");
    write_event_log(std::cout, events, fmt);
  } else {
    std::ofstream out(o.out, std::ios::binary);
    if (!out) throw EnvironmentError("cannot write " + o.out);
    write_event_log(out, events, fmt);
  }
  std::fprintf(stderr, "simulated %llu events (%s, seed %llu, analytic S %.6f, W_rsp %.6f)\n",
               static_cast<unsigned long long>(o.n), sc->name.c_str(),
               static_cast<unsigned long long>(o.seed), analytic_s(*sc), analytic_w_rsp(*sc));
  return kOk;
}

int run_analyze(const std::string& log, const CommonOptions& o) {
  const auto config = resolve_config(o);
  const auto events = read_log(log, o.format);
  const auto report = analyze(events, config);
  summarize(report);
  emit_json(to_json(report), o.report_path);
  return kOk;
}

struct ExtractOptions {
  std::string seed_file;
  bool os_entropy = false;
  std::string out;
  std::string pipeline = "sdi";
};

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EnvironmentError("cannot read seed file " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_extract(const std::string& log, const CommonOptions& o, const ExtractOptions& e) {
  if (e.seed_file.empty() == !e.os_entropy)
    throw InputError("give exactly one of --seed-file and --os-entropy");
  if (!e.seed_file.empty() && !std::filesystem::is_regular_file(e.seed_file))
    throw EnvironmentError("seed file " + e.seed_file + " not found");

  const auto config = resolve_config(o);
  const auto all_events = read_log(log, o.format);
  const auto report = analyze(all_events, config);
  const auto events = select_events(all_events, config.state_filter);
  const auto budget = e.pipeline == "di" ? EntropyBudget::from(report.di)
                                         : EntropyBudget::from(report.sdi);

  std::unique_ptr<SeedSource> seeds;
  if (e.os_entropy)
    seeds = std::make_unique<OsEntropySeedSource>();
  else
    seeds = std::make_unique<ByteSeedSource>(read_bytes(e.seed_file));

  ExtractionResult result;
  try {
    result = extract_certified(events, budget, config.eps_hash, *seeds);
  } catch (const InsufficientSeed& ex) {
    throw EnvironmentError(ex.what());
  }

  const auto bytes = result.output.to_bytes_msb_first();
  std::ofstream out(e.out, std::ios::binary);
  if (!out) throw EnvironmentError("cannot write " + e.out);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.close();

  std::fprintf(stderr, "%s pipeline: h_total %.1f bits -> %llu output bits\n",
               std::string(to_string(budget.pipeline)).c_str(), budget.h_total,
               static_cast<unsigned long long>(result.report.m_out));
  if (!result.report.note.empty()) std::fprintf(stderr, "%s\n", result.report.note.c_str());
  emit_json(to_json(result.report), o.report_path);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified randomness from CHSH Bell-test logs"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "sample an event log from a two-qubit scenario");
  simulate->add_option("--preset", sim.preset, "chsh_optimal | bbm92");
  simulate->add_option("--scenario", sim.scenario_path, "scenario JSON file");
  simulate->add_option("--werner-z", sim.werner_z, "Werner noise parameter z");
  simulate->add_option("--bell", sim.bell, "Bell state")->check(CLI::IsMember({"psi_plus", "psi_minus"}));
  simulate->add_option("-n", sim.n, "number of events")->required();
  simulate->add_option("--seed", sim.seed, "sampler seed");
  simulate->add_option("--out", sim.out, "output path, '-' for stdout");
  simulate->add_option("--format", sim.format, "csv | bin")->check(CLI::IsMember({"csv", "bin"}));

  std::string analyze_log;
  CommonOptions analyze_opts;
  auto* analyze_cmd = app.add_subcommand("analyze", "certify min-entropy of an event log");
  analyze_cmd->add_option("log", analyze_log, "event log")->required();
  add_common(analyze_cmd, analyze_opts);

  std::string extract_log;
  CommonOptions extract_opts;
  ExtractOptions ext;
  auto* extract = app.add_subcommand("extract", "hash an event log into certified random bits");
  extract->add_option("log", extract_log, "event log")->required();
  add_common(extract, extract_opts);
  extract->add_option("--seed-file", ext.seed_file, "Toeplitz seed bytes, read MSB-first");
  extract->add_flag("--os-entropy", ext.os_entropy, "draw the seed from the OS entropy source");
  extract->add_option("--out", ext.out, "output bit file")->required();
  extract->add_option("--pipeline", ext.pipeline, "di | sdi")->check(CLI::IsMember({"di", "sdi"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*analyze_cmd) return run_analyze(analyze_log, analyze_opts);
    if (*extract) return run_extract(extract_log, extract_opts, ext);
  } catch (const EnvironmentError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kEnvironmentError;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  } catch (const AnalysisError& e) {
    std::fprintf(stderr, "analysis error: %s\n", e.what());
    return kInputError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  }
  return kInputError;
}
