// Copyright 2026 The rspcert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace rspcert {

enum class StateLabel : std::uint8_t { unlabeled = 0, psi_plus = 1, psi_minus = 2 };

inline std::string_view to_string(StateLabel label) {
  switch (label) {
    case StateLabel::psi_plus: return "psi_plus";
    case StateLabel::psi_minus: return "psi_minus";
    case StateLabel::unlabeled: break;
  }
  return "";
}

inline std::optional<StateLabel> parse_state_label(std::string_view text) {
  if (text.empty()) return StateLabel::unlabeled;
  if (text == "psi_plus") return StateLabel::psi_plus;
  if (text == "psi_minus") return StateLabel::psi_minus;
  return std::nullopt;
}

/// One Bell-test trial: settings x (Alice), y (Bob) and outcomes a, b.
struct EventRecord {
  std::uint64_t trial = 0;
  std::uint8_t x = 0;
  std::uint8_t y = 0;
  std::uint8_t a = 0;
  std::uint8_t b = 0;
  StateLabel state = StateLabel::unlabeled;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  /// 1-based line (CSV, header is line 1) or 1-based event index (binary).
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Raised when a table cannot support an analysis (empty settings, unprepared states).
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LogFormat { csv, packed_binary };

inline constexpr std::string_view kBinaryMagic = "RSPEVT01";

/// Joint outcome counts n[a][b][x][y]. Totals are derived, so the table is always consistent.
class CountsTable {
 public:
  using Cells = std::array<std::array<std::array<std::array<std::uint64_t, 2>, 2>, 2>, 2>;

  CountsTable() = default;
  explicit CountsTable(const Cells& cells) : n_(cells) {}

  std::uint64_t n(int a, int b, int x, int y) const { return n_[a][b][x][y]; }
  std::uint64_t& n(int a, int b, int x, int y) { return n_[a][b][x][y]; }

  std::uint64_t n_xy(int x, int y) const {
    return n_[0][0][x][y] + n_[0][1][x][y] + n_[1][0][x][y] + n_[1][1][x][y];
  }

  std::uint64_t n_total() const {
    return n_xy(0, 0) + n_xy(0, 1) + n_xy(1, 0) + n_xy(1, 1);
  }

  /// Alice's marginal count n(a|x,y).
  std::uint64_t n_alice(int a, int x, int y) const { return n_[a][0][x][y] + n_[a][1][x][y]; }
  /// Bob's marginal count n(b|x,y).
  std::uint64_t n_bob(int b, int x, int y) const { return n_[0][b][x][y] + n_[1][b][x][y]; }

  bool all_settings_populated() const {
    return n_xy(0, 0) > 0 && n_xy(0, 1) > 0 && n_xy(1, 0) > 0 && n_xy(1, 1) > 0;
  }

  CountsTable& operator+=(const CountsTable& other) {
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int x = 0; x < 2; ++x)
          for (int y = 0; y < 2; ++y) n_[a][b][x][y] += other.n_[a][b][x][y];
    return *this;
  }

  friend CountsTable operator+(CountsTable lhs, const CountsTable& rhs) { return lhs += rhs; }
  friend bool operator==(const CountsTable&, const CountsTable&) = default;

  const Cells& cells() const { return n_; }

 private:
  Cells n_{};
};

/// Joint probabilities p(ab|xy). Built either from counts or from exact simulator tables.
struct JointProbabilities {
  std::array<std::array<std::array<std::array<double, 2>, 2>, 2>, 2> p{};

  double operator()(int a, int b, int x, int y) const { return p[a][b][x][y]; }
  double alice_marginal(int a, int x, int y) const { return p[a][0][x][y] + p[a][1][x][y]; }
  double bob_marginal(int b, int x, int y) const { return p[0][b][x][y] + p[1][b][x][y]; }

  static JointProbabilities from_counts(const CountsTable& counts) {
    if (!counts.all_settings_populated())
      throw AnalysisError("setting pair with zero events; probabilities undefined");
    JointProbabilities out;
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y) {
        const double total = static_cast<double>(counts.n_xy(x, y));
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            out.p[a][b][x][y] = static_cast<double>(counts.n(a, b, x, y)) / total;
      }
    return out;
  }
};

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::uint8_t parse_bit(std::string_view field, const char* name, std::size_t line) {
  if (field == "0") return 0;
  if (field == "1") return 1;
  throw ParseError(line, std::string(name) + " must be 0 or 1, got '" + std::string(field) + "'");
}

inline std::uint64_t parse_index(std::string_view field, std::size_t line) {
  if (field.empty()) throw ParseError(line, "empty trial index");
  std::uint64_t value = 0;
  for (char c : field) {
    if (c < '0' || c > '9') throw ParseError(line, "trial index is not a non-negative integer");
    const std::uint64_t digit = static_cast<std::uint64_t>(c - '0');
    if (value > (UINT64_MAX - digit) / 10) throw ParseError(line, "trial index overflows");
    value = value * 10 + digit;
  }
  return value;
}

inline std::vector<EventRecord> parse_csv(std::istream& in) {
  std::vector<EventRecord> events;
  std::string raw;
  std::size_t line_no = 0;
  bool have_header = false;
  bool has_state_column = false;
  std::size_t pending_blank = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      ++pending_blank;
      continue;
    }
    if (pending_blank > 0) throw ParseError(line_no - 1, "blank line inside event log");
    if (!have_header) {
      if (line == "trial,x,y,a,b,state") {
        has_state_column = true;
      } else if (line != "trial,x,y,a,b") {
        throw ParseError(line_no, "expected header 'trial,x,y,a,b,state'");
      }
      have_header = true;
      continue;
    }
    const auto fields = split_commas(line);
    const std::size_t expected = has_state_column ? 6 : 5;
    if (fields.size() != expected)
      throw ParseError(line_no, "expected " + std::to_string(expected) + " fields, got " +
                                    std::to_string(fields.size()));
    EventRecord ev;
    ev.trial = parse_index(fields[0], line_no);
    ev.x = parse_bit(fields[1], "x", line_no);
    ev.y = parse_bit(fields[2], "y", line_no);
    ev.a = parse_bit(fields[3], "a", line_no);
    ev.b = parse_bit(fields[4], "b", line_no);
    if (has_state_column) {
      const auto label = parse_state_label(fields[5]);
      if (!label) throw ParseError(line_no, "unknown state label '" + std::string(fields[5]) + "'");
      ev.state = *label;
    }
    if (!events.empty() && ev.trial <= events.back().trial)
      throw ParseError(line_no, "trial index not strictly increasing");
    events.push_back(ev);
  }
  return events;
}

inline std::vector<EventRecord> parse_binary(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() == 0) return {};
  if (in.gcount() != 8 || std::string_view(magic, 8) != kBinaryMagic)
    throw ParseError(0, "missing RSPEVT01 magic");
  unsigned char count_bytes[8];
  in.read(reinterpret_cast<char*>(count_bytes), 8);
  if (in.gcount() != 8) throw ParseError(0, "truncated event count");
  std::uint64_t count = 0;
  for (int i = 7; i >= 0; --i) count = (count << 8) | count_bytes[i];

  std::vector<EventRecord> events;
  events.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  for (std::uint64_t i = 0; i < count; ++i) {
    const int byte = in.get();
    if (byte == std::char_traits<char>::eof())
      throw ParseError(i + 1, "truncated log: header announces " + std::to_string(count) + " events");
    const auto packed = static_cast<std::uint8_t>(byte);
    if (packed & 0xC0) throw ParseError(i + 1, "reserved bits 6-7 must be zero");
    const int label = (packed >> 4) & 0x3;
    if (label == 3) throw ParseError(i + 1, "state label code 3 is undefined");
    EventRecord ev;
    ev.trial = i;
    ev.a = packed & 1;
    ev.b = (packed >> 1) & 1;
    ev.x = (packed >> 2) & 1;
    ev.y = (packed >> 3) & 1;
    ev.state = static_cast<StateLabel>(label);
    events.push_back(ev);
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw ParseError(count + 1, "trailing bytes after last event");
  return events;
}

}  // namespace detail

/// Reads an event log. Throws ParseError with the offending line (CSV) or event index (binary).
inline std::vector<EventRecord> parse_event_log(std::istream& in, LogFormat format) {
  return format == LogFormat::csv ? detail::parse_csv(in) : detail::parse_binary(in);
}

/// Sniffs the magic bytes; anything else is treated as CSV.
inline LogFormat detect_format(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  const bool binary = in.gcount() == 8 && std::string_view(magic, 8) == kBinaryMagic;
  in.clear();
  in.seekg(0);
  return binary ? LogFormat::packed_binary : LogFormat::csv;
}

inline std::uint8_t pack_event(const EventRecord& ev) {
  return static_cast<std::uint8_t>((ev.a & 1) | ((ev.b & 1) << 1) | ((ev.x & 1) << 2) |
                                   ((ev.y & 1) << 3) | (static_cast<int>(ev.state) << 4));
}

/// Binary logs do not store trial indices; they are reassigned 0..n-1 on read.
inline void write_event_log(std::ostream& out, const std::vector<EventRecord>& events,
                            LogFormat format) {
  if (format == LogFormat::csv) {
    out << "trial,x,y,a,b,state\n";
    for (const auto& ev : events)
      out << ev.trial << ',' << int(ev.x) << ',' << int(ev.y) << ',' << int(ev.a) << ','
          << int(ev.b) << ',' << to_string(ev.state) << '\n';
    return;
  }
  out.write(kBinaryMagic.data(), static_cast<std::streamsize>(kBinaryMagic.size()));
  std::uint64_t count = events.size();
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((count >> (8 * i)) & 0xFF));
  for (const auto& ev : events) out.put(static_cast<char>(pack_event(ev)));
}

inline CountsTable tally(const std::vector<EventRecord>& events,
                         std::optional<StateLabel> filter = std::nullopt) {
  CountsTable counts;
  for (const auto& ev : events) {
    if (filter && ev.state != *filter) continue;
    ++counts.n(ev.a, ev.b, ev.x, ev.y);
  }
  return counts;
}

struct NoSignalingReport {
  double alice_max_deviation = 0.0;  // max_{a,x} |p(a|x,y=0) - p(a|x,y=1)|
  double bob_max_deviation = 0.0;    // max_{b,y} |p(b|x=0,y) - p(b|x=1,y)|
  double alice_max_z = 0.0;
  double bob_max_z = 0.0;
  double critical_z = 0.0;
  double significance = 0.0;
  bool pass = true;
};

namespace detail {

// Two-proportion z statistic for successes k0/n0 vs k1/n1 under the pooled null.
inline double two_proportion_z(std::uint64_t k0, std::uint64_t n0, std::uint64_t k1,
                               std::uint64_t n1) {
  const double p0 = double(k0) / double(n0);
  const double p1 = double(k1) / double(n1);
  const double pooled = double(k0 + k1) / double(n0 + n1);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / double(n0) + 1.0 / double(n1)));
  if (se == 0.0) return p0 == p1 ? 0.0 : INFINITY;
  return std::abs(p0 - p1) / se;
}

}  // namespace detail

/// Tests whether each party's marginals depend on the remote setting.
/// Four two-proportion tests (two per side) share the significance via a Sidak correction.
inline NoSignalingReport no_signaling_check(const CountsTable& counts, double significance) {
  if (!counts.all_settings_populated())
    throw AnalysisError("no-signaling check needs events in every setting pair");
  if (!(significance > 0.0 && significance < 1.0))
    throw std::invalid_argument("significance must lie in (0,1)");
  NoSignalingReport report;
  report.significance = significance;
  const double per_test = 1.0 - std::pow(1.0 - significance, 0.25);
  report.critical_z =
      boost::math::quantile(boost::math::complement(boost::math::normal(), per_test / 2.0));
  for (int s = 0; s < 2; ++s) {
    const double z_alice = detail::two_proportion_z(counts.n_alice(1, s, 0), counts.n_xy(s, 0),
                                                    counts.n_alice(1, s, 1), counts.n_xy(s, 1));
    const double z_bob = detail::two_proportion_z(counts.n_bob(1, 0, s), counts.n_xy(0, s),
                                                  counts.n_bob(1, 1, s), counts.n_xy(1, s));
    const double dev_alice = std::abs(double(counts.n_alice(1, s, 0)) / double(counts.n_xy(s, 0)) -
                                      double(counts.n_alice(1, s, 1)) / double(counts.n_xy(s, 1)));
    const double dev_bob = std::abs(double(counts.n_bob(1, 0, s)) / double(counts.n_xy(0, s)) -
                                    double(counts.n_bob(1, 1, s)) / double(counts.n_xy(1, s)));
    report.alice_max_deviation = std::max(report.alice_max_deviation, dev_alice);
    report.bob_max_deviation = std::max(report.bob_max_deviation, dev_bob);
    report.alice_max_z = std::max(report.alice_max_z, z_alice);
    report.bob_max_z = std::max(report.bob_max_z, z_bob);
  }
  report.pass = report.alice_max_z <= report.critical_z && report.bob_max_z <= report.critical_z;
  return report;
}

struct BalanceReport {
  double max_deviation = 0.0;  // max |n_xy/n_total - 1/4|
  double tolerance = 0.0;
  bool pass = true;
};

inline BalanceReport setting_balance_check(const CountsTable& counts, double tolerance) {
  BalanceReport report;
  report.tolerance = tolerance;
  const auto total = counts.n_total();
  if (total == 0) throw AnalysisError("setting balance check on an empty table");
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      report.max_deviation = std::max(
          report.max_deviation, std::abs(double(counts.n_xy(x, y)) / double(total) - 0.25));
  report.pass = report.max_deviation <= tolerance;
  return report;
}

}  // namespace rspcert
