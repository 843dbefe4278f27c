// Copyright 2026 The rspcert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "rspcert/certify.hpp"
#include "rspcert/events.hpp"

namespace rspcert {

/// Packed bit sequence. Bit i lives in word i/64 at position i%64.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t n_bits) : words_((n_bits + 63) / 64, 0), size_(n_bits) {}

  static BitString from_bits(std::span<const std::uint8_t> bits) {
    BitString out(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) out.set(i, bits[i] & 1);
    return out;
  }

  /// Bytes consumed MSB-first; only the first n_bits are kept.
  static BitString from_bytes_msb_first(std::span<const std::uint8_t> bytes, std::size_t n_bits) {
    if (n_bits > bytes.size() * 8) throw std::invalid_argument("not enough bytes for requested bits");
    BitString out(n_bits);
    for (std::size_t i = 0; i < n_bits; ++i) out.set(i, (bytes[i / 8] >> (7 - i % 8)) & 1);
    return out;
  }

  /// MSB-first, final partial byte zero-padded.
  std::vector<std::uint8_t> to_bytes_msb_first() const {
    std::vector<std::uint8_t> bytes((size_ + 7) / 8, 0);
    for (std::size_t i = 0; i < size_; ++i)
      if (get(i)) bytes[i / 8] |= std::uint8_t(0x80u >> (i % 8));
    return bytes;
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  bool get(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
  void set(std::size_t i, bool value) {
    const std::uint64_t mask = std::uint64_t{1} << (i % 64);
    words_[i / 64] = value ? (words_[i / 64] | mask) : (words_[i / 64] & ~mask);
  }
  void push_back(bool value) {
    if (size_ % 64 == 0) words_.push_back(0);
    ++size_;
    set(size_ - 1, value);
  }

  std::size_t count_ones() const {
    std::size_t total = 0;
    for (auto w : words_) total += static_cast<std::size_t>(std::popcount(w));
    return total;
  }

  std::span<const std::uint64_t> words() const { return words_; }

  friend BitString operator^(const BitString& lhs, const BitString& rhs) {
    if (lhs.size_ != rhs.size_) throw std::invalid_argument("xor of bit strings of different length");
    BitString out = lhs;
    for (std::size_t i = 0; i < out.words_.size(); ++i) out.words_[i] ^= rhs.words_[i];
    return out;
  }
  friend bool operator==(const BitString&, const BitString&) = default;

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

/// Raw string: a then b for every event, in log order.
inline BitString events_to_bits(const std::vector<EventRecord>& events) {
  BitString bits(2 * events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    bits.set(2 * i, events[i].a);
    bits.set(2 * i + 1, events[i].b);
  }
  return bits;
}

/// Leftover-hash sizing: floor(h - 2 log2(1/eps)), never negative.
inline std::uint64_t output_length(double h_total, double eps_hash) {
  if (h_total < 0.0 || std::isnan(h_total)) throw std::invalid_argument("min-entropy must be >= 0");
  if (!(eps_hash > 0.0 && eps_hash < 1.0)) throw std::invalid_argument("hashing error must lie in (0,1)");
  const double m = std::floor(h_total - 2.0 * std::log2(1.0 / eps_hash));
  return m > 0.0 ? static_cast<std::uint64_t>(m) : 0;
}

struct ExtractionPlan {
  std::uint64_t n_in = 0;
  std::uint64_t m_out = 0;
  double eps_hash = 0.0;
  std::uint64_t seed_bits_required() const { return m_out == 0 ? 0 : n_in + m_out - 1; }
};

inline ExtractionPlan plan_extraction(std::uint64_t n_in, double h_total, double eps_hash) {
  return {n_in, std::min<std::uint64_t>(output_length(h_total, eps_hash), n_in), eps_hash};
}

/// y = T x over GF(2) for the m x n Toeplitz matrix
///   T[i][j] = seed[i - j]          (i >= j, first column)
///   T[i][j] = seed[m - 1 + j - i]  (j > i,  rest of the first row)
///
/// Row i is the window g[m-1-i, m-1-i+n) of the diagonal sequence
/// g = (seed[m-1], ..., seed[1], seed[0], seed[m], ..., seed[n+m-2]); the 64 bit-shifted
/// copies of g let every row be read as whole words.
inline BitString toeplitz_extract(const BitString& input, const BitString& seed, std::size_t m_out) {
  const std::size_t n = input.size();
  if (m_out > n) throw std::invalid_argument("output length exceeds input length");
  if (m_out == 0) return {};
  if (seed.size() != n + m_out - 1)
    throw std::invalid_argument("Toeplitz seed must have n_in + m_out - 1 bits");

  const std::size_t g_len = n + m_out - 1;
  BitString diag(g_len);
  for (std::size_t t = 0; t < g_len; ++t)
    diag.set(t, t < m_out ? seed.get(m_out - 1 - t) : seed.get(t));

  const std::size_t n_words = (n + 63) / 64;
  const std::size_t shifted_words = n_words + (g_len + 63) / 64 + 1;
  // shifted[s][w] holds bits g[64 w + s, 64 w + s + 64)
  std::vector<std::uint64_t> shifted(64 * shifted_words, 0);
  const auto g = diag.words();
  for (std::size_t s = 0; s < 64; ++s) {
    std::uint64_t* row = shifted.data() + s * shifted_words;
    for (std::size_t w = 0; w < shifted_words; ++w) {
      const std::uint64_t low = w < g.size() ? g[w] : 0;
      const std::uint64_t high = w + 1 < g.size() ? g[w + 1] : 0;
      row[w] = s == 0 ? low : (low >> s) | (high << (64 - s));
    }
  }

  const auto x = input.words();
  const std::uint64_t tail_mask = n % 64 == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << (n % 64)) - 1;
  BitString out(m_out);
  for (std::size_t i = 0; i < m_out; ++i) {
    const std::size_t start = m_out - 1 - i;
    const std::uint64_t* window = shifted.data() + (start % 64) * shifted_words + start / 64;
    std::uint64_t acc = 0;
    for (std::size_t w = 0; w + 1 < n_words; ++w) acc ^= window[w] & x[w];
    acc ^= window[n_words - 1] & x[n_words - 1] & tail_mask;
    out.set(i, std::popcount(acc) & 1);
  }
  return out;
}

inline std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

class InsufficientSeed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Supplier of extractor seed bits. Must be independent of the data being extracted.
class SeedSource {
 public:
  virtual ~SeedSource() = default;
  virtual BitString take(std::size_t n_bits) = 0;
};

/// Seed bits from a byte buffer (e.g. a seed file), read MSB-first.
class ByteSeedSource final : public SeedSource {
 public:
  explicit ByteSeedSource(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

  BitString take(std::size_t n_bits) override {
    if (n_bits > bytes_.size() * 8)
      throw InsufficientSeed("seed provides " + std::to_string(bytes_.size() * 8) + " bits, " +
                             std::to_string(n_bits) + " required");
    return BitString::from_bytes_msb_first(bytes_, n_bits);
  }

 private:
  std::vector<std::uint8_t> bytes_;
};

class OsEntropySeedSource final : public SeedSource {
 public:
  BitString take(std::size_t n_bits) override {
    std::random_device device;
    std::vector<std::uint8_t> bytes((n_bits + 7) / 8);
    for (auto& byte : bytes) byte = static_cast<std::uint8_t>(device() & 0xFF);
    return BitString::from_bytes_msb_first(bytes, n_bits);
  }
};

struct ExtractionReport {
  Pipeline pipeline = Pipeline::sdi;
  std::uint64_t n_in = 0;
  double h_total = 0.0;
  double eps_hash = 0.0;
  std::uint64_t m_out = 0;
  std::uint64_t seed_bits = 0;
  std::string seed_sha256;    // of the consumed seed bits, packed MSB-first
  std::string output_sha256;  // of the output file bytes
  std::string note;
};

struct ExtractionResult {
  BitString output;
  ExtractionReport report;
};

inline ExtractionResult extract_certified(const std::vector<EventRecord>& events,
                                          const EntropyBudget& budget, double eps_hash,
                                          SeedSource& seeds) {
  if (budget.n_events != events.size())
    throw std::invalid_argument("budget was computed on a different event set");
  const BitString raw = events_to_bits(events);
  const auto plan = plan_extraction(raw.size(), budget.h_total, eps_hash);

  ExtractionResult result;
  auto& report = result.report;
  report.pipeline = budget.pipeline;
  report.n_in = plan.n_in;
  report.h_total = budget.h_total;
  report.eps_hash = eps_hash;
  report.m_out = plan.m_out;
  report.seed_bits = plan.seed_bits_required();
  if (plan.m_out == 0) {
    report.note = "certified min-entropy " + std::to_string(budget.h_total) +
                  " bits does not exceed the hashing loss 2*log2(1/eps) = " +
                  std::to_string(2.0 * std::log2(1.0 / eps_hash)) + " bits; no output";
    report.seed_sha256 = sha256_hex({});
  } else {
    const BitString seed = seeds.take(report.seed_bits);
    report.seed_sha256 = sha256_hex(seed.to_bytes_msb_first());
    result.output = toeplitz_extract(raw, seed, plan.m_out);
  }
  report.output_sha256 = sha256_hex(result.output.to_bytes_msb_first());
  return result;
}

}  // namespace rspcert
