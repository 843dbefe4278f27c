// Copyright 2026 The rspcert Authors
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rspcert/rspcert.hpp"

using namespace rspcert;

namespace {

std::vector<std::uint8_t> random_bits(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::uint8_t> bits(n);
  for (auto& b : bits) b = std::uint8_t(rng() & 1);
  return bits;
}

std::vector<std::uint8_t> unpack(const BitString& s) {
  std::vector<std::uint8_t> bits(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) bits[i] = s.get(i);
  return bits;
}

}  // namespace

TEST(Toeplitz, WorkedExample) {
  const auto x = BitString::from_bits(std::vector<std::uint8_t>{1, 0, 1, 1});
  const auto seed = BitString::from_bits(std::vector<std::uint8_t>{1, 0, 1, 1, 0});
  EXPECT_EQ(unpack(toeplitz_extract(x, seed, 2)), (std::vector<std::uint8_t>{0, 0}));
  // single row picks up seed[0], seed[1], ... along the first row
  const auto one = BitString::from_bits(std::vector<std::uint8_t>{1, 0, 1, 1});
  const auto row = BitString::from_bits(std::vector<std::uint8_t>{1, 1, 0, 1});
  EXPECT_EQ(unpack(toeplitz_extract(one, row, 1)), (std::vector<std::uint8_t>{0}));
}

TEST(Toeplitz, ZeroSeedGivesZeroOutput) {
  std::mt19937_64 rng(1);
  const auto x = BitString::from_bits(random_bits(rng, 300));
  const auto y = toeplitz_extract(x, BitString(300 + 100 - 1), 100);
  EXPECT_EQ(y.count_ones(), 0u);
  EXPECT_EQ(y.size(), 100u);
}

TEST(Toeplitz, ArgumentChecks) {
  const BitString x(10);
  EXPECT_THROW(toeplitz_extract(x, BitString(13), 5), std::invalid_argument);
  EXPECT_THROW(toeplitz_extract(x, BitString(20), 11), std::invalid_argument);
  EXPECT_TRUE(toeplitz_extract(x, BitString(0), 0).empty());
}

TEST(Toeplitz, MatchesExplicitMatrix) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> n_dist(1, 256);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = n_dist(rng);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(n, 128))(rng);
    const auto x = random_bits(rng, n);
    const auto seed = random_bits(rng, n + m - 1);
    const auto fast = toeplitz_extract(BitString::from_bits(x), BitString::from_bits(seed), m);
    ASSERT_EQ(unpack(fast), oracle::naive_toeplitz(x, seed, m)) << "n=" << n << " m=" << m;
  }
}

TEST(Toeplitz, LinearInInput) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 300;
    const std::size_t m = 1 + rng() % n;
    const auto seed = BitString::from_bits(random_bits(rng, n + m - 1));
    const auto x1 = BitString::from_bits(random_bits(rng, n));
    const auto x2 = BitString::from_bits(random_bits(rng, n));
    ASSERT_EQ(toeplitz_extract(x1 ^ x2, seed, m),
              toeplitz_extract(x1, seed, m) ^ toeplitz_extract(x2, seed, m));
  }
}

TEST(Toeplitz, BalancedOutputFromMaximalSource) {
  const auto events = sample_events(chsh_optimal(werner_state(1.0)), 100000, 11);
  const auto raw = events_to_bits(events);
  std::mt19937_64 rng(12);
  const std::size_t m = 50000;
  const auto seed = BitString::from_bits(random_bits(rng, raw.size() + m - 1));
  const auto y = toeplitz_extract(raw, seed, m);
  // monobit: |ones - m/2| within 4 sigma of a fair coin
  EXPECT_LT(std::abs(double(y.count_ones()) - m / 2.0), 4.0 * std::sqrt(m / 4.0));
}

TEST(Toeplitz, LargeInputCompletesQuickly) {
  std::mt19937_64 rng(3);
  const std::size_t n = 1u << 20;
  const std::size_t m = 1u << 18;
  BitString x(n), seed(n + m - 1);
  for (std::size_t i = 0; i < n; ++i) x.set(i, rng() & 1);
  for (std::size_t i = 0; i < seed.size(); ++i) seed.set(i, rng() & 1);
  const auto start = std::chrono::steady_clock::now();
  const auto y = toeplitz_extract(x, seed, m);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(y.size(), m);
  EXPECT_LT(seconds, 30.0);
}

TEST(OutputLength, LeftoverHashSizing) {
  EXPECT_EQ(output_length(100.0, 0.001), 80u);
  EXPECT_EQ(output_length(19.0, 0.001), 0u);
  EXPECT_EQ(output_length(0.0, 0.001), 0u);
  EXPECT_EQ(output_length(1000.5, 0.5), 998u);
  EXPECT_THROW(output_length(-1.0, 0.001), std::invalid_argument);
  EXPECT_THROW(output_length(10.0, 1.0), std::invalid_argument);
  const auto plan = plan_extraction(50, 1000.0, 0.001);
  EXPECT_EQ(plan.m_out, 50u);
  EXPECT_EQ(plan.seed_bits_required(), 99u);
  EXPECT_EQ(plan_extraction(50, 10.0, 0.001).seed_bits_required(), 0u);
}

TEST(BitString, PackingAndBytes) {
  const std::vector<EventRecord> events{{0, 0, 0, 1, 0, StateLabel::unlabeled},
                                        {1, 1, 1, 1, 1, StateLabel::unlabeled},
                                        {2, 0, 1, 0, 1, StateLabel::unlabeled}};
  EXPECT_EQ(unpack(events_to_bits(events)), (std::vector<std::uint8_t>{1, 0, 1, 1, 0, 1}));
  const std::vector<std::uint8_t> bytes{0xA5, 0x80};
  const auto bits = BitString::from_bytes_msb_first(bytes, 9);
  EXPECT_EQ(unpack(bits), (std::vector<std::uint8_t>{1, 0, 1, 0, 0, 1, 0, 1, 1}));
  EXPECT_EQ(bits.to_bytes_msb_first(), bytes);
  EXPECT_THROW(BitString::from_bytes_msb_first(bytes, 17), std::invalid_argument);
  BitString grown;
  for (int i = 0; i < 130; ++i) grown.push_back(i % 3 == 0);
  EXPECT_EQ(grown.size(), 130u);
  EXPECT_EQ(grown.count_ones(), 44u);
}

TEST(Sha256, KnownDigests) {
  EXPECT_EQ(sha256_hex({}), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const std::string abc = "abc";
  EXPECT_EQ(sha256_hex({reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size()}),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ExtractCertified, NothingAboveHashingLoss) {
  const auto events = sample_events(chsh_optimal(werner_state(0.5)), 100, 1);
  ByteSeedSource seeds({});
  const auto result = extract_certified(events, {Pipeline::di, 10.0, 100}, 0.001, seeds);
  EXPECT_EQ(result.report.m_out, 0u);
  EXPECT_EQ(result.report.seed_bits, 0u);
  EXPECT_TRUE(result.output.empty());
  EXPECT_FALSE(result.report.note.empty());
}

TEST(ExtractCertified, SeedShortfallAndMismatchedBudget) {
  const auto events = sample_events(chsh_optimal(werner_state(1.0)), 1000, 1);
  ByteSeedSource short_seed(std::vector<std::uint8_t>(10, 0xFF));
  EXPECT_THROW(extract_certified(events, {Pipeline::sdi, 500.0, 1000}, 0.001, short_seed), InsufficientSeed);
  EXPECT_THROW(extract_certified(events, {Pipeline::sdi, 500.0, 999}, 0.001, short_seed),
               std::invalid_argument);
}

TEST(ExtractCertified, DeterministicGivenSeed) {
  const auto events = sample_events(chsh_optimal(werner_state(1.0)), 2000, 4);
  std::mt19937_64 rng(5);
  std::vector<std::uint8_t> bytes(1000);
  for (auto& b : bytes) b = std::uint8_t(rng());
  ByteSeedSource s1(bytes), s2(bytes);
  const EntropyBudget budget{Pipeline::sdi, 900.0, 2000};
  const auto r1 = extract_certified(events, budget, 0.001, s1);
  const auto r2 = extract_certified(events, budget, 0.001, s2);
  EXPECT_EQ(r1.report.m_out, 880u);
  EXPECT_EQ(r1.report.seed_bits, 4000u + 880u - 1u);
  EXPECT_EQ(r1.output, r2.output);
  EXPECT_EQ(r1.report.output_sha256, sha256_hex(r1.output.to_bytes_msb_first()));
  const auto seed = BitString::from_bytes_msb_first(bytes, r1.report.seed_bits);
  EXPECT_EQ(r1.output, toeplitz_extract(events_to_bits(events), seed, 880));
}
