#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hpqkd/protocol_engine.hpp"

namespace {

using namespace hpqkd::protocol;
using hpqkd::Rng;
using std::numbers::pi;

SessionConfig config_for(Mode mode, std::size_t slots = 20000) {
  SessionConfig c;
  c.mode = mode;
  c.num_slots = slots;
  c.seed = 31;
  return c;
}

TEST(Modes, NamesRoundTrip) {
  for (auto m : {Mode::baseline_bb84, Mode::hybrid, Mode::parallel, Mode::hybrid_parallel}) {
    EXPECT_EQ(parse_mode(to_string(m)), m);
  }
  EXPECT_FALSE(parse_mode("bb84"));
  EXPECT_EQ(channel_count(Mode::hybrid_parallel), 2u);
  EXPECT_TRUE(uses_mesoscopic_channel(Mode::hybrid));
  EXPECT_FALSE(uses_mesoscopic_channel(Mode::parallel));
}

TEST(Phases, AlphabetAndUpperProbability) {
  EXPECT_NEAR(alice_phase(1, 1), 1.5 * pi, 1e-15);
  EXPECT_NEAR(bob_phase(1), 0.5 * pi, 1e-15);
  SessionConfig c;
  for (double d : {0.0, 0.5 * pi, pi, 1.5 * pi}) {
    // channel 1: cos^2(d/2) to the upper detector; channel 2 swapped
    EXPECT_NEAR(*upper_probability(d, 1, c.plan, c.fiber), std::pow(std::cos(d / 2), 2), 1e-12);
    EXPECT_NEAR(*upper_probability(d, 2, c.plan, c.fiber), std::pow(std::sin(d / 2), 2), 1e-12);
  }
  auto dark = c.plan;
  dark.m1 = 0.0;
  dark.m3 = 0.0;
  EXPECT_FALSE(upper_probability(0.0, 1, dark, c.fiber));
  EXPECT_THROW(upper_probability(0.0, 3, c.plan, c.fiber), std::invalid_argument);
}

TEST(Detection, SplitFollowsInterferenceLaw) {
  SessionConfig c;
  c.channel.mu_weak = 2.0;
  Rng rng(4);
  int upper = 0;
  int lower = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto o = detection_split(pi / 2, 1, c.plan, c.fiber, c.channel, rng);
    upper += o == DetectorOutcome::upper;
    lower += o == DetectorOutcome::lower;
    EXPECT_NE(o, DetectorOutcome::both);
  }
  const double click = 1.0 - std::exp(-2.0);
  EXPECT_NEAR(upper / 20000.0, 0.5 * click, 0.015);
  EXPECT_NEAR(lower / 20000.0, 0.5 * click, 0.015);
}

TEST(Qber, CountsMatchedDisagreements) {
  const BitString a{0, 1, 1, 0};
  const BitString b{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(compute_qber(a, b), 0.5);
  const std::vector<std::size_t> matched{0, 2};
  EXPECT_DOUBLE_EQ(compute_qber(a, b, matched), 0.0);
  EXPECT_THROW(compute_qber(a, BitString{0}), std::invalid_argument);
  EXPECT_THROW(compute_qber(BitString{}, BitString{}), std::invalid_argument);
}

// p1 = q(1-d) + (1-q) 2d(1-d), q = 1 - exp(-mu * eta * T); sifting halves it.
TEST(Reference, BaselineRateFormula) {
  ChannelModel ch;
  ch.length_km = 50;
  ch.detector_efficiency = 0.5;
  ch.dark_count_prob = 1e-4;
  const double q = 1 - std::exp(-0.1 * 0.5 * std::pow(10.0, -1.0));
  const double d = 1e-4;
  EXPECT_NEAR(baseline_reference_rate(ch), 0.5 * (q * (1 - d) + (1 - q) * 2 * d * (1 - d)), 1e-15);
  EXPECT_NEAR(baseline_reference_rate(ChannelModel::ideal()), 0.5 * (1 - std::exp(-0.1)), 1e-15);
}

TEST(ChannelModelTest, ValidationAndWarnings) {
  ChannelModel ch;
  EXPECT_NO_THROW(ch.validate());
  ch.M = 100;
  EXPECT_THROW(ch.validate(), std::invalid_argument);
  ch = ChannelModel{};
  ch.detector_efficiency = 1.5;
  EXPECT_THROW(ch.validate(), std::invalid_argument);
  ch = ChannelModel{};
  ch.alpha_sq_meso = 300;
  EXPECT_FALSE(ch.warnings().empty());
}

TEST(Sessions, RatiosOnIdealChannel) {
  const double expected[] = {1.0, 2.0, 2.0, 4.0};
  int i = 0;
  for (auto m : {Mode::baseline_bb84, Mode::hybrid, Mode::parallel, Mode::hybrid_parallel}) {
    const auto r = run_session(config_for(m));
    EXPECT_NEAR(r.rate_ratio_vs_baseline, expected[i], 3.5 * r.rate_ratio_stderr) << to_string(m);
    EXPECT_EQ(r.bit_errors, 0u);
    EXPECT_EQ(r.alice_key, r.bob_key);
    EXPECT_EQ(r.channels, channel_count(m));
    ++i;
  }
}

TEST(Sessions, ModeMismatchAndUntunedLinkAreRejected) {
  auto c = config_for(Mode::hybrid, 100);
  EXPECT_THROW(run_baseline_bb84(c), std::invalid_argument);
  auto p = config_for(Mode::parallel, 100);
  p.fiber.length_m = 0.3;
  EXPECT_THROW(run_parallel(p), std::invalid_argument);
  auto hp = config_for(Mode::hybrid_parallel, 100);
  hp.fiber.length_m = 0.3;
  EXPECT_THROW(run_session(hp), std::invalid_argument);
  auto ok = config_for(Mode::baseline_bb84, 100);
  ok.fiber.length_m = 0.3;
  EXPECT_NO_THROW(run_session(ok));
  auto empty = config_for(Mode::baseline_bb84, 0);
  EXPECT_THROW(run_session(empty), std::invalid_argument);
}

TEST(Sessions, HybridTranscriptCarriesNoBases) {
  const auto base = run_session(config_for(Mode::baseline_bb84, 2000));
  const auto hyb = run_session(config_for(Mode::hybrid, 2000));
  for (const auto& t : base.transcript) EXPECT_TRUE(t.announced_basis.has_value());
  for (const auto& t : hyb.transcript) EXPECT_FALSE(t.announced_basis.has_value());
  EXPECT_EQ(hyb.meso_pulses, 2000u);
}

TEST(Sessions, BasisFaultRaisesQberByHalfTheFraction) {
  auto c = config_for(Mode::hybrid, 40000);
  c.bob_basis_fault_fraction = 0.3;
  const auto r = run_session(c);
  const double se = std::sqrt(0.15 * 0.85 / static_cast<double>(r.sifted_bits));
  EXPECT_NEAR(r.qber, 0.15, 4 * se);
}

TEST(Sessions, MesoscopicErasuresShrinkUsableSlots) {
  auto c = config_for(Mode::hybrid_parallel, 5000);
  c.channel.alpha_sq_meso = 1.0;
  const auto r = run_session(c);
  EXPECT_GT(r.meso_erasures, 0u);
  EXPECT_EQ(r.usable_slots + r.meso_erasures, 2 * 5000u);
  std::size_t erasure_entries = 0;
  for (const auto& t : r.transcript) erasure_entries += t.kind == TranscriptEntry::Kind::erasure;
  EXPECT_EQ(erasure_entries, r.meso_erasures);
}

TEST(Sessions, LossyChannelTracksReferenceRate) {
  auto c = config_for(Mode::baseline_bb84, 100000);
  c.channel.length_km = 20;
  c.channel.detector_efficiency = 0.6;
  c.channel.dark_count_prob = 1e-3;
  const auto r = run_session(c);
  EXPECT_NEAR(r.rate_ratio_vs_baseline, 1.0, 4 * r.rate_ratio_stderr);
  EXPECT_GT(r.bit_errors, 0u);
}

TEST(Sessions, DeterministicForFixedSeed) {
  const auto a = run_session(config_for(Mode::hybrid_parallel, 3000));
  const auto b = run_session(config_for(Mode::hybrid_parallel, 3000));
  EXPECT_EQ(a.alice_key, b.alice_key);
  EXPECT_EQ(a.sifted_bits, b.sifted_bits);
  auto other = config_for(Mode::hybrid_parallel, 3000);
  other.seed = 32;
  EXPECT_NE(run_session(other).alice_key, a.alice_key);
}

}  // namespace
