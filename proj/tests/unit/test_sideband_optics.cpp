#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "bessel_oracle.hpp"
#include "hpqkd/sideband_optics.hpp"

namespace {

using namespace hpqkd::optics;
using std::numbers::pi;

FiberLink tuned_fiber(const ModulationPlan& plan) {
  const auto length = tuned_link_length(plan, 1.468);
  EXPECT_TRUE(length.has_value());
  return FiberLink{length.value_or(0.0), 1.468};
}

void expect_spectra_close(const SidebandSpectrum& a, const SidebandSpectrum& b, double rel) {
  const double scale = std::max({a.upper1, a.lower1, a.upper2, a.lower2, 1e-30});
  EXPECT_NEAR(a.carrier, b.carrier, rel * a.carrier + 1e-30);
  EXPECT_NEAR(a.upper1, b.upper1, rel * scale);
  EXPECT_NEAR(a.lower1, b.lower1, rel * scale);
  EXPECT_NEAR(a.upper2, b.upper2, rel * scale);
  EXPECT_NEAR(a.lower2, b.lower2, rel * scale);
}

struct PhaseCase {
  double d1;
  double d2;
};

class OracleAgainstBessel : public ::testing::TestWithParam<PhaseCase> {};

TEST_P(OracleAgainstBessel, PushPullMatchesHarmonicExpansion) {
  ModulationPlan plan;
  plan.phi1A = GetParam().d1;
  plan.phi2A = GetParam().d2;
  const auto fiber = tuned_fiber(plan);
  const auto oracle = sideband_intensities_oracle(plan, fiber, default_oracle_grid(plan));
  const auto reference = testing_oracle::bessel_sideband_powers(plan, fiber, ModulatorModel::push_pull);
  expect_spectra_close(reference, oracle, 1e-9);
}

TEST_P(OracleAgainstBessel, SingleArmMatchesHarmonicExpansion) {
  ModulationPlan plan;
  plan.phi1A = GetParam().d1;
  plan.phi2A = GetParam().d2;
  const auto fiber = tuned_fiber(plan);
  const auto oracle = sideband_intensities_oracle(plan, fiber, default_oracle_grid(plan),
                                                  ModulatorModel::single_arm);
  const auto reference =
      testing_oracle::bessel_sideband_powers(plan, fiber, ModulatorModel::single_arm);
  expect_spectra_close(reference, oracle, 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Phases, OracleAgainstBessel,
                         ::testing::Values(PhaseCase{0.0, 0.0}, PhaseCase{pi / 3, 1.0},
                                           PhaseCase{pi, pi / 2}, PhaseCase{4.0, 5.5}));

TEST(SidebandClosedForm, AgreesWithHarmonicExpansionInSmallSignalRegime) {
  ModulationPlan plan;
  const auto fiber = tuned_fiber(plan);
  for (double d = 0.0; d < 2 * pi; d += pi / 7) {
    plan.phi1A = d;
    plan.phi2A = 2 * d;
    const auto closed = sideband_intensities_closed_form(plan, fiber);
    const auto reference =
        testing_oracle::bessel_sideband_powers(plan, fiber, ModulatorModel::push_pull);
    const double amplitude = plan.E0 * plan.E0 * plan.m1 * plan.m1 / 8.0;
    EXPECT_NEAR(closed.upper1, reference.upper1, 0.01 * amplitude);
    EXPECT_NEAR(closed.lower1, reference.lower1, 0.01 * amplitude);
    EXPECT_NEAR(closed.upper2, reference.upper2, 0.01 * amplitude);
    EXPECT_NEAR(closed.lower2, reference.lower2, 0.01 * amplitude);
  }
}

TEST(SidebandClosedForm, SumIsIndependentOfPhaseDifference) {
  ModulationPlan plan;
  const auto fiber = tuned_fiber(plan);
  const auto base = sideband_intensities_closed_form(plan, fiber);
  for (double d = 0.0; d < 2 * pi; d += 0.1) {
    plan.phi1A = d;
    plan.phi2B = -d;
    const auto s = sideband_intensities_closed_form(plan, fiber);
    EXPECT_NEAR(s.upper1 + s.lower1, base.upper1 + base.lower1, 1e-12 * (base.upper1 + base.lower1));
    EXPECT_NEAR(s.upper2 + s.lower2, base.upper2 + base.lower2, 1e-12 * (base.upper2 + base.lower2));
  }
}

TEST(SidebandClosedForm, ChannelTwoOrientationIsSwappedWhenTuned) {
  ModulationPlan plan;
  const auto fiber = tuned_fiber(plan);
  const auto s = sideband_intensities_closed_form(plan, fiber);
  EXPECT_NEAR(s.lower1, 0.0, 1e-15);
  EXPECT_NEAR(s.upper2, 0.0, 1e-15);
  EXPECT_GT(s.upper1, 0.0);
  EXPECT_GT(s.lower2, 0.0);
  EXPECT_DOUBLE_EQ(s.carrier, 0.5);
}

TEST(SidebandClosedForm, DetunedMatchedContrastIsSineOfLinkPhase) {
  ModulationPlan plan;  // m1 = 2 m3
  const FiberLink fiber{0.3, 1.468};
  const auto phases = propagate(plan, fiber);
  const auto s = sideband_intensities_closed_form(plan, fiber);
  EXPECT_NEAR((s.upper1 - s.lower1) / (s.upper1 + s.lower1), std::sin(phases.channel1), 1e-12);
  EXPECT_LT(std::abs(std::sin(phases.channel1)), 0.5);
}

TEST(SidebandOracle, ZeroDepthsGiveZeroSidebands) {
  ModulationPlan plan;
  plan.m1 = plan.m2 = plan.m3 = plan.m4 = 0.0;
  const auto fiber = tuned_fiber(plan);
  const auto oracle = sideband_intensities_oracle(plan, fiber, default_oracle_grid(plan));
  const auto closed = sideband_intensities_closed_form(plan, fiber);
  for (double v : {oracle.upper1, oracle.lower1, oracle.upper2, oracle.lower2, closed.upper1,
                   closed.lower1, closed.upper2, closed.lower2}) {
    EXPECT_NEAR(v, 0.0, 1e-25);
  }
  EXPECT_NEAR(oracle.carrier, 0.5, 1e-12);
}

TEST(Tuning, DefaultPairHasTunedLength) {
  ModulationPlan plan;
  const auto length = tuned_link_length(plan, 1.468);
  ASSERT_TRUE(length);
  const auto phases = propagate(plan, FiberLink{*length, 1.468});
  EXPECT_TRUE(is_tuned(phases));
  EXPECT_NEAR(wrap_two_pi(phases.channel1), pi / 2, 1e-9);
  EXPECT_NEAR(wrap_two_pi(phases.channel2), 3 * pi / 2, 1e-9);
  EXPECT_NEAR(FiberLink(*length, 1.468).group_delay(), 1.25e-9, 1e-18);
}

TEST(Tuning, RatioThreeHalvesCannotBeTuned) {
  ModulationPlan plan;
  plan.Omega2 = 2 * pi * 1.5e9;
  EXPECT_FALSE(tuned_link_length(plan, 1.468).has_value());
}

TEST(Tuning, PropagationPhaseIsGroupIndexTimesLength) {
  ModulationPlan plan;
  const FiberLink fiber{123.0, 1.5};
  const auto phases = propagate(plan, fiber);
  EXPECT_NEAR(phases.channel1, 1.5 / kSpeedOfLight * plan.Omega1 * 123.0, 1e-9);
  EXPECT_NEAR(phases.channel2, 1.5 / kSpeedOfLight * plan.Omega2 * 123.0, 1e-9);
  EXPECT_FALSE(is_tuned(propagate(plan, FiberLink{0.3, 1.468})));
}

TEST(Tuning, WrapTwoPi) {
  EXPECT_NEAR(wrap_two_pi(-0.5), 2 * pi - 0.5, 1e-15);
  EXPECT_NEAR(wrap_two_pi(5 * pi), pi, 1e-12);
  EXPECT_EQ(wrap_two_pi(0.0), 0.0);
}

TEST(OracleGridTest, CommonPeriodAndValidation) {
  ModulationPlan plan;
  EXPECT_NEAR(common_period(plan.Omega1, plan.Omega2), 5e-9, 1e-20);
  const auto grid = default_oracle_grid(plan);
  EXPECT_NO_THROW(validate_grid(plan, grid));
  EXPECT_THROW(validate_grid(plan, OracleGrid{8, grid.period}), std::invalid_argument);
  EXPECT_THROW(validate_grid(plan, OracleGrid{grid.samples, 1.1 * grid.period}), std::invalid_argument);
}

TEST(ToneProjection, RecoversPureTonePowerAndRejectsOffGridTones) {
  TimeDomainField f;
  f.sample_rate = 1024.0;
  const double w = 2 * pi * 17.0;
  for (int n = 0; n < 1024; ++n) {
    const double t = n / 1024.0;
    f.samples.push_back(0.3 * std::exp(std::complex<double>(0.0, w * t + 0.4)) +
                        0.1 * std::exp(std::complex<double>(0.0, -w * t)));
  }
  EXPECT_NEAR(tone_power(f, w), 0.09, 1e-12);
  EXPECT_NEAR(tone_power(f, -w), 0.01, 1e-12);
  EXPECT_NEAR(tone_power(f, 2 * pi * 5.0), 0.0, 1e-20);
  EXPECT_THROW(tone_power(f, 2 * pi * 17.5), std::invalid_argument);
}

TEST(FringeFitting, RecoversAmplitudeAndVisibility) {
  std::vector<double> phi;
  std::vector<double> y;
  for (int k = 0; k < 32; ++k) {
    phi.push_back(2 * pi * k / 32.0);
    y.push_back(3.0 * std::pow(std::sin(phi.back() / 2), 2));
  }
  const auto fit = fit_fringe(phi, y, FringeShape::sin2);
  EXPECT_NEAR(fit.amplitude, 3.0, 1e-12);
  EXPECT_LT(fit.max_relative_residual, 1e-12);
  EXPECT_NEAR(visibility(y), 1.0, 1e-12);
  EXPECT_GT(fit_fringe(phi, y, FringeShape::cos2).max_relative_residual, 0.5);
  EXPECT_EQ(visibility(std::vector<double>{0.0, 0.0}), 0.0);
  EXPECT_THROW(fit_fringe(phi, std::vector<double>{1.0}, FringeShape::cos2), std::invalid_argument);
}

TEST(ModulationPlanTest, ValidationAndWarnings) {
  ModulationPlan plan;
  EXPECT_NO_THROW(plan.validate());
  EXPECT_TRUE(plan.warnings().empty());
  auto bad = plan;
  bad.m3 = -0.1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = plan;
  bad.Omega2 = bad.Omega1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  auto loud = plan;
  loud.m1 = 0.5;
  EXPECT_FALSE(loud.warnings().empty());
  auto biased = plan;
  biased.psi1 = pi / 2;
  EXPECT_FALSE(biased.warnings().empty());
  EXPECT_THROW((FiberLink{-1.0, 1.468}.validate()), std::invalid_argument);
}

TEST(AliceField, PushPullAndSingleArmShareIntensityTransfer) {
  ModulationPlan plan;
  plan.m1 = 0.7;
  plan.m2 = 0.4;
  for (double t = 0.0; t < 5e-9; t += 1.7e-10) {
    EXPECT_NEAR(std::norm(alice_field(plan, t, ModulatorModel::push_pull)),
                std::norm(alice_field(plan, t, ModulatorModel::single_arm)), 1e-12);
  }
}

TEST(AliceField, SmallSignalIntensityTracksExactIntensity) {
  ModulationPlan plan;
  for (double t = 0.0; t < 5e-9; t += 2.3e-10) {
    EXPECT_NEAR(alice_intensity_small_signal(plan, t), std::norm(alice_field_exact(plan, t)),
                plan.m1 * plan.m1);
  }
}

}  // namespace
