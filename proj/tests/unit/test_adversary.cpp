#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "hpqkd/adversary.hpp"

namespace {

using namespace hpqkd::adversary;
using hpqkd::Rng;
using std::numbers::pi;

double poisson_pmf(unsigned k, double mean) {
  if (mean <= 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
}

double log_term(unsigned k, double mean) {
  if (k == 0) return -mean;
  if (mean <= 0.0) return -std::numeric_limits<double>::infinity();
  return k * std::log(mean) - mean;
}

// Exact success probability of the likelihood estimator for M = 2 by
// enumerating every count record (t0, r0, t1, r1) up to a cutoff.
double enumerate_m2_success(double alpha_sq, double theta, unsigned cutoff) {
  const double phi[2] = {0.0, pi / 4};
  const double mu = alpha_sq / 2;
  double mean_t[2];
  double mean_r[2];
  for (int i = 0; i < 2; ++i) {
    mean_t[i] = mu * std::pow(std::cos(theta - phi[i]), 2);
    mean_r[i] = mu * std::pow(std::sin(theta - phi[i]), 2);
  }
  auto basis_of = [&](double angle) {
    const double x = std::fmod(angle, pi / 2);
    return std::abs(x) < 1e-9 || std::abs(x - pi / 2) < 1e-9 ? 0 : 1;
  };
  const int truth = basis_of(theta);

  double success = 0.0;
  for (unsigned t0 = 0; t0 <= cutoff; ++t0)
    for (unsigned r0 = 0; r0 <= cutoff; ++r0)
      for (unsigned t1 = 0; t1 <= cutoff; ++t1)
        for (unsigned r1 = 0; r1 <= cutoff; ++r1) {
          const double p = poisson_pmf(t0, mean_t[0]) * poisson_pmf(r0, mean_r[0]) *
                           poisson_pmf(t1, mean_t[1]) * poisson_pmf(r1, mean_r[1]);
          if (p < 1e-300) continue;
          const unsigned t[2] = {t0, t1};
          const unsigned r[2] = {r0, r1};
          std::vector<int> survivors;
          std::vector<int> single;
          for (int i = 0; i < 2; ++i) {
            const bool both = t[i] > 0 && r[i] > 0;
            if (both) continue;
            survivors.push_back(i);
            if (t[i] > 0 || r[i] > 0) single.push_back(i);
          }
          std::vector<int> best;
          if (!single.empty()) {
            double best_score = -std::numeric_limits<double>::infinity();
            for (int h : single) {
              double score = -std::numeric_limits<double>::infinity();
              for (double orient : {phi[h], phi[h] + pi / 2}) {
                double s = 0.0;
                for (int i = 0; i < 2; ++i) {
                  const double c = std::pow(std::cos(orient - phi[i]), 2);
                  s += log_term(t[i], mu * c) + log_term(r[i], mu * (1 - c));
                }
                score = std::max(score, s);
              }
              if (score > best_score + 1e-9) {
                best_score = score;
                best = {h};
              } else if (std::abs(score - best_score) <= 1e-9 ||
                         (std::isinf(score) && std::isinf(best_score))) {
                best.push_back(h);
              }
            }
          } else {
            best = survivors;
          }
          if (best.empty()) continue;
          double hit = 0.0;
          for (int h : best) hit += (h == truth) ? 1.0 : 0.0;
          success += p * hit / static_cast<double>(best.size());
        }
  return success;
}

TEST(BruteForce, MonteCarloMatchesExactEnumerationForTwoBases) {
  const BruteForceAttacker attacker(BruteForceConfig::uniform(2));
  for (double alpha_sq : {0.5, 2.0, 6.0}) {
    for (double theta : {0.0, pi / 4, pi / 2, 3 * pi / 4}) {
      const double exact = enumerate_m2_success(alpha_sq, theta, 30);
      const int n = 20000;
      int hits = 0;
      Rng rng(static_cast<std::uint64_t>(alpha_sq * 1000 + theta * 10));
      const auto pulse = TwoModeCoherentState::from_mean_photons(alpha_sq, theta);
      for (int i = 0; i < n; ++i) hits += attacker.identify(pulse, rng).success ? 1 : 0;
      const double p = static_cast<double>(hits) / n;
      EXPECT_NEAR(p, exact, 4.5 * std::sqrt(exact * (1 - exact) / n) + 1e-3)
          << "alpha_sq=" << alpha_sq << " theta=" << theta;
    }
  }
}

TEST(BruteForce, CaseCountsCoverAllSubPulses) {
  const auto cfg = BruteForceConfig::uniform(16);
  Rng rng(3);
  const auto out = brute_force_identify(TwoModeCoherentState::from_mean_photons(200.0, 0.3), cfg, rng);
  EXPECT_EQ(out.case_both + out.case_none + out.case_one, 16u);
  EXPECT_EQ(out.sub_pulse_events.size(), 16u);
}

TEST(BruteForce, ConfigValidation) {
  EXPECT_THROW(BruteForceConfig::uniform(1), std::invalid_argument);
  const auto cfg = BruteForceConfig::uniform(4);
  ASSERT_EQ(cfg.candidate_angles.size(), 4u);
  EXPECT_NEAR(cfg.candidate_angles[3], 3 * pi / 8, 1e-15);
  const BruteForceAttacker attacker(cfg);
  EXPECT_TRUE(attacker.same_basis(pi / 8 + pi / 2, 1));
  EXPECT_FALSE(attacker.same_basis(pi / 8, 2));
}

TEST(BruteForce, SplitConservesPhotonNumber) {
  const auto parts = split_pulse(TwoModeCoherentState::from_mean_photons(64.0, 0.7), 8);
  ASSERT_EQ(parts.size(), 8u);
  for (const auto& p : parts) {
    EXPECT_NEAR(p.mean_photons(), 8.0, 1e-12);
    EXPECT_NEAR(p.theta(), 0.7, 1e-15);
  }
}

TEST(BruteForce, SuccessCurveIsThreadCountInvariant) {
  const std::vector<double> grid{2.0, 16.0, 64.0};
  const auto one = attack_success_curve(grid, 8, 300, 42, 1);
  const auto many = attack_success_curve(grid, 8, 300, 42, 3);
  ASSERT_EQ(one.size(), many.size());
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(one[i].success_rate, many[i].success_rate);
  EXPECT_THROW(attack_success_curve({}, 8, 300, 1), std::invalid_argument);
  EXPECT_THROW(attack_success_curve(grid, 8, 10, 1), std::invalid_argument);
}

TEST(BruteForce, TwoBasesNeverBelowGuessingFloor) {
  const std::vector<double> grid{0.01, 1.0, 10.0};
  for (const auto& p : attack_success_curve(grid, 2, 2000, 9, 2)) {
    EXPECT_GE(p.success_rate, 0.5 - 3 * std::sqrt(0.25 / 2000));
    EXPECT_LE(p.success_rate, 1.0);
  }
}

TEST(Amplifier, DefaultNoiseAndValidation) {
  const auto pulse = TwoModeCoherentState::from_mean_photons(25.0, 0.2);
  const auto amp = amplifier_attack(pulse, 3.0);
  EXPECT_NEAR(amp.signal.mean_photons(), 75.0, 1e-12);
  EXPECT_NEAR(amp.ase_photons, 4.0, 1e-12);
  EXPECT_THROW(amplifier_attack(pulse, 0.5), std::invalid_argument);
  EXPECT_THROW(amplifier_attack(pulse, 2.0, 0.0), std::invalid_argument);
  EXPECT_NO_THROW(amplifier_attack(pulse, 1.0, 0.0));
}

TEST(Amplifier, AnomalyMonitorFlagsAmplifiedPulses) {
  const auto pulse = TwoModeCoherentState::from_mean_photons(25.0, 0.2);
  Rng rng(12);
  std::vector<DetectionEvent> clean;
  std::vector<DetectionEvent> amplified;
  const auto amp = amplifier_attack(pulse, 2.0);
  for (int i = 0; i < 2000; ++i) {
    clean.push_back(hpqkd::polarization::pbs_measure(pulse, 0.2, rng));
    amplified.push_back(measure_amplified(amp, 0.2, rng));
  }
  EXPECT_FALSE(bob_anomaly_monitor(clean, 1e-4).anomaly);
  const auto verdict = bob_anomaly_monitor(amplified, 1e-4);
  EXPECT_TRUE(verdict.anomaly);
  EXPECT_NEAR(verdict.wrong_arm_rate, 1.0 - std::exp(-1.0), 0.05);
  EXPECT_THROW(bob_anomaly_monitor({}, 1e-4), std::invalid_argument);
}

TEST(Tap, SplitsPhotonsByTransmittance) {
  const auto tapped = beam_splitter_tap(TwoModeCoherentState::from_mean_photons(40.0, 1.0), 0.75);
  EXPECT_NEAR(tapped.to_bob.mean_photons(), 30.0, 1e-12);
  EXPECT_NEAR(tapped.to_eve.mean_photons(), 10.0, 1e-12);
  EXPECT_NEAR(tapped.to_eve.theta(), 1.0, 1e-15);
}

// P(n >= k) = 1 - sum_{j<k} e^-mu mu^j / j!
TEST(Pns, AnalyticTailsAgainstDirectSum) {
  for (double mu : {0.05, 0.1, 0.2, 1.5}) {
    for (unsigned k : {2u, 3u}) {
      double head = 0.0;
      for (unsigned j = 0; j < k; ++j) head += poisson_pmf(j, mu);
      EXPECT_NEAR(pns_exploitable_fraction({mu, k}), 1.0 - head, 1e-15);
    }
  }
  EXPECT_NEAR(pns_exploitable_fraction({0.1, 2}), 4.6788401604e-3, 1e-12);
  EXPECT_NEAR(pns_exploitable_fraction({0.1, 3}), 1.5465307027e-4, 1e-13);
  EXPECT_THROW(pns_exploitable_fraction({0.1, 4}), std::invalid_argument);
  EXPECT_THROW(pns_exploitable_fraction({-0.1, 2}), std::invalid_argument);
}

TEST(Pns, MonteCarloWithinThreeSigma) {
  Rng rng(77);
  const PnsModel model{0.2, 2};
  const auto est = pns_monte_carlo(model, 200000, rng);
  EXPECT_NEAR(est.fraction, pns_exploitable_fraction(model), 3 * est.standard_error);
  EXPECT_EQ(est.trials, 200000u);
}

}  // namespace
