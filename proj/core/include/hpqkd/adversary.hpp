#pragma once

// Eavesdropper models against the mesoscopic polarization channel.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hpqkd/coherent_polarization.hpp"
#include "hpqkd/random.hpp"

namespace hpqkd::adversary {

using polarization::DetectionEvent;
using polarization::TwoModeCoherentState;

/// Eve's detector pair. Defaults are ideal (unit efficiency, noiseless).
struct EveDetectors {
  double efficiency = 1.0;
  double dark_count_prob = 0.0;
};

struct BruteForceConfig {
  std::size_t M = 0;
  /// Sorted, distinct analyzer angles in [0, pi); each implies its orthogonal
  /// partner angle + pi/2.
  std::vector<double> candidate_angles;
  EveDetectors detectors;

  /// phi_i = i*pi/(2M), i = 0..M-1.
  static BruteForceConfig uniform(std::size_t M);
  void validate() const;
};

struct AttackOutcome {
  std::optional<std::size_t> estimated_index;
  std::optional<double> estimated_angle;
  std::size_t case_both = 0;  // both detectors clicked: candidate eliminated
  std::size_t case_none = 0;  // no click: no information
  std::size_t case_one = 0;   // exactly one detector clicked: consistent
  bool success = false;       // estimate matches Alice's basis
  std::vector<DetectionEvent> sub_pulse_events;
};

/// Equal-weight split into M copies of the same polarization, each with mean
/// photon number |alpha|^2 / M.
std::vector<TwoModeCoherentState> split_pulse(const TwoModeCoherentState& pulse,
                                              std::size_t M);

/// Precomputed brute-force attacker for one candidate set.
///
/// Each sub-pulse i is rotated by -phi_i and measured on a PBS. Candidates whose
/// sub-pulse clicked in both arms are eliminated. Among surviving candidates
/// with a single-detector click, the estimate maximizes the Poisson
/// log-likelihood of every sub-pulse record under the hypothesis that Alice
/// sent phi_h (or its orthogonal partner); ties are broken uniformly. With no
/// single-click candidate the estimate is uniform over the survivors, and with
/// no survivor there is no estimate.
class BruteForceAttacker {
 public:
  explicit BruteForceAttacker(BruteForceConfig config);

  const BruteForceConfig& config() const { return config_; }

  AttackOutcome identify(const TwoModeCoherentState& pulse, Rng& rng) const;

  /// True when `theta` equals candidate `index` or its orthogonal partner.
  bool same_basis(double theta, std::size_t index) const;

 private:
  BruteForceConfig config_;
  std::vector<double> cos2_;  // cos2_[h*M + i] = cos^2(phi_h - phi_i)
};

/// Throws std::invalid_argument when M < 2.
AttackOutcome brute_force_identify(const TwoModeCoherentState& pulse,
                                   const BruteForceConfig& config, Rng& rng);

struct SuccessPoint {
  double alpha_sq = 0.0;
  std::size_t M = 0;
  std::size_t trials = 0;
  double success_rate = 0.0;
  double standard_error = 0.0;  // binomial
};

/// Empirical brute-force success probability for each |alpha|^2 in the grid.
/// Alice's angle is drawn uniformly from the candidate set and its orthogonal
/// partners. Trial t of grid point g uses stream (seed, t, attack_trial, g), so
/// results do not depend on `threads`.
std::vector<SuccessPoint> attack_success_curve(std::span<const double> alpha_sq_grid,
                                               std::size_t M, std::size_t trials,
                                               std::uint64_t seed,
                                               unsigned threads = 1);

struct AmplifiedPulse {
  TwoModeCoherentState signal;
  /// Mean unpolarized ASE photons over both polarization modes; each arm of
  /// any analyzer sees half of it.
  double ase_photons = 0.0;
};

/// Phase-insensitive amplification with gain G >= 1. When `ase_photons` is
/// omitted it defaults to 2*(G-1), i.e. G-1 photons per polarization mode.
/// Throws when G < 1, ase < 0, or G > 1 with zero ASE.
AmplifiedPulse amplifier_attack(const TwoModeCoherentState& pulse, double gain,
                                std::optional<double> ase_photons = std::nullopt);

/// PBS measurement of an amplified pulse: signal counts plus independent
/// Poisson(ase/2) background in each arm.
DetectionEvent measure_amplified(const AmplifiedPulse& pulse, double analyzer_angle,
                                 Rng& rng);

struct TappedPulse {
  TwoModeCoherentState to_bob;
  TwoModeCoherentState to_eve;
};

/// Passive beam-splitter tap: Bob keeps `transmittance` of the photons.
TappedPulse beam_splitter_tap(const TwoModeCoherentState& pulse, double transmittance);

struct AnomalyVerdict {
  std::size_t events = 0;
  std::size_t wrong_arm_clicks = 0;
  double wrong_arm_rate = 0.0;
  double expected_dark_rate = 0.0;
  double threshold = 0.0;  // expected + 5 binomial standard errors
  bool anomaly = false;
};

/// Bob measures each mesoscopic pulse with his analyzer aligned to Alice's
/// polarization, so the reflect arm is the wrong-polarization arm and should
/// only fire at the dark-count rate. Throws on an empty event list.
AnomalyVerdict bob_anomaly_monitor(std::span<const DetectionEvent> events,
                                   double expected_dark_rate);

struct PnsModel {
  double mu = 0.0;
  unsigned min_exploitable = 2;  // 2 for standard BB84, 3 for hybrid

  void validate() const;
};

/// Poisson tail P(n >= min_exploitable) for mean mu.
double pns_exploitable_fraction(const PnsModel& model);

struct PnsEstimate {
  double fraction = 0.0;
  double standard_error = 0.0;
  std::size_t trials = 0;
};

PnsEstimate pns_monte_carlo(const PnsModel& model, std::size_t trials, Rng& rng);

}  // namespace hpqkd::adversary
