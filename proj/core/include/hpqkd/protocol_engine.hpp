#pragma once

// End-to-end sessions for the four protocol compositions over a lossy channel:
//   baseline_bb84    one sideband channel, random bases, sifting.
//   hybrid           bases taken from R (sent over the mesoscopic channel), so
//                    Alice and Bob always agree and nothing is sifted away.
//   parallel         two sideband channels, each an independent baseline BB84.
//   hybrid_parallel  both sideband channels driven by R, one R bit per channel
//                    per slot (channel 1 first).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hpqkd/key_pipeline.hpp"
#include "hpqkd/random.hpp"
#include "hpqkd/sideband_optics.hpp"

namespace hpqkd::protocol {

using keys::Bit;
using keys::BitString;

enum class Mode { baseline_bb84, hybrid, parallel, hybrid_parallel };

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view name);
std::size_t channel_count(Mode mode);
bool uses_mesoscopic_channel(Mode mode);

struct ChannelModel {
  double length_km = 0.0;
  double loss_db_per_km = 0.2;
  double detector_efficiency = 1.0;
  double dark_count_prob = 0.0;  // per detector per gate
  double mu_weak = 0.1;          // mean photons per weak pulse, per channel
  double alpha_sq_meso = 25.0;   // mean photons per mesoscopic pulse
  std::size_t M = 256;           // basis count of the mesoscopic channel

  static ChannelModel ideal();

  /// Fiber transmittance 10^(-loss*L/10).
  double transmittance() const;
  /// Per-photon survival: detector efficiency times fiber transmittance.
  double survival() const;

  void validate() const;
  /// Security warning when alpha_sq_meso >= M.
  std::vector<std::string> warnings() const;
};

/// Link length meeting the sideband tuning condition for `plan`.
optics::FiberLink default_tuned_fiber(const optics::ModulationPlan& plan,
                                      double refractive_index = 1.468);

struct SessionConfig {
  Mode mode = Mode::baseline_bb84;
  std::size_t num_slots = 10000;
  ChannelModel channel = ChannelModel::ideal();
  optics::ModulationPlan plan;
  optics::FiberLink fiber = default_tuned_fiber(optics::ModulationPlan{});
  std::uint64_t seed = 1;
  /// Test hook: fraction of slots where Bob's interference phase silently uses
  /// the other basis from the one he records.
  double bob_basis_fault_fraction = 0.0;

  void validate() const;
};

/// Alice phase for (basis, bit): basis*pi/2 + bit*pi.
double alice_phase(Bit basis, Bit bit);
/// Bob phase for basis: basis*pi/2.
double bob_phase(Bit basis);

enum class DetectorOutcome { none, upper, lower, both };

/// Probability that a surviving photon on `channel` (1 or 2) reaches the
/// upper-sideband detector, from the closed-form sideband split at the given
/// phase difference. nullopt when the channel carries no sideband power.
std::optional<double> upper_probability(double delta_phi, int channel,
                                        const optics::ModulationPlan& plan,
                                        const optics::FiberLink& fiber);

/// One weak-pulse slot: Poisson photon number thinned by survival; any
/// surviving photon produces exactly one detector outcome split per the
/// sideband law; dark counts are added independently per detector.
DetectorOutcome detection_split(double delta_phi, int channel,
                                const optics::ModulationPlan& plan,
                                const optics::FiberLink& fiber,
                                const ChannelModel& channel_model, Rng& rng);

/// Fraction of `matched` slot indices where the bit strings differ. Throws on
/// length mismatch or empty input.
double compute_qber(std::span<const Bit> alice, std::span<const Bit> bob,
                    std::span<const std::size_t> matched);
double compute_qber(std::span<const Bit> alice, std::span<const Bit> bob);

/// Expected useful (sifted, single-click) bits per slot of one baseline BB84
/// channel on `channel`.
double baseline_reference_rate(const ChannelModel& channel);

struct ChannelBreakdown {
  int channel = 1;
  std::size_t usable_slots = 0;
  std::size_t raw_detections = 0;
  std::size_t sifted_bits = 0;
  std::size_t bit_errors = 0;
  double qber = 0.0;
  double useful_rate = 0.0;  // sifted_bits / usable_slots
  double rate_ratio_vs_baseline = 0.0;
};

/// Public classical-channel traffic. Baseline announcements carry Bob's basis;
/// hybrid announcements carry only slot indices and erasure flags.
struct TranscriptEntry {
  enum class Kind { detected, erasure };
  std::size_t slot = 0;
  int channel = 1;
  Kind kind = Kind::detected;
  std::optional<int> announced_basis;
};

struct SessionReport {
  Mode mode = Mode::baseline_bb84;
  std::size_t slots = 0;
  std::size_t channels = 1;
  std::size_t usable_slots = 0;
  std::size_t raw_detections = 0;
  std::size_t sifted_bits = 0;
  std::size_t bit_errors = 0;
  double qber = 0.0;
  double useful_rate_bits_per_slot = 0.0;  // per usable slot, summed over channels
  double raw_slot_rate = 0.0;              // sifted_bits / slots
  double baseline_reference_rate = 0.0;
  double rate_ratio_vs_baseline = 0.0;
  double rate_ratio_stderr = 0.0;
  std::size_t meso_pulses = 0;
  std::size_t meso_erasures = 0;
  std::size_t meso_bit_errors = 0;
  std::vector<ChannelBreakdown> per_channel;
  std::vector<TranscriptEntry> transcript;
  std::vector<std::string> warnings;
  BitString alice_key;  // channel-1 key then channel-2 key
  BitString bob_key;
};

SessionReport run_baseline_bb84(const SessionConfig& config);
SessionReport run_hybrid(const SessionConfig& config);
SessionReport run_parallel(const SessionConfig& config);
SessionReport run_hybrid_parallel(const SessionConfig& config);

/// Dispatches on config.mode.
SessionReport run_session(const SessionConfig& config);

}  // namespace hpqkd::protocol
