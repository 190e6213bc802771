#include "hpqkd/protocol_engine.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hpqkd/coherent_polarization.hpp"

namespace hpqkd::protocol {
namespace {

using std::numbers::pi;

struct ModeName {
  Mode mode;
  std::string_view name;
};

constexpr std::array kModeNames{
    ModeName{Mode::baseline_bb84, "baseline_bb84"},
    ModeName{Mode::hybrid, "hybrid"},
    ModeName{Mode::parallel, "parallel"},
    ModeName{Mode::hybrid_parallel, "hybrid_parallel"},
};

void require_mode(const SessionConfig& config, Mode expected) {
  if (config.mode != expected) {
    throw std::invalid_argument(std::string("session mode mismatch: expected ") +
                                std::string(to_string(expected)) + ", config has " +
                                std::string(to_string(config.mode)));
  }
}

void require_tuned(const SessionConfig& config) {
  if (!optics::is_tuned(optics::propagate(config.plan, config.fiber), 1e-6)) {
    throw std::invalid_argument(
        "optics not tuned: link phases must be pi/2 (channel 1) and 3*pi/2 (channel 2) within 1e-6 rad");
  }
}

// Per-channel sideband routing, evaluated once per session.
struct ChannelOptics {
  int channel = 1;
  // Upper-detector probability indexed by delta-phi in units of pi/2 (mod 4).
  std::array<std::optional<double>, 4> upper{};
  Bit bit_on_upper = 0;  // bit Bob reads from an upper click
};

ChannelOptics channel_optics(int channel, const SessionConfig& config) {
  ChannelOptics co;
  co.channel = channel;
  for (int q = 0; q < 4; ++q) {
    co.upper[static_cast<std::size_t>(q)] =
        upper_probability(q * 0.5 * pi, channel, config.plan, config.fiber);
  }
  // Matched basis with bit 0 gives delta-phi 0; that detector reads as 0.
  co.bit_on_upper = co.upper[0].value_or(1.0) >= 0.5 ? 0 : 1;
  return co;
}

int quarter_turns(Bit alice_basis, Bit alice_bit, Bit bob_basis) {
  const int q = static_cast<int>(alice_basis) + 2 * static_cast<int>(alice_bit) -
                static_cast<int>(bob_basis);
  return ((q % 4) + 4) % 4;
}

DetectorOutcome sample_outcome(std::optional<double> upper_prob, const ChannelModel& ch,
                               Rng& rng) {
  bool upper = false;
  bool lower = false;
  if (upper_prob) {
    const auto photons = poisson_draw(rng, ch.mu_weak * ch.survival());
    if (photons > 0) {
      (bernoulli_draw(rng, *upper_prob) ? upper : lower) = true;
    }
  }
  upper = bernoulli_draw(rng, ch.dark_count_prob) || upper;
  lower = bernoulli_draw(rng, ch.dark_count_prob) || lower;
  if (upper && lower) return DetectorOutcome::both;
  if (upper) return DetectorOutcome::upper;
  if (lower) return DetectorOutcome::lower;
  return DetectorOutcome::none;
}

struct ChannelTally {
  ChannelBreakdown stats;
  BitString alice_key;
  BitString bob_key;
};

// Fixed-order draws at the head of a slot stream, so that every mode and the
// fault hook consume the same words and the photon draws stay aligned.
struct SlotPrelude {
  Bit alice_basis = 0;
  Bit bob_basis = 0;
  Bit alice_bit = 0;
  double fault_u = 1.0;
};

SlotPrelude draw_prelude(Rng& rng) {
  SlotPrelude p;
  p.alice_basis = static_cast<Bit>(rng() >> 63);
  p.bob_basis = static_cast<Bit>(rng() >> 63);
  p.alice_bit = static_cast<Bit>(rng() >> 63);
  p.fault_u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return p;
}

struct SlotResult {
  bool detected = false;
  bool single = false;
  Bit alice_bit = 0;
  Bit bob_bit = 0;
};

SlotResult run_weak_slot(const SessionConfig& config, const ChannelOptics& co,
                         const SlotPrelude& pre, Bit alice_basis, Bit bob_basis, Rng& link) {
  SlotResult r;
  r.alice_bit = pre.alice_bit;
  Bit bob_physical = bob_basis;
  if (pre.fault_u < config.bob_basis_fault_fraction) bob_physical ^= 1u;

  const int q = quarter_turns(alice_basis, r.alice_bit, bob_physical);
  const auto outcome =
      sample_outcome(co.upper[static_cast<std::size_t>(q)], config.channel, link);
  r.detected = outcome != DetectorOutcome::none;
  r.single = outcome == DetectorOutcome::upper || outcome == DetectorOutcome::lower;
  if (r.single) {
    r.bob_bit = outcome == DetectorOutcome::upper ? co.bit_on_upper
                                                  : static_cast<Bit>(co.bit_on_upper ^ 1u);
  }
  return r;
}

Rng slot_stream(const SessionConfig& config, std::size_t slot, std::size_t channel_index) {
  return derive_stream(config.seed, slot, StreamRole::weak_channel, channel_index + 1);
}

void record(ChannelTally& tally, const SlotResult& r, bool keep) {
  if (r.detected) ++tally.stats.raw_detections;
  if (keep && r.single) {
    ++tally.stats.sifted_bits;
    if (r.alice_bit != r.bob_bit) ++tally.stats.bit_errors;
    tally.alice_key.push_back(r.alice_bit);
    tally.bob_key.push_back(r.bob_bit);
  }
}

// Result of distributing R over the mesoscopic channel.
struct MesoResult {
  BitString r;
  std::vector<std::optional<Bit>> decoded;
  std::size_t erasures = 0;
  std::size_t bit_errors = 0;
};

MesoResult distribute_bases(const SessionConfig& config, std::size_t pulses) {
  const ChannelModel& ch = config.channel;
  const unsigned width = keys::bits_per_basis(ch.M);

  Rng key_rng = derive_stream(config.seed, 0, StreamRole::shared_key);
  const auto seed_key = keys::SeedKey::random(256, key_rng);
  const auto kprime = keys::expand_key(seed_key, pulses * width);

  Rng entropy = derive_stream(config.seed, 0, StreamRole::entropy_r);
  MesoResult out;
  out.r = keys::generate_R(pulses, entropy);
  const auto schedule = keys::build_basis_schedule(kprime, out.r, ch.M);

  std::vector<polarization::DetectionEvent> events(pulses);
  const double mean_at_bob = ch.alpha_sq_meso * ch.survival();
  for (std::size_t j = 0; j < pulses; ++j) {
    Rng rng = derive_stream(config.seed, j, StreamRole::meso_channel);
    const auto& slot = schedule.slots[j];
    const auto state = polarization::TwoModeCoherentState::from_mean_photons(mean_at_bob,
                                                                             slot.alice_angle);
    auto ev = polarization::pbs_measure(
        state, keys::first_quadrant_angle(slot.basis_index, ch.M), rng);
    ev.counts_transmit += bernoulli_draw(rng, ch.dark_count_prob) ? 1 : 0;
    ev.counts_reflect += bernoulli_draw(rng, ch.dark_count_prob) ? 1 : 0;
    events[j] = ev;
  }
  out.decoded = keys::bob_decode(kprime, events, ch.M);
  for (std::size_t j = 0; j < pulses; ++j) {
    if (!out.decoded[j]) {
      ++out.erasures;
    } else if (*out.decoded[j] != out.r[j]) {
      ++out.bit_errors;
    }
  }
  return out;
}

SessionReport finalize(const SessionConfig& config, std::vector<ChannelTally>& tallies,
                       std::vector<TranscriptEntry> transcript) {
  SessionReport rep;
  rep.mode = config.mode;
  rep.slots = config.num_slots;
  rep.channels = tallies.size();
  rep.baseline_reference_rate = baseline_reference_rate(config.channel);
  rep.transcript = std::move(transcript);
  rep.warnings = config.channel.warnings();
  for (auto& w : config.plan.warnings()) rep.warnings.push_back(std::move(w));

  double variance = 0.0;
  for (auto& t : tallies) {
    auto& s = t.stats;
    s.qber = s.sifted_bits ? static_cast<double>(s.bit_errors) / static_cast<double>(s.sifted_bits)
                           : 0.0;
    s.useful_rate = s.usable_slots ? static_cast<double>(s.sifted_bits) /
                                         static_cast<double>(s.usable_slots)
                                   : 0.0;
    s.rate_ratio_vs_baseline =
        rep.baseline_reference_rate > 0.0 ? s.useful_rate / rep.baseline_reference_rate : 0.0;
    if (s.usable_slots) {
      variance += s.useful_rate * (1.0 - s.useful_rate) / static_cast<double>(s.usable_slots);
    }
    rep.usable_slots += s.usable_slots;
    rep.raw_detections += s.raw_detections;
    rep.sifted_bits += s.sifted_bits;
    rep.bit_errors += s.bit_errors;
    rep.useful_rate_bits_per_slot += s.useful_rate;
    rep.alice_key.insert(rep.alice_key.end(), t.alice_key.begin(), t.alice_key.end());
    rep.bob_key.insert(rep.bob_key.end(), t.bob_key.begin(), t.bob_key.end());
    rep.per_channel.push_back(s);
  }
  rep.qber = rep.sifted_bits ? static_cast<double>(rep.bit_errors) /
                                   static_cast<double>(rep.sifted_bits)
                             : 0.0;
  rep.raw_slot_rate = static_cast<double>(rep.sifted_bits) / static_cast<double>(rep.slots);
  if (rep.baseline_reference_rate > 0.0) {
    rep.rate_ratio_vs_baseline = rep.useful_rate_bits_per_slot / rep.baseline_reference_rate;
    rep.rate_ratio_stderr = std::sqrt(variance) / rep.baseline_reference_rate;
  }
  return rep;
}

SessionReport run_sifted(const SessionConfig& config, std::size_t channels) {
  std::vector<ChannelOptics> optics;
  std::vector<ChannelTally> tallies(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    optics.push_back(channel_optics(static_cast<int>(c + 1), config));
    tallies[c].stats.channel = static_cast<int>(c + 1);
    tallies[c].stats.usable_slots = config.num_slots;
  }
  std::vector<TranscriptEntry> transcript;
  for (std::size_t s = 0; s < config.num_slots; ++s) {
    for (std::size_t c = 0; c < channels; ++c) {
      Rng rng = slot_stream(config, s, c);
      const SlotPrelude pre = draw_prelude(rng);
      const SlotResult r =
          run_weak_slot(config, optics[c], pre, pre.alice_basis, pre.bob_basis, rng);
      if (r.detected) {
        transcript.push_back({s, static_cast<int>(c + 1), TranscriptEntry::Kind::detected,
                              static_cast<int>(pre.bob_basis)});
      }
      record(tallies[c], r, pre.alice_basis == pre.bob_basis);
    }
  }
  return finalize(config, tallies, std::move(transcript));
}

SessionReport run_hybrid_channels(const SessionConfig& config, std::size_t channels) {
  const MesoResult meso = distribute_bases(config, config.num_slots * channels);
  std::vector<ChannelOptics> optics;
  std::vector<ChannelTally> tallies(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    optics.push_back(channel_optics(static_cast<int>(c + 1), config));
    tallies[c].stats.channel = static_cast<int>(c + 1);
  }
  std::vector<TranscriptEntry> transcript;
  for (std::size_t s = 0; s < config.num_slots; ++s) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t j = s * channels + c;  // R consumed channel 1 first
      const int channel = static_cast<int>(c + 1);
      if (!meso.decoded[j]) {
        transcript.push_back({s, channel, TranscriptEntry::Kind::erasure, std::nullopt});
        continue;
      }
      ++tallies[c].stats.usable_slots;
      Rng rng = slot_stream(config, s, c);
      const SlotPrelude pre = draw_prelude(rng);
      const SlotResult r =
          run_weak_slot(config, optics[c], pre, meso.r[j], *meso.decoded[j], rng);
      if (r.detected) {
        transcript.push_back({s, channel, TranscriptEntry::Kind::detected, std::nullopt});
      }
      record(tallies[c], r, true);
    }
  }
  SessionReport rep = finalize(config, tallies, std::move(transcript));
  rep.meso_pulses = meso.r.size();
  rep.meso_erasures = meso.erasures;
  rep.meso_bit_errors = meso.bit_errors;
  return rep;
}

}  // namespace

std::string_view to_string(Mode mode) {
  for (const auto& m : kModeNames) {
    if (m.mode == mode) return m.name;
  }
  return "unknown";
}

std::optional<Mode> parse_mode(std::string_view name) {
  for (const auto& m : kModeNames) {
    if (m.name == name) return m.mode;
  }
  return std::nullopt;
}

std::size_t channel_count(Mode mode) {
  return mode == Mode::parallel || mode == Mode::hybrid_parallel ? 2 : 1;
}

bool uses_mesoscopic_channel(Mode mode) {
  return mode == Mode::hybrid || mode == Mode::hybrid_parallel;
}

ChannelModel ChannelModel::ideal() {
  ChannelModel ch;
  ch.length_km = 0.0;
  ch.detector_efficiency = 1.0;
  ch.dark_count_prob = 0.0;
  return ch;
}

double ChannelModel::transmittance() const {
  return std::pow(10.0, -loss_db_per_km * length_km / 10.0);
}

double ChannelModel::survival() const { return detector_efficiency * transmittance(); }

void ChannelModel::validate() const {
  if (!(length_km >= 0.0)) throw std::invalid_argument("channel.length_km must be >= 0");
  if (!(loss_db_per_km >= 0.0)) throw std::invalid_argument("channel.loss_db_per_km must be >= 0");
  if (!(detector_efficiency >= 0.0 && detector_efficiency <= 1.0)) {
    throw std::invalid_argument("channel.detector_efficiency must lie in [0, 1]");
  }
  if (!(dark_count_prob >= 0.0 && dark_count_prob <= 1.0)) {
    throw std::invalid_argument("channel.dark_count_prob must lie in [0, 1]");
  }
  if (!(mu_weak >= 0.0)) throw std::invalid_argument("channel.mu_weak must be >= 0");
  if (!(alpha_sq_meso >= 0.0)) throw std::invalid_argument("channel.alpha_sq_meso must be >= 0");
  keys::bits_per_basis(M);
}

std::vector<std::string> ChannelModel::warnings() const {
  std::vector<std::string> out;
  if (alpha_sq_meso >= static_cast<double>(M)) {
    out.emplace_back(
        "alpha_sq_meso >= M: mesoscopic pulses are open to brute-force polarization identification");
  }
  return out;
}

optics::FiberLink default_tuned_fiber(const optics::ModulationPlan& plan, double refractive_index) {
  const auto length = optics::tuned_link_length(plan, refractive_index);
  return optics::FiberLink{length.value_or(0.0), refractive_index};
}

void SessionConfig::validate() const {
  if (num_slots == 0) throw std::invalid_argument("session.num_slots must be >= 1");
  if (!(bob_basis_fault_fraction >= 0.0 && bob_basis_fault_fraction <= 1.0)) {
    throw std::invalid_argument("session.bob_basis_fault_fraction must lie in [0, 1]");
  }
  channel.validate();
  plan.validate();
  fiber.validate();
}

double alice_phase(Bit basis, Bit bit) {
  return static_cast<double>(basis & 1u) * 0.5 * pi + static_cast<double>(bit & 1u) * pi;
}

double bob_phase(Bit basis) { return static_cast<double>(basis & 1u) * 0.5 * pi; }

std::optional<double> upper_probability(double delta_phi, int channel,
                                        const optics::ModulationPlan& plan,
                                        const optics::FiberLink& fiber) {
  if (channel != 1 && channel != 2) throw std::invalid_argument("channel must be 1 or 2");
  optics::ModulationPlan p = plan;
  if (channel == 1) {
    p.phi1A = delta_phi;
    p.phi1B = 0.0;
  } else {
    p.phi2A = delta_phi;
    p.phi2B = 0.0;
  }
  const auto spectrum = optics::sideband_intensities_closed_form(p, fiber);
  const double upper = channel == 1 ? spectrum.upper1 : spectrum.upper2;
  const double lower = channel == 1 ? spectrum.lower1 : spectrum.lower2;
  const double total = upper + lower;
  if (!(total > 0.0)) return std::nullopt;
  return upper / total;
}

DetectorOutcome detection_split(double delta_phi, int channel, const optics::ModulationPlan& plan,
                                const optics::FiberLink& fiber, const ChannelModel& channel_model,
                                Rng& rng) {
  return sample_outcome(upper_probability(delta_phi, channel, plan, fiber), channel_model, rng);
}

double compute_qber(std::span<const Bit> alice, std::span<const Bit> bob,
                    std::span<const std::size_t> matched) {
  if (alice.size() != bob.size()) throw std::invalid_argument("compute_qber: length mismatch");
  if (alice.empty() || matched.empty()) throw std::invalid_argument("compute_qber: empty input");
  std::size_t errors = 0;
  for (std::size_t i : matched) {
    if (i >= alice.size()) throw std::invalid_argument("compute_qber: slot index out of range");
    if ((alice[i] & 1u) != (bob[i] & 1u)) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(matched.size());
}

double compute_qber(std::span<const Bit> alice, std::span<const Bit> bob) {
  std::vector<std::size_t> all(alice.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return compute_qber(alice, bob, all);
}

double baseline_reference_rate(const ChannelModel& channel) {
  const double q = -std::expm1(-channel.mu_weak * channel.survival());
  const double d = channel.dark_count_prob;
  const double single = q * (1.0 - d) + (1.0 - q) * 2.0 * d * (1.0 - d);
  return 0.5 * single;
}

SessionReport run_baseline_bb84(const SessionConfig& config) {
  require_mode(config, Mode::baseline_bb84);
  config.validate();
  return run_sifted(config, 1);
}

SessionReport run_hybrid(const SessionConfig& config) {
  require_mode(config, Mode::hybrid);
  config.validate();
  return run_hybrid_channels(config, 1);
}

SessionReport run_parallel(const SessionConfig& config) {
  require_mode(config, Mode::parallel);
  config.validate();
  require_tuned(config);
  return run_sifted(config, 2);
}

SessionReport run_hybrid_parallel(const SessionConfig& config) {
  require_mode(config, Mode::hybrid_parallel);
  config.validate();
  require_tuned(config);
  return run_hybrid_channels(config, 2);
}

SessionReport run_session(const SessionConfig& config) {
  switch (config.mode) {
    case Mode::baseline_bb84: return run_baseline_bb84(config);
    case Mode::hybrid: return run_hybrid(config);
    case Mode::parallel: return run_parallel(config);
    case Mode::hybrid_parallel: return run_hybrid_parallel(config);
  }
  throw std::invalid_argument("unknown session mode");
}

}  // namespace hpqkd::protocol
