#include "hpqkd/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace hpqkd::adversary {
namespace {

using std::numbers::pi;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log-likelihood kernel sum_arms count*log(mean); the -mean terms are the
// same for every hypothesis and drop out of the comparison.
double count_log_mean(std::uint64_t count, double mean) {
  if (count == 0) return 0.0;
  if (!(mean > 0.0)) return kNegInf;
  return static_cast<double>(count) * std::log(mean);
}

std::uint64_t with_dark_count(std::uint64_t counts, double dark_prob, Rng& rng) {
  return counts + (bernoulli_draw(rng, dark_prob) ? 1 : 0);
}

}  // namespace

BruteForceConfig BruteForceConfig::uniform(std::size_t M) {
  if (M < 2) throw std::invalid_argument("brute force needs M >= 2");
  BruteForceConfig cfg;
  cfg.M = M;
  cfg.candidate_angles.resize(M);
  for (std::size_t i = 0; i < M; ++i) {
    cfg.candidate_angles[i] = static_cast<double>(i) * pi / (2.0 * static_cast<double>(M));
  }
  return cfg;
}

void BruteForceConfig::validate() const {
  if (M < 2) throw std::invalid_argument("brute force needs M >= 2");
  if (candidate_angles.size() != M) {
    throw std::invalid_argument("brute force: candidate_angles must hold M angles");
  }
  for (std::size_t i = 0; i < M; ++i) {
    const double a = candidate_angles[i];
    if (!(a >= 0.0 && a < pi)) {
      throw std::invalid_argument("brute force: candidate angles must lie in [0, pi)");
    }
    if (i > 0 && !(a > candidate_angles[i - 1])) {
      throw std::invalid_argument("brute force: candidate angles must be sorted and distinct");
    }
  }
  if (!(detectors.efficiency > 0.0 && detectors.efficiency <= 1.0) ||
      !(detectors.dark_count_prob >= 0.0 && detectors.dark_count_prob < 1.0)) {
    throw std::invalid_argument("brute force: detector efficiency/dark probability out of range");
  }
}

std::vector<TwoModeCoherentState> split_pulse(const TwoModeCoherentState& pulse,
                                              std::size_t M) {
  if (M == 0) throw std::invalid_argument("split_pulse: M must be >= 1");
  const auto part = pulse.alpha() / std::sqrt(static_cast<double>(M));
  return std::vector<TwoModeCoherentState>(M, TwoModeCoherentState(part, pulse.theta()));
}

BruteForceAttacker::BruteForceAttacker(BruteForceConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::size_t M = config_.M;
  cos2_.resize(M * M);
  for (std::size_t h = 0; h < M; ++h) {
    for (std::size_t i = 0; i < M; ++i) {
      const double c = std::cos(config_.candidate_angles[h] - config_.candidate_angles[i]);
      cos2_[h * M + i] = h == i ? 1.0 : c * c;
    }
  }
}

bool BruteForceAttacker::same_basis(double theta, std::size_t index) const {
  const double d = std::fmod(polarization::canonical_angle(theta - config_.candidate_angles[index]),
                             0.5 * pi);
  return std::min(d, 0.5 * pi - d) < 1e-9;
}

AttackOutcome BruteForceAttacker::identify(const TwoModeCoherentState& pulse, Rng& rng) const {
  const std::size_t M = config_.M;
  const double eta = config_.detectors.efficiency;
  const double dark = config_.detectors.dark_count_prob;
  const auto parts = split_pulse(pulse, M);

  AttackOutcome out;
  out.sub_pulse_events.resize(M);
  std::vector<std::size_t> survivors;
  std::vector<std::size_t> consistent;
  for (std::size_t i = 0; i < M; ++i) {
    const auto rotated = polarization::rotate(parts[i], -config_.candidate_angles[i]);
    const auto arms = polarization::pbs_arm_means(rotated, 0.0);
    DetectionEvent ev;
    ev.counts_transmit = with_dark_count(poisson_draw(rng, eta * arms.transmit), dark, rng);
    ev.counts_reflect = with_dark_count(poisson_draw(rng, eta * arms.reflect), dark, rng);
    out.sub_pulse_events[i] = ev;
    if (ev.both_clicked()) {
      ++out.case_both;
    } else if (ev.none_clicked()) {
      ++out.case_none;
      survivors.push_back(i);
    } else {
      ++out.case_one;
      survivors.push_back(i);
      consistent.push_back(i);
    }
  }

  std::vector<std::size_t> best;
  if (!consistent.empty()) {
    const double mu = eta * pulse.mean_photons() / static_cast<double>(M);
    const double dark_mean = dark > 0.0 ? -std::log1p(-dark) : 0.0;
    double best_score = kNegInf;
    for (std::size_t h : consistent) {
      double score = kNegInf;
      for (int partner = 0; partner < 2; ++partner) {
        double s = 0.0;
        for (std::size_t i = 0; i < M && s > kNegInf; ++i) {
          const double c = cos2_[h * M + i];
          const double along = partner == 0 ? c : 1.0 - c;
          const auto& ev = out.sub_pulse_events[i];
          s += count_log_mean(ev.counts_transmit, mu * along + dark_mean);
          s += count_log_mean(ev.counts_reflect, mu * (1.0 - along) + dark_mean);
        }
        score = std::max(score, s);
      }
      if (score > best_score + 1e-9) {
        best_score = score;
        best.assign(1, h);
      } else if (std::abs(score - best_score) <= 1e-9 ||
                 (score == kNegInf && best_score == kNegInf)) {
        best.push_back(h);
      }
    }
  } else {
    best = survivors;
  }

  if (!best.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, best.size() - 1);
    const std::size_t h = best[pick(rng)];
    out.estimated_index = h;
    out.estimated_angle = config_.candidate_angles[h];
    out.success = same_basis(pulse.theta(), h);
  }
  return out;
}

AttackOutcome brute_force_identify(const TwoModeCoherentState& pulse,
                                   const BruteForceConfig& config, Rng& rng) {
  return BruteForceAttacker(config).identify(pulse, rng);
}

std::vector<SuccessPoint> attack_success_curve(std::span<const double> alpha_sq_grid,
                                               std::size_t M, std::size_t trials,
                                               std::uint64_t seed, unsigned threads) {
  if (alpha_sq_grid.empty()) throw std::invalid_argument("attack_success_curve: empty grid");
  if (trials < 100) throw std::invalid_argument("attack_success_curve: trials must be >= 100");
  for (double a : alpha_sq_grid) {
    if (!(a >= 0.0)) throw std::invalid_argument("attack_success_curve: alpha_sq must be >= 0");
  }
  const BruteForceAttacker attacker(BruteForceConfig::uniform(M));

  auto run_point = [&](std::size_t g) {
    std::size_t hits = 0;
    std::uniform_int_distribution<std::size_t> pick(0, M - 1);
    for (std::size_t t = 0; t < trials; ++t) {
      Rng rng = derive_stream(seed, t, StreamRole::attack_trial, g);
      const std::size_t k = pick(rng);
      const double theta = attacker.config().candidate_angles[k] +
                           (bernoulli_draw(rng, 0.5) ? 0.5 * pi : 0.0);
      const auto pulse = TwoModeCoherentState::from_mean_photons(alpha_sq_grid[g], theta);
      if (attacker.identify(pulse, rng).success) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(trials);
    return SuccessPoint{alpha_sq_grid[g], M, trials, p,
                        std::sqrt(p * (1.0 - p) / static_cast<double>(trials))};
  };

  std::vector<SuccessPoint> out(alpha_sq_grid.size());
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, alpha_sq_grid.size());
  if (workers == 1) {
    for (std::size_t g = 0; g < out.size(); ++g) out[g] = run_point(g);
    return out;
  }
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t g = w; g < out.size(); g += workers) out[g] = run_point(g);
    }));
  }
  for (auto& j : jobs) j.get();
  return out;
}

AmplifiedPulse amplifier_attack(const TwoModeCoherentState& pulse, double gain,
                                std::optional<double> ase_photons) {
  if (!(gain >= 1.0)) throw std::invalid_argument("amplifier_attack: gain must be >= 1");
  const double ase = ase_photons.value_or(2.0 * (gain - 1.0));
  if (!(ase >= 0.0)) throw std::invalid_argument("amplifier_attack: ase_photons must be >= 0");
  if (gain > 1.0 && ase == 0.0) {
    throw std::invalid_argument("amplifier_attack: noiseless amplification (G > 1, ASE = 0)");
  }
  return AmplifiedPulse{TwoModeCoherentState(pulse.alpha() * std::sqrt(gain), pulse.theta()), ase};
}

DetectionEvent measure_amplified(const AmplifiedPulse& pulse, double analyzer_angle, Rng& rng) {
  DetectionEvent ev = polarization::pbs_measure(pulse.signal, analyzer_angle, rng);
  ev.counts_transmit += poisson_draw(rng, 0.5 * pulse.ase_photons);
  ev.counts_reflect += poisson_draw(rng, 0.5 * pulse.ase_photons);
  return ev;
}

TappedPulse beam_splitter_tap(const TwoModeCoherentState& pulse, double transmittance) {
  if (!(transmittance >= 0.0 && transmittance <= 1.0)) {
    throw std::invalid_argument("beam_splitter_tap: transmittance must lie in [0, 1]");
  }
  return TappedPulse{
      TwoModeCoherentState(pulse.alpha() * std::sqrt(transmittance), pulse.theta()),
      TwoModeCoherentState(pulse.alpha() * std::sqrt(1.0 - transmittance), pulse.theta()),
  };
}

AnomalyVerdict bob_anomaly_monitor(std::span<const DetectionEvent> events,
                                   double expected_dark_rate) {
  if (events.empty()) throw std::invalid_argument("bob_anomaly_monitor: no events");
  if (!(expected_dark_rate >= 0.0 && expected_dark_rate <= 1.0)) {
    throw std::invalid_argument("bob_anomaly_monitor: dark rate must lie in [0, 1]");
  }
  AnomalyVerdict v;
  v.events = events.size();
  v.wrong_arm_clicks = static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [](const auto& e) { return e.reflect_clicked(); }));
  const auto n = static_cast<double>(v.events);
  v.wrong_arm_rate = static_cast<double>(v.wrong_arm_clicks) / n;
  v.expected_dark_rate = expected_dark_rate;
  v.threshold = expected_dark_rate +
                5.0 * std::sqrt(expected_dark_rate * (1.0 - expected_dark_rate) / n);
  v.anomaly = v.wrong_arm_rate > v.threshold;
  return v;
}

void PnsModel::validate() const {
  if (!(mu >= 0.0)) throw std::invalid_argument("PnsModel.mu must be >= 0");
  if (min_exploitable != 2 && min_exploitable != 3) {
    throw std::invalid_argument("PnsModel.min_exploitable must be 2 or 3");
  }
}

double pns_exploitable_fraction(const PnsModel& model) {
  model.validate();
  if (model.mu == 0.0) return 0.0;
  const double mu = model.mu;
  const unsigned n = model.min_exploitable;
  if (mu > static_cast<double>(n)) {
    double term = std::exp(-mu);
    double head = 0.0;
    for (unsigned k = 0; k < n; ++k) {
      head += term;
      term *= mu / static_cast<double>(k + 1);
    }
    return 1.0 - head;
  }
  // Direct tail sum avoids cancellation for small mu.
  double term = std::exp(-mu);
  for (unsigned k = 1; k <= n; ++k) term *= mu / static_cast<double>(k);
  double tail = 0.0;
  for (unsigned k = n; term > 1e-18 * tail || k < n + 4; ++k) {
    tail += term;
    term *= mu / static_cast<double>(k + 1);
  }
  return tail;
}

PnsEstimate pns_monte_carlo(const PnsModel& model, std::size_t trials, Rng& rng) {
  model.validate();
  if (trials == 0) throw std::invalid_argument("pns_monte_carlo: trials must be >= 1");
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    if (poisson_draw(rng, model.mu) >= model.min_exploitable) ++hits;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(trials);
  return PnsEstimate{p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials)), trials};
}

}  // namespace hpqkd::adversary
