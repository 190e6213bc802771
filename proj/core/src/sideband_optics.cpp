#include "hpqkd/sideband_optics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

namespace hpqkd::optics {
namespace {

using std::numbers::pi;
constexpr double kTwoPi = 2.0 * pi;
constexpr std::complex<double> kJ{0.0, 1.0};

double rf_drive(const ModulationPlan& plan, double t) {
  return plan.m1 * std::cos(plan.Omega1 * t + plan.phi1A) +
         plan.m2 * std::cos(plan.Omega2 * t + plan.phi2A);
}

double bob_drive(const ModulationPlan& plan, double t) {
  return plan.m3 * std::cos(plan.Omega1 * t + plan.phi1B) +
         plan.m4 * std::cos(plan.Omega2 * t + plan.phi2B);
}

// p/q ~ ratio with the smallest q <= max_denominator, relative tolerance 1e-9.
std::optional<std::pair<std::int64_t, std::int64_t>> rational_ratio(
    double ratio, std::size_t max_denominator) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) return std::nullopt;
  for (std::int64_t q = 1; q <= static_cast<std::int64_t>(max_denominator); ++q) {
    const double p = std::round(ratio * static_cast<double>(q));
    if (p < 1.0) continue;
    if (std::abs(ratio - p / static_cast<double>(q)) <= 1e-9 * ratio) {
      return std::pair{static_cast<std::int64_t>(p), q};
    }
  }
  return std::nullopt;
}

double cycles_in(double omega, double duration) {
  return omega * duration / kTwoPi;
}

}  // namespace

void ModulationPlan::validate() const {
  if (!(E0 >= 0.0)) throw std::invalid_argument("ModulationPlan.E0 must be >= 0");
  for (auto [name, m] : {std::pair{"m1", m1}, std::pair{"m2", m2},
                         std::pair{"m3", m3}, std::pair{"m4", m4}}) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw std::invalid_argument(std::string("ModulationPlan.") + name +
                                  " must be a finite value >= 0");
    }
  }
  if (!(Omega1 > 0.0) || !(Omega2 > 0.0)) {
    throw std::invalid_argument("ModulationPlan.Omega1/Omega2 must be > 0");
  }
  if (Omega1 == Omega2) {
    throw std::invalid_argument("ModulationPlan.Omega1 and Omega2 must differ");
  }
  if (!(std::max(Omega1, Omega2) < 1e-2 * omega0)) {
    throw std::invalid_argument(
        "ModulationPlan: RF frequencies must be well below omega0");
  }
}

std::vector<std::string> ModulationPlan::warnings() const {
  std::vector<std::string> out;
  for (auto [name, m] : {std::pair{"m1", m1}, std::pair{"m2", m2},
                         std::pair{"m3", m3}, std::pair{"m4", m4}}) {
    if (m > kSmallSignalLimit) {
      out.push_back(std::string(name) +
                    " exceeds the small-signal limit 0.2; closed forms lose accuracy");
    }
  }
  if (std::abs(wrap_two_pi(psi1) - 1.5 * pi) > 1e-9) {
    out.emplace_back("psi1 is not the quadrature bias 3*pi/2 assumed by the closed forms");
  }
  return out;
}

void FiberLink::validate() const {
  if (!(length_m >= 0.0)) throw std::invalid_argument("FiberLink.length_m must be >= 0");
  if (!(refractive_index >= 1.0)) {
    throw std::invalid_argument("FiberLink.refractive_index must be >= 1");
  }
}

std::complex<double> alice_field_exact(const ModulationPlan& plan, double t) {
  return 0.5 * plan.E0 * (1.0 + std::exp(kJ * (plan.psi1 + rf_drive(plan, t))));
}

std::complex<double> alice_field_push_pull(const ModulationPlan& plan, double t) {
  const double x = rf_drive(plan, t);
  return plan.E0 * std::exp(kJ * (0.5 * plan.psi1)) * std::cos(0.5 * (plan.psi1 + x));
}

std::complex<double> alice_field(const ModulationPlan& plan, double t,
                                 ModulatorModel model) {
  return model == ModulatorModel::single_arm ? alice_field_exact(plan, t)
                                             : alice_field_push_pull(plan, t);
}

double alice_intensity_small_signal(const ModulationPlan& plan, double t) {
  const double s = std::sin(plan.psi1);
  return 0.5 * plan.E0 * plan.E0 *
         (1.0 + std::cos(plan.psi1) -
          plan.m1 * s * std::cos(plan.Omega1 * t + plan.phi1A) -
          plan.m2 * s * std::cos(plan.Omega2 * t + plan.phi2A));
}

LinkPhases propagate(const ModulationPlan& plan, const FiberLink& fiber) {
  fiber.validate();
  const double k = fiber.refractive_index / kSpeedOfLight * fiber.length_m;
  return {k * plan.Omega1, k * plan.Omega2};
}

double wrap_two_pi(double phase) {
  double w = std::fmod(phase, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w;
}

bool is_tuned(const LinkPhases& phases, double tolerance) {
  auto distance = [](double phase, double target) {
    const double d = wrap_two_pi(phase - target);
    return std::min(d, kTwoPi - d);
  };
  return distance(phases.channel1, 0.5 * pi) <= tolerance &&
         distance(phases.channel2, 1.5 * pi) <= tolerance;
}

std::optional<double> tuned_link_length(const ModulationPlan& plan,
                                        double refractive_index) {
  const auto ratio = rational_ratio(plan.Omega2 / plan.Omega1, 1000);
  if (!ratio) return std::nullopt;
  const auto [p, q] = *ratio;
  // Group delay tau = s*T with T = 2*pi*q/Omega1. Need q*s = 1/4 and
  // p*s = 3/4 (mod 1); with s = (1/4 + a)/q this is p*(1+4a) = 3q (mod 4q).
  for (std::int64_t a = 0; a < q; ++a) {
    const std::int64_t lhs = p * (1 + 4 * a) - 3 * q;
    if (((lhs % (4 * q)) + 4 * q) % (4 * q) == 0) {
      const double period = kTwoPi * static_cast<double>(q) / plan.Omega1;
      const double tau = (0.25 + static_cast<double>(a)) / static_cast<double>(q) * period;
      return tau * kSpeedOfLight / refractive_index;
    }
  }
  return std::nullopt;
}

SidebandSpectrum sideband_intensities_closed_form(const ModulationPlan& plan,
                                                  const FiberLink& fiber) {
  const LinkPhases phases = propagate(plan, fiber);
  const double scale = plan.E0 * plan.E0 / 8.0;
  const double base1 = plan.m1 * plan.m1 / 4.0 + plan.m3 * plan.m3;
  const double base2 = plan.m2 * plan.m2 / 4.0 + plan.m4 * plan.m4;
  const double cross1 = plan.m1 * plan.m3 * std::sin(phases.channel1 + plan.delta_phi1());
  const double cross2 = plan.m2 * plan.m4 * std::sin(phases.channel2 + plan.delta_phi2());
  // Clamp rounding-level negatives at full destructive interference.
  auto nonneg = [](double v) { return std::max(v, 0.0); };
  return SidebandSpectrum{
      .carrier = 0.5 * plan.E0 * plan.E0,
      .upper1 = nonneg(scale * (base1 + cross1)),
      .lower1 = nonneg(scale * (base1 - cross1)),
      .upper2 = nonneg(scale * (base2 + cross2)),
      .lower2 = nonneg(scale * (base2 - cross2)),
  };
}

double common_period(double omega_a, double omega_b, std::size_t max_denominator) {
  const auto ratio = rational_ratio(omega_b / omega_a, max_denominator);
  if (!ratio) {
    throw std::invalid_argument(
        "RF frequencies are not commensurate: Omega2/Omega1 must be a ratio of small integers");
  }
  return kTwoPi * static_cast<double>(ratio->second) / omega_a;
}

OracleGrid default_oracle_grid(const ModulationPlan& plan, std::size_t samples) {
  return OracleGrid{samples, common_period(plan.Omega1, plan.Omega2)};
}

void validate_grid(const ModulationPlan& plan, const OracleGrid& grid) {
  if (grid.samples < 2 || !(grid.period > 0.0)) {
    throw std::invalid_argument("oracle grid needs >= 2 samples and a positive period");
  }
  const double omega_max = std::max(plan.Omega1, plan.Omega2);
  if (!(grid.sample_rate() > 2.0 * omega_max / pi)) {
    throw std::invalid_argument("oracle grid violates the Nyquist bound for the RF tones");
  }
  for (double omega : {plan.Omega1, plan.Omega2}) {
    const double c = cycles_in(omega, grid.period);
    if (std::abs(c - std::round(c)) > 1e-9 * std::max(1.0, c)) {
      throw std::invalid_argument(
          "oracle period does not hold an integer number of RF cycles");
    }
  }
}

TimeDomainField synthesize_bob_field(const ModulationPlan& plan, const FiberLink& fiber,
                                     const OracleGrid& grid, ModulatorModel model) {
  plan.validate();
  fiber.validate();
  validate_grid(plan, grid);
  const double tau = fiber.group_delay();
  const double fs = grid.sample_rate();
  TimeDomainField field{fs, {}};
  field.samples.resize(grid.samples);
  for (std::size_t n = 0; n < grid.samples; ++n) {
    const double t = static_cast<double>(n) / fs;
    // Dispersionless link: every spectral component at offset w picks up
    // exp(j*(n/c)*w*L), i.e. the envelope is advanced by tau.
    const std::complex<double> at_bob = alice_field(plan, t + tau, model);
    field.samples[n] = at_bob * std::exp(kJ * bob_drive(plan, t));
  }
  return field;
}

double tone_power(const TimeDomainField& field, double omega) {
  const std::size_t n_samples = field.samples.size();
  if (n_samples == 0 || !(field.sample_rate > 0.0)) {
    throw std::invalid_argument("tone_power: empty field");
  }
  const double cycles = cycles_in(omega, field.duration());
  const double rounded = std::round(cycles);
  if (std::abs(cycles - rounded) > 1e-9 * std::max(1.0, std::abs(cycles))) {
    throw std::invalid_argument("tone_power: tone is not periodic over the record");
  }
  const auto N = static_cast<std::int64_t>(n_samples);
  const std::int64_t k = ((static_cast<std::int64_t>(rounded) % N) + N) % N;
  std::complex<double> acc{0.0, 0.0};
  for (std::int64_t n = 0; n < N; ++n) {
    const std::int64_t idx = (k * n) % N;
    const double angle = -kTwoPi * static_cast<double>(idx) / static_cast<double>(N);
    acc += field.samples[static_cast<std::size_t>(n)] * std::polar(1.0, angle);
  }
  acc /= static_cast<double>(N);
  return std::norm(acc);
}

SidebandSpectrum sideband_intensities_oracle(const ModulationPlan& plan,
                                             const FiberLink& fiber,
                                             const OracleGrid& grid,
                                             ModulatorModel model) {
  const TimeDomainField field = synthesize_bob_field(plan, fiber, grid, model);
  return SidebandSpectrum{
      .carrier = tone_power(field, 0.0),
      .upper1 = tone_power(field, plan.Omega1),
      .lower1 = tone_power(field, -plan.Omega1),
      .upper2 = tone_power(field, plan.Omega2),
      .lower2 = tone_power(field, -plan.Omega2),
  };
}

FringeFit fit_fringe(std::span<const double> delta_phi, std::span<const double> intensity,
                     FringeShape shape) {
  if (delta_phi.size() != intensity.size() || delta_phi.empty()) {
    throw std::invalid_argument("fit_fringe: phase and intensity sizes must match and be non-empty");
  }
  std::vector<double> basis(delta_phi.size());
  std::transform(delta_phi.begin(), delta_phi.end(), basis.begin(), [shape](double d) {
    const double h = 0.5 * d;
    return shape == FringeShape::cos2 ? std::cos(h) * std::cos(h) : std::sin(h) * std::sin(h);
  });
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    num += intensity[i] * basis[i];
    den += basis[i] * basis[i];
  }
  FringeFit fit;
  fit.amplitude = den > 0.0 ? num / den : 0.0;
  if (fit.amplitude <= 0.0) {
    fit.max_relative_residual = 0.0;
    return fit;
  }
  for (std::size_t i = 0; i < basis.size(); ++i) {
    fit.max_relative_residual =
        std::max(fit.max_relative_residual,
                 std::abs(intensity[i] - fit.amplitude * basis[i]) / fit.amplitude);
  }
  return fit;
}

double visibility(std::span<const double> intensity) {
  if (intensity.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(intensity.begin(), intensity.end());
  const double sum = *hi + *lo;
  return sum > 0.0 ? (*hi - *lo) / sum : 0.0;
}

}  // namespace hpqkd::optics
