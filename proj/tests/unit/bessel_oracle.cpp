#include "bessel_oracle.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <utility>

namespace testing_oracle {
namespace {

using cd = std::complex<double>;
using Harmonics = std::map<std::pair<int, int>, cd>;  // (n1, n2) -> amplitude
constexpr cd kJ{0.0, 1.0};

double bessel(int n, double x) {
  // J_{-n}(x) = (-1)^n J_n(x)
  const double v = std::cyl_bessel_j(static_cast<double>(std::abs(n)), std::abs(x));
  double sign = 1.0;
  if (n < 0 && (n % 2 != 0)) sign = -sign;
  if (x < 0.0 && (std::abs(n) % 2 != 0)) sign = -sign;
  return sign * v;
}

// exp(j*[b1 cos(W1 t + p1) + b2 cos(W2 t + p2)]) as a harmonic table.
Harmonics phase_modulation(double b1, double p1, double b2, double p2, int order) {
  Harmonics h;
  for (int n1 = -order; n1 <= order; ++n1) {
    for (int n2 = -order; n2 <= order; ++n2) {
      const cd c = std::pow(kJ, n1 + n2) * bessel(n1, b1) * bessel(n2, b2) *
                   std::exp(kJ * (n1 * p1 + n2 * p2));
      if (std::abs(c) > 0.0) h[{n1, n2}] += c;
    }
  }
  return h;
}

Harmonics scaled(const Harmonics& h, cd factor) {
  Harmonics out;
  for (const auto& [k, v] : h) out[k] = v * factor;
  return out;
}

void accumulate(Harmonics& into, const Harmonics& h) {
  for (const auto& [k, v] : h) into[k] += v;
}

Harmonics convolve(const Harmonics& a, const Harmonics& b) {
  Harmonics out;
  for (const auto& [ka, va] : a) {
    for (const auto& [kb, vb] : b) out[{ka.first + kb.first, ka.second + kb.second}] += va * vb;
  }
  return out;
}

// Omega2/Omega1 = p/q in lowest terms.
std::pair<int, int> frequency_ratio(double w1, double w2) {
  for (int q = 1; q <= 200; ++q) {
    const double p = w2 / w1 * q;
    if (std::abs(p - std::round(p)) < 1e-9) return {static_cast<int>(std::round(p)), q};
  }
  throw std::invalid_argument("bessel oracle needs commensurate RF tones");
}

}  // namespace

hpqkd::optics::SidebandSpectrum bessel_sideband_powers(const hpqkd::optics::ModulationPlan& plan,
                                                        const hpqkd::optics::FiberLink& fiber,
                                                        hpqkd::optics::ModulatorModel model,
                                                        int max_order) {
  Harmonics alice;
  if (model == hpqkd::optics::ModulatorModel::push_pull) {
    // E0 e^{j psi/2} cos((psi + x)/2) = (E0/2)(e^{j psi} e^{jx/2} + e^{-jx/2})
    accumulate(alice, scaled(phase_modulation(plan.m1 / 2, plan.phi1A, plan.m2 / 2, plan.phi2A,
                                              max_order),
                             0.5 * plan.E0 * std::exp(kJ * plan.psi1)));
    accumulate(alice, scaled(phase_modulation(-plan.m1 / 2, plan.phi1A, -plan.m2 / 2,
                                              plan.phi2A, max_order),
                             0.5 * plan.E0));
  } else {
    // (E0/2)(1 + e^{j psi} e^{jx})
    alice[{0, 0}] += 0.5 * plan.E0;
    accumulate(alice, scaled(phase_modulation(plan.m1, plan.phi1A, plan.m2, plan.phi2A, max_order),
                             0.5 * plan.E0 * std::exp(kJ * plan.psi1)));
  }

  const double tau = fiber.group_delay();
  for (auto& [k, v] : alice) v *= std::exp(kJ * (k.first * plan.Omega1 + k.second * plan.Omega2) * tau);

  const Harmonics bob =
      convolve(alice, phase_modulation(plan.m3, plan.phi1B, plan.m4, plan.phi2B, max_order));

  const auto [p, q] = frequency_ratio(plan.Omega1, plan.Omega2);
  std::map<int, cd> by_frequency;  // in units of Omega1 / q
  for (const auto& [k, v] : bob) by_frequency[k.first * q + k.second * p] += v;
  auto power = [&](int f) {
    auto it = by_frequency.find(f);
    return it == by_frequency.end() ? 0.0 : std::norm(it->second);
  };
  return {power(0), power(q), power(-q), power(p), power(-p)};
}

}  // namespace testing_oracle
