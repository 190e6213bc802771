#include "hpqkd/coherent_polarization.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hpqkd::polarization {
namespace {

using std::numbers::pi;

ArmMeans arm_means_for(double mean_photons, double relative_angle) {
  const double c = std::cos(relative_angle);
  const double s = std::sin(relative_angle);
  return {mean_photons * c * c, mean_photons * s * s};
}

}  // namespace

double canonical_angle(double theta) {
  double w = std::fmod(theta, pi);
  if (w < 0.0) w += pi;
  // fmod can land exactly on pi after the shift for tiny negative inputs.
  if (w >= pi) w = 0.0;
  return w;
}

TwoModeCoherentState::TwoModeCoherentState(std::complex<double> alpha, double theta)
    : alpha_(alpha), theta_(canonical_angle(theta)) {}

TwoModeCoherentState TwoModeCoherentState::from_mean_photons(double mean_photons,
                                                             double theta) {
  if (!(mean_photons >= 0.0)) {
    throw std::invalid_argument("mean photon number must be >= 0");
  }
  return {std::complex<double>(std::sqrt(mean_photons), 0.0), theta};
}

std::complex<double> TwoModeCoherentState::horizontal_amplitude() const {
  return alpha_ * std::cos(theta_);
}

std::complex<double> TwoModeCoherentState::vertical_amplitude() const {
  return alpha_ * std::sin(theta_);
}

TwoModeCoherentState rotate(const TwoModeCoherentState& state, double delta) {
  return {state.alpha(), state.theta() + delta};
}

StokesSummary stokes_summary(const TwoModeCoherentState& state) {
  const double n = state.mean_photons();
  const double two_theta = 2.0 * state.theta();
  return StokesSummary{
      .s1_mean = n * std::cos(two_theta),
      .s2_mean = n * std::sin(two_theta),
      .s3_mean = 0.0,
      .s1_var = n,
      .s2_var = n,
      .s3_var = n,
  };
}

SampleMoments stokes_monte_carlo(const TwoModeCoherentState& state,
                                 StokesParameter parameter, std::size_t trials, Rng& rng) {
  if (trials == 0) throw std::invalid_argument("stokes_monte_carlo: trials must be >= 1");

  ArmMeans arms;
  const double n = state.mean_photons();
  switch (parameter) {
    case StokesParameter::s1:
      arms = arm_means_for(n, state.theta());
      break;
    case StokesParameter::s2:
      arms = arm_means_for(n, state.theta() - 0.25 * pi);
      break;
    case StokesParameter::s3:
      arms = {0.5 * n, 0.5 * n};
      break;
  }

  // Welford accumulation of the photon-number difference.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto a = static_cast<double>(poisson_draw(rng, arms.transmit));
    const auto b = static_cast<double>(poisson_draw(rng, arms.reflect));
    const double x = a - b;
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
  }
  return SampleMoments{mean, trials > 1 ? m2 / static_cast<double>(trials - 1) : 0.0, trials};
}

double overlap_published(double alpha_sq, double theta) {
  if (!(alpha_sq >= 0.0)) throw std::invalid_argument("overlap_published: alpha_sq must be >= 0");
  const double s = std::sin(theta);
  return std::exp(-2.0 * alpha_sq * s * s);
}

std::complex<double> coherent_inner_product(std::complex<double> a, std::complex<double> b) {
  return std::exp(-0.5 * std::norm(a) - 0.5 * std::norm(b) + std::conj(a) * b);
}

double overlap_exact(std::complex<double> alpha, double theta) {
  const std::complex<double> h = coherent_inner_product(alpha, alpha * std::cos(theta));
  const std::complex<double> v = coherent_inner_product({0.0, 0.0}, alpha * std::sin(theta));
  return std::norm(h * v);
}

ArmMeans pbs_arm_means(const TwoModeCoherentState& state, double analyzer_angle) {
  return arm_means_for(state.mean_photons(), state.theta() - analyzer_angle);
}

DetectionEvent pbs_measure(const TwoModeCoherentState& state, double analyzer_angle,
                           Rng& rng) {
  const ArmMeans arms = pbs_arm_means(state, analyzer_angle);
  DetectionEvent ev;
  ev.counts_transmit = poisson_draw(rng, arms.transmit);
  ev.counts_reflect = poisson_draw(rng, arms.reflect);
  return ev;
}

}  // namespace hpqkd::polarization
