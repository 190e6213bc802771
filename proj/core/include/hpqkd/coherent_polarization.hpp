#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>

#include "hpqkd/random.hpp"

namespace hpqkd::polarization {

/// Maps an angle onto [0, pi): linear polarizations at theta and theta + pi
/// are the same physical state.
double canonical_angle(double theta);

/// Linearly polarized two-mode coherent state |alpha cos(theta), alpha sin(theta)>.
class TwoModeCoherentState {
 public:
  TwoModeCoherentState() = default;
  TwoModeCoherentState(std::complex<double> alpha, double theta);

  /// State with real amplitude sqrt(mean_photons).
  static TwoModeCoherentState from_mean_photons(double mean_photons, double theta);

  std::complex<double> alpha() const { return alpha_; }
  double theta() const { return theta_; }
  double mean_photons() const { return std::norm(alpha_); }

  std::complex<double> horizontal_amplitude() const;
  std::complex<double> vertical_amplitude() const;
  double horizontal_mean() const { return std::norm(horizontal_amplitude()); }
  double vertical_mean() const { return std::norm(vertical_amplitude()); }

 private:
  std::complex<double> alpha_{0.0, 0.0};
  double theta_ = 0.0;
};

TwoModeCoherentState rotate(const TwoModeCoherentState& state, double delta);

struct StokesSummary {
  double s1_mean = 0.0;
  double s2_mean = 0.0;
  double s3_mean = 0.0;
  double s1_var = 0.0;
  double s2_var = 0.0;
  double s3_var = 0.0;
};

StokesSummary stokes_summary(const TwoModeCoherentState& state);

enum class StokesParameter { s1 = 1, s2 = 2, s3 = 3 };

struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased (n-1) estimator; 0 for a single trial
  std::size_t trials = 0;
};

/// Photon-number-difference measurement of one Stokes parameter:
/// S1 in the H/V basis, S2 in the +-45 degree basis, S3 in the circular basis
/// (for linear inputs each circular arm is Poisson with mean |alpha|^2/2).
/// Throws std::invalid_argument when trials == 0.
SampleMoments stokes_monte_carlo(const TwoModeCoherentState& state,
                                 StokesParameter parameter, std::size_t trials,
                                 Rng& rng);

/// exp(-2 |alpha|^2 sin^2(theta)), the overlap as originally stated for this scheme.
double overlap_published(double alpha_sq, double theta);

/// <a|b> for single-mode coherent states.
std::complex<double> coherent_inner_product(std::complex<double> a,
                                            std::complex<double> b);

/// |<alpha, 0 | alpha cos(theta), alpha sin(theta)>|^2 from the two-mode
/// inner product; equals exp(-2 |alpha|^2 (1 - cos(theta))).
double overlap_exact(std::complex<double> alpha, double theta);

struct DetectionEvent {
  std::uint64_t counts_transmit = 0;
  std::uint64_t counts_reflect = 0;

  bool transmit_clicked() const { return counts_transmit > 0; }
  bool reflect_clicked() const { return counts_reflect > 0; }
  bool both_clicked() const { return transmit_clicked() && reflect_clicked(); }
  bool none_clicked() const { return !transmit_clicked() && !reflect_clicked(); }
  bool single_click() const { return transmit_clicked() != reflect_clicked(); }

  friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
};

/// Arm means for a PBS whose transmit axis sits at `analyzer_angle`.
struct ArmMeans {
  double transmit = 0.0;
  double reflect = 0.0;
};

ArmMeans pbs_arm_means(const TwoModeCoherentState& state, double analyzer_angle);

/// Independent Poisson counts in the transmit (mean |alpha|^2 cos^2(theta-a))
/// and reflect (mean |alpha|^2 sin^2(theta-a)) arms.
DetectionEvent pbs_measure(const TwoModeCoherentState& state, double analyzer_angle,
                           Rng& rng);

}  // namespace hpqkd::polarization
