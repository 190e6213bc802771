#pragma once

// Two-carrier sideband interference optics: Alice's Mach-Zehnder amplitude
// modulator driven by two RF tones, a dispersionless fiber link, and Bob's
// phase modulator. Everything is expressed in baseband (the optical carrier
// factor exp(j*omega0*t) is dropped; omega0 is kept as metadata only).
//
// Two independent routes to the sideband intensities are provided:
//   * sideband_intensities_closed_form: first-order small-signal expressions.
//   * sideband_intensities_oracle: exact time-domain synthesis followed by a
//     discrete Fourier projection at each sideband frequency.

#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hpqkd::optics {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kSmallSignalLimit = 0.2;

struct ModulationPlan {
  double E0 = 1.0;                                    // field amplitude
  double omega0 = 2.0 * std::numbers::pi * 193.4e12;  // rad/s, metadata
  double psi1 = 1.5 * std::numbers::pi;               // MZ DC bias (rad)
  double m1 = 0.1;                                    // Alice depth, channel 1
  double m2 = 0.1;                                    // Alice depth, channel 2
  double m3 = 0.05;                                   // Bob depth, channel 1
  double m4 = 0.05;                                   // Bob depth, channel 2
  double Omega1 = 2.0 * std::numbers::pi * 1.0e9;     // rad/s
  double Omega2 = 2.0 * std::numbers::pi * 1.4e9;     // rad/s
  double phi1A = 0.0;
  double phi2A = 0.0;
  double phi1B = 0.0;
  double phi2B = 0.0;

  /// Throws std::invalid_argument on negative depths, non-positive or equal
  /// RF frequencies, or RF frequencies not well below omega0.
  void validate() const;

  /// Non-fatal diagnostics: depths above the small-signal limit, and a bias
  /// other than quadrature (the closed forms assume psi1 = 3*pi/2).
  std::vector<std::string> warnings() const;

  double delta_phi1() const { return phi1A - phi1B; }
  double delta_phi2() const { return phi2A - phi2B; }
};

struct FiberLink {
  double length_m = 0.0;
  double refractive_index = 1.468;

  void validate() const;
  /// n*L/c, the group delay of the dispersionless link (s).
  double group_delay() const { return refractive_index * length_m / kSpeedOfLight; }
};

/// Phase (n/c)*Omega*L picked up by each channel's upper sideband relative to
/// the carrier; the lower sideband picks up the negative of it.
struct LinkPhases {
  double channel1 = 0.0;
  double channel2 = 0.0;
};

struct SidebandSpectrum {
  double carrier = 0.0;
  double upper1 = 0.0;  // omega0 + Omega1
  double lower1 = 0.0;  // omega0 - Omega1
  double upper2 = 0.0;  // omega0 + Omega2
  double lower2 = 0.0;  // omega0 - Omega2
};

/// Alice's modulator model for the time-domain oracle.
///  single_arm: the field exactly as written for the MZ output, one arm phase
///              modulated. It carries a residual phase chirp.
///  push_pull:  chirp-free MZ with the same intensity transfer,
///              E0*exp(j*psi1/2)*cos((psi1+x)/2). This is the field the
///              sideband closed forms are derived from.
enum class ModulatorModel { single_arm, push_pull };

struct TimeDomainField {
  double sample_rate = 0.0;  // samples/s
  std::vector<std::complex<double>> samples;

  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Sampling grid for the oracle: `samples` points over `period` seconds.
struct OracleGrid {
  std::size_t samples = std::size_t{1} << 14;
  double period = 0.0;

  double sample_rate() const { return static_cast<double>(samples) / period; }
};

std::complex<double> alice_field_exact(const ModulationPlan& plan, double t);
std::complex<double> alice_field_push_pull(const ModulationPlan& plan, double t);
std::complex<double> alice_field(const ModulationPlan& plan, double t,
                                 ModulatorModel model);

/// First-order intensity at Alice's output; meaningful for depths <= 0.2.
double alice_intensity_small_signal(const ModulationPlan& plan, double t);

LinkPhases propagate(const ModulationPlan& plan, const FiberLink& fiber);

/// Wraps an angle into [0, 2*pi).
double wrap_two_pi(double phase);

/// True when channel-1 phase is pi/2 and channel-2 phase is 3*pi/2 (mod 2*pi)
/// within `tolerance` radians.
bool is_tuned(const LinkPhases& phases, double tolerance = 1e-6);

/// Shortest link length satisfying the tuning condition for the plan's RF
/// pair, or nullopt if the ratio Omega2/Omega1 admits no solution (or is not
/// a ratio of small integers).
std::optional<double> tuned_link_length(const ModulationPlan& plan,
                                        double refractive_index);

/// Sideband intensities in E0^2 units from the first-order expressions:
///   I(omega0 +- Omega1) = E0^2/8 [m1^2/4 + m3^2 +- m1 m3 sin(phase1 + dPhi1)]
/// and likewise for channel 2. Carrier is the leading-order E0^2/2.
SidebandSpectrum sideband_intensities_closed_form(const ModulationPlan& plan,
                                                  const FiberLink& fiber);

/// Smallest period containing an integer number of cycles of both RF tones,
/// found by rational approximation of Omega2/Omega1 with denominators up to
/// `max_denominator`. Throws if no such ratio exists.
double common_period(double omega_a, double omega_b,
                     std::size_t max_denominator = 1000);

OracleGrid default_oracle_grid(const ModulationPlan& plan,
                               std::size_t samples = std::size_t{1} << 14);

/// Throws std::invalid_argument if the grid undersamples the RF tones
/// (sample_rate must exceed 2*max(Omega)/pi) or if either tone does not fit
/// an integer number of cycles in the period.
void validate_grid(const ModulationPlan& plan, const OracleGrid& grid);

/// E_B(t) sampled over the grid: exact modulator, exact group advance through
/// the fiber, exact exp(j*[m3 cos(..) + m4 cos(..)]) phase modulation.
TimeDomainField synthesize_bob_field(const ModulationPlan& plan,
                                     const FiberLink& fiber,
                                     const OracleGrid& grid,
                                     ModulatorModel model = ModulatorModel::push_pull);

/// |(1/N) sum_n s_n exp(-j*omega*t_n)|^2. `omega` must complete an integer
/// number of cycles over the record (negative omega selects lower sidebands).
double tone_power(const TimeDomainField& field, double omega);

SidebandSpectrum sideband_intensities_oracle(
    const ModulationPlan& plan, const FiberLink& fiber, const OracleGrid& grid,
    ModulatorModel model = ModulatorModel::push_pull);

enum class FringeShape { cos2, sin2 };

/// Least-squares fit intensity ~ A * shape(dPhi/2).
struct FringeFit {
  double amplitude = 0.0;
  /// max_i |I_i - A*shape_i| / A
  double max_relative_residual = 0.0;
};

FringeFit fit_fringe(std::span<const double> delta_phi,
                     std::span<const double> intensity, FringeShape shape);

/// (max - min) / (max + min); 0 when both are zero.
double visibility(std::span<const double> intensity);

}  // namespace hpqkd::optics
