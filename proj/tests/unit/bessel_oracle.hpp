#pragma once

// Frequency-domain reference for the sideband powers, built independently of
// the time-domain synthesis: every factor exp(j*b*cos(wt+p)) is expanded with
// the Jacobi-Anger series, the link multiplies each harmonic by exp(j*w*tau),
// and Bob's modulation is applied as a discrete convolution.

#include "hpqkd/sideband_optics.hpp"

namespace testing_oracle {

hpqkd::optics::SidebandSpectrum bessel_sideband_powers(
    const hpqkd::optics::ModulationPlan& plan, const hpqkd::optics::FiberLink& fiber,
    hpqkd::optics::ModulatorModel model, int max_order = 10);

}  // namespace testing_oracle
