// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "grid.hpp"
#include "profile.hpp"
#include "rng.hpp"

namespace score {

// Zero-mean stationary real Gaussian field whose expected radial power
// follows `profile`: white noise shaped in the frequency domain by
// sqrt(P(r(k))). Single channel.
ImageGrid gaussian_field(const SpectrumProfile& profile, int height, int width, RngStream& rng);

// Expected RAPSD of gaussian_field output for a given grid and binning:
// the annulus mean of P(r(k)) over the actual coefficient lattice. This is
// the closed-form reference the Monte Carlo estimates converge to.
SpectrumProfile expected_rapsd(const SpectrumProfile& profile, int height, int width, int bins);

}  // namespace score
