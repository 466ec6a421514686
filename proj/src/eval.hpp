// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "grid.hpp"
#include "profile.hpp"

namespace score {

// Power floor substituted for zero bins before taking logs.
inline constexpr double kLogPowerFloor = 1e-12;

// Per-bin log-power gaps and their summed square: the log-spectral distance
// d = sum_b (ln Pa(f_b) - ln Pb(f_b))^2. Profiles must share binning.
struct SpectralGap {
    std::vector<double> freq;
    std::vector<double> log_gap;  // ln Pa - ln Pb per bin
    double distance = 0.0;
    double power_floor = kLogPowerFloor;
};

SpectralGap spectral_gap(const SpectrumProfile& a, const SpectrumProfile& b,
                         double floor = kLogPowerFloor);

double log_spectral_distance(const SpectrumProfile& a, const SpectrumProfile& b,
                             double floor = kLogPowerFloor);

// Same distance restricted to bins with freq in [f_lo, f_hi].
double log_spectral_distance_band(const SpectrumProfile& a, const SpectrumProfile& b, double f_lo,
                                  double f_hi, double floor = kLogPowerFloor);

// Peak signal-to-noise ratio in dB for model-scale images (peak-to-peak 2).
// Returns nullopt for identical images (infinite PSNR).
std::optional<double> psnr(const ImageGrid& a, const ImageGrid& b);

}  // namespace score
