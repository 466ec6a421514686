// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace score {

// Radial power profile P(f): mean power per DFT coefficient in each annulus.
// Annulus edges are uniform in radial frequency from 0 to sqrt(2)/2; `freq`
// holds bin centers (ascending, bin 0 contains DC), `count` the number of
// coefficients per annulus. `power` is the per-channel mean, so
// sum(power * count) equals the channel-averaged spectral energy.
struct SpectrumProfile {
    std::vector<double> freq;
    std::vector<double> power;
    std::vector<int64_t> count;

    size_t bins() const { return freq.size(); }

    // P(f) by piecewise-linear interpolation between bin centers, constant
    // beyond the first/last center.
    double value_at(double f) const;

    void save_csv(const std::filesystem::path& path) const;
    static SpectrumProfile load_csv(const std::filesystem::path& path);

    // Synthetic profile P(f) = amplitude * (f + f0)^(-exponent) sampled at
    // the bin centers of the given binning. count is 1 per bin (no source).
    static SpectrumProfile power_law(int bins, double amplitude, double exponent, double f0);

    // Flat profile with the given per-mode power.
    static SpectrumProfile flat(int bins, double value);
};

void validate_profile(const SpectrumProfile& p, const char* context);

// Uniform radial binning shared by RAPSD, cutoff tests and profile factories.
struct RadialBinning {
    int bins = 0;
    double delta = 0.0;

    explicit RadialBinning(int b);

    // Deterministic bin assignment; radii on an exact annulus edge go to the
    // lower bin, so bin b covers (b*delta, (b+1)*delta] with DC in bin 0.
    int bin_of(double r) const;
    double center(int b) const { return (b + 0.5) * delta; }
    std::vector<double> centers() const;
};

// Largest admissible bin count for an H x W grid: the radius, in index
// units, of the farthest representable frequency.
int max_bins(int height, int width);

// Default bin count: ceil(min(H, W) / 2), floored at 2.
int default_bins(int height, int width);

}  // namespace score
