// SPDX-License-Identifier: Apache-2.0

#include "eval.hpp"

#include <cmath>

#include "error.hpp"

namespace score {

SpectralGap spectral_gap(const SpectrumProfile& a, const SpectrumProfile& b, double floor) {
    validate_profile(a, "spectral_gap a");
    validate_profile(b, "spectral_gap b");
    if (a.bins() != b.bins()) {
        fail(ErrorCode::invalid_argument, "spectral_gap: bin counts differ");
    }
    SpectralGap gap;
    gap.power_floor = floor;
    gap.freq = a.freq;
    gap.log_gap.resize(a.bins());
    for (size_t i = 0; i < a.bins(); ++i) {
        if (std::fabs(a.freq[i] - b.freq[i]) > 1e-9 * std::max(1.0, a.freq[i])) {
            fail(ErrorCode::invalid_argument, "spectral_gap: binnings differ");
        }
        double g = std::log(std::max(a.power[i], floor)) - std::log(std::max(b.power[i], floor));
        gap.log_gap[i] = g;
        gap.distance += g * g;
    }
    return gap;
}

double log_spectral_distance(const SpectrumProfile& a, const SpectrumProfile& b, double floor) {
    return spectral_gap(a, b, floor).distance;
}

double log_spectral_distance_band(const SpectrumProfile& a, const SpectrumProfile& b, double f_lo,
                                  double f_hi, double floor) {
    SpectralGap gap = spectral_gap(a, b, floor);
    double d = 0.0;
    for (size_t i = 0; i < gap.freq.size(); ++i) {
        if (gap.freq[i] >= f_lo && gap.freq[i] <= f_hi) d += gap.log_gap[i] * gap.log_gap[i];
    }
    return d;
}

std::optional<double> psnr(const ImageGrid& a, const ImageGrid& b) {
    if (!a.same_shape(b)) fail(ErrorCode::invalid_argument, "psnr: shape mismatch");
    require_finite(a, "psnr");
    require_finite(b, "psnr");
    double mse = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    if (mse == 0.0) return std::nullopt;
    const double peak = 2.0;  // model-scale range width
    return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace score
