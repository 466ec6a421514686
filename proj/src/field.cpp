// SPDX-License-Identifier: Apache-2.0

#include "field.hpp"

#include <cmath>

#include "error.hpp"
#include "fft.hpp"
#include "profile.hpp"

namespace score {

ImageGrid gaussian_field(const SpectrumProfile& profile, int height, int width, RngStream& rng) {
    validate_profile(profile, "gaussian_field");
    validate_dims(height, width, 1);

    ImageGrid white(height, width, 1);
    for (double& v : white.data) v = rng.next_normal();

    FreqGrid spec = dft2(white);
    for (int ky = 0; ky < height; ++ky) {
        for (int kx = 0; kx < width; ++kx) {
            double p = profile.value_at(radial_freq(ky, kx, height, width));
            spec.at(ky, kx, 0) *= std::sqrt(p);
        }
    }
    // The gain depends only on |k|, so Hermitian symmetry is preserved and
    // the inverse is real.
    return idft2(spec);
}

SpectrumProfile expected_rapsd(const SpectrumProfile& profile, int height, int width, int bins) {
    validate_profile(profile, "expected_rapsd");
    RadialBinning binning(bins);
    std::vector<double> sum(static_cast<size_t>(bins), 0.0);
    std::vector<int64_t> count(static_cast<size_t>(bins), 0);
    for (int ky = 0; ky < height; ++ky) {
        for (int kx = 0; kx < width; ++kx) {
            double r = radial_freq(ky, kx, height, width);
            int b = binning.bin_of(r);
            sum[static_cast<size_t>(b)] += profile.value_at(r);
            count[static_cast<size_t>(b)] += 1;
        }
    }
    SpectrumProfile out;
    out.freq = binning.centers();
    out.count = count;
    out.power.resize(static_cast<size_t>(bins));
    for (int b = 0; b < bins; ++b) {
        if (count[static_cast<size_t>(b)] == 0) {
            fail(ErrorCode::invalid_argument, "expected_rapsd: empty annulus; use fewer bins");
        }
        out.power[static_cast<size_t>(b)] =
            sum[static_cast<size_t>(b)] / static_cast<double>(count[static_cast<size_t>(b)]);
    }
    return out;
}

}  // namespace score
