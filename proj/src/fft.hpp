// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <vector>

#include "grid.hpp"

namespace score {

// Frequency-domain counterpart of ImageGrid. Coefficients are indexed by
// integer frequencies with DC at (0,0); storage is channel-planar
// (c * H*W + ky * W + kx) since all spectral passes run per channel.
struct FreqGrid {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<std::complex<double>> data;

    FreqGrid() = default;
    FreqGrid(int h, int w, int c)
        : height(h), width(w), channels(c),
          data(static_cast<size_t>(h) * w * c, std::complex<double>(0.0, 0.0)) {}

    std::complex<double>& at(int ky, int kx, int c) {
        return data[static_cast<size_t>(c) * height * width + static_cast<size_t>(ky) * width + kx];
    }
    std::complex<double> at(int ky, int kx, int c) const {
        return data[static_cast<size_t>(c) * height * width + static_cast<size_t>(ky) * width + kx];
    }
};

// Unitary 2D DFT per channel: both directions carry 1/sqrt(H*W), so Parseval
// holds exactly and unit white noise has per-mode power 1.
FreqGrid dft2(const ImageGrid& x);

// Inverse transform. Input must be Hermitian-symmetric (real spatial field);
// violations beyond tolerance raise a symmetry-violation error, the residual
// imaginary dust of a valid input is discarded.
ImageGrid idft2(const FreqGrid& X);

// Radial frequency of coefficient (ky, kx) in cycles/pixel, with integer
// frequencies folded to [-0.5, 0.5) per axis. Range [0, sqrt(2)/2].
double radial_freq(int ky, int kx, int height, int width);

// Upper end of the radial frequency range: sqrt(2)/2.
double max_radial_freq();

namespace detail {
// In-place complex DFT of arbitrary length; sign = -1 forward, +1 inverse.
// Unnormalized (callers apply their own scaling).
void fft_any(std::complex<double>* x, size_t n, int sign);
}  // namespace detail

}  // namespace score
