// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "fft.hpp"
#include "grid.hpp"
#include "profile.hpp"
#include "rng.hpp"
#include "schedule.hpp"

namespace score {

// Radially averaged power spectral density: |F(k)|^2 averaged over channels,
// binned by radial frequency into `bins` uniform annuli.
SpectrumProfile rapsd(const ImageGrid& x, int bins);

// Same, from an already-computed spectrum (exact: no transform roundtrip).
SpectrumProfile rapsd(const FreqGrid& X, int bins);

// Arithmetic mean of per-image RAPSDs over a corpus of uniform dimensions.
// Evaluates per-image spectra in parallel, reduces in corpus order.
SpectrumProfile corpus_profile(std::span<const ImageGrid> images, int bins);

// Power profile of unit white noise. Analytic: exactly flat at the per-mode
// power implied by the unitary DFT (= 1). Empirical: Monte Carlo mean RAPSD
// of n sampled fields (n >= 2).
SpectrumProfile noise_profile(int height, int width, int bins);
SpectrumProfile noise_profile(int height, int width, int bins, int n, RngStream& rng);

// Per-bin SNR_t(f) = alpha_bar_t * P0(f) / ((1 - alpha_bar_t) * PT(f)).
struct SnrCurve {
    int t = 0;
    std::vector<double> freq;
    std::vector<double> snr;
};
SnrCurve snr_at(const NoiseSchedule& s, int t, const SpectrumProfile& p0,
                const SpectrumProfile& pT);

// Hard low-pass projection: zero every coefficient with radial frequency
// strictly above f_cutoff, preserve the rest bit-exactly.
FreqGrid cutoff_freq(const FreqGrid& X, double f_cutoff);
ImageGrid cutoff(const ImageGrid& x, double f_cutoff);

}  // namespace score
