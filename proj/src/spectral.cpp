// SPDX-License-Identifier: Apache-2.0

#include "spectral.hpp"

#include <cmath>
#include <string>

#include "error.hpp"
#include "parallel.hpp"

namespace score {

namespace {

void check_bins(int bins, int height, int width) {
    int hi = max_bins(height, width);
    if (bins < 2 || bins > hi) {
        fail(ErrorCode::invalid_argument,
             "rapsd: bins must lie in [2, " + std::to_string(hi) + "], got " +
                 std::to_string(bins));
    }
}

}  // namespace

SpectrumProfile rapsd(const FreqGrid& X, int bins) {
    check_bins(bins, X.height, X.width);
    RadialBinning binning(bins);
    std::vector<double> sum(static_cast<size_t>(bins), 0.0);
    std::vector<int64_t> count(static_cast<size_t>(bins), 0);
    for (int ky = 0; ky < X.height; ++ky) {
        for (int kx = 0; kx < X.width; ++kx) {
            int b = binning.bin_of(radial_freq(ky, kx, X.height, X.width));
            count[static_cast<size_t>(b)] += 1;
            for (int c = 0; c < X.channels; ++c) {
                sum[static_cast<size_t>(b)] += std::norm(X.at(ky, kx, c));
            }
        }
    }
    SpectrumProfile p;
    p.freq = binning.centers();
    p.power.resize(static_cast<size_t>(bins));
    p.count = count;
    for (int b = 0; b < bins; ++b) {
        if (count[static_cast<size_t>(b)] == 0) {
            fail(ErrorCode::invalid_argument,
                 "rapsd: annulus " + std::to_string(b) + " is empty; use fewer bins");
        }
        p.power[static_cast<size_t>(b)] =
            sum[static_cast<size_t>(b)] /
            (static_cast<double>(count[static_cast<size_t>(b)]) * X.channels);
    }
    return p;
}

SpectrumProfile rapsd(const ImageGrid& x, int bins) {
    return rapsd(dft2(x), bins);
}

SpectrumProfile corpus_profile(std::span<const ImageGrid> images, int bins) {
    if (images.empty()) fail(ErrorCode::invalid_argument, "corpus_profile: empty corpus");
    const ImageGrid& first = images.front();
    for (const ImageGrid& g : images) {
        if (!g.same_shape(first)) {
            fail(ErrorCode::invalid_argument, "corpus_profile: mixed image dimensions");
        }
    }
    std::vector<SpectrumProfile> per_image(images.size());
    parallel_for(images.size(), [&](size_t i) { per_image[i] = rapsd(images[i], bins); });

    SpectrumProfile acc = per_image.front();
    for (size_t i = 1; i < per_image.size(); ++i) {
        for (size_t b = 0; b < acc.bins(); ++b) acc.power[b] += per_image[i].power[b];
    }
    double inv_n = 1.0 / static_cast<double>(images.size());
    for (double& v : acc.power) v *= inv_n;
    return acc;
}

SpectrumProfile noise_profile(int height, int width, int bins) {
    validate_dims(height, width, 1);
    check_bins(bins, height, width);
    RadialBinning binning(bins);
    std::vector<int64_t> count(static_cast<size_t>(bins), 0);
    for (int ky = 0; ky < height; ++ky) {
        for (int kx = 0; kx < width; ++kx) {
            count[static_cast<size_t>(binning.bin_of(radial_freq(ky, kx, height, width)))] += 1;
        }
    }
    SpectrumProfile p;
    p.freq = binning.centers();
    p.count = count;
    p.power.assign(static_cast<size_t>(bins), 1.0);  // unit white noise, unitary transform
    for (int b = 0; b < bins; ++b) {
        if (count[static_cast<size_t>(b)] == 0) {
            fail(ErrorCode::invalid_argument,
                 "noise_profile: annulus " + std::to_string(b) + " is empty; use fewer bins");
        }
    }
    return p;
}

SpectrumProfile noise_profile(int height, int width, int bins, int n, RngStream& rng) {
    if (n < 2) fail(ErrorCode::invalid_argument, "noise_profile: empirical mode needs n >= 2");
    validate_dims(height, width, 1);
    std::vector<ImageGrid> fields;
    fields.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        RngStream sub = rng.substream(static_cast<uint64_t>(i));
        ImageGrid g(height, width, 1);
        for (double& v : g.data) v = sub.next_normal();
        fields.push_back(std::move(g));
    }
    return corpus_profile(fields, bins);
}

SnrCurve snr_at(const NoiseSchedule& s, int t, const SpectrumProfile& p0,
                const SpectrumProfile& pT) {
    validate_profile(p0, "snr_at p0");
    validate_profile(pT, "snr_at pT");
    if (t < 1 || t > s.total_steps) {
        fail(ErrorCode::invalid_argument, "snr_at: t out of range: " + std::to_string(t));
    }
    if (p0.bins() != pT.bins()) {
        fail(ErrorCode::invalid_argument, "snr_at: profiles have different bin counts");
    }
    for (size_t b = 0; b < p0.bins(); ++b) {
        if (std::fabs(p0.freq[b] - pT.freq[b]) > 1e-9 * std::max(1.0, p0.freq[b])) {
            fail(ErrorCode::invalid_argument, "snr_at: profiles use different binnings");
        }
        if (pT.power[b] <= 0.0) {
            fail(ErrorCode::degenerate_spectrum,
                 "snr_at: PT has a zero bin at f = " + std::to_string(pT.freq[b]));
        }
    }
    double abar = s.alpha_bar_at(t);
    double ratio = abar / (1.0 - abar);
    SnrCurve curve;
    curve.t = t;
    curve.freq = p0.freq;
    curve.snr.resize(p0.bins());
    for (size_t b = 0; b < p0.bins(); ++b) {
        curve.snr[b] = ratio * p0.power[b] / pT.power[b];
    }
    return curve;
}

FreqGrid cutoff_freq(const FreqGrid& X, double f_cutoff) {
    if (!(f_cutoff >= 0.0 && f_cutoff <= max_radial_freq())) {
        fail(ErrorCode::invalid_argument,
             "cutoff: f_cutoff outside [0, sqrt(2)/2]: " + std::to_string(f_cutoff));
    }
    FreqGrid out = X;
    for (int ky = 0; ky < X.height; ++ky) {
        for (int kx = 0; kx < X.width; ++kx) {
            if (radial_freq(ky, kx, X.height, X.width) > f_cutoff) {
                for (int c = 0; c < X.channels; ++c) out.at(ky, kx, c) = {0.0, 0.0};
            }
        }
    }
    return out;
}

ImageGrid cutoff(const ImageGrid& x, double f_cutoff) {
    if (!(f_cutoff >= 0.0 && f_cutoff <= max_radial_freq())) {
        fail(ErrorCode::invalid_argument,
             "cutoff: f_cutoff outside [0, sqrt(2)/2]: " + std::to_string(f_cutoff));
    }
    require_finite(x, "cutoff");
    // When no coefficient lies above the cutoff the projection is the
    // identity; skip the transform so the input passes through bit-exactly.
    bool any_masked = false;
    for (int ky = 0; ky < x.height && !any_masked; ++ky) {
        for (int kx = 0; kx < x.width; ++kx) {
            if (radial_freq(ky, kx, x.height, x.width) > f_cutoff) {
                any_masked = true;
                break;
            }
        }
    }
    if (!any_masked) return x;
    return idft2(cutoff_freq(dft2(x), f_cutoff));
}

}  // namespace score
