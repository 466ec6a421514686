// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "error.hpp"
#include "field.hpp"
#include "spectral.hpp"

using namespace score;

namespace {

ImageGrid random_image(int h, int w, int c, RngStream& rng) {
    ImageGrid g(h, w, c);
    for (double& v : g.data) v = rng.next_normal();
    return g;
}

// Independent masking oracle: zero coefficients above the cutoff by direct
// radius comparison, no shared code path with cutoff_freq beyond radial_freq.
FreqGrid mask_oracle(const FreqGrid& X, double f_cutoff) {
    FreqGrid out = X;
    for (int c = 0; c < X.channels; ++c) {
        for (int ky = 0; ky < X.height; ++ky) {
            for (int kx = 0; kx < X.width; ++kx) {
                double fy = (ky <= (X.height - 1) / 2) ? double(ky) : double(ky - X.height);
                double fx = (kx <= (X.width - 1) / 2) ? double(kx) : double(kx - X.width);
                double r = std::sqrt((fx / X.width) * (fx / X.width) +
                                     (fy / X.height) * (fy / X.height));
                if (r > f_cutoff) out.at(ky, kx, c) = {0.0, 0.0};
            }
        }
    }
    return out;
}

double total_energy(const ImageGrid& g) {
    double e = 0.0;
    for (double v : g.data) e += v * v;
    return e;
}

}  // namespace

TEST_CASE("rapsd of a constant image concentrates in bin 0") {
    ImageGrid g(16, 16, 1);
    for (double& v : g.data) v = 0.5;
    SpectrumProfile p = rapsd(g, 8);
    CHECK(p.power[0] > 0.0);
    for (size_t b = 1; b < p.bins(); ++b) CHECK(p.power[b] < 1e-18);
    // DC energy: |F(0,0)|^2 = c^2 * N^2 spread over count[0] coefficients.
    CHECK(p.power[0] * static_cast<double>(p.count[0]) ==
          doctest::Approx(0.25 * 256.0).epsilon(1e-12));
}

TEST_CASE("rapsd energy bookkeeping matches direct spectral summation") {
    RngStream rng(1234, 0);
    for (int c : {1, 3}) {
        ImageGrid g = random_image(24, 18, c, rng);
        FreqGrid X = dft2(g);
        double direct = 0.0;
        for (const auto& v : X.data) direct += std::norm(v);
        direct /= c;  // power is the per-channel mean
        SpectrumProfile p = rapsd(g, 9);
        double booked = 0.0;
        for (size_t b = 0; b < p.bins(); ++b) {
            booked += p.power[b] * static_cast<double>(p.count[b]);
        }
        CHECK(std::fabs(booked - direct) / direct < 1e-6);
        // counts cover every coefficient exactly once
        int64_t total = std::accumulate(p.count.begin(), p.count.end(), int64_t{0});
        CHECK(total == 24 * 18);
    }
}

TEST_CASE("white noise has a flat RAPSD within 5% per bin at 1024 samples") {
    RngStream rng(77, 0);
    const int n = 1024;
    std::vector<ImageGrid> fields;
    fields.reserve(n);
    for (int i = 0; i < n; ++i) {
        RngStream sub = rng.substream(static_cast<uint64_t>(i));
        fields.push_back(random_image(64, 64, 1, sub));
    }
    SpectrumProfile p = corpus_profile(fields, 32);
    for (size_t b = 0; b < p.bins(); ++b) {
        CHECK(std::fabs(p.power[b] - 1.0) < 0.05);
    }
}

TEST_CASE("corpus_profile of one image equals its rapsd") {
    RngStream rng(5, 0);
    ImageGrid g = random_image(16, 16, 1, rng);
    std::vector<ImageGrid> one{g};
    SpectrumProfile a = corpus_profile(one, 8);
    SpectrumProfile b = rapsd(g, 8);
    for (size_t i = 0; i < a.bins(); ++i) CHECK(a.power[i] == b.power[i]);
}

TEST_CASE("corpus_profile of x and -x equals rapsd of x") {
    RngStream rng(6, 0);
    ImageGrid g = random_image(16, 16, 1, rng);
    ImageGrid neg = g;
    for (double& v : neg.data) v = -v;
    std::vector<ImageGrid> pair{g, neg};
    SpectrumProfile a = corpus_profile(pair, 8);
    SpectrumProfile b = rapsd(g, 8);
    for (size_t i = 0; i < a.bins(); ++i) {
        CHECK(a.power[i] == doctest::Approx(b.power[i]).epsilon(1e-12));
    }
}

TEST_CASE("corpus_profile is permutation-invariant") {
    RngStream rng(7, 0);
    std::vector<ImageGrid> images;
    for (int i = 0; i < 8; ++i) images.push_back(random_image(12, 12, 1, rng));
    SpectrumProfile fwd = corpus_profile(images, 6);
    std::reverse(images.begin(), images.end());
    SpectrumProfile rev = corpus_profile(images, 6);
    for (size_t i = 0; i < fwd.bins(); ++i) {
        CHECK(fwd.power[i] == doctest::Approx(rev.power[i]).epsilon(1e-12));
    }
}

TEST_CASE("corpus_profile rejects empty and mixed-dimension corpora") {
    std::vector<ImageGrid> empty;
    CHECK_THROWS_AS((void)corpus_profile(empty, 8), Error);
    RngStream rng(8, 0);
    std::vector<ImageGrid> mixed{random_image(16, 16, 1, rng), random_image(16, 8, 1, rng)};
    CHECK_THROWS_AS((void)corpus_profile(mixed, 8), Error);
}

TEST_CASE("analytic noise profile is exactly flat at 1") {
    SpectrumProfile p = noise_profile(32, 32, 16);
    for (size_t b = 0; b < p.bins(); ++b) CHECK(p.power[b] == 1.0);
    int64_t total = std::accumulate(p.count.begin(), p.count.end(), int64_t{0});
    CHECK(total == 32 * 32);
}

TEST_CASE("empirical noise profile converges to the analytic one") {
    RngStream rng(2025, 3);
    SpectrumProfile emp = noise_profile(32, 32, 16, 1024, rng);
    SpectrumProfile ana = noise_profile(32, 32, 16);
    for (size_t b = 0; b < emp.bins(); ++b) {
        CHECK(std::fabs(emp.power[b] - ana.power[b]) / ana.power[b] < 0.05);
    }
}

TEST_CASE("empirical noise profile is deterministic under a fixed seed") {
    RngStream a(42, 9), b(42, 9);
    SpectrumProfile pa = noise_profile(16, 16, 8, 16, a);
    SpectrumProfile pb = noise_profile(16, 16, 8, 16, b);
    CHECK(pa.power == pb.power);
    RngStream c(1, 1);
    CHECK_THROWS_AS((void)noise_profile(16, 16, 8, 1, c), Error);
}

TEST_CASE("snr is exactly 1 when alpha_bar is 1/2 and the spectra match") {
    NoiseSchedule s = make_schedule(ScheduleKind::linear, 1, 0.5, 0.5);
    CHECK(s.alpha_bar_at(1) == 0.5);
    SpectrumProfile p = SpectrumProfile::flat(8, 2.5);
    SnrCurve curve = snr_at(s, 1, p, p);
    for (double v : curve.snr) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("snr decreases in t and vanishes at t = T") {
    NoiseSchedule s = make_schedule(ScheduleKind::linear, 1000, 1e-4, 0.02);
    SpectrumProfile p0 = SpectrumProfile::power_law(16, 0.01, 1.0, 0.05);
    SpectrumProfile pT = noise_profile(32, 32, 16);
    std::vector<double> prev;
    for (int t = 1; t <= 1000; ++t) {
        SnrCurve c = snr_at(s, t, p0, pT);
        if (!prev.empty()) {
            for (size_t b = 0; b < c.snr.size(); ++b) CHECK(c.snr[b] <= prev[b]);
        }
        prev = c.snr;
    }
    for (double v : prev) CHECK(v < 1e-3);  // alpha_bar_T ~ 4e-5
}

TEST_CASE("snr rejects mismatched binning and zero noise bins") {
    NoiseSchedule s = make_schedule(ScheduleKind::linear, 10, 1e-4, 0.02);
    SpectrumProfile a = SpectrumProfile::flat(8, 1.0);
    SpectrumProfile b = SpectrumProfile::flat(16, 1.0);
    CHECK_THROWS_AS((void)snr_at(s, 5, a, b), Error);
    SpectrumProfile z = SpectrumProfile::flat(8, 1.0);
    z.power[3] = 0.0;
    try {
        (void)snr_at(s, 5, a, z);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::degenerate_spectrum);
    }
}

TEST_CASE("cutoff at the maximum frequency is the exact identity") {
    RngStream rng(31, 0);
    ImageGrid g = random_image(16, 16, 1, rng);
    ImageGrid out = cutoff(g, max_radial_freq());
    CHECK(out.data == g.data);  // bit-exact: nothing is masked
}

TEST_CASE("cutoff at f = 0 keeps DC, so constant images pass through") {
    ImageGrid g(8, 8, 1);
    for (double& v : g.data) v = -0.125;
    ImageGrid out = cutoff(g, 0.0);
    for (size_t i = 0; i < g.data.size(); ++i) {
        CHECK(out.data[i] == doctest::Approx(g.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("frequency-domain cutoff matches the masking oracle bit-exactly") {
    RngStream rng(55, 0);
    ImageGrid g = random_image(20, 14, 3, rng);
    FreqGrid X = dft2(g);
    for (double f : {0.1, 0.25, 0.3, 0.5, 0.7}) {
        FreqGrid ours = cutoff_freq(X, f);
        FreqGrid oracle = mask_oracle(X, f);
        CHECK(ours.data == oracle.data);
    }
}

TEST_CASE("cutoff is an idempotent projection") {
    RngStream rng(66, 0);
    ImageGrid g = random_image(32, 32, 1, rng);
    const double f = 0.3;
    FreqGrid X = dft2(g);
    FreqGrid once = cutoff_freq(X, f);
    FreqGrid twice = cutoff_freq(once, f);
    CHECK(once.data == twice.data);  // bit-exact in the frequency domain

    ImageGrid spatial_once = cutoff(g, f);
    ImageGrid spatial_twice = cutoff(spatial_once, f);
    double worst = 0.0;
    for (size_t i = 0; i < spatial_once.data.size(); ++i) {
        worst = std::max(worst, std::fabs(spatial_once.data[i] - spatial_twice.data[i]));
    }
    CHECK(worst < 1e-7);
}

TEST_CASE("cutoff output has zero power above the cutoff and preserves the passband") {
    RngStream rng(67, 0);
    ImageGrid g = random_image(32, 32, 1, rng);
    const double f = 0.3;
    FreqGrid masked = cutoff_freq(dft2(g), f);

    SpectrumProfile p = rapsd(masked, 16);
    for (size_t b = 0; b < p.bins(); ++b) {
        // bins entirely above the cutoff carry exactly zero power
        double lo_edge = static_cast<double>(b) * (max_radial_freq() / 16.0);
        if (lo_edge > f) CHECK(p.power[b] == 0.0);
    }

    // passband is preserved within DFT roundtrip tolerance after the
    // spatial roundtrip
    ImageGrid low = cutoff(g, f);
    FreqGrid X0 = dft2(g);
    FreqGrid X1 = dft2(low);
    for (int ky = 0; ky < 32; ++ky) {
        for (int kx = 0; kx < 32; ++kx) {
            if (radial_freq(ky, kx, 32, 32) <= f) {
                CHECK(std::abs(X1.at(ky, kx, 0) - X0.at(ky, kx, 0)) < 1e-7);
            }
        }
    }
}

TEST_CASE("cutoff never increases energy") {
    RngStream rng(68, 0);
    for (int trial = 0; trial < 10; ++trial) {
        ImageGrid g = random_image(16, 24, 1, rng);
        double f = rng.next_double() * max_radial_freq();
        ImageGrid low = cutoff(g, f);
        CHECK(total_energy(low) <= total_energy(g) * (1.0 + 1e-12));
    }
}

TEST_CASE("cutoff rejects out-of-range frequencies") {
    ImageGrid g(8, 8, 1);
    CHECK_THROWS_AS((void)cutoff(g, -0.1), Error);
    CHECK_THROWS_AS((void)cutoff(g, 0.8), Error);
}

TEST_CASE("rapsd rejects out-of-range bin counts") {
    ImageGrid g(16, 16, 1);
    CHECK_THROWS_AS((void)rapsd(g, 1), Error);
    CHECK_THROWS_AS((void)rapsd(g, 500), Error);
    CHECK_NOTHROW((void)rapsd(g, default_bins(16, 16)));
}

TEST_CASE("default binning yields non-empty annuli across grid shapes") {
    RngStream rng(99, 0);
    for (auto [h, w] : {std::pair{2, 2}, {3, 5}, {8, 8}, {16, 9}, {32, 32}, {2, 64}, {40, 24}}) {
        ImageGrid g = random_image(h, w, 1, rng);
        SpectrumProfile p = rapsd(g, default_bins(h, w));
        for (int64_t c : p.count) CHECK(c >= 1);
    }
}

TEST_CASE("gaussian fields reproduce a power-law RAPSD within 5% per bin") {
    SpectrumProfile shape = SpectrumProfile::power_law(16, 0.01, 2.0, 0.1);
    RngStream rng(424242, 0);
    const int n = 1024;
    std::vector<ImageGrid> fields(n);
    for (int i = 0; i < n; ++i) {
        RngStream sub = rng.substream(static_cast<uint64_t>(i));
        fields[static_cast<size_t>(i)] = gaussian_field(shape, 32, 32, sub);
    }
    SpectrumProfile measured = corpus_profile(fields, 16);
    // oracle: the exact expectation is the annulus mean of P(r(k)) over the
    // coefficient lattice
    SpectrumProfile expected = expected_rapsd(shape, 32, 32, 16);
    for (size_t b = 0; b < measured.bins(); ++b) {
        CHECK(std::fabs(measured.power[b] - expected.power[b]) / expected.power[b] < 0.05);
    }
}

TEST_CASE("diffused gaussian fields follow the spectral mixing law") {
    // E[P_t] = abar * P0 + (1 - abar) * PT, checked at 512 samples / 5%.
    NoiseSchedule s = make_schedule(ScheduleKind::linear, 1000, 1e-4, 0.02);
    SpectrumProfile shape = SpectrumProfile::power_law(16, 0.01, 1.0, 0.05);
    RngStream rng(31337, 0);
    const int n = 512;
    const int t = 500;

    std::vector<ImageGrid> clean, diffused;
    clean.reserve(n);
    diffused.reserve(n);
    for (int i = 0; i < n; ++i) {
        RngStream field_rng = rng.substream(2 * i);
        RngStream noise_rng = rng.substream(2 * i + 1);
        ImageGrid x0 = gaussian_field(shape, 32, 32, field_rng);
        double a = std::sqrt(s.alpha_bar_at(t));
        double b = std::sqrt(1.0 - s.alpha_bar_at(t));
        ImageGrid xt = x0;
        for (double& v : xt.data) v = a * v + b * noise_rng.next_normal();
        clean.push_back(std::move(x0));
        diffused.push_back(std::move(xt));
    }
    SpectrumProfile p0 = corpus_profile(clean, 16);
    SpectrumProfile pt = corpus_profile(diffused, 16);
    SpectrumProfile pT = noise_profile(32, 32, 16);
    double abar = s.alpha_bar_at(t);
    for (size_t b = 0; b < pt.bins(); ++b) {
        double expected = abar * p0.power[b] + (1.0 - abar) * pT.power[b];
        CHECK(std::fabs(pt.power[b] - expected) / expected < 0.05);
    }
}
