// SPDX-License-Identifier: Apache-2.0

#include "fft.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <string>

#include "error.hpp"

namespace score {

namespace {

using cplx = std::complex<double>;

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Twiddle tables and Bluestein chirps are cached per (length, sign). The
// cache is thread-local so concurrent chains never contend.
struct Pow2Plan {
    std::vector<cplx> twiddle;  // e^(sign*2*pi*i*k/n) for k < n/2
    std::vector<size_t> bitrev;
};

struct BluesteinPlan {
    size_t m = 0;                 // pow2 convolution length
    std::vector<cplx> chirp;      // e^(sign*i*pi*k^2/n)
    std::vector<cplx> kernel_ft;  // forward pow2 FFT of the chirp kernel
};

const Pow2Plan& pow2_plan(size_t n, int sign) {
    thread_local std::map<std::pair<size_t, int>, std::unique_ptr<Pow2Plan>> cache;
    auto& slot = cache[{n, sign}];
    if (!slot) {
        auto plan = std::make_unique<Pow2Plan>();
        plan->twiddle.resize(n / 2);
        for (size_t k = 0; k < n / 2; ++k) {
            double angle = sign * 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
            plan->twiddle[k] = cplx(std::cos(angle), std::sin(angle));
        }
        plan->bitrev.resize(n);
        size_t bits = 0;
        while ((size_t(1) << bits) < n) ++bits;
        for (size_t i = 0; i < n; ++i) {
            size_t r = 0;
            for (size_t b = 0; b < bits; ++b) {
                if (i & (size_t(1) << b)) r |= size_t(1) << (bits - 1 - b);
            }
            plan->bitrev[i] = r;
        }
        slot = std::move(plan);
    }
    return *slot;
}

void fft_pow2(cplx* x, size_t n, int sign) {
    if (n == 1) return;
    const Pow2Plan& plan = pow2_plan(n, sign);
    for (size_t i = 0; i < n; ++i) {
        size_t j = plan.bitrev[i];
        if (i < j) std::swap(x[i], x[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        size_t half = len >> 1;
        size_t step = n / len;
        for (size_t base = 0; base < n; base += len) {
            for (size_t k = 0; k < half; ++k) {
                cplx w = plan.twiddle[k * step];
                cplx u = x[base + k];
                cplx v = x[base + k + half] * w;
                x[base + k] = u + v;
                x[base + k + half] = u - v;
            }
        }
    }
}

const BluesteinPlan& bluestein_plan(size_t n, int sign) {
    thread_local std::map<std::pair<size_t, int>, std::unique_ptr<BluesteinPlan>> cache;
    auto& slot = cache[{n, sign}];
    if (!slot) {
        auto plan = std::make_unique<BluesteinPlan>();
        plan->m = next_pow2(2 * n - 1);
        plan->chirp.resize(n);
        for (size_t k = 0; k < n; ++k) {
            // k^2 mod 2n keeps the phase argument small and exact.
            uint64_t k2 = (static_cast<uint64_t>(k) * k) % (2 * n);
            double angle = sign * M_PI * static_cast<double>(k2) / static_cast<double>(n);
            plan->chirp[k] = cplx(std::cos(angle), std::sin(angle));
        }
        std::vector<cplx> kernel(plan->m, cplx(0.0, 0.0));
        kernel[0] = std::conj(plan->chirp[0]);
        for (size_t k = 1; k < n; ++k) {
            kernel[k] = std::conj(plan->chirp[k]);
            kernel[plan->m - k] = std::conj(plan->chirp[k]);
        }
        fft_pow2(kernel.data(), plan->m, -1);
        plan->kernel_ft = std::move(kernel);
        slot = std::move(plan);
    }
    return *slot;
}

void fft_bluestein(cplx* x, size_t n, int sign) {
    const BluesteinPlan& plan = bluestein_plan(n, sign);
    std::vector<cplx> a(plan.m, cplx(0.0, 0.0));
    for (size_t k = 0; k < n; ++k) a[k] = x[k] * plan.chirp[k];
    fft_pow2(a.data(), plan.m, -1);
    for (size_t k = 0; k < plan.m; ++k) a[k] *= plan.kernel_ft[k];
    fft_pow2(a.data(), plan.m, +1);
    double inv_m = 1.0 / static_cast<double>(plan.m);
    for (size_t k = 0; k < n; ++k) x[k] = a[k] * inv_m * plan.chirp[k];
}

void transform_rows(std::vector<cplx>& buf, int h, int w, int sign) {
    for (int y = 0; y < h; ++y) {
        detail::fft_any(buf.data() + static_cast<size_t>(y) * w, static_cast<size_t>(w), sign);
    }
}

void transform_cols(std::vector<cplx>& buf, int h, int w, int sign) {
    std::vector<cplx> col(static_cast<size_t>(h));
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) col[y] = buf[static_cast<size_t>(y) * w + x];
        detail::fft_any(col.data(), static_cast<size_t>(h), sign);
        for (int y = 0; y < h; ++y) buf[static_cast<size_t>(y) * w + x] = col[y];
    }
}

}  // namespace

namespace detail {

void fft_any(cplx* x, size_t n, int sign) {
    if (n == 0) fail(ErrorCode::invalid_argument, "fft: empty transform");
    if (is_pow2(n)) {
        fft_pow2(x, n, sign);
    } else {
        fft_bluestein(x, n, sign);
    }
}

}  // namespace detail

double max_radial_freq() { return std::sqrt(0.5); }

double radial_freq(int ky, int kx, int height, int width) {
    auto fold = [](int i, int n) {
        return (i <= (n - 1) / 2) ? static_cast<double>(i) : static_cast<double>(i - n);
    };
    double fy = fold(ky, height) / height;
    double fx = fold(kx, width) / width;
    return std::sqrt(fx * fx + fy * fy);
}

FreqGrid dft2(const ImageGrid& x) {
    validate_dims(x.height, x.width, x.channels);
    require_finite(x, "dft2");
    FreqGrid out(x.height, x.width, x.channels);
    const size_t hw = x.pixel_count();
    const double scale = 1.0 / std::sqrt(static_cast<double>(hw));
    std::vector<cplx> buf(hw);
    for (int c = 0; c < x.channels; ++c) {
        for (int y = 0; y < x.height; ++y) {
            for (int xx = 0; xx < x.width; ++xx) {
                buf[static_cast<size_t>(y) * x.width + xx] = cplx(x.at(y, xx, c), 0.0);
            }
        }
        transform_rows(buf, x.height, x.width, -1);
        transform_cols(buf, x.height, x.width, -1);
        for (size_t i = 0; i < hw; ++i) out.data[static_cast<size_t>(c) * hw + i] = buf[i] * scale;
    }
    return out;
}

ImageGrid idft2(const FreqGrid& X) {
    validate_dims(X.height, X.width, X.channels);
    const size_t hw = static_cast<size_t>(X.height) * X.width;
    if (X.data.size() != hw * X.channels) {
        fail(ErrorCode::invalid_argument, "idft2: coefficient buffer size mismatch");
    }

    double max_abs = 0.0;
    for (const cplx& v : X.data) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            fail(ErrorCode::data_integrity, "idft2: spectrum contains NaN or Inf");
        }
        max_abs = std::max(max_abs, std::abs(v));
    }
    const double tol = 1e-7 * std::max(1.0, max_abs);

    // Hermitian gate: F(-k) must equal conj(F(k)).
    for (int c = 0; c < X.channels; ++c) {
        for (int ky = 0; ky < X.height; ++ky) {
            int my = (X.height - ky) % X.height;
            for (int kx = 0; kx < X.width; ++kx) {
                int mx = (X.width - kx) % X.width;
                cplx diff = X.at(my, mx, c) - std::conj(X.at(ky, kx, c));
                if (std::abs(diff) > tol) {
                    fail(ErrorCode::symmetry_violation,
                         "idft2: spectrum is not Hermitian-symmetric at (" + std::to_string(ky) +
                             "," + std::to_string(kx) + "), violation " +
                             std::to_string(std::abs(diff)));
                }
            }
        }
    }

    ImageGrid out(X.height, X.width, X.channels);
    const double scale = 1.0 / std::sqrt(static_cast<double>(hw));
    std::vector<cplx> buf(hw);
    for (int c = 0; c < X.channels; ++c) {
        for (size_t i = 0; i < hw; ++i) buf[i] = X.data[static_cast<size_t>(c) * hw + i];
        transform_rows(buf, X.height, X.width, +1);
        transform_cols(buf, X.height, X.width, +1);
        for (int y = 0; y < X.height; ++y) {
            for (int xx = 0; xx < X.width; ++xx) {
                cplx v = buf[static_cast<size_t>(y) * X.width + xx] * scale;
                // Imaginary dust survives the Hermitian gate only below tol.
                out.at(y, xx, c) = v.real();
            }
        }
    }
    return out;
}

}  // namespace score
