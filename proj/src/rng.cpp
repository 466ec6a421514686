// SPDX-License-Identifier: Apache-2.0

#include "rng.hpp"

#include <cmath>
#include <vector>

#include "error.hpp"

namespace score {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    uint64_t p = static_cast<uint64_t>(a) * b;
    hi = static_cast<uint32_t>(p >> 32);
    lo = static_cast<uint32_t>(p);
}

// Philox4x32-10 block function.
inline void philox_block(const uint32_t ctr[4], const uint32_t key[2], uint32_t out[4]) {
    uint32_t x0 = ctr[0], x1 = ctr[1], x2 = ctr[2], x3 = ctr[3];
    uint32_t k0 = key[0], k1 = key[1];
    for (int round = 0; round < 10; ++round) {
        uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, x0, hi0, lo0);
        mulhilo(kPhiloxM1, x2, hi1, lo1);
        uint32_t y0 = hi1 ^ x1 ^ k0;
        uint32_t y1 = lo1;
        uint32_t y2 = hi0 ^ x3 ^ k1;
        uint32_t y3 = lo0;
        x0 = y0;
        x1 = y1;
        x2 = y2;
        x3 = y3;
        if (round < 9) {
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
    }
    out[0] = x0;
    out[1] = x1;
    out[2] = x2;
    out[3] = x3;
}

// ln(k!) used by the PTRS acceptance test. Table below 1024, Stirling above;
// pure arithmetic so the sampler stays deterministic.
double log_factorial(double k) {
    static const std::vector<double> table = [] {
        std::vector<double> t(1024);
        t[0] = 0.0;
        for (size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
        return t;
    }();
    if (k < static_cast<double>(table.size())) return table[static_cast<size_t>(k)];
    double n = k;
    double inv = 1.0 / n;
    double inv2 = inv * inv;
    return n * std::log(n) - n + 0.5 * std::log(2.0 * M_PI * n) +
           inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0));
}

}  // namespace

uint64_t mix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

RngStream::RngStream(uint64_t seed, uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
    key_[0] = static_cast<uint32_t>(seed);
    key_[1] = static_cast<uint32_t>(seed >> 32);
    ctr_[0] = 0;
    ctr_[1] = 0;
    ctr_[2] = static_cast<uint32_t>(stream_id);
    ctr_[3] = static_cast<uint32_t>(stream_id >> 32);
}

void RngStream::refill() {
    philox_block(ctr_, key_, block_);
    // 64-bit block counter in the low two words; the stream id words stay fixed.
    if (++ctr_[0] == 0) ++ctr_[1];
    idx_ = 0;
}

uint32_t RngStream::next_u32() {
    if (idx_ >= 4) refill();
    return block_[idx_++];
}

uint64_t RngStream::next_u64() {
    uint64_t hi = next_u32();
    uint64_t lo = next_u32();
    return (hi << 32) | lo;
}

double RngStream::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u1 = 1.0 - next_double();  // (0,1], keeps log() finite
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(angle);
    has_cached_normal_ = true;
    return r * std::cos(angle);
}

uint64_t RngStream::next_below(uint64_t bound) {
    if (bound == 0) fail(ErrorCode::invalid_argument, "next_below: bound must be positive");
    uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
        uint64_t v = next_u64();
        if (v >= threshold) return v % bound;
    }
}

long long RngStream::next_poisson(double lambda) {
    if (!(lambda > 0.0)) fail(ErrorCode::invalid_argument, "next_poisson: lambda must be > 0");
    if (lambda < 10.0) {
        // Knuth inversion by uniform products.
        double limit = std::exp(-lambda);
        long long k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= next_double();
        } while (p > limit);
        return k - 1;
    }
    // PTRS (Hormann 1993), valid for lambda >= 10.
    double b = 0.931 + 2.53 * std::sqrt(lambda);
    double a = -0.059 + 0.02483 * b;
    double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    double v_r = 0.9277 - 3.6224 / (b - 2.0);
    double log_lambda = std::log(lambda);
    for (;;) {
        double u = next_double() - 0.5;
        double v = next_double();
        double us = 0.5 - std::fabs(u);
        double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<long long>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            k * log_lambda - lambda - log_factorial(k)) {
            return static_cast<long long>(k);
        }
    }
}

RngStream RngStream::substream(uint64_t child) const {
    uint64_t derived = mix64(stream_id_ ^ mix64(child + 0x5195D96Bu));
    return RngStream(seed_, derived);
}

}  // namespace score
