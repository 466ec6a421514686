// SPDX-License-Identifier: Apache-2.0

#include "schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"
#include "fft.hpp"
#include "profile.hpp"

namespace score {

double NoiseSchedule::beta_at(int t) const {
    if (t < 1 || t > total_steps) {
        fail(ErrorCode::invalid_argument, "beta_at: t out of range: " + std::to_string(t));
    }
    return beta[static_cast<size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar_at(int t) const {
    if (t == 0) return 1.0;
    if (t < 1 || t > total_steps) {
        fail(ErrorCode::invalid_argument, "alpha_bar_at: t out of range: " + std::to_string(t));
    }
    return alpha_bar[static_cast<size_t>(t - 1)];
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
    if (name == "linear") return ScheduleKind::linear;
    if (name == "cosine") return ScheduleKind::cosine;
    fail(ErrorCode::invalid_argument, "unknown schedule kind: " + name);
}

std::string to_string(ScheduleKind kind) {
    return kind == ScheduleKind::linear ? "linear" : "cosine";
}

namespace {

NoiseSchedule finalize(std::vector<double> beta) {
    NoiseSchedule s;
    s.total_steps = static_cast<int>(beta.size());
    s.alpha_bar.reserve(beta.size());
    double prod = 1.0;
    for (double b : beta) {
        if (!(b > 0.0 && b < 1.0)) {
            fail(ErrorCode::invalid_argument, "schedule: beta out of (0,1)");
        }
        prod *= 1.0 - b;
        s.alpha_bar.push_back(prod);
    }
    s.beta = std::move(beta);
    return s;
}

}  // namespace

NoiseSchedule make_schedule(ScheduleKind kind, int total_steps, double beta_start,
                            double beta_end) {
    if (total_steps < 1) fail(ErrorCode::invalid_argument, "schedule: T must be >= 1");
    std::vector<double> beta(static_cast<size_t>(total_steps));
    if (kind == ScheduleKind::linear) {
        if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
            fail(ErrorCode::invalid_argument,
                 "schedule: need 0 < beta_start <= beta_end < 1");
        }
        if (total_steps == 1) {
            beta[0] = beta_start;
        } else {
            double step = (beta_end - beta_start) / static_cast<double>(total_steps - 1);
            for (int t = 0; t < total_steps; ++t) beta[static_cast<size_t>(t)] = beta_start + step * t;
            beta.back() = beta_end;  // inclusive endpoint, exact
        }
    } else {
        // Squared-cosine alpha_bar with offset s = 0.008; beta derived from
        // consecutive ratios and clipped at 0.999.
        const double offset = 0.008;
        auto g = [&](double u) {
            double v = std::cos((u + offset) / (1.0 + offset) * M_PI / 2.0);
            return v * v;
        };
        double g0 = g(0.0);
        double prev = 1.0;
        for (int t = 1; t <= total_steps; ++t) {
            double cur = g(static_cast<double>(t) / total_steps) / g0;
            double b = 1.0 - cur / prev;
            beta[static_cast<size_t>(t - 1)] = std::min(b, 0.999);
            prev = cur;
        }
    }
    return finalize(std::move(beta));
}

int alpha_bar_inverse(const NoiseSchedule& s, double y) {
    if (!(y > 0.0 && y <= 1.0)) {
        fail(ErrorCode::invalid_argument,
             "alpha_bar_inverse: target must lie in (0,1], got " + std::to_string(y));
    }
    // alpha_bar is strictly decreasing with alpha_bar_0 = 1. Find the first
    // index whose value falls below y, then compare with its predecessor.
    auto it = std::upper_bound(s.alpha_bar.begin(), s.alpha_bar.end(), y,
                               [](double target, double v) { return v < target; });
    int lo = static_cast<int>(it - s.alpha_bar.begin());  // first t (1-based) with abar < y is lo+1
    int t_hi = lo;                                        // last t with alpha_bar >= y (0 => abar=1)
    int t_lo = std::min(lo + 1, s.total_steps);
    double d_hi = std::fabs(s.alpha_bar_at(t_hi) - y);
    double d_lo = std::fabs(s.alpha_bar_at(t_lo) - y);
    return (d_hi <= d_lo) ? t_hi : t_lo;  // tie goes to the smaller t
}

int solve_tprime(const NoiseSchedule& s, const SpectrumProfile& p0, const SpectrumProfile& pT,
                 double f_cutoff) {
    validate_profile(p0, "solve_tprime p0");
    validate_profile(pT, "solve_tprime pT");
    if (!(f_cutoff >= 0.0 && f_cutoff <= max_radial_freq())) {
        fail(ErrorCode::invalid_argument,
             "solve_tprime: f_cutoff outside [0, sqrt(2)/2]: " + std::to_string(f_cutoff));
    }
    double signal = p0.value_at(f_cutoff);
    double noise = pT.value_at(f_cutoff);
    if (signal + noise <= 0.0) {
        fail(ErrorCode::degenerate_spectrum,
             "solve_tprime: P0 + PT vanishes at f_cutoff = " + std::to_string(f_cutoff));
    }
    if (noise <= 0.0) {
        fail(ErrorCode::degenerate_spectrum,
             "solve_tprime: noise power vanishes at f_cutoff = " + std::to_string(f_cutoff));
    }
    double y = noise / (signal + noise);
    return alpha_bar_inverse(s, y);
}

}  // namespace score
