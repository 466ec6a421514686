// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace score {

struct SpectrumProfile;

// Forward-diffusion noise schedule: beta_t for t = 1..T and the cumulative
// products alpha_bar_t = prod_{s<=t} (1 - beta_s). alpha_bar_0 is defined
// as 1. Immutable once built.
struct NoiseSchedule {
    int total_steps = 0;                // T
    std::vector<double> beta;           // beta[t-1]
    std::vector<double> alpha_bar;      // alpha_bar[t-1]

    double beta_at(int t) const;        // t in 1..T
    double alpha_bar_at(int t) const;   // t in 0..T, alpha_bar_at(0) == 1
};

enum class ScheduleKind { linear, cosine };

ScheduleKind schedule_kind_from_string(const std::string& name);
std::string to_string(ScheduleKind kind);

// Linear: beta interpolated uniformly from beta_start to beta_end inclusive.
// Cosine: squared-cosine alpha_bar with offset 0.008, beta clipped to 0.999;
// beta_start/beta_end are ignored for the cosine kind.
NoiseSchedule make_schedule(ScheduleKind kind, int total_steps, double beta_start = 1e-4,
                            double beta_end = 0.02);

// Nearest-alpha_bar lookup: argmin_t |alpha_bar_t - y| over t in {0..T},
// ties broken toward the smaller t. y must lie in (0, 1].
int alpha_bar_inverse(const NoiseSchedule& s, double y);

// SNR-crossover timestep for a cutoff frequency: evaluates P0 and PT at
// f_cutoff (linear interpolation between bin centers), forms
// y = PT / (P0 + PT), and returns alpha_bar_inverse(s, y).
int solve_tprime(const NoiseSchedule& s, const SpectrumProfile& p0, const SpectrumProfile& pT,
                 double f_cutoff);

}  // namespace score
