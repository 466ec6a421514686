// SPDX-License-Identifier: Apache-2.0

#include "diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"
#include "fft.hpp"
#include "spectral.hpp"

namespace score {

namespace {

void check_t(int t, int total, const char* op, int lowest) {
    if (t < lowest || t > total) {
        fail(ErrorCode::invalid_argument,
             std::string(op) + ": t out of range [" + std::to_string(lowest) + ", " +
                 std::to_string(total) + "]: " + std::to_string(t));
    }
}

void clamp_unit(ImageGrid& g) {
    for (double& v : g.data) v = std::clamp(v, -1.0, 1.0);
}

}  // namespace

AnalyticGaussPredictor::AnalyticGaussPredictor(SpectrumProfile spectrum, NoiseSchedule schedule)
    : spectrum_(std::move(spectrum)), schedule_(std::move(schedule)) {
    validate_profile(spectrum_, "AnalyticGaussPredictor");
}

ImageGrid AnalyticGaussPredictor::predict(const ImageGrid& x_t, int t) {
    check_t(t, schedule_.total_steps, "analytic_predict", 1);
    double abar = schedule_.alpha_bar_at(t);
    double inv_sigma = 1.0 / std::sqrt(1.0 - abar);

    FreqGrid spec = dft2(x_t);
    for (int ky = 0; ky < spec.height; ++ky) {
        for (int kx = 0; kx < spec.width; ++kx) {
            double s_val = spectrum_.value_at(radial_freq(ky, kx, spec.height, spec.width));
            double w = abar * s_val / (abar * s_val + (1.0 - abar));
            double gain = (1.0 - w) * inv_sigma;
            for (int c = 0; c < spec.channels; ++c) spec.at(ky, kx, c) *= gain;
        }
    }
    return idft2(spec);
}

ImageGrid diffuse(const ImageGrid& x0, int t, const NoiseSchedule& s, RngStream& rng) {
    require_finite(x0, "diffuse");
    check_t(t, s.total_steps, "diffuse", 0);
    if (t == 0) return x0;
    double a = std::sqrt(s.alpha_bar_at(t));
    double b = std::sqrt(1.0 - s.alpha_bar_at(t));
    ImageGrid out = x0;
    for (double& v : out.data) v = a * v + b * rng.next_normal();
    return out;
}

ImageGrid reverse_step(const ImageGrid& x_t, int t, EpsilonPredictor& pred,
                       const NoiseSchedule& s, RngStream& rng, const SamplerOptions& opts) {
    require_finite(x_t, "reverse_step");
    check_t(t, s.total_steps, "reverse_step", 1);

    ImageGrid eps = pred.predict(x_t, t);
    if (!eps.same_shape(x_t)) {
        fail(ErrorCode::contract_violation,
             "reverse_step: predictor returned " + std::to_string(eps.height) + "x" +
                 std::to_string(eps.width) + "x" + std::to_string(eps.channels) + ", expected " +
                 std::to_string(x_t.height) + "x" + std::to_string(x_t.width) + "x" +
                 std::to_string(x_t.channels));
    }
    require_finite(eps, "reverse_step: predictor output");

    double beta = s.beta_at(t);
    double abar = s.alpha_bar_at(t);
    double inv_sqrt_alpha = 1.0 / std::sqrt(1.0 - beta);
    double eps_coef = beta / std::sqrt(1.0 - abar);
    double sigma = (t == 1 && !opts.noise_at_final_step) ? 0.0 : std::sqrt(beta);

    ImageGrid out(x_t.height, x_t.width, x_t.channels);
    for (size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = inv_sqrt_alpha * (x_t.data[i] - eps_coef * eps.data[i]);
    }
    if (sigma > 0.0) {
        for (double& v : out.data) v += sigma * rng.next_normal();
    }
    return out;
}

ImageGrid sample(EpsilonPredictor& pred, const NoiseSchedule& s, int height, int width,
                 int channels, RngStream& rng, const SamplerOptions& opts) {
    validate_dims(height, width, channels);
    ImageGrid x(height, width, channels);
    for (double& v : x.data) v = rng.next_normal();
    for (int t = s.total_steps; t >= 1; --t) {
        x = reverse_step(x, t, pred, s, rng, opts);
    }
    if (opts.clamp_output) clamp_unit(x);
    return x;
}

ImageGrid sdedit(const ImageGrid& x, int t_prime, EpsilonPredictor& pred, const NoiseSchedule& s,
                 RngStream& rng, const SamplerOptions& opts) {
    require_finite(x, "sdedit");
    check_t(t_prime, s.total_steps, "sdedit", 0);
    if (t_prime == 0) return x;
    ImageGrid cur = diffuse(x, t_prime, s, rng);
    for (int t = t_prime; t >= 1; --t) {
        cur = reverse_step(cur, t, pred, s, rng, opts);
    }
    if (opts.clamp_output) clamp_unit(cur);
    return cur;
}

ImageGrid score_regenerate(const ImageGrid& x, const ScoreConfig& cfg, EpsilonPredictor& pred,
                           const NoiseSchedule& s, const SpectrumProfile& p0,
                           const SpectrumProfile& pT, RngStream& rng, ScoreRunInfo* info) {
    ImageGrid low_passed = cutoff(x, cfg.f_cutoff);

    int t_prime;
    bool derived = false;
    if (cfg.t_prime.has_value()) {
        t_prime = *cfg.t_prime;
        check_t(t_prime, s.total_steps, "score_regenerate", 0);
    } else {
        t_prime = solve_tprime(s, p0, pT, cfg.f_cutoff);
        derived = true;
    }

    if (info) {
        info->t_prime_used = t_prime;
        info->t_prime_derived = derived;
        info->skipped_regeneration = (t_prime == 0);
    }
    if (t_prime == 0) return low_passed;

    ImageGrid out = sdedit(low_passed, t_prime, pred, s, rng, cfg.sampler);
    return out;
}

}  // namespace score
