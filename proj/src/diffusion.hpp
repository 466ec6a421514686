// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include "grid.hpp"
#include "profile.hpp"
#include "rng.hpp"
#include "schedule.hpp"

namespace score {

// Noise-estimate contract: given a diffused image x_t and its timestep,
// return the predicted injected noise, same shape. Implementations must be
// safe for concurrent use across independent chains or document single-chain
// affinity.
class EpsilonPredictor {
  public:
    virtual ~EpsilonPredictor() = default;
    virtual ImageGrid predict(const ImageGrid& x_t, int t) = 0;
};

// Closed-form MMSE noise estimate for data drawn from a stationary Gaussian
// field with radial power S(f). Per frequency, the Wiener weight
// w = abar*S / (abar*S + 1 - abar) lies in [0, 1] and
// eps_hat(k) = (1 - w) * x_t(k) / sqrt(1 - abar). Stateless; thread-safe.
class AnalyticGaussPredictor final : public EpsilonPredictor {
  public:
    AnalyticGaussPredictor(SpectrumProfile spectrum, NoiseSchedule schedule);

    ImageGrid predict(const ImageGrid& x_t, int t) override;

    const SpectrumProfile& spectrum() const { return spectrum_; }
    const NoiseSchedule& schedule() const { return schedule_; }

  private:
    SpectrumProfile spectrum_;
    NoiseSchedule schedule_;
};

struct SamplerOptions {
    bool noise_at_final_step = false;  // sigma_1 = 0 unless set
    bool clamp_output = false;         // clamp to [-1,1] after the chain only
};

// One regeneration run: cutoff frequency, optional explicit timestep
// (otherwise derived from the spectra), seed for the record, sampler knobs.
struct ScoreConfig {
    double f_cutoff = 0.0;
    std::optional<int> t_prime;
    uint64_t seed = 0;
    SamplerOptions sampler;
};

struct ScoreRunInfo {
    int t_prime_used = 0;
    bool t_prime_derived = false;
    bool skipped_regeneration = false;  // t' == 0: cutoff image returned as-is
};

// Forward diffusion to timestep t: sqrt(abar_t) x0 + sqrt(1-abar_t) eps.
// t = 0 returns x0 unchanged.
ImageGrid diffuse(const ImageGrid& x0, int t, const NoiseSchedule& s, RngStream& rng);

// One reverse step from x_t to x_{t-1} (t in 1..T). sigma_t = sqrt(beta_t),
// suppressed at t = 1 unless opts.noise_at_final_step.
ImageGrid reverse_step(const ImageGrid& x_t, int t, EpsilonPredictor& pred,
                       const NoiseSchedule& s, RngStream& rng, const SamplerOptions& opts = {});

// Full chain from x_T ~ N(0, I).
ImageGrid sample(EpsilonPredictor& pred, const NoiseSchedule& s, int height, int width,
                 int channels, RngStream& rng, const SamplerOptions& opts = {});

// Partial re-diffusion to t_prime followed by the reverse chain. t_prime = 0
// returns x unchanged.
ImageGrid sdedit(const ImageGrid& x, int t_prime, EpsilonPredictor& pred, const NoiseSchedule& s,
                 RngStream& rng, const SamplerOptions& opts = {});

// Spectral cutoff regeneration: low-pass x at cfg.f_cutoff, re-diffuse to t'
// (derived from the SNR crossover when not overridden), reverse to t = 0.
ImageGrid score_regenerate(const ImageGrid& x, const ScoreConfig& cfg, EpsilonPredictor& pred,
                           const NoiseSchedule& s, const SpectrumProfile& p0,
                           const SpectrumProfile& pT, RngStream& rng,
                           ScoreRunInfo* info = nullptr);

}  // namespace score
