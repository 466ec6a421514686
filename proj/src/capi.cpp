// SPDX-License-Identifier: Apache-2.0

#include "score/score.h"

#include <cstring>
#include <string>

#include "corpus.hpp"
#include "diffusion.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "field.hpp"
#include "grid.hpp"
#include "image_io.hpp"
#include "profile.hpp"
#include "rng.hpp"
#include "schedule.hpp"
#include "spectral.hpp"
#include "wire.hpp"

// Opaque handle definitions: thin wrappers over the C++ core types.
struct score_image {
    score::ImageGrid grid;
};
struct score_profile {
    score::SpectrumProfile profile;
};
struct score_schedule {
    score::NoiseSchedule schedule;
};
struct score_rng {
    score::RngStream stream;
};
struct score_predictor {
    std::unique_ptr<score::EpsilonPredictor> impl;
};
struct score_manifest {
    score::CorpusManifest manifest;
};

namespace {

thread_local std::string g_last_error;

score_status status_of(const score::Error& e) {
    switch (e.code()) {
        case score::ErrorCode::invalid_argument: return SCORE_E_INVALID_ARGUMENT;
        case score::ErrorCode::data_integrity: return SCORE_E_DATA_INTEGRITY;
        case score::ErrorCode::symmetry_violation: return SCORE_E_SYMMETRY;
        case score::ErrorCode::degenerate_spectrum: return SCORE_E_DEGENERATE_SPECTRUM;
        case score::ErrorCode::io_error: return SCORE_E_IO;
        case score::ErrorCode::contract_violation: return SCORE_E_CONTRACT;
        case score::ErrorCode::proto_timeout: return SCORE_E_PROTO_TIMEOUT;
        case score::ErrorCode::proto_malformed: return SCORE_E_PROTO_MALFORMED;
        case score::ErrorCode::proto_version_mismatch: return SCORE_E_PROTO_VERSION;
        case score::ErrorCode::proto_shape_mismatch: return SCORE_E_PROTO_SHAPE;
        case score::ErrorCode::proto_truncated: return SCORE_E_PROTO_TRUNCATED;
    }
    return SCORE_E_UNKNOWN;
}

// Runs fn inside the exception-to-status boundary.
template <typename Fn>
score_status guarded(Fn&& fn) {
    try {
        fn();
        return SCORE_OK;
    } catch (const score::Error& e) {
        g_last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SCORE_E_UNKNOWN;
    } catch (...) {
        g_last_error = "unknown error";
        return SCORE_E_UNKNOWN;
    }
}

score_status bad_arg(const char* msg) {
    g_last_error = msg;
    return SCORE_E_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* score_version(void) { return "0.1.0"; }

const char* score_last_error(void) { return g_last_error.c_str(); }

/* ---- images ---- */

score_status score_image_new(uint32_t height, uint32_t width, uint32_t channels,
                             score_image** out) {
    if (!out) return bad_arg("score_image_new: out is NULL");
    return guarded([&] {
        *out = new score_image{score::ImageGrid(static_cast<int>(height), static_cast<int>(width),
                                                static_cast<int>(channels))};
    });
}

void score_image_free(score_image* img) { delete img; }

score_status score_image_clone(const score_image* img, score_image** out) {
    if (!img || !out) return bad_arg("score_image_clone: NULL argument");
    return guarded([&] { *out = new score_image{img->grid}; });
}

score_status score_image_dims(const score_image* img, uint32_t* height, uint32_t* width,
                              uint32_t* channels) {
    if (!img) return bad_arg("score_image_dims: img is NULL");
    if (height) *height = static_cast<uint32_t>(img->grid.height);
    if (width) *width = static_cast<uint32_t>(img->grid.width);
    if (channels) *channels = static_cast<uint32_t>(img->grid.channels);
    return SCORE_OK;
}

double* score_image_data(score_image* img) { return img ? img->grid.data.data() : nullptr; }

const double* score_image_data_const(const score_image* img) {
    return img ? img->grid.data.data() : nullptr;
}

score_status score_image_load(const char* path, score_image** out) {
    if (!path || !out) return bad_arg("score_image_load: NULL argument");
    return guarded([&] { *out = new score_image{score::load_image(path)}; });
}

score_status score_image_save(const score_image* img, const char* path) {
    if (!img || !path) return bad_arg("score_image_save: NULL argument");
    return guarded([&] { score::save_image(img->grid, path); });
}

/* ---- random streams ---- */

score_status score_rng_new(uint64_t seed, uint64_t stream_id, score_rng** out) {
    if (!out) return bad_arg("score_rng_new: out is NULL");
    return guarded([&] { *out = new score_rng{score::RngStream(seed, stream_id)}; });
}

void score_rng_free(score_rng* rng) { delete rng; }

score_status score_rng_substream(const score_rng* rng, uint64_t child, score_rng** out) {
    if (!rng || !out) return bad_arg("score_rng_substream: NULL argument");
    return guarded([&] { *out = new score_rng{rng->stream.substream(child)}; });
}

/* ---- spectrum profiles ---- */

score_status score_rapsd(const score_image* img, int bins, score_profile** out) {
    if (!img || !out) return bad_arg("score_rapsd: NULL argument");
    return guarded([&] { *out = new score_profile{score::rapsd(img->grid, bins)}; });
}

score_status score_corpus_profile(const score_image* const* images, size_t count, int bins,
                                  score_profile** out) {
    if (!images || !out) return bad_arg("score_corpus_profile: NULL argument");
    return guarded([&] {
        std::vector<score::ImageGrid> grids;
        grids.reserve(count);
        for (size_t i = 0; i < count; ++i) {
            if (!images[i]) score::fail(score::ErrorCode::invalid_argument,
                                        "corpus_profile: NULL image handle");
            grids.push_back(images[i]->grid);
        }
        *out = new score_profile{score::corpus_profile(grids, bins)};
    });
}

score_status score_noise_profile_analytic(uint32_t height, uint32_t width, int bins,
                                          score_profile** out) {
    if (!out) return bad_arg("score_noise_profile_analytic: out is NULL");
    return guarded([&] {
        *out = new score_profile{
            score::noise_profile(static_cast<int>(height), static_cast<int>(width), bins)};
    });
}

score_status score_noise_profile_empirical(uint32_t height, uint32_t width, int bins, int samples,
                                           score_rng* rng, score_profile** out) {
    if (!rng || !out) return bad_arg("score_noise_profile_empirical: NULL argument");
    return guarded([&] {
        *out = new score_profile{score::noise_profile(
            static_cast<int>(height), static_cast<int>(width), bins, samples, rng->stream)};
    });
}

score_status score_profile_power_law(int bins, double amplitude, double exponent, double f0,
                                     score_profile** out) {
    if (!out) return bad_arg("score_profile_power_law: out is NULL");
    return guarded([&] {
        *out = new score_profile{score::SpectrumProfile::power_law(bins, amplitude, exponent, f0)};
    });
}

score_status score_profile_flat(int bins, double value, score_profile** out) {
    if (!out) return bad_arg("score_profile_flat: out is NULL");
    return guarded([&] { *out = new score_profile{score::SpectrumProfile::flat(bins, value)}; });
}

score_status score_profile_from_arrays(const double* freq, const double* power,
                                       const int64_t* count, size_t bins, score_profile** out) {
    if (!freq || !power || !out) return bad_arg("score_profile_from_arrays: NULL argument");
    return guarded([&] {
        score::SpectrumProfile p;
        p.freq.assign(freq, freq + bins);
        p.power.assign(power, power + bins);
        if (count) {
            p.count.assign(count, count + bins);
        } else {
            p.count.assign(bins, 1);
        }
        score::validate_profile(p, "score_profile_from_arrays");
        *out = new score_profile{std::move(p)};
    });
}

void score_profile_free(score_profile* p) { delete p; }

score_status score_profile_bins(const score_profile* p, size_t* out) {
    if (!p || !out) return bad_arg("score_profile_bins: NULL argument");
    *out = p->profile.bins();
    return SCORE_OK;
}

score_status score_profile_get(const score_profile* p, size_t bin, double* freq, double* power,
                               int64_t* count) {
    if (!p) return bad_arg("score_profile_get: profile is NULL");
    if (bin >= p->profile.bins()) return bad_arg("score_profile_get: bin out of range");
    if (freq) *freq = p->profile.freq[bin];
    if (power) *power = p->profile.power[bin];
    if (count) *count = p->profile.count[bin];
    return SCORE_OK;
}

score_status score_profile_value_at(const score_profile* p, double freq, double* out) {
    if (!p || !out) return bad_arg("score_profile_value_at: NULL argument");
    return guarded([&] { *out = p->profile.value_at(freq); });
}

score_status score_profile_save_csv(const score_profile* p, const char* path) {
    if (!p || !path) return bad_arg("score_profile_save_csv: NULL argument");
    return guarded([&] { p->profile.save_csv(path); });
}

score_status score_profile_load_csv(const char* path, score_profile** out) {
    if (!path || !out) return bad_arg("score_profile_load_csv: NULL argument");
    return guarded([&] { *out = new score_profile{score::SpectrumProfile::load_csv(path)}; });
}

score_status score_default_bins(uint32_t height, uint32_t width, int* out) {
    if (!out) return bad_arg("score_default_bins: out is NULL");
    *out = score::default_bins(static_cast<int>(height), static_cast<int>(width));
    return SCORE_OK;
}

double score_max_radial_freq(void) { return score::max_radial_freq(); }

/* ---- noise schedules ---- */

score_status score_schedule_new(const char* kind, int total_steps, double beta_start,
                                double beta_end, score_schedule** out) {
    if (!kind || !out) return bad_arg("score_schedule_new: NULL argument");
    return guarded([&] {
        *out = new score_schedule{score::make_schedule(score::schedule_kind_from_string(kind),
                                                       total_steps, beta_start, beta_end)};
    });
}

void score_schedule_free(score_schedule* s) { delete s; }

score_status score_schedule_steps(const score_schedule* s, int* out) {
    if (!s || !out) return bad_arg("score_schedule_steps: NULL argument");
    *out = s->schedule.total_steps;
    return SCORE_OK;
}

score_status score_schedule_beta(const score_schedule* s, int t, double* out) {
    if (!s || !out) return bad_arg("score_schedule_beta: NULL argument");
    return guarded([&] { *out = s->schedule.beta_at(t); });
}

score_status score_schedule_alpha_bar(const score_schedule* s, int t, double* out) {
    if (!s || !out) return bad_arg("score_schedule_alpha_bar: NULL argument");
    return guarded([&] { *out = s->schedule.alpha_bar_at(t); });
}

score_status score_alpha_bar_inverse(const score_schedule* s, double target, int* out) {
    if (!s || !out) return bad_arg("score_alpha_bar_inverse: NULL argument");
    return guarded([&] { *out = score::alpha_bar_inverse(s->schedule, target); });
}

score_status score_solve_tprime(const score_schedule* s, const score_profile* p0,
                                const score_profile* pT, double f_cutoff, int* out) {
    if (!s || !p0 || !pT || !out) return bad_arg("score_solve_tprime: NULL argument");
    return guarded(
        [&] { *out = score::solve_tprime(s->schedule, p0->profile, pT->profile, f_cutoff); });
}

score_status score_snr_value(const score_schedule* s, int t, const score_profile* p0,
                             const score_profile* pT, double freq, double* out) {
    if (!s || !p0 || !pT || !out) return bad_arg("score_snr_value: NULL argument");
    return guarded([&] {
        if (t < 1 || t > s->schedule.total_steps) {
            score::fail(score::ErrorCode::invalid_argument, "score_snr_value: t out of range");
        }
        double signal = p0->profile.value_at(freq);
        double noise = pT->profile.value_at(freq);
        if (noise <= 0.0) {
            score::fail(score::ErrorCode::degenerate_spectrum,
                        "score_snr_value: noise power vanishes at the requested frequency");
        }
        double abar = s->schedule.alpha_bar_at(t);
        *out = abar / (1.0 - abar) * signal / noise;
    });
}

/* ---- spectral operations ---- */

score_status score_cutoff(const score_image* img, double f_cutoff, score_image** out) {
    if (!img || !out) return bad_arg("score_cutoff: NULL argument");
    return guarded([&] { *out = new score_image{score::cutoff(img->grid, f_cutoff)}; });
}

score_status score_gaussian_field(const score_profile* profile, uint32_t height, uint32_t width,
                                  score_rng* rng, score_image** out) {
    if (!profile || !rng || !out) return bad_arg("score_gaussian_field: NULL argument");
    return guarded([&] {
        *out = new score_image{score::gaussian_field(profile->profile, static_cast<int>(height),
                                                     static_cast<int>(width), rng->stream)};
    });
}

/* ---- predictors and sampling ---- */

score_status score_predictor_analytic(const score_profile* spectrum,
                                      const score_schedule* schedule, score_predictor** out) {
    if (!spectrum || !schedule || !out) return bad_arg("score_predictor_analytic: NULL argument");
    return guarded([&] {
        *out = new score_predictor{std::make_unique<score::AnalyticGaussPredictor>(
            spectrum->profile, schedule->schedule)};
    });
}

score_status score_predictor_external(const char* endpoint, int timeout_ms,
                                      score_predictor** out) {
    if (!endpoint || !out) return bad_arg("score_predictor_external: NULL argument");
    return guarded([&] {
        *out = new score_predictor{score::wire::ExternalPredictor::open(endpoint, timeout_ms)};
    });
}

void score_predictor_free(score_predictor* p) { delete p; }

score_status score_predict(score_predictor* p, const score_image* x_t, int t,
                           score_image** out) {
    if (!p || !x_t || !out) return bad_arg("score_predict: NULL argument");
    return guarded([&] { *out = new score_image{p->impl->predict(x_t->grid, t)}; });
}

score_status score_diffuse(const score_image* x0, int t, const score_schedule* s, score_rng* rng,
                           score_image** out) {
    if (!x0 || !s || !rng || !out) return bad_arg("score_diffuse: NULL argument");
    return guarded(
        [&] { *out = new score_image{score::diffuse(x0->grid, t, s->schedule, rng->stream)}; });
}

score_status score_reverse_step(const score_image* x_t, int t, score_predictor* pred,
                                const score_schedule* s, score_rng* rng,
                                int noise_at_final_step, score_image** out) {
    if (!x_t || !pred || !s || !rng || !out) return bad_arg("score_reverse_step: NULL argument");
    return guarded([&] {
        score::SamplerOptions opts;
        opts.noise_at_final_step = noise_at_final_step != 0;
        *out = new score_image{
            score::reverse_step(x_t->grid, t, *pred->impl, s->schedule, rng->stream, opts)};
    });
}

score_status score_sample(score_predictor* pred, const score_schedule* s, uint32_t height,
                          uint32_t width, uint32_t channels, score_rng* rng, int clamp_output,
                          score_image** out) {
    if (!pred || !s || !rng || !out) return bad_arg("score_sample: NULL argument");
    return guarded([&] {
        score::SamplerOptions opts;
        opts.clamp_output = clamp_output != 0;
        *out = new score_image{score::sample(*pred->impl, s->schedule, static_cast<int>(height),
                                             static_cast<int>(width), static_cast<int>(channels),
                                             rng->stream, opts)};
    });
}

score_status score_sdedit(const score_image* img, int t_prime, score_predictor* pred,
                          const score_schedule* s, score_rng* rng, int clamp_output,
                          score_image** out) {
    if (!img || !pred || !s || !rng || !out) return bad_arg("score_sdedit: NULL argument");
    return guarded([&] {
        score::SamplerOptions opts;
        opts.clamp_output = clamp_output != 0;
        *out = new score_image{
            score::sdedit(img->grid, t_prime, *pred->impl, s->schedule, rng->stream, opts)};
    });
}

score_status score_regenerate(const score_image* img, double f_cutoff, int t_prime_override,
                              score_predictor* pred, const score_schedule* s,
                              const score_profile* p0, const score_profile* pT, score_rng* rng,
                              int clamp_output, int* t_prime_used, score_image** out) {
    if (!img || !pred || !s || !rng || !out) return bad_arg("score_regenerate: NULL argument");
    if (t_prime_override < 0 && (!p0 || !pT)) {
        return bad_arg("score_regenerate: spectra required to derive t'");
    }
    return guarded([&] {
        score::ScoreConfig cfg;
        cfg.f_cutoff = f_cutoff;
        if (t_prime_override >= 0) cfg.t_prime = t_prime_override;
        cfg.sampler.clamp_output = clamp_output != 0;
        score::ScoreRunInfo info;
        static const score::SpectrumProfile empty;
        const score::SpectrumProfile& p0_ref = p0 ? p0->profile : empty;
        const score::SpectrumProfile& pT_ref = pT ? pT->profile : empty;
        *out = new score_image{score::score_regenerate(img->grid, cfg, *pred->impl, s->schedule,
                                                       p0_ref, pT_ref, rng->stream, &info)};
        if (t_prime_used) *t_prime_used = info.t_prime_used;
    });
}

/* ---- noise injection and corpus building ---- */

score_status score_inject_gaussian(const score_image* img, double sigma_byte, score_rng* rng,
                                   score_image** out) {
    if (!img || !rng || !out) return bad_arg("score_inject_gaussian: NULL argument");
    return guarded([&] {
        *out = new score_image{score::inject_gaussian(img->grid, sigma_byte, rng->stream)};
    });
}

score_status score_inject_poisson(const score_image* img, double lambda, score_rng* rng,
                                  score_image** out) {
    if (!img || !rng || !out) return bad_arg("score_inject_poisson: NULL argument");
    return guarded(
        [&] { *out = new score_image{score::inject_poisson(img->grid, lambda, rng->stream)}; });
}

score_status score_inject_mix(const score_image* img, double lambda, double sigma_byte,
                              score_rng* rng, score_image** out) {
    if (!img || !rng || !out) return bad_arg("score_inject_mix: NULL argument");
    return guarded([&] {
        *out = new score_image{score::inject_mix(img->grid, lambda, sigma_byte, rng->stream)};
    });
}

score_status score_build_mixture(const char* clean_dir, const char* out_dir,
                                 double noisy_fraction, const char* noise_kind, double sigma_byte,
                                 double lambda, uint64_t seed, score_manifest** out_manifest) {
    if (!clean_dir || !out_dir || !noise_kind) return bad_arg("score_build_mixture: NULL argument");
    return guarded([&] {
        score::NoiseParams params;
        params.sigma_byte = sigma_byte;
        params.lambda = lambda;
        score::CorpusManifest m =
            score::build_mixture(clean_dir, out_dir, noisy_fraction,
                                 score::noise_kind_from_string(noise_kind), params, seed);
        if (out_manifest) *out_manifest = new score_manifest{std::move(m)};
    });
}

score_status score_manifest_load(const char* path, score_manifest** out) {
    if (!path || !out) return bad_arg("score_manifest_load: NULL argument");
    return guarded([&] { *out = new score_manifest{score::CorpusManifest::load(path)}; });
}

void score_manifest_free(score_manifest* m) { delete m; }

score_status score_manifest_count(const score_manifest* m, size_t* out) {
    if (!m || !out) return bad_arg("score_manifest_count: NULL argument");
    *out = m->manifest.entries.size();
    return SCORE_OK;
}

score_status score_manifest_entry(const score_manifest* m, size_t index, const char** role,
                                  const char** path) {
    if (!m) return bad_arg("score_manifest_entry: manifest is NULL");
    if (index >= m->manifest.entries.size()) return bad_arg("score_manifest_entry: out of range");
    if (role) *role = m->manifest.entries[index].role.c_str();
    if (path) *path = m->manifest.entries[index].path.c_str();
    return SCORE_OK;
}

score_status score_manifest_dims(const score_manifest* m, uint32_t* height, uint32_t* width,
                                 uint32_t* channels) {
    if (!m) return bad_arg("score_manifest_dims: manifest is NULL");
    if (height) *height = static_cast<uint32_t>(m->manifest.height);
    if (width) *width = static_cast<uint32_t>(m->manifest.width);
    if (channels) *channels = static_cast<uint32_t>(m->manifest.channels);
    return SCORE_OK;
}

/* ---- evaluation ---- */

score_status score_log_spectral_distance(const score_profile* a, const score_profile* b,
                                         double power_floor, double* out) {
    if (!a || !b || !out) return bad_arg("score_log_spectral_distance: NULL argument");
    return guarded([&] {
        double floor = power_floor > 0.0 ? power_floor : score::kLogPowerFloor;
        *out = score::log_spectral_distance(a->profile, b->profile, floor);
    });
}

score_status score_log_spectral_distance_band(const score_profile* a, const score_profile* b,
                                              double f_lo, double f_hi, double power_floor,
                                              double* out) {
    if (!a || !b || !out) return bad_arg("score_log_spectral_distance_band: NULL argument");
    return guarded([&] {
        double floor = power_floor > 0.0 ? power_floor : score::kLogPowerFloor;
        *out = score::log_spectral_distance_band(a->profile, b->profile, f_lo, f_hi, floor);
    });
}

score_status score_spectral_gap(const score_profile* a, const score_profile* b,
                                double power_floor, double* gaps, size_t gaps_len) {
    if (!a || !b || !gaps) return bad_arg("score_spectral_gap: NULL argument");
    return guarded([&] {
        double floor = power_floor > 0.0 ? power_floor : score::kLogPowerFloor;
        score::SpectralGap gap = score::spectral_gap(a->profile, b->profile, floor);
        if (gaps_len < gap.log_gap.size()) {
            score::fail(score::ErrorCode::invalid_argument,
                        "score_spectral_gap: buffer too small");
        }
        std::memcpy(gaps, gap.log_gap.data(), gap.log_gap.size() * sizeof(double));
    });
}

score_status score_psnr(const score_image* a, const score_image* b, double* out,
                        int* is_infinite) {
    if (!a || !b || !out || !is_infinite) return bad_arg("score_psnr: NULL argument");
    return guarded([&] {
        std::optional<double> v = score::psnr(a->grid, b->grid);
        *is_infinite = v.has_value() ? 0 : 1;
        if (v.has_value()) *out = *v;
    });
}

}  // extern "C"
