/* SPDX-License-Identifier: Apache-2.0
 *
 * score — spectral cutoff regeneration toolkit, C API.
 *
 * Every function returns a score_status; on failure score_last_error()
 * describes the problem (thread-local). Out-parameters are written only on
 * SCORE_OK. All handles are opaque and freed with their *_free function.
 *
 * Conventions: images are H x W x C rasters of doubles in model scale
 * [-1, 1], row-major with the channel index fastest. Radial frequencies are
 * in cycles/pixel, in [0, sqrt(2)/2]. Timesteps t run 1..T with t = 0
 * meaning "no diffusion".
 */

#ifndef SCORE_SCORE_H
#define SCORE_SCORE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SCORE_API __declspec(dllexport)
#else
#define SCORE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum score_status {
    SCORE_OK = 0,
    SCORE_E_INVALID_ARGUMENT = 1,
    SCORE_E_DATA_INTEGRITY = 2,
    SCORE_E_SYMMETRY = 3,
    SCORE_E_DEGENERATE_SPECTRUM = 4,
    SCORE_E_IO = 5,
    SCORE_E_CONTRACT = 6,
    SCORE_E_PROTO_TIMEOUT = 7,
    SCORE_E_PROTO_MALFORMED = 8,
    SCORE_E_PROTO_VERSION = 9,
    SCORE_E_PROTO_SHAPE = 10,
    SCORE_E_PROTO_TRUNCATED = 11,
    SCORE_E_UNKNOWN = 100
} score_status;

typedef struct score_image score_image;
typedef struct score_profile score_profile;
typedef struct score_schedule score_schedule;
typedef struct score_rng score_rng;
typedef struct score_predictor score_predictor;
typedef struct score_manifest score_manifest;

SCORE_API const char* score_version(void);
SCORE_API const char* score_last_error(void);

/* ---- images ---- */

SCORE_API score_status score_image_new(uint32_t height, uint32_t width, uint32_t channels,
                                       score_image** out);
SCORE_API void score_image_free(score_image* img);
SCORE_API score_status score_image_clone(const score_image* img, score_image** out);
SCORE_API score_status score_image_dims(const score_image* img, uint32_t* height,
                                        uint32_t* width, uint32_t* channels);
/* Mutable borrow of the pixel buffer; length is H*W*C. */
SCORE_API double* score_image_data(score_image* img);
SCORE_API const double* score_image_data_const(const score_image* img);
/* Format chosen by extension: .scr1 (float32 raw), .pgm (8-bit gray),
 * .png (8-bit gray/RGB). */
SCORE_API score_status score_image_load(const char* path, score_image** out);
SCORE_API score_status score_image_save(const score_image* img, const char* path);

/* ---- random streams ---- */

SCORE_API score_status score_rng_new(uint64_t seed, uint64_t stream_id, score_rng** out);
SCORE_API void score_rng_free(score_rng* rng);
SCORE_API score_status score_rng_substream(const score_rng* rng, uint64_t child,
                                           score_rng** out);

/* ---- spectrum profiles ---- */

SCORE_API score_status score_rapsd(const score_image* img, int bins, score_profile** out);
SCORE_API score_status score_corpus_profile(const score_image* const* images, size_t count,
                                            int bins, score_profile** out);
SCORE_API score_status score_noise_profile_analytic(uint32_t height, uint32_t width, int bins,
                                                    score_profile** out);
SCORE_API score_status score_noise_profile_empirical(uint32_t height, uint32_t width, int bins,
                                                     int samples, score_rng* rng,
                                                     score_profile** out);
SCORE_API score_status score_profile_power_law(int bins, double amplitude, double exponent,
                                               double f0, score_profile** out);
SCORE_API score_status score_profile_flat(int bins, double value, score_profile** out);
SCORE_API score_status score_profile_from_arrays(const double* freq, const double* power,
                                                 const int64_t* count, size_t bins,
                                                 score_profile** out);
SCORE_API void score_profile_free(score_profile* p);
SCORE_API score_status score_profile_bins(const score_profile* p, size_t* out);
SCORE_API score_status score_profile_get(const score_profile* p, size_t bin, double* freq,
                                         double* power, int64_t* count);
SCORE_API score_status score_profile_value_at(const score_profile* p, double freq, double* out);
SCORE_API score_status score_profile_save_csv(const score_profile* p, const char* path);
SCORE_API score_status score_profile_load_csv(const char* path, score_profile** out);

/* Default RAPSD bin count for a grid: max(2, ceil(min(H, W) / 2)). */
SCORE_API score_status score_default_bins(uint32_t height, uint32_t width, int* out);
/* sqrt(2)/2, the top of the radial frequency range. */
SCORE_API double score_max_radial_freq(void);

/* ---- noise schedules ---- */

/* kind: "linear" (uses beta_start/beta_end) or "cosine" (ignores them). */
SCORE_API score_status score_schedule_new(const char* kind, int total_steps, double beta_start,
                                          double beta_end, score_schedule** out);
SCORE_API void score_schedule_free(score_schedule* s);
SCORE_API score_status score_schedule_steps(const score_schedule* s, int* out);
SCORE_API score_status score_schedule_beta(const score_schedule* s, int t, double* out);
SCORE_API score_status score_schedule_alpha_bar(const score_schedule* s, int t, double* out);
SCORE_API score_status score_alpha_bar_inverse(const score_schedule* s, double target, int* out);
SCORE_API score_status score_solve_tprime(const score_schedule* s, const score_profile* p0,
                                          const score_profile* pT, double f_cutoff, int* out);
/* SNR_t(f) = abar_t * P0(f) / ((1 - abar_t) * PT(f)), profiles interpolated. */
SCORE_API score_status score_snr_value(const score_schedule* s, int t, const score_profile* p0,
                                       const score_profile* pT, double freq, double* out);

/* ---- spectral operations ---- */

SCORE_API score_status score_cutoff(const score_image* img, double f_cutoff, score_image** out);
SCORE_API score_status score_gaussian_field(const score_profile* profile, uint32_t height,
                                            uint32_t width, score_rng* rng, score_image** out);

/* ---- predictors and sampling ---- */

SCORE_API score_status score_predictor_analytic(const score_profile* spectrum,
                                                const score_schedule* schedule,
                                                score_predictor** out);
/* endpoint: "tcp:host:port" or "exec:command arg ...". */
SCORE_API score_status score_predictor_external(const char* endpoint, int timeout_ms,
                                                score_predictor** out);
SCORE_API void score_predictor_free(score_predictor* p);
SCORE_API score_status score_predict(score_predictor* p, const score_image* x_t, int t,
                                     score_image** out);

SCORE_API score_status score_diffuse(const score_image* x0, int t, const score_schedule* s,
                                     score_rng* rng, score_image** out);
SCORE_API score_status score_reverse_step(const score_image* x_t, int t, score_predictor* pred,
                                          const score_schedule* s, score_rng* rng,
                                          int noise_at_final_step, score_image** out);
SCORE_API score_status score_sample(score_predictor* pred, const score_schedule* s,
                                    uint32_t height, uint32_t width, uint32_t channels,
                                    score_rng* rng, int clamp_output, score_image** out);
SCORE_API score_status score_sdedit(const score_image* img, int t_prime, score_predictor* pred,
                                    const score_schedule* s, score_rng* rng, int clamp_output,
                                    score_image** out);
/* t_prime_override < 0 derives t' from the SNR crossover at f_cutoff.
 * t_prime_used may be NULL. */
SCORE_API score_status score_regenerate(const score_image* img, double f_cutoff,
                                        int t_prime_override, score_predictor* pred,
                                        const score_schedule* s, const score_profile* p0,
                                        const score_profile* pT, score_rng* rng,
                                        int clamp_output, int* t_prime_used, score_image** out);

/* ---- noise injection and corpus building ---- */

SCORE_API score_status score_inject_gaussian(const score_image* img, double sigma_byte,
                                             score_rng* rng, score_image** out);
SCORE_API score_status score_inject_poisson(const score_image* img, double lambda,
                                            score_rng* rng, score_image** out);
SCORE_API score_status score_inject_mix(const score_image* img, double lambda, double sigma_byte,
                                        score_rng* rng, score_image** out);

/* noise_kind: "gaussian", "poisson" or "mix". Writes images plus
 * manifest.tsv into out_dir; out_manifest may be NULL. */
SCORE_API score_status score_build_mixture(const char* clean_dir, const char* out_dir,
                                           double noisy_fraction, const char* noise_kind,
                                           double sigma_byte, double lambda, uint64_t seed,
                                           score_manifest** out_manifest);
SCORE_API score_status score_manifest_load(const char* path, score_manifest** out);
SCORE_API void score_manifest_free(score_manifest* m);
SCORE_API score_status score_manifest_count(const score_manifest* m, size_t* out);
/* Borrowed strings, valid until the manifest is freed. */
SCORE_API score_status score_manifest_entry(const score_manifest* m, size_t index,
                                            const char** role, const char** path);
SCORE_API score_status score_manifest_dims(const score_manifest* m, uint32_t* height,
                                           uint32_t* width, uint32_t* channels);

/* ---- evaluation ---- */

/* d = sum over bins of (ln Pa - ln Pb)^2; zero bins floored at power_floor
 * (pass 0 for the default 1e-12). */
SCORE_API score_status score_log_spectral_distance(const score_profile* a,
                                                   const score_profile* b, double power_floor,
                                                   double* out);
SCORE_API score_status score_log_spectral_distance_band(const score_profile* a,
                                                        const score_profile* b, double f_lo,
                                                        double f_hi, double power_floor,
                                                        double* out);
/* Per-bin ln Pa - ln Pb written into gaps (length = bin count). */
SCORE_API score_status score_spectral_gap(const score_profile* a, const score_profile* b,
                                          double power_floor, double* gaps, size_t gaps_len);
/* PSNR in dB, peak-to-peak 2. is_infinite set for identical images (out
 * untouched in that case). */
SCORE_API score_status score_psnr(const score_image* a, const score_image* b, double* out,
                                  int* is_infinite);

#ifdef __cplusplus
}
#endif

#endif /* SCORE_SCORE_H */
