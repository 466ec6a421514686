// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// fails. Monte Carlo estimates run against closed-form oracles on the
// Gaussian-field testbed; every random quantity is seeded, so reruns are
// bit-identical.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "diffusion.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "field.hpp"
#include "grid.hpp"
#include "image_io.hpp"
#include "parallel.hpp"
#include "profile.hpp"
#include "rng.hpp"
#include "schedule.hpp"
#include "spectral.hpp"
#include "wire.hpp"

using namespace score;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// harness

struct Criterion {
    int id;
    std::string name;
    std::vector<std::string> failures;
    std::string detail;
    double seconds = 0.0;

    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    bool passed() const { return failures.empty(); }
};

// RAPSD bookkeeping audit (criterion 9): every profile the suite computes
// goes through here, checking sum(power * count) against the spectral
// energy and Parseval against the spatial energy.
struct Bookkeeping {
    std::mutex mu;
    long checks = 0;
    std::vector<std::string> failures;

    void record(bool ok, const std::string& what) {
        std::lock_guard<std::mutex> lock(mu);
        ++checks;
        if (!ok && failures.size() < 8) failures.push_back(what);
    }
};

Bookkeeping g_books;

SpectrumProfile rapsd_audited(const ImageGrid& x, int bins) {
    FreqGrid X = dft2(x);
    SpectrumProfile p = rapsd(X, bins);

    double spatial = 0.0;
    for (double v : x.data) spatial += v * v;
    double spectral = 0.0;
    for (const auto& v : X.data) spectral += std::norm(v);
    double booked = 0.0;
    for (size_t b = 0; b < p.bins(); ++b) booked += p.power[b] * static_cast<double>(p.count[b]);
    double per_channel = spectral / x.channels;

    bool ok_books = std::fabs(booked - per_channel) <= 1e-6 * per_channel;
    bool ok_parseval = std::fabs(spectral - spatial) <= 1e-9 * spatial;
    g_books.record(ok_books && ok_parseval,
                   "energy audit failed: booked=" + std::to_string(booked) +
                       " spectral/C=" + std::to_string(per_channel) +
                       " spatial=" + std::to_string(spatial));
    return p;
}

SpectrumProfile mean_profile(const std::vector<ImageGrid>& images, int bins, unsigned threads) {
    std::vector<SpectrumProfile> per(images.size());
    parallel_for(images.size(), [&](size_t i) { per[i] = rapsd_audited(images[i], bins); },
                 threads);
    SpectrumProfile acc = per.front();
    for (size_t i = 1; i < per.size(); ++i) {
        for (size_t b = 0; b < acc.bins(); ++b) acc.power[b] += per[i].power[b];
    }
    for (double& v : acc.power) v /= static_cast<double>(images.size());
    return acc;
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// testbed constants

constexpr int kH = 32;
constexpr int kW = 32;
constexpr int kBins = 16;
constexpr double kFCutoff = 0.30;
const double kSigmaModel2 = byte_scale_to_model(25.0) * byte_scale_to_model(25.0);

SpectrumProfile clean_spectrum() { return SpectrumProfile::power_law(kBins, 0.01, 1.0, 0.05); }

SpectrumProfile noisy_spectrum() {
    SpectrumProfile s = clean_spectrum();
    for (double& p : s.power) p += kSigmaModel2;
    return s;
}

// Per-mode variance recursion for the reverse chain whose predictor models
// spectrum S_model: the closed-form oracle for sampler output power.
double chain_variance(double p_start, int t_start, double s_model, const NoiseSchedule& s) {
    double p = p_start;
    for (int t = t_start; t >= 1; --t) {
        double abar = s.alpha_bar_at(t);
        double beta = s.beta_at(t);
        double v = abar * s_model + 1.0 - abar;
        double a = (1.0 / std::sqrt(1.0 - beta)) * (1.0 - beta / v);
        p = a * a * p + (t > 1 ? beta : 0.0);
    }
    return p;
}

// Annulus-averaged oracle profile for a chain over every grid coefficient.
SpectrumProfile chain_profile(const SpectrumProfile& model,
                              const std::function<double(double)>& start_power, int t_start,
                              const NoiseSchedule& s) {
    RadialBinning binning(kBins);
    std::vector<double> sum(kBins, 0.0);
    std::vector<int64_t> count(kBins, 0);
    for (int ky = 0; ky < kH; ++ky) {
        for (int kx = 0; kx < kW; ++kx) {
            double r = radial_freq(ky, kx, kH, kW);
            double s_model = model.value_at(r);
            double p = chain_variance(start_power(r), t_start, s_model, s);
            int b = binning.bin_of(r);
            sum[static_cast<size_t>(b)] += p;
            count[static_cast<size_t>(b)] += 1;
        }
    }
    SpectrumProfile out;
    out.freq = binning.centers();
    out.count = count;
    out.power.resize(kBins);
    for (int b = 0; b < kBins; ++b) {
        out.power[static_cast<size_t>(b)] =
            sum[static_cast<size_t>(b)] / static_cast<double>(count[static_cast<size_t>(b)]);
    }
    return out;
}

double band_distance(const SpectrumProfile& a, const SpectrumProfile& b, double f_lo) {
    return log_spectral_distance_band(a, b, f_lo, 1.0);
}

// ---------------------------------------------------------------------------
// criteria

void criterion_mixing_law(Criterion& c) {
    NoiseSchedule s = make_schedule(ScheduleKind::linear, 1000, 1e-4, 0.02);
    SpectrumProfile shape = clean_spectrum();
    const int n = 512;

    std::vector<ImageGrid> clean(n);
    parallel_for(n, [&](size_t i) {
        RngStream rng(101, 2 * i);
        clean[i] = gaussian_field(shape, kH, kW, rng);
    });
    SpectrumProfile p0 = mean_profile(clean, kBins, 0);
    SpectrumProfile pT = noise_profile(kH, kW, kBins);

    double worst = 0.0;
    for (int t : {100, 500, 900}) {
        std::vector<ImageGrid> diffused(n);
        parallel_for(n, [&](size_t i) {
            RngStream rng(101, 2 * i + 1 + static_cast<uint64_t>(t) * 1000003);
            diffused[i] = diffuse(clean[i], t, s, rng);
        });
        SpectrumProfile pt = mean_profile(diffused, kBins, 0);
        double abar = s.alpha_bar_at(t);
        for (size_t b = 0; b < pt.bins(); ++b) {
            double expected = abar * p0.power[b] + (1.0 - abar) * pT.power[b];
            double rel = std::fabs(pt.power[b] - expected) / expected;
            worst = std::max(worst, rel);
            c.expect(rel < 0.05, "t=" + std::to_string(t) + " bin " + std::to_string(b) +
                                     " off by " + fmt(rel));
        }
    }
    c.detail = "512 fields, t in {100,500,900}, worst per-bin gap " + fmt(worst);
}

void criterion_crossover(Criterion& c) {
    NoiseSchedule s = make_schedule(ScheduleKind::linear, 1000, 1e-4, 0.02);
    SpectrumProfile p0 = SpectrumProfile::power_law(32, 0.01, 2.0, 0.05);
    SpectrumProfile pT = SpectrumProfile::flat(32, 1.0);

    std::vector<int> ts;
    for (double f : {0.20, 0.30, 0.40}) {
        int tp = solve_tprime(s, p0, pT, f);
        ts.push_back(tp);
        c.expect(tp >= 1 && tp < s.total_steps, "t' out of interior at f=" + fmt(f));
        double ratio = p0.value_at(f) / pT.value_at(f);
        auto snr_of = [&](int t) {
            double a = s.alpha_bar_at(t);
            return a / (1.0 - a) * ratio;
        };
        c.expect(snr_of(tp - 1) >= 1.0 && snr_of(tp + 1) <= 1.0,
                 "SNR does not bracket 1 at f=" + fmt(f) + ": [" + fmt(snr_of(tp - 1)) + ", " +
                     fmt(snr_of(tp + 1)) + "]");
    }
    c.expect(ts[0] > ts[1] && ts[1] > ts[2],
             "t' not strictly decreasing: " + std::to_string(ts[0]) + ", " +
                 std::to_string(ts[1]) + ", " + std::to_string(ts[2]));
    c.detail = "t'(0.20)=" + std::to_string(ts[0]) + " t'(0.30)=" + std::to_string(ts[1]) +
               " t'(0.40)=" + std::to_string(ts[2]) + ", SNR brackets 1 at each";
}

void criterion_cutoff_projection(Criterion& c) {
    RngStream rng(303, 0);
    SpectrumProfile shape = clean_spectrum();
    for (int trial = 0; trial < 8; ++trial) {
        RngStream sub = rng.substream(static_cast<uint64_t>(trial));
        ImageGrid x = trial % 2 == 0 ? gaussian_field(shape, kH, kW, sub) : ImageGrid(kH, kW, 1);
        if (trial % 2 == 1) {
            for (double& v : x.data) v = sub.next_normal();
        }
        double f = 0.15 + 0.1 * trial / 2;

        FreqGrid X = dft2(x);
        FreqGrid once = cutoff_freq(X, f);
        FreqGrid twice = cutoff_freq(once, f);
        c.expect(once.data == twice.data, "projection not bit-exact idempotent at f=" + fmt(f));

        for (int ky = 0; ky < kH; ++ky) {
            for (int kx = 0; kx < kW; ++kx) {
                double r = radial_freq(ky, kx, kH, kW);
                if (r > f) {
                    c.expect(std::norm(once.at(ky, kx, 0)) == 0.0, "nonzero power above cutoff");
                } else {
                    c.expect(once.at(ky, kx, 0) == X.at(ky, kx, 0), "passband coefficient moved");
                }
            }
        }

        ImageGrid low = cutoff(x, f);
        FreqGrid X1 = dft2(low);
        double energy_in = 0.0, energy_out = 0.0, passband_err = 0.0;
        for (double v : x.data) energy_in += v * v;
        for (double v : low.data) energy_out += v * v;
        for (int ky = 0; ky < kH; ++ky) {
            for (int kx = 0; kx < kW; ++kx) {
                if (radial_freq(ky, kx, kH, kW) <= f) {
                    passband_err = std::max(passband_err,
                                            std::abs(X1.at(ky, kx, 0) - X.at(ky, kx, 0)));
                }
            }
        }
        c.expect(energy_out <= energy_in * (1.0 + 1e-12), "energy increased");
        c.expect(passband_err < 1e-7, "passband drift " + fmt(passband_err));
    }
    c.detail = "idempotent bit-exact, zero stopband power, passband within 1e-7";
}

void criterion_predictor_optimality(Criterion& c) {
    NoiseSchedule s = make_schedule(ScheduleKind::linear, 1000, 1e-4, 0.02);
    SpectrumProfile shape = clean_spectrum();
    AnalyticGaussPredictor pred(shape, s);
    const int n = 4096;
    const std::vector<double> ablation_gains = {0.25, 0.5, 0.75};

    std::ostringstream detail;
    for (int t : {100, 500, 900}) {
        double abar = s.alpha_bar_at(t);
        double sq_a = std::sqrt(abar), sq_1ma = std::sqrt(1.0 - abar);

        struct Acc {
            double loss_pred = 0.0, loss_zero = 0.0;
            double loss_gain[3] = {0.0, 0.0, 0.0};
            // per-annulus regression for the posterior-mean oracle
            std::vector<double> num, den;
        };
        // one slot per draw: race-free and schedule-independent
        std::vector<Acc> accs(static_cast<size_t>(n));
        for (Acc& a : accs) {
            a.num.assign(kBins, 0.0);
            a.den.assign(kBins, 0.0);
        }
        RadialBinning binning(kBins);

        parallel_for(static_cast<size_t>(n), [&](size_t i) {
            Acc& acc = accs[i];
            RngStream field_rng(404, 3 * i + static_cast<uint64_t>(t) * 1000003);
            RngStream noise_rng(404, 3 * i + 1 + static_cast<uint64_t>(t) * 1000003);
            ImageGrid x0 = gaussian_field(shape, kH, kW, field_rng);
            ImageGrid eps(kH, kW, 1);
            for (double& v : eps.data) v = noise_rng.next_normal();
            ImageGrid xt(kH, kW, 1);
            for (size_t j = 0; j < xt.data.size(); ++j) {
                xt.data[j] = sq_a * x0.data[j] + sq_1ma * eps.data[j];
            }

            AnalyticGaussPredictor local(shape, s);
            ImageGrid eps_hat = local.predict(xt, t);
            for (size_t j = 0; j < eps.data.size(); ++j) {
                double d = eps.data[j] - eps_hat.data[j];
                acc.loss_pred += d * d;
                acc.loss_zero += eps.data[j] * eps.data[j];
                for (size_t g = 0; g < ablation_gains.size(); ++g) {
                    double est = (1.0 - ablation_gains[g]) / sq_1ma * xt.data[j];
                    double dg = eps.data[j] - est;
                    acc.loss_gain[g] += dg * dg;
                }
            }

            // brute-force posterior regression per annulus: eps(k) vs x_t(k)
            FreqGrid Y = dft2(xt);
            FreqGrid E = dft2(eps);
            for (int ky = 0; ky < kH; ++ky) {
                for (int kx = 0; kx < kW; ++kx) {
                    int b = binning.bin_of(radial_freq(ky, kx, kH, kW));
                    auto y = Y.at(ky, kx, 0);
                    auto e = E.at(ky, kx, 0);
                    acc.num[static_cast<size_t>(b)] += (e * std::conj(y)).real();
                    acc.den[static_cast<size_t>(b)] += std::norm(y);
                }
            }
        });

        Acc total;
        total.num.assign(kBins, 0.0);
        total.den.assign(kBins, 0.0);
        for (const Acc& a : accs) {
            total.loss_pred += a.loss_pred;
            total.loss_zero += a.loss_zero;
            for (int g = 0; g < 3; ++g) total.loss_gain[g] += a.loss_gain[g];
            for (int b = 0; b < kBins; ++b) {
                total.num[static_cast<size_t>(b)] += a.num[static_cast<size_t>(b)];
                total.den[static_cast<size_t>(b)] += a.den[static_cast<size_t>(b)];
            }
        }

        c.expect(total.loss_pred < total.loss_zero, "analytic loses to zero predictor at t=" +
                                                        std::to_string(t));
        for (size_t g = 0; g < ablation_gains.size(); ++g) {
            c.expect(total.loss_pred < total.loss_gain[g],
                     "analytic loses to constant gain " + fmt(ablation_gains[g]) + " at t=" +
                         std::to_string(t));
        }

        // oracle comparison: empirical regression coefficient per annulus vs
        // the variance-weighted analytic epsilon-gain
        RadialBinning bins(kBins);
        double worst_gap = 0.0;
        for (int b = 0; b < kBins; ++b) {
            double empirical = total.num[static_cast<size_t>(b)] / total.den[static_cast<size_t>(b)];
            double wnum = 0.0, wden = 0.0;
            for (int ky = 0; ky < kH; ++ky) {
                for (int kx = 0; kx < kW; ++kx) {
                    double r = radial_freq(ky, kx, kH, kW);
                    if (bins.bin_of(r) != b) continue;
                    double sv = shape.value_at(r);
                    double var = abar * sv + 1.0 - abar;
                    double gain = sq_1ma / var;
                    wnum += gain * var;
                    wden += var;
                }
            }
            double analytic = wnum / wden;
            double gap = std::fabs(empirical - analytic) / analytic;
            worst_gap = std::max(worst_gap, gap);
            c.expect(gap < 0.02, "posterior-mean oracle off by " + fmt(gap) + " in bin " +
                                     std::to_string(b) + " at t=" + std::to_string(t));
        }

        double n_pix = static_cast<double>(n) * kH * kW;
        detail << "t=" << t << ": L=" << fmt(total.loss_pred / n_pix)
               << " (zero " << fmt(total.loss_zero / n_pix) << ", oracle gap "
               << fmt(worst_gap) << ") ";
    }
    c.detail = detail.str();
}

void criterion_sampler(Criterion& c) {
    NoiseSchedule s = make_schedule(ScheduleKind::linear, 1000, 1e-4, 0.02);
    const int n = 256;

    // (a) power-law spectrum, 10% per bin against the annulus-mean target
    {
        SpectrumProfile shape = clean_spectrum();
        AnalyticGaussPredictor pred(shape, s);
        std::vector<ImageGrid> samples(n);
        parallel_for(n, [&](size_t i) {
            RngStream rng(505, i);
            AnalyticGaussPredictor local(shape, s);
            samples[i] = sample(local, s, kH, kW, 1, rng);
        });
        SpectrumProfile measured = mean_profile(samples, kBins, 0);
        SpectrumProfile target = expected_rapsd(shape, kH, kW, kBins);
        SpectrumProfile oracle =
            chain_profile(shape, [](double) { return 1.0; }, s.total_steps, s);
        double worst = 0.0, worst_oracle = 0.0;
        for (size_t b = 0; b < measured.bins(); ++b) {
            double rel = std::fabs(measured.power[b] - target.power[b]) / target.power[b];
            worst = std::max(worst, rel);
            c.expect(rel < 0.10, "power-law bin " + std::to_string(b) + " off target by " +
                                     fmt(rel));
            worst_oracle = std::max(
                worst_oracle, std::fabs(measured.power[b] - oracle.power[b]) / oracle.power[b]);
        }
        c.detail += "power-law worst gap " + fmt(worst) + " (vs recursion oracle " +
                    fmt(worst_oracle) + "); ";
    }

    // (b) flat spectrum: flat output within 5% per bin
    {
        SpectrumProfile flat = SpectrumProfile::flat(kBins, 1.0);
        std::vector<ImageGrid> samples(n);
        parallel_for(n, [&](size_t i) {
            RngStream rng(606, i);
            AnalyticGaussPredictor local(flat, s);
            samples[i] = sample(local, s, kH, kW, 1, rng);
        });
        SpectrumProfile measured = mean_profile(samples, kBins, 0);
        double worst = 0.0;
        for (size_t b = 0; b < measured.bins(); ++b) {
            double rel = std::fabs(measured.power[b] - 1.0);
            worst = std::max(worst, rel);
            c.expect(rel < 0.05, "flat bin " + std::to_string(b) + " off by " + fmt(rel));
        }
        c.detail += "flat worst gap " + fmt(worst) + "; ";
    }

    // (c) scalar chains: 2x2 grids with a flat spectrum are four independent
    // scalar Gaussian channels; the stationary variance must match S.
    {
        const double s_scalar = 0.5;
        SpectrumProfile flat = SpectrumProfile::flat(2, s_scalar);
        const int chains = 10000;
        std::vector<double> sums(static_cast<size_t>(chains), 0.0);
        parallel_for(static_cast<size_t>(chains), [&](size_t i) {
            RngStream rng(707, i);
            AnalyticGaussPredictor local(flat, s);
            ImageGrid out = sample(local, s, 2, 2, 1, rng);
            double acc = 0.0;
            for (double v : out.data) acc += v * v;
            sums[i] = acc;
        });
        double total = 0.0;
        for (double v : sums) total += v;
        double var = total / (4.0 * chains);
        double rel = std::fabs(var - s_scalar) / s_scalar;
        c.expect(rel < 0.05, "scalar-chain variance off by " + fmt(rel));
        c.detail += "scalar-chain variance " + fmt(var) + " vs " + fmt(s_scalar) + " (gap " +
                    fmt(rel) + ")";
    }
}

void criterion_end_to_end(Criterion& c) {
    NoiseSchedule s = make_schedule(ScheduleKind::linear, 1000, 1e-4, 0.02);
    SpectrumProfile s_clean = clean_spectrum();
    SpectrumProfile s_noisy = noisy_spectrum();
    SpectrumProfile pT = SpectrumProfile::flat(kBins, 1.0);
    SpectrumProfile clean_target = expected_rapsd(s_clean, kH, kW, kBins);
    const int n = 256;

    int t_prime = solve_tprime(s, s_clean, pT, kFCutoff);
    c.expect(t_prime >= 1 && t_prime < 200, "derived t' implausible: " + std::to_string(t_prime));

    // plain sampling from the noisy-trained predictor
    std::vector<ImageGrid> plain(n);
    parallel_for(n, [&](size_t i) {
        RngStream rng(808, i);
        AnalyticGaussPredictor local(s_noisy, s);
        plain[i] = sample(local, s, kH, kW, 1, rng);
    });
    SpectrumProfile p_plain = mean_profile(plain, kBins, 0);

    // (a) elevated high-frequency power
    for (size_t b = 0; b < p_plain.bins(); ++b) {
        if (p_plain.freq[b] > kFCutoff) {
            double ratio = p_plain.power[b] / clean_target.power[b];
            c.expect(ratio > 1.5, "plain sampling not elevated in bin " + std::to_string(b) +
                                      " (ratio " + fmt(ratio) + ")");
        }
    }

    // (b) naive SDEdit at the derived t' barely improves the distance
    std::vector<ImageGrid> edited(n);
    parallel_for(n, [&](size_t i) {
        RngStream rng(809, i);
        AnalyticGaussPredictor local(s_noisy, s);
        edited[i] = sdedit(plain[i], t_prime, local, s, rng);
    });
    SpectrumProfile p_edit = mean_profile(edited, kBins, 0);
    double d_plain_full = log_spectral_distance(p_plain, clean_target);
    double d_edit_full = log_spectral_distance(p_edit, clean_target);
    double sdedit_improvement = 1.0 - d_edit_full / d_plain_full;
    c.expect(sdedit_improvement < 0.10,
             "naive SDEdit improved too much: " + fmt(sdedit_improvement));

    // (c) cutoff regeneration with the derived t' halves the high-band distance
    std::vector<ImageGrid> regen(n);
    ScoreConfig cfg;
    cfg.f_cutoff = kFCutoff;
    std::vector<int> t_used(n, -1);
    parallel_for(n, [&](size_t i) {
        RngStream rng(810, i);
        AnalyticGaussPredictor local(s_noisy, s);
        ScoreRunInfo info;
        regen[i] = score_regenerate(plain[i], cfg, local, s, s_clean, pT, rng, &info);
        t_used[i] = info.t_prime_used;
    });
    for (int t : t_used) c.expect(t == t_prime, "per-image derived t' differs");
    SpectrumProfile p_regen = mean_profile(regen, kBins, 0);

    double d_plain_band = band_distance(p_plain, clean_target, kFCutoff);
    double d_regen_band = band_distance(p_regen, clean_target, kFCutoff);
    double reduction = 1.0 - d_regen_band / d_plain_band;
    c.expect(reduction >= 0.50, "cutoff-regeneration band reduction only " + fmt(reduction));

    // closed-form prediction of the same reduction, from the per-mode
    // variance recursion
    double abar_tp = s.alpha_bar_at(t_prime);
    SpectrumProfile oracle_plain =
        chain_profile(s_noisy, [](double) { return 1.0; }, s.total_steps, s);
    SpectrumProfile oracle_regen = chain_profile(
        s_noisy,
        [&](double r) {
            double p_in = r > kFCutoff ? 0.0 : s_noisy.value_at(r);
            return abar_tp * p_in + (1.0 - abar_tp);
        },
        t_prime, s);
    double oracle_reduction = 1.0 - band_distance(oracle_regen, clean_target, kFCutoff) /
                                        band_distance(oracle_plain, clean_target, kFCutoff);

    // (d) passband preservation well below the cutoff
    double worst_passband = 0.0;
    for (size_t b = 0; b < p_regen.bins(); ++b) {
        if (p_regen.freq[b] < 0.5 * kFCutoff) {
            double rel = std::fabs(p_regen.power[b] - p_plain.power[b]) / p_plain.power[b];
            worst_passband = std::max(worst_passband, rel);
            c.expect(rel < 0.10, "passband bin " + std::to_string(b) + " moved by " + fmt(rel));
        }
    }

    c.detail = "t'=" + std::to_string(t_prime) + ", SDEdit improvement " +
               fmt(sdedit_improvement) + ", cutoff-regeneration band reduction " + fmt(reduction) +
               " (oracle " + fmt(oracle_reduction) + "), passband drift " + fmt(worst_passband);
}

void criterion_injectors(Criterion& c) {
    auto byte_moments = [](const ImageGrid& g, double& mean, double& var) {
        double sum = 0.0;
        for (double v : g.data) sum += v * (255.0 / 2.0);
        mean = sum / static_cast<double>(g.data.size());
        double s2 = 0.0;
        for (double v : g.data) {
            double d = v * (255.0 / 2.0) - mean;
            s2 += d * d;
        }
        var = s2 / static_cast<double>(g.data.size());
    };

    ImageGrid zero(1000, 1000, 1);  // 1e6 pixels
    double mean = 0.0, var = 0.0;

    RngStream r1(901, 0);
    byte_moments(inject_gaussian(zero, 25.0, r1), mean, var);
    c.expect(std::fabs(var - 625.0) / 625.0 < 0.03, "gaussian variance off: " + fmt(var));
    c.expect(std::fabs(mean) < 0.1, "gaussian mean off: " + fmt(mean));
    std::string detail = "gaussian var " + fmt(var);

    RngStream r2(902, 0);
    byte_moments(inject_poisson(zero, 30.0, r2), mean, var);
    c.expect(std::fabs(var - 30.0) / 30.0 < 0.03, "poisson variance off: " + fmt(var));
    c.expect(std::fabs(mean) < 0.1, "poisson mean off: " + fmt(mean));
    detail += ", poisson var " + fmt(var);

    RngStream r3(903, 0);
    byte_moments(inject_mix(zero, 30.0, 25.0, r3), mean, var);
    c.expect(std::fabs(var - 655.0) / 655.0 < 0.03, "mix variance off: " + fmt(var));
    detail += ", mix var " + fmt(var);

    // exact 90/10 mixture split at N = 100
    fs::path in_dir = fs::temp_directory_path() / "score_accept_mix_in";
    fs::path out_dir = fs::temp_directory_path() / "score_accept_mix_out";
    fs::remove_all(in_dir);
    fs::remove_all(out_dir);
    fs::create_directories(in_dir);
    RngStream rng(904, 0);
    for (int i = 0; i < 100; ++i) {
        ImageGrid g(8, 8, 1);
        RngStream sub = rng.substream(static_cast<uint64_t>(i));
        for (double& v : g.data) v = sub.next_double() - 0.5;
        char name[32];
        std::snprintf(name, sizeof(name), "x%03d.scr1", i);
        save_scr1(g, in_dir / name);
    }
    CorpusManifest m = build_mixture(in_dir, out_dir, 0.9, NoiseKind::gaussian, {}, 55);
    c.expect(m.count_role("noisy") == 90, "expected 90 noisy, got " +
                                              std::to_string(m.count_role("noisy")));
    c.expect(m.count_role("clean") == 10, "expected 10 clean");
    detail += ", mixture 90/10 exact";
    fs::remove_all(in_dir);
    fs::remove_all(out_dir);
    c.detail = detail;
}

// -- criterion 8 helpers ------------------------------------------------

struct CmdResult {
    int exit_code = -1;
    std::string output;
};

CmdResult run_cmd(const std::string& cmd) {
    CmdResult res;
    FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
    if (!pipe) return res;
    char buf[4096];
    while (size_t n = fread(buf, 1, sizeof(buf), pipe)) res.output.append(buf, n);
    int rc = pclose(pipe);
    res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return res;
}

bool file_bytes_equal(const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    std::vector<char> ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::vector<char> bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    return fa.good() == fb.good() && ba == bb;
}

// Run records carry wall-clock durations; everything else must match.
bool is_run_record(const fs::path& p) {
    std::string name = p.filename().string();
    return name == "run-record.json" || name.ends_with(".run.json");
}

void compare_trees(Criterion& c, const fs::path& a, const fs::path& b, const std::string& what) {
    std::vector<fs::path> rel_a;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.is_regular_file() && !is_run_record(e.path())) {
            rel_a.push_back(fs::relative(e.path(), a));
        }
    }
    std::sort(rel_a.begin(), rel_a.end());
    for (const fs::path& rel : rel_a) {
        if (!fs::exists(b / rel)) {
            c.expect(false, what + ": missing " + rel.string() + " in rerun");
            continue;
        }
        c.expect(file_bytes_equal(a / rel, b / rel),
                 what + ": " + rel.string() + " differs between reruns");
    }
}

void criterion_determinism_and_protocol(Criterion& c) {
    const std::string cli = SCORE_CLI_BIN;
    fs::path root = fs::temp_directory_path() / "score_accept_cli";
    fs::remove_all(root);

    auto battery = [&](const fs::path& dir) -> std::vector<std::string> {
        fs::create_directories(dir);
        std::string d = dir.string();
        std::vector<std::string> stdouts;
        std::vector<std::string> cmds = {
            cli + " gen-synthetic --n 6 --height 16 --width 16 --amplitude 0.01 --exponent 1"
                  " --f0 0.05 --seed 5 --out " + d + "/fields",
            cli + " spectrum --input " + d + "/fields --out " + d + "/p0.csv",
            cli + " solve-tprime --p0 " + d + "/p0.csv --pt-analytic --height 16 --width 16"
                  " --f-cutoff 0.3 --T 200 --out " + d,
            cli + " inject --input " + d + "/fields --out " + d + "/inj --noise mix --seed 6",
            cli + " mixture --input " + d + "/fields --out " + d + "/mix --noisy-fraction 0.5"
                  " --noise gaussian --seed 7",
            cli + " spectrum --input " + d + "/mix/manifest.tsv --out " + d + "/p0_clean.csv",
            cli + " sample --n 2 --height 16 --width 16 --T 100 --amplitude 0.01 --exponent 1"
                  " --f0 0.05 --seed 8 --out " + d + "/samples",
            cli + " sdedit --input " + d + "/samples --t-prime 30 --T 100 --amplitude 0.01"
                  " --exponent 1 --f0 0.05 --seed 9 --out " + d + "/edited",
            cli + " score --input " + d + "/samples --f-cutoff 0.3 --p0 " + d + "/p0.csv"
                  " --T 100 --amplitude 0.01 --exponent 1 --f0 0.05 --seed 10 --out " + d +
                  "/regen",
            cli + " eval --a " + d + "/samples --b " + d + "/regen --out " + d + "/eval",
        };
        for (const std::string& cmd : cmds) {
            CmdResult res = run_cmd(cmd);
            c.expect(res.exit_code == 0, "command failed (" + std::to_string(res.exit_code) +
                                             "): " + cmd + "\n" + res.output);
            stdouts.push_back(res.output);
        }
        return stdouts;
    };

    std::vector<std::string> out_a = battery(root / "run_a");
    std::vector<std::string> out_b = battery(root / "run_b");
    // a role-labeled manifest yields both the clean-subset and full profiles
    c.expect(fs::exists(root / "run_a" / "p0_clean.csv") &&
                 fs::exists(root / "run_a" / "p0_clean.full.csv"),
             "manifest-driven spectrum did not emit both profiles");
    for (size_t i = 0; i < out_a.size(); ++i) {
        // stdout of each command must match modulo the run directory name
        std::string a = out_a[i], b = out_b[i];
        auto scrub = [&](std::string s, const std::string& tag) {
            size_t pos;
            while ((pos = s.find(tag)) != std::string::npos) s.replace(pos, tag.size(), "$DIR");
            return s;
        };
        a = scrub(a, (root / "run_a").string());
        b = scrub(b, (root / "run_b").string());
        c.expect(a == b, "stdout differs between reruns for command " + std::to_string(i));
    }
    compare_trees(c, root / "run_a", root / "run_b", "cli outputs");

    // usage errors exit nonzero
    CmdResult usage = run_cmd(cli + " spectrum --input /nonexistent-dir --out /tmp/x.csv");
    c.expect(usage.exit_code != 0, "bad input did not fail");

    // eval of a corpus against itself reports distance zero
    CmdResult self = run_cmd(cli + " eval --a " + (root / "run_a" / "samples").string() +
                             " --b " + (root / "run_a" / "samples").string());
    c.expect(self.exit_code == 0 &&
                 self.output.find("log_spectral_distance = 0\n") != std::string::npos,
             "eval(A, A) did not report zero distance:\n" + self.output);

    // outputs depend on stream ids, not on the worker schedule
    fs::path single = root / "single_thread";
    CmdResult st = run_cmd(cli + " sample --n 2 --height 16 --width 16 --T 100"
                                 " --amplitude 0.01 --exponent 1 --f0 0.05 --seed 8"
                                 " --threads 1 --out " + single.string());
    c.expect(st.exit_code == 0, "single-thread sample failed");
    for (const char* name : {"sample-00000.scr1", "sample-00001.scr1"}) {
        c.expect(file_bytes_equal(single / name, root / "run_a" / "samples" / name),
                 std::string("thread count changed output ") + name);
    }

    // protocol: echo round trip is bit-exact, fault modes raise their own codes
    const std::string echo = SCORE_ECHO_BIN;
    {
        auto pred = wire::ExternalPredictor::open("exec:" + echo, 5000);
        RngStream rng(906, 0);
        ImageGrid x(12, 10, 1);
        for (double& v : x.data) {
            v = static_cast<double>(static_cast<float>(rng.next_double() * 2.0 - 1.0));
        }
        ImageGrid eps = pred->predict(x, 17);
        c.expect(eps.data == x.data, "echo roundtrip not bit-exact");
    }
    auto expect_code = [&](const std::string& endpoint, ErrorCode want, const char* label) {
        try {
            auto pred = wire::ExternalPredictor::open(endpoint, 2000);
            ImageGrid x(4, 4, 1);
            (void)pred->predict(x, 1);
            c.expect(false, std::string(label) + ": no error raised");
        } catch (const Error& e) {
            c.expect(e.code() == want, std::string(label) + ": wrong code");
        }
    };
    expect_code("exec:" + echo + " --mode wrong-shape", ErrorCode::proto_shape_mismatch,
                "wrong-shape");
    expect_code("exec:" + echo + " --mode truncate", ErrorCode::proto_truncated, "truncate");
    expect_code("exec:" + echo + " --mode bad-version", ErrorCode::proto_version_mismatch,
                "bad-version");
    expect_code("exec:" + echo + " --mode bad-magic", ErrorCode::proto_malformed, "bad-magic");

    fs::remove_all(root);
    c.detail = "10 CLI commands byte-identical across reruns; echo bit-exact; 4 distinct "
               "protocol faults";
}

void criterion_bookkeeping(Criterion& c) {
    // extra sweep over varied shapes and content, on top of the audits
    // accumulated by every other criterion
    RngStream rng(909, 0);
    SpectrumProfile shape = clean_spectrum();
    for (auto [h, w, ch] : {std::tuple{8, 8, 1}, {16, 12, 3}, {9, 7, 1}, {64, 64, 1}, {5, 40, 3}}) {
        RngStream sub = rng.substream(static_cast<uint64_t>(h * 100 + w));
        ImageGrid g(h, w, ch);
        for (double& v : g.data) v = sub.next_normal();
        (void)rapsd_audited(g, default_bins(h, w));
        if (ch == 1 && h >= 8 && w >= 8) {
            ImageGrid low = cutoff(g, 0.25);
            (void)rapsd_audited(low, default_bins(h, w));
        }
    }
    std::lock_guard<std::mutex> lock(g_books.mu);
    c.expect(!g_books.failures.empty() == false, "bookkeeping failures recorded");
    for (const std::string& f : g_books.failures) c.expect(false, f);
    c.detail = std::to_string(g_books.checks) + " RAPSD energy audits, all within tolerance";
}

}  // namespace

int main(int argc, char** argv) {
    int only = argc > 1 ? std::atoi(argv[1]) : 0;

    std::vector<std::pair<std::string, std::function<void(Criterion&)>>> table = {
        {"spectral mixing law (512 fields, t in {100,500,900}, 5% per bin)",
         criterion_mixing_law},
        {"SNR crossover solver (brackets 1, antitone t' over f in {.2,.3,.4})",
         criterion_crossover},
        {"cutoff projection (idempotent, zero stopband, passband 1e-7, energy)",
         criterion_cutoff_projection},
        {"analytic predictor MMSE optimality (4096 draws, oracle within 2%)",
         criterion_predictor_optimality},
        {"sampler correctness (256 chains 10%/5% per bin, scalar chains 5%)",
         criterion_sampler},
        {"end-to-end cutoff regeneration vs baselines (elevated / sdedit <10% / >=50% reduction)",
         criterion_end_to_end},
        {"noise injectors (3% moments over 1e6 pixels, exact 90/10 split)",
         criterion_injectors},
        {"determinism and external-predictor protocol", criterion_determinism_and_protocol},
        {"Parseval / RAPSD energy bookkeeping (1e-6 relative)", criterion_bookkeeping},
    };

    // criterion runtime ceilings from the contract, in seconds
    std::vector<double> budget = {60.0, 60.0, 60.0, 300.0, 600.0, 900.0, 120.0, 300.0, 60.0};

    bool all_ok = true;
    double total = 0.0;
    for (size_t i = 0; i < table.size(); ++i) {
        int id = static_cast<int>(i) + 1;
        if (only != 0 && only != id) continue;
        Criterion crit{id, table[i].first, {}, "", 0.0};
        auto t0 = std::chrono::steady_clock::now();
        try {
            table[i].second(crit);
        } catch (const std::exception& e) {
            crit.expect(false, std::string("exception: ") + e.what());
        }
        crit.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        total += crit.seconds;
        if (crit.seconds > budget[i]) {
            crit.expect(false, "runtime " + fmt(crit.seconds) + "s exceeds budget " +
                                   fmt(budget[i]) + "s");
        }
        bool ok = crit.passed();
        all_ok = all_ok && ok;
        std::printf("[%s] %d: %s (%.1fs)\n", ok ? "PASS" : "FAIL", id, crit.name.c_str(),
                    crit.seconds);
        if (!crit.detail.empty()) std::printf("       %s\n", crit.detail.c_str());
        if (!ok) {
            size_t shown = 0;
            for (const std::string& f : crit.failures) {
                std::printf("       ! %s\n", f.c_str());
                if (++shown >= 10) {
                    std::printf("       ! ... %zu more\n", crit.failures.size() - shown);
                    break;
                }
            }
        }
        std::fflush(stdout);
    }
    std::printf("%s (total %.1fs)\n", all_ok ? "ALL CRITERIA PASSED" : "CRITERIA FAILED", total);
    return all_ok ? 0 : 1;
}
