// SPDX-License-Identifier: Apache-2.0
//
// score — command-line front end for the spectral cutoff regeneration
// toolkit. Talks to the core exclusively through the public C API.

#include <score/score.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// plumbing

struct CliError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(score_status st, const char* what) {
    if (st != SCORE_OK) {
        throw CliError(std::string(what) + ": " + score_last_error());
    }
}

template <typename T, void (*FreeFn)(T*)>
struct Handle {
    T* ptr = nullptr;
    Handle() = default;
    explicit Handle(T* p) : ptr(p) {}
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    Handle(Handle&& o) noexcept : ptr(o.ptr) { o.ptr = nullptr; }
    Handle& operator=(Handle&& o) noexcept {
        if (this != &o) {
            reset();
            ptr = o.ptr;
            o.ptr = nullptr;
        }
        return *this;
    }
    ~Handle() { reset(); }
    void reset() {
        if (ptr) FreeFn(ptr);
        ptr = nullptr;
    }
    T** out() {
        reset();
        return &ptr;
    }
    T* get() const { return ptr; }
    explicit operator bool() const { return ptr != nullptr; }
};

using Image = Handle<score_image, score_image_free>;
using Profile = Handle<score_profile, score_profile_free>;
using Schedule = Handle<score_schedule, score_schedule_free>;
using Rng = Handle<score_rng, score_rng_free>;
using Predictor = Handle<score_predictor, score_predictor_free>;
using Manifest = Handle<score_manifest, score_manifest_free>;

uint64_t fnv1a(const uint8_t* data, size_t len, uint64_t h) {
    for (size_t i = 0; i < len; ++i) {
        h ^= data[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::string digest_files(const std::vector<fs::path>& paths) {
    uint64_t h = 1469598103934665603ull;
    for (const fs::path& p : paths) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw CliError("cannot read " + p.string());
        std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
        h = fnv1a(bytes.data(), bytes.size(), h);
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext == ".scr1" || ext == ".pgm" || ext == ".png";
}

std::vector<fs::path> list_images(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw CliError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

Image load_image(const fs::path& p) {
    Image img;
    check(score_image_load(p.string().c_str(), img.out()), "loading image");
    return img;
}

struct Corpus {
    std::vector<Image> images;
    std::vector<fs::path> paths;
    uint32_t height = 0, width = 0, channels = 0;
};

Corpus load_corpus(const std::vector<fs::path>& files) {
    if (files.empty()) throw CliError("no images found");
    Corpus c;
    for (const fs::path& p : files) {
        c.images.push_back(load_image(p));
        c.paths.push_back(p);
    }
    check(score_image_dims(c.images.front().get(), &c.height, &c.width, &c.channels),
          "image dims");
    return c;
}

std::vector<const score_image*> raw_handles(const Corpus& c) {
    std::vector<const score_image*> ptrs;
    ptrs.reserve(c.images.size());
    for (const Image& i : c.images) ptrs.push_back(i.get());
    return ptrs;
}

// Deterministic parallel map: fn(i) owns its output slot.
void parallel_for(size_t n, unsigned threads, const std::function<void(size_t)>& fn) {
    if (threads == 0) threads = std::thread::hardware_concurrency();
    if (threads <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < std::min<size_t>(threads, n); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed.load() && error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// shared option groups

struct CommonOpts {
    uint64_t seed = 0;
    int bins = 0;  // 0 -> derived from the grid
    std::string schedule_kind = "linear";
    int total_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    std::string config_path;
    unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_schedule = true) {
    cmd->add_option("--seed", o.seed, "RNG seed (default 0)");
    cmd->add_option("--bins", o.bins, "RAPSD bin count (default: ceil(min(H,W)/2))");
    cmd->add_option("--config", o.config_path, "JSON config file (flags take precedence)");
    cmd->add_option("--threads", o.threads, "worker threads (default: hardware)");
    if (with_schedule) {
        cmd->add_option("--schedule-kind", o.schedule_kind, "noise schedule: linear|cosine")
            ->check(CLI::IsMember({"linear", "cosine"}));
        cmd->add_option("--T", o.total_steps, "diffusion steps (default 1000)");
        cmd->add_option("--beta-start", o.beta_start, "linear schedule beta_1 (default 1e-4)");
        cmd->add_option("--beta-end", o.beta_end, "linear schedule beta_T (default 0.02)");
    }
}

// Config lookup: accepts both a literal dotted key and a nested object path.
const json* cfg_find(const json& cfg, const std::string& dotted) {
    if (cfg.contains(dotted)) return &cfg.at(dotted);
    const json* cur = &cfg;
    size_t start = 0;
    for (;;) {
        size_t dot = dotted.find('.', start);
        std::string part = dotted.substr(start, dot - start);
        if (!cur->is_object() || !cur->contains(part)) return nullptr;
        cur = &cur->at(part);
        if (dot == std::string::npos) return cur;
        start = dot + 1;
    }
}

// Flags beat config values beat defaults.
void apply_config(CLI::App* cmd, CommonOpts& o) {
    if (o.config_path.empty()) return;
    std::ifstream in(o.config_path);
    if (!in) throw CliError("cannot open config: " + o.config_path);
    json cfg = json::parse(in, nullptr, true, true);
    auto overlay = [&](const char* flag, const char* key, auto& target) {
        if (cmd->count(flag) > 0) return;
        if (const json* v = cfg_find(cfg, key)) {
            target = v->get<std::decay_t<decltype(target)>>();
        }
    };
    overlay("--seed", "seed", o.seed);
    overlay("--bins", "bins", o.bins);
    if (cmd->get_option_no_throw("--schedule-kind") != nullptr) {
        overlay("--schedule-kind", "schedule.kind", o.schedule_kind);
        overlay("--T", "schedule.T", o.total_steps);
        overlay("--beta-start", "schedule.beta_start", o.beta_start);
        overlay("--beta-end", "schedule.beta_end", o.beta_end);
    }
}

Schedule make_schedule(const CommonOpts& o) {
    Schedule s;
    check(score_schedule_new(o.schedule_kind.c_str(), o.total_steps, o.beta_start, o.beta_end,
                             s.out()),
          "building schedule");
    return s;
}

json schedule_json(const CommonOpts& o) {
    return json{{"kind", o.schedule_kind},
                {"T", o.total_steps},
                {"beta_start", o.beta_start},
                {"beta_end", o.beta_end}};
}

struct PredictorOpts {
    std::string kind = "analytic";
    std::string spectrum_csv;
    double amplitude = -1.0;  // < 0: not set
    double exponent = 2.0;
    double f0 = 0.05;
    std::string endpoint;
    int timeout_ms = 30000;
};

void add_predictor(CLI::App* cmd, PredictorOpts& o) {
    cmd->add_option("--predictor", o.kind, "noise predictor: analytic|external")
        ->check(CLI::IsMember({"analytic", "external"}));
    cmd->add_option("--spectrum", o.spectrum_csv,
                    "clean-spectrum CSV for the analytic predictor");
    cmd->add_option("--amplitude", o.amplitude,
                    "power-law spectrum amplitude (analytic, alternative to --spectrum)");
    cmd->add_option("--exponent", o.exponent, "power-law spectrum exponent (default 2)");
    cmd->add_option("--f0", o.f0, "power-law spectrum offset (default 0.05)");
    cmd->add_option("--endpoint", o.endpoint,
                    "external predictor endpoint: tcp:host:port or exec:cmd args");
    cmd->add_option("--timeout-ms", o.timeout_ms, "per-frame protocol timeout (default 30000)");
}

Profile predictor_spectrum(const PredictorOpts& o, int bins) {
    Profile p;
    if (!o.spectrum_csv.empty()) {
        check(score_profile_load_csv(o.spectrum_csv.c_str(), p.out()), "loading spectrum");
    } else if (o.amplitude >= 0.0) {
        check(score_profile_power_law(bins, o.amplitude, o.exponent, o.f0, p.out()),
              "building power-law spectrum");
    } else {
        throw CliError("analytic predictor needs --spectrum or --amplitude");
    }
    return p;
}

Predictor make_predictor(const PredictorOpts& o, const Schedule& s, int bins) {
    Predictor pred;
    if (o.kind == "analytic") {
        Profile spec = predictor_spectrum(o, bins);
        check(score_predictor_analytic(spec.get(), s.get(), pred.out()), "building predictor");
    } else {
        if (o.endpoint.empty()) throw CliError("external predictor needs --endpoint");
        check(score_predictor_external(o.endpoint.c_str(), o.timeout_ms, pred.out()),
              "connecting to external predictor");
    }
    return pred;
}

json predictor_json(const PredictorOpts& o) {
    json j{{"kind", o.kind}};
    if (!o.spectrum_csv.empty()) j["spectrum_csv"] = o.spectrum_csv;
    if (o.amplitude >= 0.0) {
        j["power_law"] = {{"amplitude", o.amplitude}, {"exponent", o.exponent}, {"f0", o.f0}};
    }
    if (!o.endpoint.empty()) {
        j["endpoint"] = o.endpoint;
        j["timeout_ms"] = o.timeout_ms;
    }
    return j;
}

// ---------------------------------------------------------------------------
// run records

struct RunRecord {
    std::string command;
    json config = json::object();
    json inputs = json::object();
    json outputs = json::array();
    json extra = json::object();
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    // Atomic write: the record appears fully formed or not at all.
    void write(const fs::path& path) const {
        json rec{{"command", command},
                 {"tool_version", score_version()},
                 {"config", config},
                 {"inputs", inputs},
                 {"outputs", outputs},
                 {"duration_seconds",
                  std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
        for (auto& [k, v] : extra.items()) rec[k] = v;
        fs::path tmp = path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp);
            if (!out) throw CliError("cannot write run record: " + tmp.string());
            out << rec.dump(2) << "\n";
        }
        fs::rename(tmp, path);
    }
};

fs::path record_path_for_dir(const fs::path& out_dir) { return out_dir / "run-record.json"; }
fs::path record_path_for_file(const fs::path& out_file) {
    fs::path p = out_file;
    p += ".run.json";
    return p;
}

std::string output_name(const char* stem, size_t index, const std::string& format) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s-%05zu.%s", stem, index, format.c_str());
    return buf;
}

void clamp_image(score_image* img) {
    uint32_t h, w, c;
    check(score_image_dims(img, &h, &w, &c), "dims");
    double* data = score_image_data(img);
    size_t n = static_cast<size_t>(h) * w * c;
    for (size_t i = 0; i < n; ++i) data[i] = std::clamp(data[i], -1.0, 1.0);
}

// Per-image failure bookkeeping shared by the batch commands.
struct FailureList {
    std::mutex mu;
    std::vector<std::string> items;
    void add(const std::string& name, const std::string& why) {
        std::lock_guard<std::mutex> lock(mu);
        items.push_back(name + ": " + why);
    }
    int finish(const char* what) {
        if (items.empty()) return 0;
        std::sort(items.begin(), items.end());
        std::cerr << "error: " << items.size() << " " << what << " failure(s):\n";
        for (const std::string& s : items) std::cerr << "  " << s << "\n";
        return 1;
    }
};

// ---------------------------------------------------------------------------
// subcommands

int cmd_spectrum(const CommonOpts& common, const std::string& input, const std::string& out_csv) {
    RunRecord rec;
    rec.command = "spectrum";

    fs::path in_path(input);
    fs::path out_path(out_csv);

    std::vector<fs::path> files;
    std::vector<fs::path> clean_files;
    bool have_roles = false;

    if (fs::is_directory(in_path)) {
        files = list_images(in_path);
    } else {
        Manifest m;
        check(score_manifest_load(in_path.string().c_str(), m.out()), "loading manifest");
        size_t n = 0;
        check(score_manifest_count(m.get(), &n), "manifest count");
        fs::path base = in_path.parent_path();
        for (size_t i = 0; i < n; ++i) {
            const char* role = nullptr;
            const char* rel = nullptr;
            check(score_manifest_entry(m.get(), i, &role, &rel), "manifest entry");
            fs::path p = base / rel;
            files.push_back(p);
            if (std::string(role) == "clean") clean_files.push_back(p);
        }
        have_roles = !clean_files.empty();
        if (!have_roles) {
            std::cerr << "warning: manifest labels no clean images; using the full corpus as "
                         "the reference spectrum\n";
        }
    }
    if (files.empty()) throw CliError("empty corpus: " + input);

    Corpus all = load_corpus(files);
    int bins = common.bins;
    if (bins <= 0) check(score_default_bins(all.height, all.width, &bins), "default bins");

    Profile full;
    check(score_corpus_profile(raw_handles(all).data(), all.images.size(), bins, full.out()),
          "corpus profile");

    if (have_roles) {
        Corpus clean = load_corpus(clean_files);
        Profile p0;
        check(score_corpus_profile(raw_handles(clean).data(), clean.images.size(), bins, p0.out()),
              "clean-subset profile");
        check(score_profile_save_csv(p0.get(), out_path.string().c_str()), "writing CSV");
        fs::path full_path = out_path;
        full_path.replace_extension(".full.csv");
        check(score_profile_save_csv(full.get(), full_path.string().c_str()), "writing CSV");
        std::cout << "wrote " << out_path.string() << " (clean subset, " << clean_files.size()
                  << " images)\n";
        std::cout << "wrote " << full_path.string() << " (full corpus, " << files.size()
                  << " images)\n";
        rec.outputs.push_back(out_path.string());
        rec.outputs.push_back(full_path.string());
    } else {
        if (!fs::is_directory(in_path)) {
            // manifest without clean labels already warned above
        } else {
            std::cerr << "note: no manifest; treating every image as reference\n";
        }
        check(score_profile_save_csv(full.get(), out_path.string().c_str()), "writing CSV");
        std::cout << "wrote " << out_path.string() << " (" << files.size() << " images)\n";
        rec.outputs.push_back(out_path.string());
    }

    rec.config = {{"input", input}, {"bins", bins}, {"seed", common.seed}};
    rec.inputs = {{"files", files.size()}, {"digest", digest_files(files)}};
    rec.write(record_path_for_file(out_path));
    return 0;
}

int cmd_solve_tprime(CLI::App* cmd, const CommonOpts& common, const std::string& p0_csv,
                     const std::string& pt_csv, bool pt_analytic, uint32_t height, uint32_t width,
                     double f_cutoff, const std::string& out_dir) {
    RunRecord rec;
    rec.command = "solve-tprime";

    Profile p0;
    check(score_profile_load_csv(p0_csv.c_str(), p0.out()), "loading P0");
    size_t p0_bins = 0;
    check(score_profile_bins(p0.get(), &p0_bins), "P0 bins");

    Profile pT;
    if (pt_analytic) {
        if (cmd->count("--height") == 0 || cmd->count("--width") == 0) {
            throw CliError("--pt-analytic needs --height and --width");
        }
        check(score_noise_profile_analytic(height, width, static_cast<int>(p0_bins), pT.out()),
              "analytic noise profile");
    } else if (!pt_csv.empty()) {
        check(score_profile_load_csv(pt_csv.c_str(), pT.out()), "loading PT");
    } else {
        throw CliError("need --pt CSV or --pt-analytic");
    }

    double last_freq = 0.0;
    check(score_profile_get(p0.get(), p0_bins - 1, &last_freq, nullptr, nullptr), "P0 freq");
    if (f_cutoff > last_freq) {
        std::cerr << "warning: f_cutoff " << f_cutoff << " lies beyond the last bin center "
                  << last_freq << "; using constant extrapolation\n";
    }

    Schedule s = make_schedule(common);
    int t_prime = 0;
    check(score_solve_tprime(s.get(), p0.get(), pT.get(), f_cutoff, &t_prime), "solving t'");

    std::cout << "t_prime = " << t_prime << "\n";
    double abar = 1.0;
    if (t_prime >= 1) {
        check(score_schedule_alpha_bar(s.get(), t_prime, &abar), "alpha_bar");
        double snr = 0.0;
        check(score_snr_value(s.get(), t_prime, p0.get(), pT.get(), f_cutoff, &snr), "snr");
        std::cout << "alpha_bar = " << abar << "\n";
        std::cout << "snr_at_cutoff = " << snr << "\n";
    } else {
        std::cout << "alpha_bar = 1 (no diffusion needed)\n";
    }

    rec.config = {{"p0", p0_csv},
                  {"pt", pt_analytic ? std::string("analytic") : pt_csv},
                  {"f_cutoff", f_cutoff},
                  {"schedule", schedule_json(common)}};
    rec.extra = {{"t_prime", t_prime}};
    fs::create_directories(out_dir);
    rec.write(fs::path(out_dir) / "solve-tprime.run.json");
    return 0;
}

int cmd_inject(const CommonOpts& common, const std::string& input, const std::string& out_dir,
               const std::string& noise, double sigma, double lambda, bool clamp) {
    RunRecord rec;
    rec.command = "inject";

    std::vector<fs::path> files = list_images(input);
    if (files.empty()) throw CliError("empty corpus: " + input);
    fs::create_directories(out_dir);

    FailureList failures;
    std::vector<std::string> written(files.size());
    parallel_for(files.size(), common.threads, [&](size_t i) {
        try {
            Image img = load_image(files[i]);
            Rng rng;
            check(score_rng_new(common.seed, i, rng.out()), "rng");
            Image noisy;
            if (noise == "gaussian") {
                check(score_inject_gaussian(img.get(), sigma, rng.get(), noisy.out()), "inject");
            } else if (noise == "poisson") {
                check(score_inject_poisson(img.get(), lambda, rng.get(), noisy.out()), "inject");
            } else {
                check(score_inject_mix(img.get(), lambda, sigma, rng.get(), noisy.out()),
                      "inject");
            }
            if (clamp) clamp_image(noisy.get());
            fs::path dest = fs::path(out_dir) / files[i].filename();
            check(score_image_save(noisy.get(), dest.string().c_str()), "saving");
            written[i] = dest.filename().string();
        } catch (const std::exception& e) {
            failures.add(files[i].string(), e.what());
        }
    });

    for (const std::string& name : written) {
        if (!name.empty()) rec.outputs.push_back(name);
    }
    rec.config = {{"noise", noise}, {"sigma", sigma},   {"lambda", lambda},
                  {"seed", common.seed}, {"clamp", clamp}, {"input", input}};
    rec.inputs = {{"files", files.size()}, {"digest", digest_files(files)}};
    rec.write(record_path_for_dir(out_dir));

    int failed = failures.finish("injection");
    if (failed == 0) std::cout << "injected " << files.size() << " image(s) into " << out_dir << "\n";
    return failed;
}

int cmd_mixture(const CommonOpts& common, const std::string& input, const std::string& out_dir,
                double noisy_fraction, const std::string& noise, double sigma, double lambda) {
    RunRecord rec;
    rec.command = "mixture";

    std::vector<fs::path> files = list_images(input);
    Manifest m;
    check(score_build_mixture(input.c_str(), out_dir.c_str(), noisy_fraction, noise.c_str(),
                              sigma, lambda, common.seed, m.out()),
          "building mixture");
    size_t total = 0;
    check(score_manifest_count(m.get(), &total), "manifest count");
    size_t noisy = 0;
    for (size_t i = 0; i < total; ++i) {
        const char* role = nullptr;
        check(score_manifest_entry(m.get(), i, &role, nullptr), "manifest entry");
        if (std::string(role) == "noisy") ++noisy;
    }
    std::cout << "mixture: " << total << " images, " << noisy << " noisy, " << (total - noisy)
              << " clean; manifest at " << (fs::path(out_dir) / "manifest.tsv").string() << "\n";

    rec.config = {{"input", input},   {"noisy_fraction", noisy_fraction}, {"noise", noise},
                  {"sigma", sigma},   {"lambda", lambda},                 {"seed", common.seed}};
    rec.inputs = {{"files", files.size()}, {"digest", digest_files(files)}};
    rec.extra = {{"noisy", noisy}, {"clean", total - noisy}};
    rec.write(record_path_for_dir(out_dir));
    return 0;
}

int cmd_sample(const CommonOpts& common, const PredictorOpts& pred_opts, size_t n,
               uint32_t height, uint32_t width, uint32_t channels, bool clamp,
               const std::string& format, const std::string& out_dir) {
    RunRecord rec;
    rec.command = "sample";

    int bins = common.bins;
    if (bins <= 0) check(score_default_bins(height, width, &bins), "default bins");
    Schedule s = make_schedule(common);
    Predictor pred = make_predictor(pred_opts, s, bins);
    fs::create_directories(out_dir);

    unsigned threads = pred_opts.kind == "external" ? 1 : common.threads;
    FailureList failures;
    parallel_for(n, threads, [&](size_t i) {
        std::string name = output_name("sample", i, format);
        try {
            Rng rng;
            check(score_rng_new(common.seed, i, rng.out()), "rng");
            Image img;
            check(score_sample(pred.get(), s.get(), height, width, channels, rng.get(),
                               clamp ? 1 : 0, img.out()),
                  "sampling");
            fs::path dest = fs::path(out_dir) / name;
            check(score_image_save(img.get(), dest.string().c_str()), "saving");
        } catch (const std::exception& e) {
            failures.add(name, e.what());
        }
    });

    for (size_t i = 0; i < n; ++i) rec.outputs.push_back(output_name("sample", i, format));
    rec.config = {{"n", n},
                  {"height", height},
                  {"width", width},
                  {"channels", channels},
                  {"seed", common.seed},
                  {"clamp", clamp},
                  {"format", format},
                  {"schedule", schedule_json(common)},
                  {"predictor", predictor_json(pred_opts)}};
    rec.write(record_path_for_dir(out_dir));

    int failed = failures.finish("sampling");
    if (failed == 0) std::cout << "wrote " << n << " sample(s) to " << out_dir << "\n";
    return failed;
}

int cmd_sdedit(const CommonOpts& common, const PredictorOpts& pred_opts, const std::string& input,
               int t_prime, bool clamp, const std::string& out_dir) {
    RunRecord rec;
    rec.command = "sdedit";

    std::vector<fs::path> files = list_images(input);
    if (files.empty()) throw CliError("empty corpus: " + input);
    Corpus corpus = load_corpus(files);

    int bins = common.bins;
    if (bins <= 0) check(score_default_bins(corpus.height, corpus.width, &bins), "default bins");
    Schedule s = make_schedule(common);
    Predictor pred = make_predictor(pred_opts, s, bins);
    fs::create_directories(out_dir);

    unsigned threads = pred_opts.kind == "external" ? 1 : common.threads;
    FailureList failures;
    parallel_for(files.size(), threads, [&](size_t i) {
        try {
            Rng rng;
            check(score_rng_new(common.seed, i, rng.out()), "rng");
            Image out;
            check(score_sdedit(corpus.images[i].get(), t_prime, pred.get(), s.get(), rng.get(),
                               clamp ? 1 : 0, out.out()),
                  "sdedit");
            fs::path dest = fs::path(out_dir) / files[i].filename();
            check(score_image_save(out.get(), dest.string().c_str()), "saving");
        } catch (const std::exception& e) {
            failures.add(files[i].string(), e.what());
        }
    });

    for (const fs::path& f : files) rec.outputs.push_back(f.filename().string());
    rec.config = {{"input", input},
                  {"t_prime", t_prime},
                  {"seed", common.seed},
                  {"clamp", clamp},
                  {"schedule", schedule_json(common)},
                  {"predictor", predictor_json(pred_opts)}};
    rec.inputs = {{"files", files.size()}, {"digest", digest_files(files)}};
    rec.write(record_path_for_dir(out_dir));

    int failed = failures.finish("sdedit");
    if (failed == 0) std::cout << "edited " << files.size() << " image(s) into " << out_dir << "\n";
    return failed;
}

int cmd_score(CLI::App* cmd, const CommonOpts& common, const PredictorOpts& pred_opts,
              const std::string& input, size_t generate_n, uint32_t height, uint32_t width,
              uint32_t channels, double f_cutoff, int t_prime_flag, const std::string& p0_csv,
              const std::string& pt_csv, bool clamp, const std::string& format,
              const std::string& out_dir) {
    RunRecord rec;
    rec.command = "score";

    bool generating = cmd->count("--generate") > 0;
    std::vector<fs::path> files;
    Corpus corpus;
    if (!generating) {
        if (input.empty()) throw CliError("need --input DIR or --generate N");
        files = list_images(input);
        if (files.empty()) throw CliError("empty corpus: " + input);
        corpus = load_corpus(files);
        height = corpus.height;
        width = corpus.width;
        channels = corpus.channels;
    } else if (cmd->count("--height") == 0 || cmd->count("--width") == 0) {
        throw CliError("--generate needs --height and --width");
    }

    int bins = common.bins;
    if (bins <= 0) check(score_default_bins(height, width, &bins), "default bins");
    Schedule s = make_schedule(common);
    Predictor pred = make_predictor(pred_opts, s, bins);

    bool have_override = cmd->count("--t-prime") > 0;
    Profile p0, pT;
    if (!have_override) {
        if (p0_csv.empty()) throw CliError("need --p0 CSV (or an explicit --t-prime)");
        check(score_profile_load_csv(p0_csv.c_str(), p0.out()), "loading P0");
        if (!pt_csv.empty()) {
            check(score_profile_load_csv(pt_csv.c_str(), pT.out()), "loading PT");
        } else {
            // Unit white noise is flat at 1 per mode under the unitary DFT,
            // independent of the grid.
            size_t nb = 0;
            check(score_profile_bins(p0.get(), &nb), "P0 bins");
            check(score_profile_flat(static_cast<int>(nb), 1.0, pT.out()),
                  "analytic noise profile");
        }
    }

    fs::create_directories(out_dir);
    size_t n = generating ? generate_n : files.size();
    unsigned threads = pred_opts.kind == "external" ? 1 : common.threads;

    FailureList failures;
    std::atomic<int> t_prime_used{-1};
    parallel_for(n, threads, [&](size_t i) {
        std::string name = generating ? output_name("score", i, format)
                                      : files[i].filename().string();
        try {
            Rng rng;
            check(score_rng_new(common.seed, i, rng.out()), "rng");
            Image source;
            const score_image* src = nullptr;
            if (generating) {
                check(score_sample(pred.get(), s.get(), height, width, channels, rng.get(), 0,
                                   source.out()),
                      "sampling");
                src = source.get();
            } else {
                src = corpus.images[i].get();
            }
            Image out;
            int used = 0;
            check(score_regenerate(src, f_cutoff, have_override ? t_prime_flag : -1, pred.get(),
                                   s.get(), p0.get(), pT.get(), rng.get(), clamp ? 1 : 0, &used,
                                   out.out()),
                  "score_regenerate");
            t_prime_used.store(used);
            fs::path dest = fs::path(out_dir) / name;
            check(score_image_save(out.get(), dest.string().c_str()), "saving");
        } catch (const std::exception& e) {
            failures.add(name, e.what());
        }
    });

    int used = t_prime_used.load();
    if (used == 0) {
        std::cerr << "warning: derived t' = 0; the cutoff image was returned without "
                     "regeneration\n";
    }
    if (used >= 0) std::cout << "t_prime = " << used << "\n";

    for (size_t i = 0; i < n; ++i) {
        rec.outputs.push_back(generating ? output_name("score", i, format)
                                         : files[i].filename().string());
    }
    rec.config = {{"f_cutoff", f_cutoff},
                  {"seed", common.seed},
                  {"clamp", clamp},
                  {"format", format},
                  {"schedule", schedule_json(common)},
                  {"predictor", predictor_json(pred_opts)}};
    if (have_override) rec.config["t_prime_override"] = t_prime_flag;
    if (!p0_csv.empty()) {
        rec.config["p0"] = p0_csv;
        rec.config["p0_digest"] = digest_files({p0_csv});
    }
    if (!pt_csv.empty()) {
        rec.config["pt"] = pt_csv;
        rec.config["pt_digest"] = digest_files({pt_csv});
    }
    if (generating) {
        rec.config["generate"] = generate_n;
        rec.config["height"] = height;
        rec.config["width"] = width;
        rec.config["channels"] = channels;
    } else {
        rec.config["input"] = input;
        rec.inputs = {{"files", files.size()}, {"digest", digest_files(files)}};
    }
    rec.extra = {{"t_prime", used}};
    rec.write(record_path_for_dir(out_dir));

    int failed = failures.finish("score");
    if (failed == 0) std::cout << "wrote " << n << " image(s) to " << out_dir << "\n";
    return failed;
}

int cmd_eval(const CommonOpts& common, const std::string& dir_a, const std::string& dir_b,
             const std::string& b_profile_csv, bool force_psnr, const std::string& out_dir) {
    RunRecord rec;
    rec.command = "eval";

    std::vector<fs::path> files_a = list_images(dir_a);
    if (files_a.empty()) throw CliError("empty corpus: " + dir_a);
    Corpus a = load_corpus(files_a);

    Profile profile_b;
    std::vector<fs::path> files_b;
    size_t n_b = 0;
    int bins = common.bins;
    if (!b_profile_csv.empty()) {
        check(score_profile_load_csv(b_profile_csv.c_str(), profile_b.out()), "loading profile");
        size_t nb = 0;
        check(score_profile_bins(profile_b.get(), &nb), "profile bins");
        bins = static_cast<int>(nb);
    } else {
        if (dir_b.empty()) throw CliError("need --b DIR or --b-profile CSV");
        files_b = list_images(dir_b);
        if (files_b.empty()) throw CliError("empty corpus: " + dir_b);
        n_b = files_b.size();
    }
    if (bins <= 0) check(score_default_bins(a.height, a.width, &bins), "default bins");

    Profile profile_a;
    check(score_corpus_profile(raw_handles(a).data(), a.images.size(), bins, profile_a.out()),
          "corpus profile A");
    if (!files_b.empty()) {
        Corpus b = load_corpus(files_b);
        check(score_corpus_profile(raw_handles(b).data(), b.images.size(), bins, profile_b.out()),
              "corpus profile B");
    }

    double distance = 0.0;
    check(score_log_spectral_distance(profile_a.get(), profile_b.get(), 0.0, &distance),
          "spectral distance");
    size_t nbins = 0;
    check(score_profile_bins(profile_a.get(), &nbins), "bins");
    std::vector<double> gaps(nbins);
    check(score_spectral_gap(profile_a.get(), profile_b.get(), 0.0, gaps.data(), gaps.size()),
          "spectral gaps");

    std::cout << "log_spectral_distance = " << distance << "\n";
    std::cout << "bins = " << nbins << ", samples_a = " << a.images.size()
              << ", samples_b = " << (n_b ? std::to_string(n_b) : std::string("profile")) << "\n";
    std::printf("%12s %14s\n", "freq", "ln Pa - ln Pb");
    json bins_json = json::array();
    for (size_t i = 0; i < nbins; ++i) {
        double f = 0.0, pw = 0.0;
        check(score_profile_get(profile_a.get(), i, &f, &pw, nullptr), "profile get");
        std::printf("%12.6f %14.6g\n", f, gaps[i]);
        bins_json.push_back({{"freq", f}, {"log_gap", gaps[i]}});
    }

    // PSNR over filename-paired images when both sides are directories.
    json psnr_json;
    if (!files_b.empty()) {
        std::set<std::string> names_b;
        for (const fs::path& p : files_b) names_b.insert(p.filename().string());
        std::vector<std::pair<fs::path, fs::path>> pairs;
        for (const fs::path& p : files_a) {
            if (names_b.count(p.filename().string())) {
                pairs.emplace_back(p, fs::path(dir_b) / p.filename());
            }
        }
        if (force_psnr && pairs.empty()) {
            throw CliError("paired PSNR requested but the directories share no filenames");
        }
        if (!pairs.empty()) {
            double sum = 0.0;
            size_t finite = 0, infinite = 0;
            for (const auto& [pa, pb] : pairs) {
                Image ia = load_image(pa), ib = load_image(pb);
                double db = 0.0;
                int inf = 0;
                check(score_psnr(ia.get(), ib.get(), &db, &inf), "psnr");
                if (inf) {
                    ++infinite;
                } else {
                    sum += db;
                    ++finite;
                }
            }
            if (infinite == pairs.size()) {
                std::cout << "psnr_db = inf (all " << pairs.size() << " pairs identical)\n";
                psnr_json = {{"pairs", pairs.size()}, {"infinite_pairs", infinite}};
            } else {
                double mean = sum / static_cast<double>(finite);
                std::cout << "psnr_db = " << mean << " (mean over " << finite << " pair(s), "
                          << infinite << " identical)\n";
                psnr_json = {{"pairs", pairs.size()},
                             {"mean_db", mean},
                             {"infinite_pairs", infinite}};
            }
        }
    }

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        json report{{"log_spectral_distance", distance},
                    {"power_floor", 1e-12},
                    {"samples_a", a.images.size()},
                    {"bins", bins_json}};
        if (n_b) report["samples_b"] = n_b;
        if (!psnr_json.is_null()) report["psnr"] = psnr_json;
        fs::path report_path = fs::path(out_dir) / "eval-report.json";
        fs::path tmp = report_path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp);
            out << report.dump(2) << "\n";
        }
        fs::rename(tmp, report_path);
        std::cout << "wrote " << report_path.string() << "\n";
        rec.outputs.push_back("eval-report.json");
        rec.config = {{"a", dir_a},
                      {"b", dir_b.empty() ? b_profile_csv : dir_b},
                      {"bins", bins},
                      {"power_floor", 1e-12}};
        rec.inputs = {{"files_a", files_a.size()}, {"digest_a", digest_files(files_a)}};
        rec.extra = {{"log_spectral_distance", distance}};
        rec.write(record_path_for_dir(out_dir));
    }
    return 0;
}

int cmd_gen_synthetic(const CommonOpts& common, size_t n, uint32_t height, uint32_t width,
                      double amplitude, double exponent, double f0, const std::string& format,
                      const std::string& out_dir) {
    RunRecord rec;
    rec.command = "gen-synthetic";

    int bins = common.bins;
    if (bins <= 0) check(score_default_bins(height, width, &bins), "default bins");
    Profile profile;
    check(score_profile_power_law(bins, amplitude, exponent, f0, profile.out()),
          "building profile");
    fs::create_directories(out_dir);
    fs::path profile_path = fs::path(out_dir) / "profile.csv";
    check(score_profile_save_csv(profile.get(), profile_path.string().c_str()),
          "writing profile");

    FailureList failures;
    parallel_for(n, common.threads, [&](size_t i) {
        std::string name = output_name("field", i, format);
        try {
            Rng rng;
            check(score_rng_new(common.seed, i, rng.out()), "rng");
            Image img;
            check(score_gaussian_field(profile.get(), height, width, rng.get(), img.out()),
                  "gaussian field");
            fs::path dest = fs::path(out_dir) / name;
            check(score_image_save(img.get(), dest.string().c_str()), "saving");
        } catch (const std::exception& e) {
            failures.add(name, e.what());
        }
    });

    rec.outputs.push_back("profile.csv");
    for (size_t i = 0; i < n; ++i) rec.outputs.push_back(output_name("field", i, format));
    rec.config = {{"n", n},
                  {"height", height},
                  {"width", width},
                  {"amplitude", amplitude},
                  {"exponent", exponent},
                  {"f0", f0},
                  {"bins", bins},
                  {"seed", common.seed},
                  {"format", format}};
    rec.write(record_path_for_dir(out_dir));

    int failed = failures.finish("gen-synthetic");
    if (failed == 0) {
        std::cout << "wrote " << n << " field(s) and profile.csv to " << out_dir << "\n";
    }
    return failed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral cutoff regeneration toolkit"};
    app.set_version_flag("--version", score_version());
    app.require_subcommand(1);

    // ---- spectrum ----
    CommonOpts spectrum_common;
    std::string spectrum_input, spectrum_out;
    CLI::App* spectrum = app.add_subcommand(
        "spectrum", "compute the corpus RAPSD profile and write it as CSV");
    add_common(spectrum, spectrum_common, /*with_schedule=*/false);
    spectrum->add_option("--input", spectrum_input, "image directory or manifest.tsv")->required();
    spectrum->add_option("--out", spectrum_out, "output CSV path")->required();

    // ---- solve-tprime ----
    CommonOpts solve_common;
    std::string solve_p0, solve_pt, solve_out = ".";
    bool solve_pt_analytic = false;
    uint32_t solve_h = 0, solve_w = 0;
    double solve_fc = 0.3;
    CLI::App* solve = app.add_subcommand(
        "solve-tprime", "derive the SDEdit timestep from the SNR crossover at f_cutoff");
    add_common(solve, solve_common);
    solve->add_option("--p0", solve_p0, "clean-data spectrum CSV")->required();
    CLI::Option* solve_pt_opt = solve->add_option("--pt", solve_pt, "noise spectrum CSV");
    solve->add_flag("--pt-analytic", solve_pt_analytic, "use the analytic flat noise spectrum")
        ->excludes(solve_pt_opt);
    solve->add_option("--height", solve_h, "grid height (for --pt-analytic)");
    solve->add_option("--width", solve_w, "grid width (for --pt-analytic)");
    solve->add_option("--f-cutoff", solve_fc, "cutoff frequency in cycles/pixel")->required();
    solve->add_option("--out", solve_out, "directory for the run record (default .)");

    // ---- inject ----
    CommonOpts inject_common;
    std::string inject_input, inject_out, inject_noise = "gaussian";
    double inject_sigma = 25.0, inject_lambda = 30.0;
    bool inject_clamp = false;
    CLI::App* inject = app.add_subcommand("inject", "add synthetic noise to every image");
    add_common(inject, inject_common, /*with_schedule=*/false);
    inject->add_option("--input", inject_input, "image directory")->required();
    inject->add_option("--out", inject_out, "output directory")->required();
    inject->add_option("--noise", inject_noise, "gaussian|poisson|mix")
        ->check(CLI::IsMember({"gaussian", "poisson", "mix"}));
    inject->add_option("--sigma", inject_sigma, "gaussian std in byte scale (default 25)");
    inject->add_option("--lambda", inject_lambda, "poisson rate (default 30)");
    inject->add_flag("--clamp", inject_clamp, "clamp results to [-1,1] for byte export");

    // ---- mixture ----
    CommonOpts mixture_common;
    std::string mixture_input, mixture_out, mixture_noise = "gaussian";
    double mixture_fraction = 0.9, mixture_sigma = 25.0, mixture_lambda = 30.0;
    CLI::App* mixture =
        app.add_subcommand("mixture", "build a clean/noisy training mixture with a manifest");
    add_common(mixture, mixture_common, /*with_schedule=*/false);
    mixture->add_option("--input", mixture_input, "clean image directory")->required();
    mixture->add_option("--out", mixture_out, "output directory")->required();
    mixture->add_option("--noisy-fraction", mixture_fraction,
                        "fraction assigned the noisy role (default 0.9)");
    mixture->add_option("--noise", mixture_noise, "gaussian|poisson|mix")
        ->check(CLI::IsMember({"gaussian", "poisson", "mix"}));
    mixture->add_option("--sigma", mixture_sigma, "gaussian std in byte scale");
    mixture->add_option("--lambda", mixture_lambda, "poisson rate");

    // ---- sample ----
    CommonOpts sample_common;
    PredictorOpts sample_pred;
    size_t sample_n = 1;
    uint32_t sample_h = 32, sample_w = 32, sample_c = 1;
    bool sample_clamp = false;
    std::string sample_format = "scr1", sample_out;
    CLI::App* sample = app.add_subcommand("sample", "draw images from the reverse chain");
    add_common(sample, sample_common);
    add_predictor(sample, sample_pred);
    sample->add_option("--n", sample_n, "number of samples")->required();
    sample->add_option("--height", sample_h, "image height (default 32)");
    sample->add_option("--width", sample_w, "image width (default 32)");
    sample->add_option("--channels", sample_c, "1 or 3 (default 1)");
    sample->add_flag("--clamp", sample_clamp, "clamp outputs to [-1,1]");
    sample->add_option("--format", sample_format, "scr1|pgm|png (default scr1)")
        ->check(CLI::IsMember({"scr1", "pgm", "png"}));
    sample->add_option("--out", sample_out, "output directory")->required();

    // ---- sdedit ----
    CommonOpts sdedit_common;
    PredictorOpts sdedit_pred;
    std::string sdedit_input, sdedit_out;
    int sdedit_tprime = 0;
    bool sdedit_clamp = false;
    CLI::App* sdedit =
        app.add_subcommand("sdedit", "re-diffuse to t' and regenerate with the reverse chain");
    add_common(sdedit, sdedit_common);
    add_predictor(sdedit, sdedit_pred);
    sdedit->add_option("--input", sdedit_input, "image directory")->required();
    sdedit->add_option("--t-prime", sdedit_tprime, "re-diffusion timestep")->required();
    sdedit->add_flag("--clamp", sdedit_clamp, "clamp outputs to [-1,1]");
    sdedit->add_option("--out", sdedit_out, "output directory")->required();

    // ---- score ----
    CommonOpts score_common;
    PredictorOpts score_pred;
    std::string score_input, score_p0, score_pt, score_format = "scr1", score_out;
    size_t score_generate = 0;
    uint32_t score_h = 32, score_w = 32, score_c = 1;
    double score_fc = 0.3;
    int score_tprime = -1;
    bool score_clamp = false;
    CLI::App* score_cmd = app.add_subcommand(
        "score", "spectral cutoff regeneration: cutoff, re-diffuse to the derived t', reverse");
    add_common(score_cmd, score_common);
    add_predictor(score_cmd, score_pred);
    CLI::Option* score_input_opt =
        score_cmd->add_option("--input", score_input, "image directory to regenerate");
    score_cmd->add_option("--generate", score_generate, "sample N fresh images, then regenerate")
        ->excludes(score_input_opt);
    score_cmd->add_option("--height", score_h, "height for --generate");
    score_cmd->add_option("--width", score_w, "width for --generate");
    score_cmd->add_option("--channels", score_c, "channels for --generate");
    score_cmd->add_option("--f-cutoff", score_fc, "cutoff frequency in cycles/pixel")->required();
    score_cmd->add_option("--t-prime", score_tprime, "override the derived timestep");
    score_cmd->add_option("--p0", score_p0, "clean-data spectrum CSV (for deriving t')");
    score_cmd->add_option("--pt", score_pt, "noise spectrum CSV (default: analytic flat)");
    score_cmd->add_flag("--clamp", score_clamp, "clamp outputs to [-1,1]");
    score_cmd->add_option("--format", score_format, "scr1|pgm|png for --generate outputs")
        ->check(CLI::IsMember({"scr1", "pgm", "png"}));
    score_cmd->add_option("--out", score_out, "output directory")->required();

    // ---- eval ----
    CommonOpts eval_common;
    std::string eval_a, eval_b, eval_b_profile, eval_out;
    bool eval_psnr = false;
    CLI::App* eval = app.add_subcommand(
        "eval", "log-spectral distance between two corpora (or a corpus and a profile)");
    add_common(eval, eval_common, /*with_schedule=*/false);
    eval->add_option("--a", eval_a, "first image directory")->required();
    CLI::Option* eval_b_opt = eval->add_option("--b", eval_b, "second image directory");
    eval->add_option("--b-profile", eval_b_profile, "reference spectrum CSV instead of --b")
        ->excludes(eval_b_opt);
    eval->add_flag("--psnr", eval_psnr, "require filename-paired PSNR");
    eval->add_option("--out", eval_out, "directory for eval-report.json");

    // ---- gen-synthetic ----
    CommonOpts gen_common;
    size_t gen_n = 1;
    uint32_t gen_h = 32, gen_w = 32;
    double gen_amp = 0.01, gen_exp = 2.0, gen_f0 = 0.05;
    std::string gen_format = "scr1", gen_out;
    CLI::App* gen = app.add_subcommand(
        "gen-synthetic", "generate a Gaussian-field corpus with a power-law spectrum");
    add_common(gen, gen_common, /*with_schedule=*/false);
    gen->add_option("--n", gen_n, "number of fields")->required();
    gen->add_option("--height", gen_h, "field height (default 32)");
    gen->add_option("--width", gen_w, "field width (default 32)");
    gen->add_option("--amplitude", gen_amp, "power-law amplitude (default 0.01)");
    gen->add_option("--exponent", gen_exp, "power-law exponent (default 2)");
    gen->add_option("--f0", gen_f0, "power-law offset (default 0.05)");
    gen->add_option("--format", gen_format, "scr1|pgm|png (default scr1)")
        ->check(CLI::IsMember({"scr1", "pgm", "png"}));
    gen->add_option("--out", gen_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (spectrum->parsed()) {
            apply_config(spectrum, spectrum_common);
            return cmd_spectrum(spectrum_common, spectrum_input, spectrum_out);
        }
        if (solve->parsed()) {
            apply_config(solve, solve_common);
            return cmd_solve_tprime(solve, solve_common, solve_p0, solve_pt, solve_pt_analytic,
                                    solve_h, solve_w, solve_fc, solve_out);
        }
        if (inject->parsed()) {
            apply_config(inject, inject_common);
            return cmd_inject(inject_common, inject_input, inject_out, inject_noise, inject_sigma,
                              inject_lambda, inject_clamp);
        }
        if (mixture->parsed()) {
            apply_config(mixture, mixture_common);
            return cmd_mixture(mixture_common, mixture_input, mixture_out, mixture_fraction,
                               mixture_noise, mixture_sigma, mixture_lambda);
        }
        if (sample->parsed()) {
            apply_config(sample, sample_common);
            return cmd_sample(sample_common, sample_pred, sample_n, sample_h, sample_w, sample_c,
                              sample_clamp, sample_format, sample_out);
        }
        if (sdedit->parsed()) {
            apply_config(sdedit, sdedit_common);
            return cmd_sdedit(sdedit_common, sdedit_pred, sdedit_input, sdedit_tprime,
                              sdedit_clamp, sdedit_out);
        }
        if (score_cmd->parsed()) {
            apply_config(score_cmd, score_common);
            return cmd_score(score_cmd, score_common, score_pred, score_input, score_generate,
                             score_h, score_w, score_c, score_fc, score_tprime, score_p0,
                             score_pt, score_clamp, score_format, score_out);
        }
        if (eval->parsed()) {
            apply_config(eval, eval_common);
            return cmd_eval(eval_common, eval_a, eval_b, eval_b_profile, eval_psnr, eval_out);
        }
        if (gen->parsed()) {
            apply_config(gen, gen_common);
            return cmd_gen_synthetic(gen_common, gen_n, gen_h, gen_w, gen_amp, gen_exp, gen_f0,
                                     gen_format, gen_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
