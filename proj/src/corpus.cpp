// SPDX-License-Identifier: Apache-2.0

#include "corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "error.hpp"
#include "image_io.hpp"
#include "parallel.hpp"

namespace score {

ImageGrid inject_gaussian(const ImageGrid& x, double sigma_byte, RngStream& rng) {
    require_finite(x, "inject_gaussian");
    if (sigma_byte < 0.0) {
        fail(ErrorCode::invalid_argument, "inject_gaussian: sigma must be >= 0");
    }
    if (sigma_byte == 0.0) return x;
    double sigma_model = byte_scale_to_model(sigma_byte);
    ImageGrid out = x;
    for (double& v : out.data) v += sigma_model * rng.next_normal();
    return out;
}

ImageGrid inject_poisson(const ImageGrid& x, double lambda, RngStream& rng) {
    require_finite(x, "inject_poisson");
    if (!(lambda > 0.0)) {
        fail(ErrorCode::invalid_argument, "inject_poisson: lambda must be > 0");
    }
    ImageGrid out = x;
    for (double& v : out.data) {
        double noise_byte = static_cast<double>(rng.next_poisson(lambda)) - lambda;
        v += byte_scale_to_model(noise_byte);
    }
    return out;
}

ImageGrid inject_mix(const ImageGrid& x, double lambda, double sigma_byte, RngStream& rng) {
    RngStream poisson_stream = rng.substream(0);
    RngStream gaussian_stream = rng.substream(1);
    return inject_gaussian(inject_poisson(x, lambda, poisson_stream), sigma_byte,
                           gaussian_stream);
}

NoiseKind noise_kind_from_string(const std::string& name) {
    if (name == "gaussian") return NoiseKind::gaussian;
    if (name == "poisson") return NoiseKind::poisson;
    if (name == "mix") return NoiseKind::mix;
    fail(ErrorCode::invalid_argument, "unknown noise kind: " + name);
}

std::string to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::gaussian: return "gaussian";
        case NoiseKind::poisson: return "poisson";
        case NoiseKind::mix: return "mix";
    }
    return "gaussian";
}

ImageGrid inject(const ImageGrid& x, NoiseKind kind, const NoiseParams& params, RngStream& rng) {
    switch (kind) {
        case NoiseKind::gaussian: return inject_gaussian(x, params.sigma_byte, rng);
        case NoiseKind::poisson: return inject_poisson(x, params.lambda, rng);
        case NoiseKind::mix: return inject_mix(x, params.lambda, params.sigma_byte, rng);
    }
    fail(ErrorCode::invalid_argument, "inject: bad noise kind");
}

size_t CorpusManifest::count_role(const std::string& role) const {
    return static_cast<size_t>(
        std::count_if(entries.begin(), entries.end(),
                      [&](const ManifestEntry& e) { return e.role == role; }));
}

void CorpusManifest::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io_error, "cannot open for writing: " + path.string());
    out << "height=" << height << "\n";
    out << "width=" << width << "\n";
    out << "channels=" << channels << "\n";
    out << "seed=" << seed << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", noisy_fraction);
    out << "noisy_fraction=" << buf << "\n";
    out << "noise_kind=" << noise_kind << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", params.sigma_byte);
    out << "sigma_byte=" << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", params.lambda);
    out << "lambda=" << buf << "\n";
    for (const ManifestEntry& e : entries) {
        out << e.role << "\t" << e.path << "\n";
    }
    if (!out) fail(ErrorCode::io_error, "write failed: " + path.string());
}

CorpusManifest CorpusManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_error, "cannot open: " + path.string());
    CorpusManifest m;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab != std::string::npos) {
            ManifestEntry e;
            e.role = line.substr(0, tab);
            e.path = line.substr(tab + 1);
            if (e.role != "clean" && e.role != "noisy") {
                fail(ErrorCode::io_error, "manifest: unknown role '" + e.role + "'");
            }
            m.entries.push_back(std::move(e));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(ErrorCode::io_error, "manifest: bad line '" + line + "'");
        }
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        try {
            if (key == "height") m.height = std::stoi(val);
            else if (key == "width") m.width = std::stoi(val);
            else if (key == "channels") m.channels = std::stoi(val);
            else if (key == "seed") m.seed = std::stoull(val);
            else if (key == "noisy_fraction") m.noisy_fraction = std::stod(val);
            else if (key == "noise_kind") m.noise_kind = val;
            else if (key == "sigma_byte") m.params.sigma_byte = std::stod(val);
            else if (key == "lambda") m.params.lambda = std::stod(val);
            else fail(ErrorCode::io_error, "manifest: unknown key '" + key + "'");
        } catch (const std::logic_error&) {
            fail(ErrorCode::io_error, "manifest: bad value for '" + key + "'");
        }
    }
    return m;
}

CorpusManifest build_mixture(const std::filesystem::path& clean_dir,
                             const std::filesystem::path& out_dir, double noisy_fraction,
                             NoiseKind kind, const NoiseParams& params, uint64_t seed) {
    if (!(noisy_fraction >= 0.0 && noisy_fraction <= 1.0)) {
        fail(ErrorCode::invalid_argument, "build_mixture: noisy_fraction outside [0,1]");
    }
    std::vector<std::filesystem::path> files = list_images(clean_dir);
    if (files.empty()) {
        fail(ErrorCode::invalid_argument, "build_mixture: no images in " + clean_dir.string());
    }

    std::vector<ImageGrid> images(files.size());
    std::vector<std::string> errors;
    for (size_t i = 0; i < files.size(); ++i) {
        try {
            images[i] = load_image(files[i]);
        } catch (const Error& e) {
            errors.push_back(files[i].string() + ": " + e.what());
        }
    }
    if (!errors.empty()) {
        std::string msg = "build_mixture: " + std::to_string(errors.size()) + " unreadable file(s):";
        for (const std::string& e : errors) msg += "\n  " + e;
        fail(ErrorCode::io_error, msg);
    }
    for (size_t i = 1; i < images.size(); ++i) {
        if (!images[i].same_shape(images[0])) {
            fail(ErrorCode::invalid_argument,
                 "build_mixture: dimension mismatch at " + files[i].string());
        }
    }

    size_t n = files.size();
    size_t n_noisy = static_cast<size_t>(std::llround(noisy_fraction * static_cast<double>(n)));

    // Seeded Fisher-Yates; the first n_noisy slots of the shuffled order
    // take the noisy role. Exact counts, reproducible for a given seed.
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    RngStream shuffle_rng(seed, 0xC0 /* mixture assignment stream */);
    for (size_t i = n; i > 1; --i) {
        size_t j = shuffle_rng.next_below(i);
        std::swap(order[i - 1], order[j]);
    }
    std::vector<bool> noisy(n, false);
    for (size_t i = 0; i < n_noisy; ++i) noisy[order[i]] = true;

    std::filesystem::create_directories(out_dir);

    CorpusManifest manifest;
    manifest.height = images[0].height;
    manifest.width = images[0].width;
    manifest.channels = images[0].channels;
    manifest.seed = seed;
    manifest.noisy_fraction = noisy_fraction;
    manifest.noise_kind = to_string(kind);
    manifest.params = params;
    manifest.entries.resize(n);

    std::vector<ImageGrid> outputs(n);
    parallel_for(n, [&](size_t i) {
        if (noisy[i]) {
            // Stream id from (seed, index) so the result is independent of
            // the execution schedule.
            RngStream rng(seed, mix64(0x9D5A0000ull + i));
            outputs[i] = inject(images[i], kind, params, rng);
        } else {
            outputs[i] = images[i];
        }
    });

    for (size_t i = 0; i < n; ++i) {
        std::string name = files[i].filename().string();
        std::filesystem::path dest = out_dir / name;
        save_image(outputs[i], dest);
        manifest.entries[i] = {noisy[i] ? "noisy" : "clean", name};
    }
    manifest.save(out_dir / "manifest.tsv");
    return manifest;
}

}  // namespace score
