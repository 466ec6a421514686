// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "grid.hpp"
#include "rng.hpp"

namespace score {

// Additive Gaussian noise specified in byte scale (sigma = 25 byte-scale is
// 2*25/255 in model scale). No clamping.
ImageGrid inject_gaussian(const ImageGrid& x, double sigma_byte, RngStream& rng);

// Zero-centered additive Poisson noise: (Pois(lambda) - lambda) per pixel in
// byte scale, converted to model scale. Signal-independent.
ImageGrid inject_poisson(const ImageGrid& x, double lambda, RngStream& rng);

// Poisson then Gaussian, with independent substreams.
ImageGrid inject_mix(const ImageGrid& x, double lambda, double sigma_byte, RngStream& rng);

enum class NoiseKind { gaussian, poisson, mix };

NoiseKind noise_kind_from_string(const std::string& name);
std::string to_string(NoiseKind kind);

struct NoiseParams {
    double sigma_byte = 25.0;
    double lambda = 30.0;
};

ImageGrid inject(const ImageGrid& x, NoiseKind kind, const NoiseParams& params, RngStream& rng);

struct ManifestEntry {
    std::string role;  // "clean" | "noisy"
    std::string path;  // relative to the manifest file
};

// Corpus description: common dimensions, the seed that produced the mixture
// assignment, the injector settings, and the role of every file.
struct CorpusManifest {
    int height = 0;
    int width = 0;
    int channels = 0;
    uint64_t seed = 0;
    double noisy_fraction = 0.0;
    std::string noise_kind;
    NoiseParams params;
    std::vector<ManifestEntry> entries;

    size_t count_role(const std::string& role) const;
    void save(const std::filesystem::path& path) const;
    static CorpusManifest load(const std::filesystem::path& path);
};

// Builds a clean/noisy mixture: assigns exactly round(N * noisy_fraction)
// images to the noisy role via a seeded shuffle, writes copies (injected for
// the noisy role) into out_dir and a manifest.tsv describing the result.
CorpusManifest build_mixture(const std::filesystem::path& clean_dir,
                             const std::filesystem::path& out_dir, double noisy_fraction,
                             NoiseKind kind, const NoiseParams& params, uint64_t seed);

}  // namespace score
