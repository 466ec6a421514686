// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "grid.hpp"

namespace score {

// Raw tensor format "SCR1": magic, u32le H, W, C, then H*W*C float32 little-
// endian scalars in row-major channel-last order. Lossless at float32.
void save_scr1(const ImageGrid& g, const std::filesystem::path& path);
ImageGrid load_scr1(const std::filesystem::path& path);

// 8-bit binary PGM (P5), single channel, byte scale <-> model scale.
void save_pgm(const ImageGrid& g, const std::filesystem::path& path);
ImageGrid load_pgm(const std::filesystem::path& path);

// 8-bit PNG, gray (1 channel) or RGB (3 channels), non-interlaced.
void save_png(const ImageGrid& g, const std::filesystem::path& path);
ImageGrid load_png(const std::filesystem::path& path);

// Dispatch on the file extension: .scr1, .pgm, .png.
void save_image(const ImageGrid& g, const std::filesystem::path& path);
ImageGrid load_image(const std::filesystem::path& path);
bool is_image_path(const std::filesystem::path& path);

// Sorted list of recognized image files directly inside a directory.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace score
