// SPDX-License-Identifier: Apache-2.0

#include "grid.hpp"

#include <cmath>
#include <string>

#include "error.hpp"

namespace score {

ImageGrid::ImageGrid(int h, int w, int c) : height(h), width(w), channels(c) {
    validate_dims(h, w, c);
    data.assign(static_cast<size_t>(h) * w * c, 0.0);
}

void validate_dims(int height, int width, int channels) {
    if (height < 2 || width < 2) {
        fail(ErrorCode::invalid_argument,
             "image dimensions must be at least 2x2, got " + std::to_string(height) + "x" +
                 std::to_string(width));
    }
    if (channels != 1 && channels != 3) {
        fail(ErrorCode::invalid_argument,
             "channel count must be 1 or 3, got " + std::to_string(channels));
    }
}

bool all_finite(const ImageGrid& g) {
    for (double v : g.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void require_finite(const ImageGrid& g, const char* context) {
    if (!all_finite(g)) {
        fail(ErrorCode::data_integrity, std::string(context) + ": grid contains NaN or Inf");
    }
}

double byte_to_model(uint8_t b) {
    return 2.0 * (static_cast<double>(b) / 255.0) - 1.0;
}

uint8_t model_to_byte(double m) {
    double v = (m + 1.0) * (255.0 / 2.0);
    double r = std::nearbyint(v);
    if (r < 0.0) return 0;
    if (r > 255.0) return 255;
    return static_cast<uint8_t>(r);
}

}  // namespace score
