// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace score {

// H x W x C raster of real scalars in model scale [-1, 1], stored row-major
// with the channel index fastest (channel-last), matching the SCR1 raw file
// layout byte for byte.
struct ImageGrid {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    ImageGrid() = default;
    ImageGrid(int h, int w, int c);  // zero-filled; validates dimensions

    size_t pixel_count() const { return static_cast<size_t>(height) * width; }
    size_t value_count() const { return data.size(); }

    double& at(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    bool same_shape(const ImageGrid& other) const {
        return height == other.height && width == other.width && channels == other.channels;
    }
};

// Rejects h < 2, w < 2, or channels outside {1, 3}.
void validate_dims(int height, int width, int channels);

// True when every scalar is finite.
bool all_finite(const ImageGrid& g);

// Throws a data-integrity error naming `context` when the grid holds NaN/Inf.
void require_finite(const ImageGrid& g, const char* context);

// Byte scale <-> model scale. x_model = 2*(x_byte/255) - 1; the inverse
// rounds to the nearest byte and saturates outside [-1, 1].
double byte_to_model(uint8_t b);
uint8_t model_to_byte(double m);

// Scale factor for byte-scale noise magnitudes expressed in model scale.
inline double byte_scale_to_model(double v) { return v * (2.0 / 255.0); }

}  // namespace score
