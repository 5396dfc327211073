#pragma once

#include <cstdint>
#include <vector>

#include "common/error.hpp"

namespace cseg::img {

// RGB raster with unit-interval intensities. Storage is planar: channel c of
// pixel (y, x) lives at data[(c * height + y) * width + x]. Planar layout is
// the fixed convention throughout; interleaved 8-bit buffers only exist at
// the I/O boundary.
struct Frame {
    int height = 0;
    int width = 0;
    std::vector<float> data;  // size 3 * height * width

    Frame() = default;
    Frame(int h, int w, float fill = 0.0f);

    float& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    float at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }

    float* plane(int c) { return data.data() + static_cast<std::size_t>(c) * height * width; }
    const float* plane(int c) const { return data.data() + static_cast<std::size_t>(c) * height * width; }

    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
    bool same_size(const Frame& other) const { return height == other.height && width == other.width; }
};

// Single-channel unit-interval luminance raster.
struct GrayFrame {
    int height = 0;
    int width = 0;
    std::vector<float> data;  // size height * width

    GrayFrame() = default;
    GrayFrame(int h, int w, float fill = 0.0f);

    float& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

enum class Label : std::uint8_t {
    Background = 0,
    Foreground = 1,
    Ignore = 2,
};

// Ternary per-pixel labeling used for ground truth and segmentation outputs.
struct LabelMask {
    int height = 0;
    int width = 0;
    std::vector<Label> labels;  // size height * width

    LabelMask() = default;
    LabelMask(int h, int w, Label fill = Label::Background);

    Label& at(int y, int x) { return labels[static_cast<std::size_t>(y) * width + x]; }
    Label at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }

    std::size_t count(Label l) const;
};

// Unit-interval score raster (network output before thresholding).
struct ScoreMap {
    int height = 0;
    int width = 0;
    std::vector<float> scores;  // size height * width

    ScoreMap() = default;
    ScoreMap(int h, int w, float fill = 0.0f);

    float& at(int y, int x) { return scores[static_cast<std::size_t>(y) * width + x]; }
    float at(int y, int x) const { return scores[static_cast<std::size_t>(y) * width + x]; }
};

/// Maps an 8-bit interleaved RGB buffer to a unit-interval planar Frame (v -> v/255).
Frame to_unit_rgb(const std::uint8_t* interleaved, int height, int width);

/// Inverse boundary conversion: clamps to [0,1] and rounds each channel to 8 bits.
std::vector<std::uint8_t> to_byte_rgb(const Frame& f);

/// Rec.601 luminance: 0.299 R + 0.587 G + 0.114 B.
GrayFrame luminance(const Frame& f);

/// Bilinear resampling with half-pixel-aligned sample centers; an identity
/// copy when the dimensions already match. Source must be at least 2x2.
Frame resize_bilinear(const Frame& f, int target_height, int target_width);

/// Nearest-neighbor resampling for label rasters (labels must not be blended).
LabelMask resize_nearest(const LabelMask& m, int target_height, int target_width);

}  // namespace cseg::img
