#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "imagecore/frame.hpp"

namespace cseg::img {

// 8-bit raster as it exists on disk; interleaved when channels == 3.
struct RawImage {
    int height = 0;
    int width = 0;
    int channels = 0;  // 1 or 3
    std::vector<std::uint8_t> data;
};

/// Reads PNG/PGM/PPM/JPEG/BMP by file signature. Gray stays single-channel,
/// palette/alpha variants are reduced to gray or RGB.
RawImage read_image(const std::string& path);

/// Writes PNG (.png), PGM (.pgm) or PPM (.ppm) based on the file extension.
void write_image(const std::string& path, const RawImage& image);

/// Reads an image and converts to a unit-interval RGB frame (gray replicated).
Frame read_frame(const std::string& path);

/// Writes a frame as an 8-bit RGB image (clamp + round).
void write_frame(const std::string& path, const Frame& f);

// Mask serialization uses single-channel 8-bit values BG=0, FG=255,
// IGNORE=170 (the unknown code of change-detection ground truth).
inline constexpr std::uint8_t kMaskBackground = 0;
inline constexpr std::uint8_t kMaskForeground = 255;
inline constexpr std::uint8_t kMaskIgnore = 170;

/// Encodes a mask with the byte coding above.
RawImage encode_mask(const LabelMask& m);

/// Decodes an output-style mask image (exact byte codes; everything else is
/// an error). For permissive ground-truth decoding see the dataset coding
/// table in the pipeline module.
LabelMask decode_mask(const RawImage& image);

void write_mask(const std::string& path, const LabelMask& m);
LabelMask read_mask(const std::string& path);

}  // namespace cseg::img
