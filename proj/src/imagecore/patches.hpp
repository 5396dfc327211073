#pragma once

#include <vector>

#include "imagecore/frame.hpp"

namespace cseg::img {

// Tiling of a source raster into side x side patches. Origins live in padded
// coordinates; the padded frame is the source with `pad` zero rows/columns on
// each edge. Patches are visited row-major (origin rows outer, columns inner).
struct PatchLayout {
    int source_height = 0;
    int source_width = 0;
    int side = 0;
    int stride = 0;
    int pad = 0;  // identical on all four edges
    std::vector<int> row_origins;
    std::vector<int> col_origins;

    int padded_height() const { return source_height + 2 * pad; }
    int padded_width() const { return source_width + 2 * pad; }
    std::size_t patch_count() const { return row_origins.size() * col_origins.size(); }
    int patch_rows() const { return static_cast<int>(row_origins.size()); }
    int patch_cols() const { return static_cast<int>(col_origins.size()); }
};

// One patch worth of planar pixel data (channels x side x side).
struct Patch {
    int channels = 0;
    int side = 0;
    std::vector<float> data;
};

// Patch-shaped slice of a label raster; positions that fall in the zero-padded
// margin carry Ignore.
struct LabelPatch {
    int side = 0;
    std::vector<Label> labels;
};

/// Plans the tiling. With padding enabled the pad is side/2 per edge and the
/// origins are plain multiples of the stride (the pad already guarantees
/// coverage of every source pixel). Without padding a final origin clamped to
/// the last valid position is appended whenever the regular grid would leave
/// the tail uncovered. side must be odd and positive, stride >= 1.
PatchLayout plan_patches(int height, int width, int side, int stride, bool zero_pad = true);

/// True when the stride exceeds the side (coverage still holds by the
/// clamping rule, but neighboring patches no longer overlap).
bool layout_loses_overlap(const PatchLayout& layout);

/// Cuts the frame into patches in row-major layout order. Padded positions
/// read as zero.
std::vector<Patch> extract_patches(const Frame& f, const PatchLayout& layout);

/// Label-raster variant used for ground-truth patches; the padded margin maps
/// to Ignore so it never contributes to a loss.
std::vector<LabelPatch> extract_label_patches(const LabelMask& m, const PatchLayout& layout);

/// Rebuilds a source-sized score map from per-patch score tiles (each
/// side*side values, row-major). Overlapping contributions are averaged and
/// the padded margin is cropped away.
ScoreMap reassemble_scores(const std::vector<std::vector<float>>& patch_scores,
                           const PatchLayout& layout);

/// Convenience for tests: cuts a ScoreMap into per-patch score tiles.
std::vector<std::vector<float>> extract_score_patches(const ScoreMap& m, const PatchLayout& layout);

}  // namespace cseg::img
