#include "imagecore/patches.hpp"

#include <algorithm>

namespace cseg::img {

namespace {

std::vector<int> plan_axis(int padded, int side, int stride, int pad) {
    std::vector<int> origins;
    const int last_valid = padded - side;
    for (int o = 0; o <= last_valid; o += stride) origins.push_back(o);
    if (origins.empty()) origins.push_back(0);
    // Source pixels live in padded coords [pad, padded - pad). Append the
    // clamped final origin if the regular grid stops short of the last one.
    const int covered_through = origins.back() + side;  // exclusive
    if (covered_through < padded - pad && origins.back() != last_valid)
        origins.push_back(last_valid);
    return origins;
}

}  // namespace

PatchLayout plan_patches(int height, int width, int side, int stride, bool zero_pad) {
    if (height < 1 || width < 1) throw_invalid("plan_patches: source dimensions must be positive");
    if (side < 1 || side % 2 == 0) throw_invalid("plan_patches: patch side must be odd and positive");
    if (stride < 1) throw_invalid("plan_patches: stride must be >= 1");

    PatchLayout layout;
    layout.source_height = height;
    layout.source_width = width;
    layout.side = side;
    layout.stride = stride;
    layout.pad = zero_pad ? side / 2 : 0;
    if (layout.padded_height() < side || layout.padded_width() < side)
        throw_invalid("plan_patches: padded source smaller than the patch side");
    // A step larger than the side would leave interior gaps; cap it so full
    // coverage always holds. The oversized request is still visible through
    // layout_loses_overlap.
    const int step = std::min(stride, side);
    layout.row_origins = plan_axis(layout.padded_height(), side, step, layout.pad);
    layout.col_origins = plan_axis(layout.padded_width(), side, step, layout.pad);
    return layout;
}

bool layout_loses_overlap(const PatchLayout& layout) {
    return layout.stride > layout.side;
}

std::vector<Patch> extract_patches(const Frame& f, const PatchLayout& layout) {
    if (f.height != layout.source_height || f.width != layout.source_width)
        throw_invalid("extract_patches: layout was planned for different dimensions");

    std::vector<Patch> patches;
    patches.reserve(layout.patch_count());
    const int side = layout.side;
    const int pad = layout.pad;
    for (int oy : layout.row_origins) {
        for (int ox : layout.col_origins) {
            Patch p;
            p.channels = 3;
            p.side = side;
            p.data.assign(static_cast<std::size_t>(3) * side * side, 0.0f);
            for (int c = 0; c < 3; ++c) {
                const float* src = f.plane(c);
                float* dst = p.data.data() + static_cast<std::size_t>(c) * side * side;
                for (int py = 0; py < side; ++py) {
                    const int sy = oy + py - pad;
                    if (sy < 0 || sy >= f.height) continue;  // zero pad
                    const int x0 = std::max(0, pad - ox);
                    const int x1 = std::min(side, f.width + pad - ox);
                    const float* src_row = src + static_cast<std::size_t>(sy) * f.width + (ox + x0 - pad);
                    std::copy(src_row, src_row + (x1 - x0), dst + static_cast<std::size_t>(py) * side + x0);
                }
            }
            patches.push_back(std::move(p));
        }
    }
    return patches;
}

std::vector<LabelPatch> extract_label_patches(const LabelMask& m, const PatchLayout& layout) {
    if (m.height != layout.source_height || m.width != layout.source_width)
        throw_invalid("extract_label_patches: layout was planned for different dimensions");

    std::vector<LabelPatch> patches;
    patches.reserve(layout.patch_count());
    const int side = layout.side;
    const int pad = layout.pad;
    for (int oy : layout.row_origins) {
        for (int ox : layout.col_origins) {
            LabelPatch p;
            p.side = side;
            p.labels.assign(static_cast<std::size_t>(side) * side, Label::Ignore);
            for (int py = 0; py < side; ++py) {
                const int sy = oy + py - pad;
                if (sy < 0 || sy >= m.height) continue;
                for (int px = 0; px < side; ++px) {
                    const int sx = ox + px - pad;
                    if (sx < 0 || sx >= m.width) continue;
                    p.labels[static_cast<std::size_t>(py) * side + px] = m.at(sy, sx);
                }
            }
            patches.push_back(std::move(p));
        }
    }
    return patches;
}

ScoreMap reassemble_scores(const std::vector<std::vector<float>>& patch_scores,
                           const PatchLayout& layout) {
    if (patch_scores.size() != layout.patch_count())
        throw_invalid("reassemble_scores: patch count does not match the layout");

    const int ph = layout.padded_height();
    const int pw = layout.padded_width();
    const int side = layout.side;
    std::vector<double> sum(static_cast<std::size_t>(ph) * pw, 0.0);
    std::vector<std::uint32_t> hits(static_cast<std::size_t>(ph) * pw, 0);

    std::size_t idx = 0;
    for (int oy : layout.row_origins) {
        for (int ox : layout.col_origins) {
            const auto& scores = patch_scores[idx++];
            if (scores.size() != static_cast<std::size_t>(side) * side)
                throw_invalid("reassemble_scores: patch score tile has the wrong size");
            for (int py = 0; py < side; ++py) {
                const std::size_t row = static_cast<std::size_t>(oy + py) * pw + ox;
                const float* src = scores.data() + static_cast<std::size_t>(py) * side;
                for (int px = 0; px < side; ++px) {
                    sum[row + px] += src[px];
                    ++hits[row + px];
                }
            }
        }
    }

    ScoreMap out(layout.source_height, layout.source_width);
    const int pad = layout.pad;
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const std::size_t p = static_cast<std::size_t>(y + pad) * pw + (x + pad);
            // Every source pixel is covered by construction of the layout.
            out.at(y, x) = static_cast<float>(sum[p] / hits[p]);
        }
    }
    return out;
}

std::vector<std::vector<float>> extract_score_patches(const ScoreMap& m, const PatchLayout& layout) {
    if (m.height != layout.source_height || m.width != layout.source_width)
        throw_invalid("extract_score_patches: layout was planned for different dimensions");

    std::vector<std::vector<float>> patches;
    patches.reserve(layout.patch_count());
    const int side = layout.side;
    const int pad = layout.pad;
    for (int oy : layout.row_origins) {
        for (int ox : layout.col_origins) {
            std::vector<float> tile(static_cast<std::size_t>(side) * side, 0.0f);
            for (int py = 0; py < side; ++py) {
                const int sy = oy + py - pad;
                if (sy < 0 || sy >= m.height) continue;
                for (int px = 0; px < side; ++px) {
                    const int sx = ox + px - pad;
                    if (sx < 0 || sx >= m.width) continue;
                    tile[static_cast<std::size_t>(py) * side + px] = m.at(sy, sx);
                }
            }
            patches.push_back(std::move(tile));
        }
    }
    return patches;
}

}  // namespace cseg::img
