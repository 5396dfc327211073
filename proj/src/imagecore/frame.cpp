#include "imagecore/frame.hpp"

#include <algorithm>
#include <cmath>

namespace cseg::img {

Frame::Frame(int h, int w, float fill)
    : height(h), width(w), data(static_cast<std::size_t>(3) * h * w, fill) {
    if (h < 0 || w < 0) throw_invalid("frame dimensions must be nonnegative");
}

GrayFrame::GrayFrame(int h, int w, float fill)
    : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {
    if (h < 0 || w < 0) throw_invalid("frame dimensions must be nonnegative");
}

LabelMask::LabelMask(int h, int w, Label fill)
    : height(h), width(w), labels(static_cast<std::size_t>(h) * w, fill) {
    if (h < 0 || w < 0) throw_invalid("mask dimensions must be nonnegative");
}

std::size_t LabelMask::count(Label l) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
}

ScoreMap::ScoreMap(int h, int w, float fill)
    : height(h), width(w), scores(static_cast<std::size_t>(h) * w, fill) {
    if (h < 0 || w < 0) throw_invalid("map dimensions must be nonnegative");
}

Frame to_unit_rgb(const std::uint8_t* interleaved, int height, int width) {
    Frame f(height, width);
    const std::size_t n = f.pixel_count();
    for (int c = 0; c < 3; ++c) {
        float* plane = f.plane(c);
        for (std::size_t i = 0; i < n; ++i)
            plane[i] = static_cast<float>(interleaved[i * 3 + c]) * (1.0f / 255.0f);
    }
    return f;
}

std::vector<std::uint8_t> to_byte_rgb(const Frame& f) {
    const std::size_t n = f.pixel_count();
    std::vector<std::uint8_t> out(n * 3);
    for (int c = 0; c < 3; ++c) {
        const float* plane = f.plane(c);
        for (std::size_t i = 0; i < n; ++i) {
            const float v = std::clamp(plane[i], 0.0f, 1.0f);
            out[i * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
        }
    }
    return out;
}

GrayFrame luminance(const Frame& f) {
    GrayFrame g(f.height, f.width);
    const float* r = f.plane(0);
    const float* gr = f.plane(1);
    const float* b = f.plane(2);
    const std::size_t n = f.pixel_count();
    for (std::size_t i = 0; i < n; ++i)
        g.data[i] = 0.299f * r[i] + 0.587f * gr[i] + 0.114f * b[i];
    return g;
}

namespace {

struct SampleTap {
    int lo;
    int hi;
    float frac;  // weight of hi
};

// Half-pixel-aligned source coordinate for a destination index, clamped to
// the valid range so border taps replicate the edge.
SampleTap tap_for(int dst, int dst_size, int src_size) {
    const double scale = static_cast<double>(src_size) / dst_size;
    double pos = (dst + 0.5) * scale - 0.5;
    if (pos < 0.0) pos = 0.0;
    const double upper = static_cast<double>(src_size - 1);
    if (pos > upper) pos = upper;
    const int lo = static_cast<int>(pos);
    SampleTap tap;
    tap.lo = lo;
    tap.hi = std::min(lo + 1, src_size - 1);
    tap.frac = static_cast<float>(pos - lo);
    return tap;
}

}  // namespace

Frame resize_bilinear(const Frame& f, int target_height, int target_width) {
    if (f.height < 2 || f.width < 2)
        throw_invalid("resize_bilinear: source must be at least 2x2");
    if (target_height < 1 || target_width < 1)
        throw_invalid("resize_bilinear: target dimensions must be positive");
    if (target_height == f.height && target_width == f.width) return f;

    std::vector<SampleTap> col_taps(target_width);
    for (int x = 0; x < target_width; ++x) col_taps[x] = tap_for(x, target_width, f.width);

    Frame out(target_height, target_width);
    for (int c = 0; c < 3; ++c) {
        const float* src = f.plane(c);
        float* dst = out.plane(c);
        for (int y = 0; y < target_height; ++y) {
            const SampleTap ry = tap_for(y, target_height, f.height);
            const float* row_lo = src + static_cast<std::size_t>(ry.lo) * f.width;
            const float* row_hi = src + static_cast<std::size_t>(ry.hi) * f.width;
            const float wy = ry.frac;
            float* dst_row = dst + static_cast<std::size_t>(y) * target_width;
            for (int x = 0; x < target_width; ++x) {
                const SampleTap& rx = col_taps[x];
                const float top = row_lo[rx.lo] + (row_lo[rx.hi] - row_lo[rx.lo]) * rx.frac;
                const float bot = row_hi[rx.lo] + (row_hi[rx.hi] - row_hi[rx.lo]) * rx.frac;
                dst_row[x] = top + (bot - top) * wy;
            }
        }
    }
    return out;
}

LabelMask resize_nearest(const LabelMask& m, int target_height, int target_width) {
    if (m.height < 1 || m.width < 1)
        throw_invalid("resize_nearest: source must be nonempty");
    if (target_height < 1 || target_width < 1)
        throw_invalid("resize_nearest: target dimensions must be positive");
    if (target_height == m.height && target_width == m.width) return m;

    LabelMask out(target_height, target_width);
    for (int y = 0; y < target_height; ++y) {
        const int sy = std::min(m.height - 1, static_cast<int>((y + 0.5) * m.height / target_height));
        for (int x = 0; x < target_width; ++x) {
            const int sx = std::min(m.width - 1, static_cast<int>((x + 0.5) * m.width / target_width));
            out.at(y, x) = m.at(sy, sx);
        }
    }
    return out;
}

}  // namespace cseg::img
