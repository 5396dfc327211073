#include "bgmodel/flux.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "common/error.hpp"

namespace cseg::bg {
namespace {

// Spatial central differences with clamped (edge-replicated) indexing.
// Double precision throughout: the trace is defined by these formulas and
// downstream consumers compare against direct evaluation.
void spatial_gradient(const img::GrayFrame& f, std::vector<double>& gx, std::vector<double>& gy) {
    const int h = f.height, w = f.width;
    gx.resize(static_cast<std::size_t>(h) * w);
    gy.resize(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y) {
        const int yu = std::max(y - 1, 0);
        const int yd = std::min(y + 1, h - 1);
        for (int x = 0; x < w; ++x) {
            const int xl = std::max(x - 1, 0);
            const int xr = std::min(x + 1, w - 1);
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            gx[i] = 0.5 * (static_cast<double>(f.at(y, xr)) - f.at(y, xl));
            gy[i] = 0.5 * (static_cast<double>(f.at(yd, x)) - f.at(yu, x));
        }
    }
}

}  // namespace

void FluxBuffer::push(img::GrayFrame frame) {
    if (frame.height <= 0 || frame.width <= 0) throw_invalid("flux frame is empty");
    if (count_ == 0) {
        height_ = frame.height;
        width_ = frame.width;
    } else if (frame.height != height_ || frame.width != width_) {
        throw_invalid("flux frame dimensions changed mid-stream");
    }
    ring_[next_] = std::move(frame);
    next_ = (next_ + 1) % kDepth;
    count_ = std::min(count_ + 1, kDepth);
}

const img::GrayFrame& FluxBuffer::frame(int i) const {
    if (i < 0 || i >= count_) throw_invalid("flux frame index out of range");
    // Oldest frame sits at next_ once the ring is full, at 0 before that.
    const int base = count_ == kDepth ? next_ : 0;
    return ring_[(base + i) % kDepth];
}

void FluxBuffer::clear() {
    next_ = 0;
    count_ = 0;
    height_ = 0;
    width_ = 0;
}

img::ScoreMap flux_trace(const FluxBuffer& buf) {
    if (!buf.ready()) throw_not_ready("flux buffer holds fewer than 5 frames");
    const int h = buf.height(), w = buf.width();
    const std::size_t n = static_cast<std::size_t>(h) * w;

    // Temporal derivatives at the center frame (index 2): the gradient's
    // time derivative from the frames at +-1, the second time derivative
    // from the frames at +-2.
    std::vector<double> gx1, gy1, gx3, gy3;
    spatial_gradient(buf.frame(1), gx1, gy1);
    spatial_gradient(buf.frame(3), gx3, gy3);
    const img::GrayFrame& f0 = buf.frame(0);
    const img::GrayFrame& f2 = buf.frame(2);
    const img::GrayFrame& f4 = buf.frame(4);

    std::vector<float> point(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ixt = 0.5 * (gx3[i] - gx1[i]);
        const double iyt = 0.5 * (gy3[i] - gy1[i]);
        const double itt =
            0.25 * (static_cast<double>(f4.data[i]) - 2.0 * f2.data[i] + f0.data[i]);
        point[i] = static_cast<float>(ixt * ixt + iyt * iyt + itt * itt);
    }

    // Direct 5x5 box sums, truncated at the borders. A summed-area table
    // would be cheaper but its cancellation noise breaks agreement with
    // straightforward evaluation of the definition.
    img::ScoreMap trace(h, w);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(y - 2, 0), y1 = std::min(y + 2, h - 1);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(x - 2, 0), x1 = std::min(x + 2, w - 1);
            double sum = 0.0;
            for (int yy = y0; yy <= y1; ++yy) {
                const float* row = point.data() + static_cast<std::size_t>(yy) * w;
                for (int xx = x0; xx <= x1; ++xx) sum += row[xx];
            }
            trace.at(y, x) = static_cast<float>(sum);
        }
    }
    return trace;
}

double flux_threshold(const img::ScoreMap& trace) {
    if (trace.scores.empty()) throw_invalid("empty trace map");
    double sum = 0.0;
    for (float v : trace.scores) sum += v;
    return std::max(3.0 * sum / static_cast<double>(trace.scores.size()), 1e-4);
}

img::LabelMask motion_mask(const img::ScoreMap& trace, double tau) {
    if (tau < 0.0) throw_invalid("motion threshold must be nonnegative");
    img::LabelMask m(trace.height, trace.width);
    for (std::size_t i = 0; i < trace.scores.size(); ++i)
        m.labels[i] = trace.scores[i] > tau ? img::Label::Foreground : img::Label::Background;
    return m;
}

double motion_fraction(const img::LabelMask& m) {
    if (m.labels.empty()) throw_invalid("empty mask");
    return static_cast<double>(m.count(img::Label::Foreground)) /
           static_cast<double>(m.labels.size());
}

double lowpass_fs(double prev, double raw) {
    if (prev < 0.0 || prev > 1.0 || raw < 0.0 || raw > 1.0)
        throw_invalid("motion fractions must lie in [0,1]");
    if (raw == prev) return prev;
    const double alpha = raw < prev ? 0.2 : 0.01;
    return alpha * raw + (1.0 - alpha) * prev;
}

double memory_length(double fs, BmMode mode) {
    if (fs < 0.0 || fs > 1.0) throw_invalid("motion fraction must lie in [0,1]");
    if (fs <= 0.02) return 90.0;
    if (fs >= 0.25) return 5.0;
    const double t = (fs - 0.02) / (0.25 - 0.02);
    return mode == BmMode::MonotoneDecreasing ? 90.0 - t * 85.0 : 5.0 + t * 85.0;
}

int padding_radius(double fs) {
    if (fs < 0.0 || fs > 1.0) throw_invalid("motion fraction must lie in [0,1]");
    if (fs <= 0.02) return 1;
    if (fs >= 0.25) return 5;
    return static_cast<int>(std::lround(1.0 + (fs - 0.02) / (0.25 - 0.02) * 4.0));
}

void MotionState::observe(double raw_fs, BmMode mode) {
    fs_filtered = lowpass_fs(fs_filtered, raw_fs);
    bm = memory_length(fs_filtered, mode);
    padding_radius = bg::padding_radius(fs_filtered);
}

}  // namespace cseg::bg
