#pragma once

#include <array>

#include "imagecore/frame.hpp"

namespace cseg::bg {

// Temporal ring of the last five grayscale frames. Five is the smallest
// window that supports a central difference of the spatial gradient plus a
// second temporal derivative at the center frame.
class FluxBuffer {
  public:
    static constexpr int kDepth = 5;

    /// Appends a frame; dimensions are fixed by the first push.
    void push(img::GrayFrame frame);

    bool ready() const { return count_ >= kDepth; }
    int count() const { return count_; }
    int height() const { return height_; }
    int width() const { return width_; }

    /// Frame i of the temporal window: 0 is the oldest, kDepth-1 the newest.
    const img::GrayFrame& frame(int i) const;

    void clear();

  private:
    std::array<img::GrayFrame, kDepth> ring_;
    int next_ = 0;
    int count_ = 0;
    int height_ = 0;
    int width_ = 0;
};

/// Flux-tensor trace at the buffer's center frame: Ixt^2 + Iyt^2 + Itt^2
/// box-summed over a 5x5 window (truncated at the borders). Nonnegative.
img::ScoreMap flux_trace(const FluxBuffer& buf);

/// Motion threshold for a trace map: 3x its mean, floored at 1e-4.
double flux_threshold(const img::ScoreMap& trace);

/// FG where trace > tau.
img::LabelMask motion_mask(const img::ScoreMap& trace, double tau);

/// FG count over total pixel count.
double motion_fraction(const img::LabelMask& m);

/// Asymmetric low-pass: fast decay (alpha 0.2) when the raw fraction drops,
/// slow attack (alpha 0.01) when it rises; equal input passes through.
double lowpass_fs(double prev, double raw);

// The published memory-length formula increases across its middle segment,
// contradicting the stated intent that more motion should shorten memory and
// leaving jumps at both segment ends. MonotoneDecreasing (the default
// everywhere) mirrors the segment so the map falls continuously from 90 to 5;
// AsPrinted keeps the formula verbatim between the clamps.
enum class BmMode {
    MonotoneDecreasing,
    AsPrinted,
};

/// Memory length in samples: 90 at fs <= 0.02, 5 at fs >= 0.25, linear between.
double memory_length(double fs, BmMode mode = BmMode::MonotoneDecreasing);

/// Mask-dilation radius: 1 at fs <= 0.02, 5 at fs >= 0.25, rounded linear between.
int padding_radius(double fs);

// Smoothed motion fraction and the two knobs derived from it. Defaults match
// a static scene, which is also what the model assumes until the flux buffer
// first fills.
struct MotionState {
    double fs_filtered = 0.02;
    double bm = 90.0;
    int padding_radius = 1;

    /// Folds one raw motion fraction through the low-pass and refreshes bm
    /// and the padding radius.
    void observe(double raw_fs, BmMode mode = BmMode::MonotoneDecreasing);
};

}  // namespace cseg::bg
