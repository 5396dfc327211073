#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bgmodel/flux.hpp"
#include "imagecore/frame.hpp"

namespace cseg::bg {

// Per-pixel circular history of the last kCapacity accepted RGB samples.
// Layout keeps each pixel's ring contiguous so rendering walks one cache line.
class PixelLibrary {
  public:
    static constexpr int kCapacity = 90;

    PixelLibrary() = default;
    PixelLibrary(int height, int width);

    /// Bootstraps every slot of every pixel from the frame; fill = kCapacity.
    void seed(const img::Frame& f);
    bool seeded() const { return seeded_; }

    /// Stores the frame's value at each pixel labeled BG after dilating the
    /// FG set by pad; advances that pixel's write pointer.
    void update(const img::Frame& f, const img::LabelMask& fg, int pad);

    /// Mean of the min(round(bm), fill) most recently written samples.
    img::Frame render(double bm) const;

    int height() const { return height_; }
    int width() const { return width_; }
    std::uint8_t write_index(int y, int x) const { return bi_[idx(y, x)]; }
    std::uint8_t fill_count(int y, int x) const { return fill_[idx(y, x)]; }
    /// Sample k frames back from the most recent write (k = 0 is newest).
    float sample_back(int y, int x, int k, int channel) const;

    // Flat state views for checkpointing.
    const std::vector<float>& samples() const { return samples_; }
    const std::vector<std::uint8_t>& write_indices() const { return bi_; }
    const std::vector<std::uint8_t>& fill_counts() const { return fill_; }
    void restore(std::vector<float> samples, std::vector<std::uint8_t> bi,
                 std::vector<std::uint8_t> fill, bool seeded);

  private:
    std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * width_ + x; }

    int height_ = 0;
    int width_ = 0;
    bool seeded_ = false;
    std::vector<float> samples_;  // [(pixel * kCapacity + slot) * 3 + channel]
    std::vector<std::uint8_t> bi_;
    std::vector<std::uint8_t> fill_;
};

/// Default segmenter: FG where the max-channel absolute difference against
/// the rendered background exceeds tau.
img::LabelMask naive_segmenter(const img::Frame& f, const img::Frame& bg, double tau);

struct BackgroundConfig {
    BmMode bm_mode = BmMode::MonotoneDecreasing;
    double naive_tau = 0.08;  // hook threshold when no segmenter is supplied
};

// Adaptive background generator: a segmenter hook gates which pixels enter
// the library, the flux tensor drives the memory length and mask padding.
class BackgroundModel {
  public:
    /// Hook from (frame, current background) to a FG mask of the same size.
    using SegmenterHook =
        std::function<img::LabelMask(const img::Frame&, const img::Frame&)>;

    BackgroundModel(int height, int width, BackgroundConfig config = {});

    /// One cycle: hook -> flux -> motion state -> library update -> render.
    /// The first frame seeds the library. Returns the rendered background.
    img::Frame step(const img::Frame& frame, const SegmenterHook& hook);
    img::Frame step(const img::Frame& frame);  // uses the naive segmenter

    int height() const { return height_; }
    int width() const { return width_; }
    const MotionState& motion() const { return motion_; }
    const PixelLibrary& library() const { return library_; }
    const img::Frame& background() const;
    std::uint64_t frames_seen() const { return frames_seen_; }
    const BackgroundConfig& config() const { return config_; }

    void save(const std::string& path) const;
    static BackgroundModel load(const std::string& path);

  private:
    int height_;
    int width_;
    BackgroundConfig config_;
    PixelLibrary library_;
    FluxBuffer flux_;
    MotionState motion_;
    img::Frame background_;
    std::uint64_t frames_seen_ = 0;
};

}  // namespace cseg::bg
