#include "bgmodel/background_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "common/binary_io.hpp"
#include "common/error.hpp"
#include "imagecore/filters.hpp"

namespace cseg::bg {

namespace {
constexpr char kMagic[4] = {'C', 'S', 'B', 'G'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

PixelLibrary::PixelLibrary(int height, int width) : height_(height), width_(width) {
    if (height <= 0 || width <= 0) throw_invalid("library dimensions must be positive");
    const std::size_t pixels = static_cast<std::size_t>(height) * width;
    samples_.assign(pixels * kCapacity * 3, 0.0f);
    bi_.assign(pixels, 0);
    fill_.assign(pixels, 0);
}

void PixelLibrary::seed(const img::Frame& f) {
    if (f.height != height_ || f.width != width_) throw_invalid("seed frame size mismatch");
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            const std::size_t p = idx(y, x);
            float* ring = samples_.data() + p * kCapacity * 3;
            for (int slot = 0; slot < kCapacity; ++slot)
                for (int c = 0; c < 3; ++c) ring[slot * 3 + c] = f.at(c, y, x);
            bi_[p] = 0;
            fill_[p] = kCapacity;
        }
    }
    seeded_ = true;
}

void PixelLibrary::update(const img::Frame& f, const img::LabelMask& fg, int pad) {
    if (!seeded_) throw_state("library not seeded");
    if (f.height != height_ || f.width != width_) throw_invalid("update frame size mismatch");
    if (fg.height != height_ || fg.width != width_) throw_invalid("update mask size mismatch");
    const img::LabelMask blocked = img::dilate(fg, pad);
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            if (blocked.at(y, x) != img::Label::Background) continue;
            const std::size_t p = idx(y, x);
            float* slot = samples_.data() + (p * kCapacity + bi_[p]) * 3;
            for (int c = 0; c < 3; ++c) slot[c] = f.at(c, y, x);
            bi_[p] = static_cast<std::uint8_t>((bi_[p] + 1) % kCapacity);
            fill_[p] = static_cast<std::uint8_t>(std::min<int>(fill_[p] + 1, kCapacity));
        }
    }
}

img::Frame PixelLibrary::render(double bm) const {
    if (!seeded_) throw_state("library not seeded");
    if (!(bm >= 1.0)) throw_invalid("memory length must be at least 1");
    const int want = static_cast<int>(std::lround(bm));
    img::Frame out(height_, width_);
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            const std::size_t p = idx(y, x);
            const float* ring = samples_.data() + p * kCapacity * 3;
            const int k = std::min(want, static_cast<int>(fill_[p]));
            double sum[3] = {0.0, 0.0, 0.0};
            int slot = bi_[p];
            for (int j = 0; j < k; ++j) {
                slot = slot == 0 ? kCapacity - 1 : slot - 1;
                const float* s = ring + slot * 3;
                sum[0] += s[0];
                sum[1] += s[1];
                sum[2] += s[2];
            }
            for (int c = 0; c < 3; ++c) out.at(c, y, x) = static_cast<float>(sum[c] / k);
        }
    }
    return out;
}

float PixelLibrary::sample_back(int y, int x, int k, int channel) const {
    const std::size_t p = idx(y, x);
    const int slot = ((bi_[p] - 1 - k) % kCapacity + kCapacity) % kCapacity;
    return samples_[(p * kCapacity + slot) * 3 + channel];
}

void PixelLibrary::restore(std::vector<float> samples, std::vector<std::uint8_t> bi,
                           std::vector<std::uint8_t> fill, bool seeded) {
    const std::size_t pixels = static_cast<std::size_t>(height_) * width_;
    if (samples.size() != pixels * kCapacity * 3 || bi.size() != pixels || fill.size() != pixels)
        throw_format("library state arrays have wrong sizes");
    samples_ = std::move(samples);
    bi_ = std::move(bi);
    fill_ = std::move(fill);
    seeded_ = seeded;
}

img::LabelMask naive_segmenter(const img::Frame& f, const img::Frame& bg, double tau) {
    if (!f.same_size(bg)) throw_invalid("frame/background size mismatch");
    if (tau < 0.0) throw_invalid("segmenter threshold must be nonnegative");
    img::LabelMask m(f.height, f.width);
    const std::size_t n = f.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        float diff = 0.0f;
        for (int c = 0; c < 3; ++c)
            diff = std::max(diff, std::abs(f.data[c * n + i] - bg.data[c * n + i]));
        m.labels[i] = diff > tau ? img::Label::Foreground : img::Label::Background;
    }
    return m;
}

BackgroundModel::BackgroundModel(int height, int width, BackgroundConfig config)
    : height_(height), width_(width), config_(config), library_(height, width) {
    if (config.naive_tau < 0.0) throw_invalid("naive_tau must be nonnegative");
}

img::Frame BackgroundModel::step(const img::Frame& frame, const SegmenterHook& hook) {
    if (frame.height != height_ || frame.width != width_)
        throw_invalid("frame size does not match the model");
    if (!library_.seeded()) {
        library_.seed(frame);
        background_ = frame;
    }

    const img::LabelMask fg = hook(frame, background_);
    if (fg.height != height_ || fg.width != width_)
        throw_invalid("segmenter hook returned a mask of the wrong size");

    flux_.push(img::luminance(frame));
    if (flux_.ready()) {
        const img::ScoreMap trace = flux_trace(flux_);
        const img::LabelMask moving = motion_mask(trace, flux_threshold(trace));
        motion_.observe(motion_fraction(moving), config_.bm_mode);
    }

    library_.update(frame, fg, motion_.padding_radius);
    background_ = library_.render(motion_.bm);
    ++frames_seen_;
    return background_;
}

img::Frame BackgroundModel::step(const img::Frame& frame) {
    const double tau = config_.naive_tau;
    return step(frame, [tau](const img::Frame& f, const img::Frame& bg) {
        return naive_segmenter(f, bg, tau);
    });
}

const img::Frame& BackgroundModel::background() const {
    if (frames_seen_ == 0) throw_not_ready("no frame stepped yet");
    return background_;
}

void BackgroundModel::save(const std::string& path) const {
    std::ostringstream out(std::ios::binary);
    out.write(kMagic, 4);
    bin::write_le<std::uint32_t>(out, kVersion);
    bin::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(height_));
    bin::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(width_));
    bin::write_le<std::uint8_t>(out, config_.bm_mode == BmMode::AsPrinted ? 1 : 0);
    bin::write_le<double>(out, config_.naive_tau);
    bin::write_le<std::uint8_t>(out, library_.seeded() ? 1 : 0);
    bin::write_le<std::uint64_t>(out, frames_seen_);
    bin::write_le<double>(out, motion_.fs_filtered);
    bin::write_le<double>(out, motion_.bm);
    bin::write_le<std::int32_t>(out, motion_.padding_radius);
    bin::write_le_array(out, library_.write_indices().data(), library_.write_indices().size());
    bin::write_le_array(out, library_.fill_counts().data(), library_.fill_counts().size());
    bin::write_le_array(out, library_.samples().data(), library_.samples().size());
    // Flux ring, oldest first, so a resumed stream continues bit-identically.
    const int stored = flux_.count();
    bin::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(stored));
    for (int i = 0; i < stored; ++i) {
        const img::GrayFrame& g = flux_.frame(i);
        bin::write_le_array(out, g.data.data(), g.data.size());
    }
    if (frames_seen_ > 0) bin::write_le_array(out, background_.data.data(), background_.data.size());
    bin::write_checksummed(path, std::move(out).str());
}

BackgroundModel BackgroundModel::load(const std::string& path) {
    std::istringstream in(bin::read_checksummed(path), std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw_format("'" + path + "' is not a background checkpoint");
    const auto version = bin::read_le<std::uint32_t>(in);
    if (version != kVersion)
        throw_format("'" + path + "': unsupported checkpoint version " + std::to_string(version));
    const int height = static_cast<int>(bin::read_le<std::uint32_t>(in));
    const int width = static_cast<int>(bin::read_le<std::uint32_t>(in));
    if (height <= 0 || width <= 0 || height > 1 << 16 || width > 1 << 16)
        throw_format("'" + path + "': implausible dimensions");

    BackgroundConfig config;
    config.bm_mode = bin::read_le<std::uint8_t>(in) ? BmMode::AsPrinted : BmMode::MonotoneDecreasing;
    config.naive_tau = bin::read_le<double>(in);
    BackgroundModel model(height, width, config);

    const bool seeded = bin::read_le<std::uint8_t>(in) != 0;
    model.frames_seen_ = bin::read_le<std::uint64_t>(in);
    model.motion_.fs_filtered = bin::read_le<double>(in);
    model.motion_.bm = bin::read_le<double>(in);
    model.motion_.padding_radius = bin::read_le<std::int32_t>(in);

    const std::size_t pixels = static_cast<std::size_t>(height) * width;
    std::vector<std::uint8_t> bi(pixels), fill(pixels);
    std::vector<float> samples(pixels * PixelLibrary::kCapacity * 3);
    bin::read_le_array(in, bi.data(), bi.size());
    bin::read_le_array(in, fill.data(), fill.size());
    bin::read_le_array(in, samples.data(), samples.size());
    model.library_.restore(std::move(samples), std::move(bi), std::move(fill), seeded);

    const int stored = bin::read_le<std::uint8_t>(in);
    if (stored < 0 || stored > FluxBuffer::kDepth)
        throw_format("'" + path + "': bad flux frame count");
    for (int i = 0; i < stored; ++i) {
        img::GrayFrame g(height, width);
        bin::read_le_array(in, g.data.data(), g.data.size());
        model.flux_.push(std::move(g));
    }
    if (model.frames_seen_ > 0) {
        model.background_ = img::Frame(height, width);
        bin::read_le_array(in, model.background_.data.data(), model.background_.data.size());
    }
    return model;
}

}  // namespace cseg::bg
