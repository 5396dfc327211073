#include "pipeline/segmenter.hpp"

#include <algorithm>
#include <cstring>

#include "common/error.hpp"
#include "imagecore/filters.hpp"
#include "imagecore/patches.hpp"

namespace cseg::pipe {

img::ScoreMap score_frame(const net::NetworkParams<float>& params, const img::Frame& frame,
                          const img::Frame& background, const SegmentConfig& config) {
    if (!frame.same_size(background)) throw_invalid("frame/background size mismatch");
    const net::NetworkShape& shape = params.shape;
    const int side = shape.input_side;
    if (shape.in_channels != 6) throw_invalid("segmentation needs a 6-channel model");
    if (params.input_mean.size() != 6) throw_state("model carries no training mean");
    if (frame.height < side || frame.width < side)
        throw_invalid("frame smaller than the patch side (" + std::to_string(side) + ")");

    const int stride = config.stride > 0 ? config.stride : side;
    const img::PatchLayout layout =
        img::plan_patches(frame.height, frame.width, side, stride, /*zero_pad=*/false);

    // Mean-centered copies; patches of both feed the stacked 6-channel input.
    img::Frame fc = frame, bc = background;
    const std::size_t pixels = frame.pixel_count();
    for (int c = 0; c < 3; ++c) {
        float* fp = fc.plane(c);
        float* bp = bc.plane(c);
        const float fm = params.input_mean[c], bm = params.input_mean[3 + c];
        for (std::size_t j = 0; j < pixels; ++j) {
            fp[j] -= fm;
            bp[j] -= bm;
        }
    }
    const std::vector<img::Patch> fpatches = img::extract_patches(fc, layout);
    const std::vector<img::Patch> bpatches = img::extract_patches(bc, layout);

    const std::size_t total = layout.patch_count();
    const std::size_t patch_values = static_cast<std::size_t>(side) * side * 3;
    const int out_dim = shape.output_dim();
    std::vector<std::vector<float>> scores(total);

    const int batch = std::max(1, config.batch);
    for (std::size_t lo = 0; lo < total; lo += batch) {
        const std::size_t hi = std::min(total, lo + batch);
        net::Tensor4<float> input(static_cast<int>(hi - lo), 6, side, side);
        for (std::size_t j = lo; j < hi; ++j) {
            float* row = input.sample(static_cast<int>(j - lo));
            std::memcpy(row, fpatches[j].data.data(), patch_values * sizeof(float));
            std::memcpy(row + patch_values, bpatches[j].data.data(), patch_values * sizeof(float));
        }
        const net::Tensor4<float> probs = net::infer(params, input, config.threads);
        for (std::size_t j = lo; j < hi; ++j) {
            const float* row = probs.sample(static_cast<int>(j - lo));
            scores[j].assign(row, row + out_dim);
        }
    }
    return img::reassemble_scores(scores, layout);
}

img::LabelMask segment_frame(const net::NetworkParams<float>& params, const img::Frame& frame,
                             const img::Frame& background, const SegmentConfig& config) {
    img::ScoreMap scores = score_frame(params, frame, background, config);
    if (config.median_kernel > 1)
        scores = img::median_filter(scores, config.median_kernel);
    return img::threshold_map(scores, config.threshold);
}

img::LabelMask segment_frame_resized(const net::NetworkParams<float>& params,
                                     const img::Frame& frame, const img::Frame& background,
                                     int target_height, int target_width,
                                     const SegmentConfig& config) {
    if (target_height <= 0 || target_width <= 0) throw_invalid("target size must be positive");
    const img::Frame f = img::resize_bilinear(frame, target_height, target_width);
    const img::Frame b = img::resize_bilinear(background, target_height, target_width);
    const img::LabelMask m = segment_frame(params, f, b, config);
    return img::resize_nearest(m, frame.height, frame.width);
}

std::vector<img::LabelMask> segment_video(const net::NetworkParams<float>& params,
                                          const std::vector<img::Frame>& frames,
                                          bg::BackgroundModel& model,
                                          const SegmentConfig& config) {
    std::vector<img::LabelMask> masks;
    masks.reserve(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        try {
            const img::Frame bg = model.step(frames[i]);
            masks.push_back(segment_frame(params, frames[i], bg, config));
        } catch (const Error& e) {
            throw Error(e.code(), "frame " + std::to_string(i) + ": " + e.what());
        }
    }
    return masks;
}

}  // namespace cseg::pipe
