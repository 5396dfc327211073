#pragma once

#include <vector>

#include "bgmodel/background_model.hpp"
#include "imagecore/frame.hpp"
#include "network/model.hpp"

namespace cseg::pipe {

struct SegmentConfig {
    float threshold = 0.3f;
    int median_kernel = 9;
    // Patch tiling step; 0 means one network pass per pixel (step = side),
    // with a clamped final row/column and averaging on the overlap seams.
    int stride = 0;
    int batch = 64;  // patches per network call
    int threads = 1;
};

/// Probability map for one frame: mean-subtract (stored training mean), tile
/// into side x side patch pairs, run the network, reassemble with overlap
/// averaging. No post-processing.
img::ScoreMap score_frame(const net::NetworkParams<float>& params, const img::Frame& frame,
                          const img::Frame& background, const SegmentConfig& config = {});

/// score_frame followed by the median filter and the probability threshold.
img::LabelMask segment_frame(const net::NetworkParams<float>& params, const img::Frame& frame,
                             const img::Frame& background, const SegmentConfig& config = {});

/// Resampling wrapper: runs the segmentation at target dimensions and maps
/// the mask back to the frame's native size.
img::LabelMask segment_frame_resized(const net::NetworkParams<float>& params,
                                     const img::Frame& frame, const img::Frame& background,
                                     int target_height, int target_width,
                                     const SegmentConfig& config = {});

/// Streams frames through the background model (naive hook) and segments
/// each against its freshly rendered background.
std::vector<img::LabelMask> segment_video(const net::NetworkParams<float>& params,
                                          const std::vector<img::Frame>& frames,
                                          bg::BackgroundModel& model,
                                          const SegmentConfig& config = {});

}  // namespace cseg::pipe
