#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "imagecore/frame.hpp"
#include "imagecore/image_io.hpp"

namespace cseg::pipe {

// Total mapping from 8-bit ground-truth values to ternary labels.
struct GroundTruthCoding {
    std::array<img::Label, 256> table{};

    /// Change-detection convention: 255 FG; 0 and 50 (hard shadow) BG;
    /// 85 (outside ROI), 170 (unknown) and anything unlisted IGNORE.
    static GroundTruthCoding cdnet();

    img::LabelMask decode(const img::RawImage& raw) const;
};

struct VideoEntry {
    std::string id;        // e.g. "baseline/highway"
    std::string category;  // e.g. "baseline"
    std::vector<std::string> frames;  // absolute paths, temporal order
    std::vector<std::string> truths;  // parallel to frames; may be empty
    std::string roi_path;             // optional ignore raster
    // 1-based inclusive range of frames with usable ground truth.
    int eval_first = 1;
    int eval_last = std::numeric_limits<int>::max();

    bool frame_evaluable(int index) const {  // index is 0-based
        return index + 1 >= eval_first && index + 1 <= eval_last &&
               index < static_cast<int>(truths.size()) && !truths[index].empty();
    }
};

struct DatasetManifest {
    std::string root;
    std::vector<VideoEntry> videos;
};

/// Parses the line-oriented manifest format ('#' comments; keys: root,
/// video, category, roi, range, pair, frame). Paths become absolute against
/// the root, which itself defaults to the manifest's directory.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& m, const std::string& path);

struct SamplingPolicy {
    int train_frames_per_video = 150;
    int val_frames_per_video = 20;
    int stride = 10;
    std::uint32_t seed = 0;
    // 0 keeps every patch of a selected frame; otherwise a seeded subset.
    int max_patches_per_frame = 0;
};

// Mean-subtracted training samples, kept in one flat block per field.
// inputs: n x channels x side x side (video RGB stacked on background RGB);
// targets: n x side^2 in {0,1}; ignores: n x side^2 flags.
struct SampleStore {
    int side = 0;
    int channels = 0;
    std::vector<float> mean;  // per channel, the value already subtracted
    std::vector<float> inputs;
    std::vector<float> targets;
    std::vector<std::uint8_t> ignores;

    std::size_t count() const {
        return side == 0 ? 0
                         : inputs.size() / (static_cast<std::size_t>(channels) * side * side);
    }
    std::size_t input_dim() const { return static_cast<std::size_t>(channels) * side * side; }
    std::size_t label_dim() const { return static_cast<std::size_t>(side) * side; }

    const float* input(std::size_t i) const { return inputs.data() + i * input_dim(); }
    const float* target(std::size_t i) const { return targets.data() + i * label_dim(); }
    const std::uint8_t* ignore(std::size_t i) const { return ignores.data() + i * label_dim(); }

    /// Writes index.json plus packed shards into the directory.
    void save(const std::string& directory) const;
    static SampleStore load(const std::string& directory);
};

struct PrepareOptions {
    // Frames are resampled to this size first; 0 keeps the native size.
    int target_height = 0;
    int target_width = 0;
    int patch_side = 37;
    // Backgrounds come from a background-model pass over each sequence, or
    // from pre-rendered images under bg_cache/<video-id>/bg%06d.png.
    std::string bg_cache;
    double naive_tau = 0.08;
    bool quiet = false;  // suppress skip warnings on stderr
};

struct PreparedDataset {
    SampleStore train;
    SampleStore validation;
};

/// Builds aligned (video patch, background patch, labels) triplets for
/// seeded train/validation frame subsets of every manifest video, then
/// subtracts the global per-channel training mean from both stores.
PreparedDataset prepare_dataset(const DatasetManifest& manifest, const SamplingPolicy& policy,
                                const PrepareOptions& options = {});

}  // namespace cseg::pipe
