#include "pipeline/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bgmodel/background_model.hpp"
#include "common/binary_io.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "imagecore/patches.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cseg::pipe {

GroundTruthCoding GroundTruthCoding::cdnet() {
    GroundTruthCoding c;
    c.table.fill(img::Label::Ignore);
    c.table[0] = img::Label::Background;
    c.table[50] = img::Label::Background;  // hard shadow counts as background
    c.table[255] = img::Label::Foreground;
    // 85 (outside ROI) and 170 (unknown) stay Ignore, as does anything else.
    return c;
}

img::LabelMask GroundTruthCoding::decode(const img::RawImage& raw) const {
    img::LabelMask m(raw.height, raw.width);
    const std::size_t pixels = m.labels.size();
    for (std::size_t i = 0; i < pixels; ++i) {
        // Color-coded ground truth reduces to its first channel (gray in
        // practice for the datasets this follows).
        const std::uint8_t v = raw.data[i * raw.channels];
        m.labels[i] = table[v];
    }
    return m;
}

// ---- manifest ------------------------------------------------------------

namespace {

std::string join_root(const std::string& root, const std::string& path) {
    if (path.empty()) return path;
    fs::path p(path);
    return p.is_absolute() ? p.lexically_normal().string()
                           : (fs::path(root) / p).lexically_normal().string();
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_io("cannot open manifest '" + path + "'");
    DatasetManifest m;
    m.root = fs::absolute(fs::path(path)).parent_path().string();

    std::string line;
    int line_no = 0;
    VideoEntry* current = nullptr;
    auto fail = [&](const std::string& what) {
        throw_format("manifest '" + path + "' line " + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;

        if (key == "root") {
            std::string value;
            if (!(ls >> value)) fail("root needs a path");
            m.root = join_root(fs::absolute(fs::path(path)).parent_path().string(), value);
        } else if (key == "video") {
            std::string id;
            if (!(ls >> id)) fail("video needs an id");
            m.videos.push_back(VideoEntry{});
            current = &m.videos.back();
            current->id = id;
            const std::size_t slash = id.find('/');
            current->category = slash == std::string::npos ? id : id.substr(0, slash);
        } else if (!current) {
            fail("'" + key + "' before any video");
        } else if (key == "category") {
            if (!(ls >> current->category)) fail("category needs a name");
        } else if (key == "roi") {
            std::string value;
            if (!(ls >> value)) fail("roi needs a path");
            current->roi_path = join_root(m.root, value);
        } else if (key == "range") {
            if (!(ls >> current->eval_first >> current->eval_last)) fail("range needs two frame numbers");
        } else if (key == "pair") {
            std::string f, g;
            if (!(ls >> f >> g)) fail("pair needs frame and ground-truth paths");
            current->frames.push_back(join_root(m.root, f));
            current->truths.push_back(join_root(m.root, g));
        } else if (key == "frame") {
            std::string f;
            if (!(ls >> f)) fail("frame needs a path");
            current->frames.push_back(join_root(m.root, f));
            current->truths.push_back("");
        } else {
            fail("unknown key '" + key + "'");
        }
    }
    return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw_io("cannot open manifest '" + path + "' for writing");
    out << "root " << m.root << "\n";
    for (const VideoEntry& v : m.videos) {
        out << "\nvideo " << v.id << "\ncategory " << v.category << "\n";
        if (!v.roi_path.empty()) out << "roi " << v.roi_path << "\n";
        if (v.eval_first != 1 || v.eval_last != std::numeric_limits<int>::max())
            out << "range " << v.eval_first << " " << v.eval_last << "\n";
        for (std::size_t i = 0; i < v.frames.size(); ++i) {
            if (i < v.truths.size() && !v.truths[i].empty())
                out << "pair " << v.frames[i] << " " << v.truths[i] << "\n";
            else
                out << "frame " << v.frames[i] << "\n";
        }
    }
    if (!out) throw_io("write failed for '" + path + "'");
}

// ---- sample store --------------------------------------------------------

namespace {
constexpr char kShardMagic[4] = {'C', 'S', 'D', 'S'};
constexpr std::uint32_t kShardVersion = 1;
// Cap chosen so full-scale stores split into manageable files.
constexpr std::size_t kShardSampleBytesCap = std::size_t(1) << 28;
}  // namespace

void SampleStore::save(const std::string& directory) const {
    const std::size_t n = count();
    fs::create_directories(directory);

    const std::size_t bytes_per_sample = input_dim() * sizeof(float) + 2 * label_dim();
    const std::size_t per_shard =
        std::max<std::size_t>(1, kShardSampleBytesCap / std::max<std::size_t>(1, bytes_per_sample));

    json index;
    index["samples"] = n;
    index["side"] = side;
    index["channels"] = channels;
    index["mean"] = mean;
    index["coding"] = {{"foreground", {255}},
                       {"background", {0, 50}},
                       {"ignore", {85, 170}},
                       {"default", "ignore"}};
    index["shards"] = json::array();

    std::size_t at = 0;
    int shard_no = 0;
    while (at < n || shard_no == 0) {
        const std::size_t k = std::min(per_shard, n - at);
        char name[32];
        std::snprintf(name, sizeof(name), "shard%03d.bin", shard_no);
        std::ostringstream out(std::ios::binary);
        out.write(kShardMagic, 4);
        bin::write_le<std::uint32_t>(out, kShardVersion);
        bin::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(side));
        bin::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(channels));
        bin::write_le<std::uint64_t>(out, k);
        bin::write_le_array(out, inputs.data() + at * input_dim(), k * input_dim());
        std::vector<std::uint8_t> tgt(k * label_dim());
        for (std::size_t j = 0; j < tgt.size(); ++j)
            tgt[j] = targets[at * label_dim() + j] > 0.5f ? 1 : 0;
        bin::write_le_array(out, tgt.data(), tgt.size());
        bin::write_le_array(out, ignores.data() + at * label_dim(), k * label_dim());
        bin::write_checksummed((fs::path(directory) / name).string(), std::move(out).str());
        index["shards"].push_back({{"file", name}, {"samples", k}});
        at += k;
        ++shard_no;
        if (n == 0) break;
    }

    std::ofstream ix((fs::path(directory) / "index.json").string());
    if (!ix) throw_io("cannot write store index in '" + directory + "'");
    ix << index.dump(2) << "\n";
}

SampleStore SampleStore::load(const std::string& directory) {
    const std::string index_path = (fs::path(directory) / "index.json").string();
    std::ifstream ix(index_path);
    if (!ix) throw_io("cannot open store index '" + index_path + "'");
    json index;
    try {
        ix >> index;
    } catch (const json::exception& e) {
        throw_format("store index '" + index_path + "': " + e.what());
    }

    SampleStore s;
    try {
        s.side = index.at("side").get<int>();
        s.channels = index.at("channels").get<int>();
        s.mean = index.at("mean").get<std::vector<float>>();
    } catch (const json::exception& e) {
        throw_format("store index '" + index_path + "': " + e.what());
    }
    if (s.side <= 0 || s.channels <= 0 || s.mean.size() != static_cast<std::size_t>(s.channels))
        throw_format("store index '" + index_path + "': inconsistent shape fields");

    const std::size_t expected = index.value("samples", std::size_t(0));
    for (const auto& shard : index.at("shards")) {
        const std::string file = (fs::path(directory) / shard.at("file").get<std::string>()).string();
        std::istringstream in(bin::read_checksummed(file), std::ios::binary);
        char magic[4];
        in.read(magic, 4);
        if (!in || std::memcmp(magic, kShardMagic, 4) != 0)
            throw_format("'" + file + "' is not a sample shard");
        if (bin::read_le<std::uint32_t>(in) != kShardVersion)
            throw_format("'" + file + "': unsupported shard version");
        if (bin::read_le<std::uint32_t>(in) != static_cast<std::uint32_t>(s.side) ||
            bin::read_le<std::uint32_t>(in) != static_cast<std::uint32_t>(s.channels))
            throw_format("'" + file + "': shard shape disagrees with the index");
        const std::uint64_t k = bin::read_le<std::uint64_t>(in);
        const std::size_t at_in = s.inputs.size(), at_lab = s.targets.size();
        s.inputs.resize(at_in + k * s.input_dim());
        s.targets.resize(at_lab + k * s.label_dim());
        s.ignores.resize(at_lab + k * s.label_dim());
        bin::read_le_array(in, s.inputs.data() + at_in, k * s.input_dim());
        std::vector<std::uint8_t> tgt(k * s.label_dim());
        bin::read_le_array(in, tgt.data(), tgt.size());
        for (std::size_t j = 0; j < tgt.size(); ++j)
            s.targets[at_lab + j] = tgt[j] ? 1.0f : 0.0f;
        bin::read_le_array(in, s.ignores.data() + at_lab, k * s.label_dim());
    }
    if (expected != s.count())
        throw_format("store '" + directory + "': index claims " + std::to_string(expected) +
                     " samples, shards hold " + std::to_string(s.count()));
    return s;
}

// ---- dataset preparation -------------------------------------------------

namespace {

struct VideoSelection {
    std::vector<std::uint8_t> role;  // per frame: 0 none, 1 train, 2 validation
};

// Optional in-ROI raster: true where evaluation/training may look.
struct RoiMask {
    bool present = false;
    std::vector<std::uint8_t> in_roi;

    void load(const std::string& path, int h, int w) {
        if (path.empty()) return;
        img::GrayFrame g = img::luminance(img::read_frame(path));
        if (g.height != h || g.width != w) {
            img::Frame f = img::read_frame(path);
            g = img::luminance(img::resize_bilinear(f, h, w));
        }
        present = true;
        in_roi.resize(g.data.size());
        for (std::size_t i = 0; i < g.data.size(); ++i) in_roi[i] = g.data[i] >= 0.5f ? 1 : 0;
    }
};

img::Frame load_sized_frame(const std::string& path, int h, int w) {
    img::Frame f = img::read_frame(path);
    if (h > 0 && (f.height != h || f.width != w)) f = img::resize_bilinear(f, h, w);
    return f;
}

// Reads bg_cache/<video-id>/bg%06d.png for 1-based frame number `n`.
std::string cache_bg_path(const std::string& cache, const std::string& id, int n) {
    char name[32];
    std::snprintf(name, sizeof(name), "bg%06d.png", n);
    return (fs::path(cache) / id / name).string();
}

}  // namespace

PreparedDataset prepare_dataset(const DatasetManifest& manifest, const SamplingPolicy& policy,
                                const PrepareOptions& options) {
    if (manifest.videos.empty()) throw_invalid("manifest lists no videos");
    if (policy.stride <= 0) throw_invalid("patch stride must be positive");
    if ((options.target_height > 0) != (options.target_width > 0))
        throw_invalid("target size needs both height and width");

    std::mt19937 rng(policy.seed);
    const GroundTruthCoding coding = GroundTruthCoding::cdnet();

    // Seeded disjoint train/validation frame selection per video.
    std::vector<VideoSelection> selections(manifest.videos.size());
    for (std::size_t vi = 0; vi < manifest.videos.size(); ++vi) {
        const VideoEntry& v = manifest.videos[vi];
        if (v.frames.empty()) throw_invalid("video '" + v.id + "' lists no frames");
        std::vector<int> eligible;
        for (int i = 0; i < static_cast<int>(v.frames.size()); ++i)
            if (v.frame_evaluable(i)) eligible.push_back(i);
        seeded_shuffle(eligible, rng);
        selections[vi].role.assign(v.frames.size(), 0);
        const int t = std::min<int>(policy.train_frames_per_video, eligible.size());
        const int va = std::min<int>(policy.val_frames_per_video,
                                     static_cast<int>(eligible.size()) - t);
        for (int j = 0; j < t; ++j) selections[vi].role[eligible[j]] = 1;
        for (int j = 0; j < va; ++j) selections[vi].role[eligible[t + j]] = 2;
    }

    // The per-sequence background pass is deterministic, so it runs once to
    // gather the training mean and once more to emit patches; O(1) memory.
    auto for_each_selected = [&](std::size_t vi, auto&& visit) {
        const VideoEntry& v = manifest.videos[vi];
        const img::Frame probe = img::read_frame(v.frames[0]);
        const int h = options.target_height > 0 ? options.target_height : probe.height;
        const int w = options.target_width > 0 ? options.target_width : probe.width;

        bg::BackgroundConfig bg_cfg;
        bg_cfg.naive_tau = options.naive_tau;
        bg::BackgroundModel model(h, w, bg_cfg);
        for (int i = 0; i < static_cast<int>(v.frames.size()); ++i) {
            const img::Frame frame = load_sized_frame(v.frames[i], h, w);
            img::Frame bg = options.bg_cache.empty()
                                ? model.step(frame)
                                : load_sized_frame(cache_bg_path(options.bg_cache, v.id, i + 1), h, w);
            if (selections[vi].role[i] != 0)
                visit(i, selections[vi].role[i], frame, bg, h, w);
        }
    };

    // Pass 1: per-channel mean over training frames (video then background).
    double sums[6] = {0, 0, 0, 0, 0, 0};
    std::size_t mean_pixels = 0;
    for (std::size_t vi = 0; vi < manifest.videos.size(); ++vi) {
        for_each_selected(vi, [&](int, int role, const img::Frame& frame, const img::Frame& bg,
                                  int h, int w) {
            if (role != 1) return;
            const std::size_t n = static_cast<std::size_t>(h) * w;
            for (int c = 0; c < 3; ++c) {
                const float* fp = frame.plane(c);
                const float* bp = bg.plane(c);
                double fs = 0.0, bs = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    fs += fp[j];
                    bs += bp[j];
                }
                sums[c] += fs;
                sums[3 + c] += bs;
            }
            mean_pixels += n;
        });
    }
    if (mean_pixels == 0)
        throw_invalid("no usable training frames (check ground-truth paths and ranges)");
    std::vector<float> mean(6);
    for (int c = 0; c < 6; ++c) mean[c] = static_cast<float>(sums[c] / mean_pixels);

    PreparedDataset out;
    for (SampleStore* s : {&out.train, &out.validation}) {
        s->side = options.patch_side;
        s->channels = 6;
        s->mean = mean;
    }

    // Pass 2: subtract the mean, then cut zero-padded patch triplets. Zero
    // stands for "at the mean" once frames are centered, so padding and mean
    // subtraction commute.
    const int side = options.patch_side;
    for (std::size_t vi = 0; vi < manifest.videos.size(); ++vi) {
        const VideoEntry& v = manifest.videos[vi];
        RoiMask roi;
        bool roi_loaded = false;
        for_each_selected(vi, [&](int i, int role, const img::Frame& frame, const img::Frame& bg,
                                  int h, int w) {
            img::LabelMask gt;
            try {
                gt = coding.decode(img::read_image(v.truths[i]));
            } catch (const Error& e) {
                if (!options.quiet)
                    std::cerr << "warning: skipping frame '" << v.truths[i] << "': " << e.what()
                              << "\n";
                return;
            }
            if (gt.height != h || gt.width != w) gt = img::resize_nearest(gt, h, w);
            if (!roi_loaded) {
                roi.load(v.roi_path, h, w);
                roi_loaded = true;
            }
            if (roi.present)
                for (std::size_t j = 0; j < gt.labels.size(); ++j)
                    if (!roi.in_roi[j]) gt.labels[j] = img::Label::Ignore;

            img::Frame fc = frame, bc = bg;
            const std::size_t n = static_cast<std::size_t>(h) * w;
            for (int c = 0; c < 3; ++c) {
                float* fp = fc.plane(c);
                float* bp = bc.plane(c);
                for (std::size_t j = 0; j < n; ++j) {
                    fp[j] -= mean[c];
                    bp[j] -= mean[3 + c];
                }
            }

            const img::PatchLayout layout = img::plan_patches(h, w, side, policy.stride, true);
            const std::vector<img::Patch> fpatches = img::extract_patches(fc, layout);
            const std::vector<img::Patch> bpatches = img::extract_patches(bc, layout);
            const std::vector<img::LabelPatch> lpatches = img::extract_label_patches(gt, layout);

            std::vector<int> order(fpatches.size());
            for (std::size_t j = 0; j < order.size(); ++j) order[j] = static_cast<int>(j);
            if (policy.max_patches_per_frame > 0 &&
                static_cast<int>(order.size()) > policy.max_patches_per_frame) {
                seeded_shuffle(order, rng);
                order.resize(policy.max_patches_per_frame);
            }

            SampleStore& store = role == 1 ? out.train : out.validation;
            const std::size_t label_values = static_cast<std::size_t>(side) * side;
            for (int j : order) {
                store.inputs.insert(store.inputs.end(), fpatches[j].data.begin(),
                                    fpatches[j].data.end());
                store.inputs.insert(store.inputs.end(), bpatches[j].data.begin(),
                                    bpatches[j].data.end());
                for (std::size_t k = 0; k < label_values; ++k) {
                    const img::Label l = lpatches[j].labels[k];
                    store.targets.push_back(l == img::Label::Foreground ? 1.0f : 0.0f);
                    store.ignores.push_back(l == img::Label::Ignore ? 1 : 0);
                }
            }
        });
    }

    if (out.train.count() == 0) throw_invalid("dataset preparation produced no training samples");
    return out;
}

}  // namespace cseg::pipe
