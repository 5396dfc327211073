#include "cseg.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bgmodel/background_model.hpp"
#include "common/error.hpp"
#include "common/parallel.hpp"
#include "common/rng.hpp"
#include "evaluation/cdnet.hpp"
#include "evaluation/metrics.hpp"
#include "imagecore/image_io.hpp"
#include "network/model.hpp"
#include "pipeline/dataset.hpp"
#include "pipeline/segmenter.hpp"
#include "pipeline/trainer.hpp"

namespace fs = std::filesystem;

using namespace cseg;

struct cseg_image {
    img::Frame frame;
};

struct cseg_bgmodel {
    bg::BackgroundModel model;
};

struct cseg_model {
    net::NetworkParams<float> params;
};

namespace {

thread_local std::string t_last_error;

cseg_status to_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return CSEG_ERR_INVALID_ARGUMENT;
        case ErrorCode::io: return CSEG_ERR_IO;
        case ErrorCode::format: return CSEG_ERR_FORMAT;
        case ErrorCode::state: return CSEG_ERR_STATE;
        case ErrorCode::not_ready: return CSEG_ERR_NOT_READY;
        case ErrorCode::internal: return CSEG_ERR_INTERNAL;
    }
    return CSEG_ERR_INTERNAL;
}

template <typename Fn>
cseg_status guarded(Fn&& fn) noexcept {
    try {
        fn();
        t_last_error.clear();
        return CSEG_OK;
    } catch (const Error& e) {
        t_last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        t_last_error = "out of memory";
        return CSEG_ERR_INTERNAL;
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return CSEG_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (p == nullptr) throw_invalid(std::string(what) + " must not be null");
}

void require_path(const char* p, const char* what) {
    if (p == nullptr || *p == '\0') throw_invalid(std::string(what) + " is required");
}

char* dup_string(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (p == nullptr) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

const img::Frame& frame_of(const cseg_image* image, const char* what) {
    require(image, what);
    return image->frame;
}

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    static const char* kExts[] = {".png", ".jpg", ".jpeg", ".pgm", ".ppm", ".bmp"};
    return std::any_of(std::begin(kExts), std::end(kExts),
                       [&](const char* e) { return ext == e; });
}

std::vector<std::string> list_frames(const std::string& dir) {
    if (!fs::is_directory(dir)) throw_io("not a directory: " + dir);
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && is_image_file(entry.path()))
            out.push_back(entry.path().string());
    std::sort(out.begin(), out.end());
    if (out.empty()) throw_invalid("no image frames in " + dir);
    return out;
}

bg::BackgroundConfig bg_config(int bm_mode, double naive_tau) {
    if (bm_mode != CSEG_BM_MONOTONE_DECREASING && bm_mode != CSEG_BM_AS_PRINTED)
        throw_invalid("bm_mode must be 0 (monotone-decreasing) or 1 (as-printed)");
    if (!(naive_tau > 0.0)) throw_invalid("naive_tau must be positive");
    bg::BackgroundConfig cfg;
    cfg.bm_mode = bm_mode == CSEG_BM_AS_PRINTED ? bg::BmMode::AsPrinted
                                                : bg::BmMode::MonotoneDecreasing;
    cfg.naive_tau = naive_tau;
    return cfg;
}

void check_frame_size(const img::Frame& f, int height, int width, const std::string& path) {
    if (f.height != height || f.width != width)
        throw_invalid(path + ": frame is " + std::to_string(f.height) + "x" +
                      std::to_string(f.width) + " but the sequence started at " +
                      std::to_string(height) + "x" + std::to_string(width));
}

std::string numbered(const char* stem, int n) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%06d.png", stem, n);
    return buf;
}

// Folds a region-of-interest raster (bright = evaluated) into a label mask.
void apply_roi(img::LabelMask& labels, const std::string& roi_path, int height, int width,
               std::vector<std::uint8_t>& cache, bool& loaded) {
    if (roi_path.empty()) return;
    if (!loaded) {
        img::GrayFrame g = img::luminance(img::read_frame(roi_path));
        if (g.height != height || g.width != width)
            g = img::luminance(
                img::resize_bilinear(img::read_frame(roi_path), height, width));
        cache.resize(g.data.size());
        for (std::size_t i = 0; i < g.data.size(); ++i)
            cache[i] = g.data[i] >= 0.5f ? 1 : 0;
        loaded = true;
    }
    for (std::size_t i = 0; i < labels.labels.size(); ++i)
        if (!cache[i]) labels.labels[i] = img::Label::Ignore;
}

// Deterministic scene: fixed textured background with a moving square.
std::vector<img::Frame> bench_frames(int count, int height, int width, std::uint32_t seed) {
    std::vector<img::Frame> frames;
    frames.reserve(count);
    img::Frame base(height, width);
    std::mt19937 gen(seed);
    for (float& v : base.data) v = 0.25f + 0.5f * static_cast<float>(unit_rand(gen));
    const int sq = std::max(8, height / 6);
    for (int t = 0; t < count; ++t) {
        img::Frame f = base;
        const int y0 = (t * 3) % std::max(1, height - sq);
        const int x0 = (t * 5) % std::max(1, width - sq);
        for (int c = 0; c < 3; ++c)
            for (int y = y0; y < y0 + sq; ++y)
                for (int x = x0; x < x0 + sq; ++x)
                    f.at(c, y, x) = ((y ^ x) & 1) ? 0.9f : 0.05f;
        frames.push_back(std::move(f));
    }
    return frames;
}

struct Timing {
    std::vector<double> fps;  // one entry per repeat

    double mean() const {
        double s = 0.0;
        for (double v : fps) s += v;
        return fps.empty() ? 0.0 : s / static_cast<double>(fps.size());
    }
    double variance() const {
        if (fps.size() < 2) return 0.0;
        const double m = mean();
        double s = 0.0;
        for (double v : fps) s += (v - m) * (v - m);
        return s / static_cast<double>(fps.size() - 1);
    }
};

template <typename Fn>
void time_repeats(Timing& timing, int repeats, int frames, Fn&& pass) {
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        pass();
        const auto t1 = std::chrono::steady_clock::now();
        const double seconds = std::chrono::duration<double>(t1 - t0).count();
        timing.fps.push_back(frames / std::max(seconds, 1e-9));
    }
}

void report_line(std::ostringstream& os, const char* name, const Timing& t) {
    char head[128];
    std::snprintf(head, sizeof(head), "%-18s %8.2f fps  (variance %.3f; runs:", name, t.mean(),
                  t.variance());
    os << head;
    for (double v : t.fps) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), " %.2f", v);
        os << buf;
    }
    os << ")\n";
}

}  // namespace

extern "C" {

const char* cseg_last_error(void) { return t_last_error.c_str(); }

const char* cseg_version(void) { return "0.1.0"; }

void cseg_free(void* buffer) { std::free(buffer); }

/* ---------------------------------------------------------------- images */

cseg_status cseg_image_read(const char* path, cseg_image** out) {
    return guarded([&] {
        require_path(path, "path");
        require(out, "out");
        auto image = std::make_unique<cseg_image>();
        image->frame = img::read_frame(path);
        *out = image.release();
    });
}

cseg_status cseg_image_new(int height, int width, const float* planar_rgb, cseg_image** out) {
    return guarded([&] {
        require(planar_rgb, "planar_rgb");
        require(out, "out");
        if (height <= 0 || width <= 0) throw_invalid("image dimensions must be positive");
        auto image = std::make_unique<cseg_image>();
        image->frame = img::Frame(height, width);
        std::copy_n(planar_rgb, image->frame.data.size(), image->frame.data.begin());
        *out = image.release();
    });
}

void cseg_image_free(cseg_image* image) { delete image; }

int cseg_image_height(const cseg_image* image) { return image ? image->frame.height : 0; }

int cseg_image_width(const cseg_image* image) { return image ? image->frame.width : 0; }

const float* cseg_image_data(const cseg_image* image) {
    return image ? image->frame.data.data() : nullptr;
}

cseg_status cseg_image_write(const cseg_image* image, const char* path) {
    return guarded([&] {
        require_path(path, "path");
        img::write_frame(path, frame_of(image, "image"));
    });
}

cseg_status cseg_mask_write(const uint8_t* mask, int height, int width, const char* path) {
    return guarded([&] {
        require(mask, "mask");
        require_path(path, "path");
        if (height <= 0 || width <= 0) throw_invalid("mask dimensions must be positive");
        img::RawImage raw;
        raw.height = height;
        raw.width = width;
        raw.channels = 1;
        raw.data.assign(mask, mask + static_cast<std::size_t>(height) * width);
        img::decode_mask(raw);  // reject stray byte values before writing
        img::write_image(path, raw);
    });
}

cseg_status cseg_mask_read(const char* path, int* height, int* width, uint8_t** mask_out) {
    return guarded([&] {
        require_path(path, "path");
        require(mask_out, "mask_out");
        img::LabelMask m = img::read_mask(path);
        img::RawImage raw = img::read_image(path);  // for the dimensions
        if (height) *height = raw.height;
        if (width) *width = raw.width;
        auto* bytes = static_cast<uint8_t*>(std::malloc(m.labels.size()));
        if (bytes == nullptr) throw std::bad_alloc();
        for (std::size_t i = 0; i < m.labels.size(); ++i) {
            switch (m.labels[i]) {
                case img::Label::Foreground: bytes[i] = img::kMaskForeground; break;
                case img::Label::Ignore: bytes[i] = img::kMaskIgnore; break;
                default: bytes[i] = img::kMaskBackground; break;
            }
        }
        *mask_out = bytes;
    });
}

/* ------------------------------------------------------- background model */

cseg_status cseg_bgmodel_new(int height, int width, int bm_mode, double naive_tau,
                             cseg_bgmodel** out) {
    return guarded([&] {
        require(out, "out");
        *out = new cseg_bgmodel{bg::BackgroundModel(height, width, bg_config(bm_mode, naive_tau))};
    });
}

void cseg_bgmodel_free(cseg_bgmodel* model) { delete model; }

cseg_status cseg_bgmodel_step(cseg_bgmodel* model, const cseg_image* frame) {
    return guarded([&] {
        require(model, "model");
        model->model.step(frame_of(frame, "frame"));
    });
}

cseg_status cseg_bgmodel_background(const cseg_bgmodel* model, cseg_image** out) {
    return guarded([&] {
        require(model, "model");
        require(out, "out");
        auto image = std::make_unique<cseg_image>();
        image->frame = model->model.background();
        *out = image.release();
    });
}

cseg_status cseg_bgmodel_motion(const cseg_bgmodel* model, double* fs, double* bm,
                                int* padding) {
    return guarded([&] {
        require(model, "model");
        const bg::MotionState& m = model->model.motion();
        if (fs) *fs = m.fs_filtered;
        if (bm) *bm = m.bm;
        if (padding) *padding = m.padding_radius;
    });
}

int cseg_bgmodel_height(const cseg_bgmodel* model) { return model ? model->model.height() : 0; }

int cseg_bgmodel_width(const cseg_bgmodel* model) { return model ? model->model.width() : 0; }

cseg_status cseg_bgmodel_save(const cseg_bgmodel* model, const char* path) {
    return guarded([&] {
        require(model, "model");
        require_path(path, "path");
        model->model.save(path);
    });
}

cseg_status cseg_bgmodel_load(const char* path, cseg_bgmodel** out) {
    return guarded([&] {
        require_path(path, "path");
        require(out, "out");
        *out = new cseg_bgmodel{bg::BackgroundModel::load(path)};
    });
}

/* ---------------------------------------------------- segmentation model */

cseg_status cseg_model_load(const char* path, cseg_model** out) {
    return guarded([&] {
        require_path(path, "path");
        require(out, "out");
        auto model = std::make_unique<cseg_model>();
        model->params = net::load_model(path).params;
        *out = model.release();
    });
}

void cseg_model_free(cseg_model* model) { delete model; }

int cseg_model_input_side(const cseg_model* model) {
    return model ? model->params.shape.input_side : 0;
}

cseg_status cseg_model_score(const cseg_model* model, const cseg_image* frame,
                             const cseg_image* background, int threads, float* scores_out) {
    return guarded([&] {
        require(model, "model");
        require(scores_out, "scores_out");
        pipe::SegmentConfig cfg;
        cfg.threads = resolve_threads(threads);
        img::ScoreMap scores = pipe::score_frame(model->params, frame_of(frame, "frame"),
                                                 frame_of(background, "background"), cfg);
        std::copy(scores.scores.begin(), scores.scores.end(), scores_out);
    });
}

cseg_status cseg_model_segment(const cseg_model* model, const cseg_image* frame,
                               const cseg_image* background, float threshold,
                               int median_kernel, int threads, uint8_t* mask_out) {
    return guarded([&] {
        require(model, "model");
        require(mask_out, "mask_out");
        pipe::SegmentConfig cfg;
        cfg.threshold = threshold;
        cfg.median_kernel = median_kernel;
        cfg.threads = resolve_threads(threads);
        img::LabelMask m = pipe::segment_frame(model->params, frame_of(frame, "frame"),
                                               frame_of(background, "background"), cfg);
        for (std::size_t i = 0; i < m.labels.size(); ++i)
            mask_out[i] = m.labels[i] == img::Label::Foreground ? img::kMaskForeground
                                                                : img::kMaskBackground;
    });
}

/* -------------------------------------------------------------- metrics */

cseg_status cseg_confusion_accumulate(const uint8_t* pred, const uint8_t* truth, size_t count,
                                      cseg_confusion* inout) {
    return guarded([&] {
        require(pred, "pred");
        require(truth, "truth");
        require(inout, "inout");
        for (size_t i = 0; i < count; ++i) {
            if (truth[i] == img::kMaskIgnore) continue;
            const bool p = pred[i] == img::kMaskForeground;
            if (truth[i] == img::kMaskForeground)
                p ? ++inout->tp : ++inout->fn;
            else
                p ? ++inout->fp : ++inout->tn;
        }
    });
}

void cseg_metrics(const cseg_confusion* counts, double out[7]) {
    const double nan = std::nan("");
    for (int i = 0; i < 7; ++i) out[i] = nan;
    if (counts == nullptr) return;
    eval::ConfusionCounts c{counts->tp, counts->fp, counts->tn, counts->fn};
    const eval::MetricSet m = eval::metrics(c);
    const std::optional<double> vals[7] = {m.re, m.sp, m.fpr, m.fnr, m.pwc, m.fm, m.pr};
    for (int i = 0; i < 7; ++i)
        if (vals[i]) out[i] = *vals[i];
}

/* ------------------------------------------------------------ whole runs */

void cseg_build_bg_options_init(cseg_build_bg_options* opt) {
    if (!opt) return;
    *opt = {};
    opt->every = 1;
    opt->bm_mode = CSEG_BM_MONOTONE_DECREASING;
    opt->naive_tau = 0.08;
}

cseg_status cseg_run_build_bg(const cseg_build_bg_options* opt) {
    return guarded([&] {
        require(opt, "options");
        require_path(opt->frames_dir, "frames_dir");
        require_path(opt->out_dir, "out_dir");
        if (opt->every < 1) throw_invalid("every must be >= 1");

        const std::vector<std::string> files = list_frames(opt->frames_dir);
        fs::create_directories(opt->out_dir);
        const fs::path out(opt->out_dir);
        std::ofstream log(out / "motion_log.txt");
        if (!log) throw_io("cannot write " + (out / "motion_log.txt").string());
        log << "# frame fs bm padding\n";

        std::unique_ptr<bg::BackgroundModel> model;
        for (std::size_t i = 0; i < files.size(); ++i) {
            const img::Frame f = img::read_frame(files[i]);
            if (!model)
                model = std::make_unique<bg::BackgroundModel>(
                    f.height, f.width, bg_config(opt->bm_mode, opt->naive_tau));
            else
                check_frame_size(f, model->height(), model->width(), files[i]);
            const img::Frame bg = model->step(f);

            const bg::MotionState& m = model->motion();
            char row[96];
            std::snprintf(row, sizeof(row), "%zu %.6f %.4f %d\n", i + 1, m.fs_filtered, m.bm,
                          m.padding_radius);
            log << row;

            if (i % static_cast<std::size_t>(opt->every) == 0 || i + 1 == files.size())
                img::write_frame((out / numbered("bg", static_cast<int>(i) + 1)).string(), bg);
        }
        if (!log.flush()) throw_io("failed writing " + (out / "motion_log.txt").string());
        if (opt->state_out && *opt->state_out) model->save(opt->state_out);
    });
}

void cseg_train_options_init(cseg_train_options* opt) {
    if (!opt) return;
    *opt = {};
    opt->epochs = 10;
    opt->batch = 150;
    opt->lr = 2.5e-3;
    opt->bm_mode = CSEG_BM_MONOTONE_DECREASING;
    opt->naive_tau = 0.08;
    opt->train_frames_per_video = 150;
    opt->val_frames_per_video = 20;
    opt->patch_stride = 10;
}

cseg_status cseg_run_train(const cseg_train_options* opt) {
    return guarded([&] {
        require(opt, "options");
        require_path(opt->model_out, "model_out");
        const bool from_store = opt->store && *opt->store;
        const bool from_root = opt->root && *opt->root;
        if (from_store == from_root)
            throw_invalid("exactly one of root and store is required");

        pipe::PreparedDataset data;
        if (from_store) {
            const fs::path base(opt->store);
            data.train = pipe::SampleStore::load((base / "train").string());
            if (fs::exists(base / "val" / "index.json"))
                data.validation = pipe::SampleStore::load((base / "val").string());
        } else {
            const pipe::DatasetManifest manifest = eval::load_cdnet(opt->root);
            pipe::SamplingPolicy policy;
            policy.train_frames_per_video = opt->train_frames_per_video;
            policy.val_frames_per_video = opt->val_frames_per_video;
            policy.stride = opt->patch_stride;
            policy.seed = opt->seed;
            policy.max_patches_per_frame = opt->max_patches_per_frame;
            pipe::PrepareOptions prep;
            prep.target_height = opt->target_height;
            prep.target_width = opt->target_width;
            prep.naive_tau = opt->naive_tau;
            prep.quiet = opt->quiet != 0;
            data = pipe::prepare_dataset(manifest, policy, prep);
        }
        if (opt->store_out && *opt->store_out) {
            const fs::path base(opt->store_out);
            data.train.save((base / "train").string());
            if (data.validation.count() > 0) data.validation.save((base / "val").string());
        }

        pipe::TrainConfig cfg;
        cfg.epochs = opt->epochs;
        cfg.batch = opt->batch;
        cfg.lr = static_cast<float>(opt->lr);
        cfg.seed = opt->seed;
        cfg.threads = resolve_threads(opt->threads);
        cfg.quiet = opt->quiet != 0;
        const pipe::SampleStore* val =
            data.validation.count() > 0 ? &data.validation : nullptr;
        pipe::TrainResult result = pipe::train(data.train, val, cfg);

        const fs::path model_path(opt->model_out);
        if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
        net::save_model(model_path.string(), result.params, &result.optimizer);
        const std::string history = opt->history_out && *opt->history_out
                                        ? std::string(opt->history_out)
                                        : model_path.string() + ".history";
        pipe::save_history(history, result.history);
    });
}

void cseg_segment_options_init(cseg_segment_options* opt) {
    if (!opt) return;
    *opt = {};
    opt->threshold = 0.3f;
    opt->median = 9;
    opt->bm_mode = CSEG_BM_MONOTONE_DECREASING;
    opt->naive_tau = 0.08;
}

cseg_status cseg_run_segment(const cseg_segment_options* opt) {
    return guarded([&] {
        require(opt, "options");
        require_path(opt->frames_dir, "frames_dir");
        require_path(opt->model, "model");
        require_path(opt->out_dir, "out_dir");

        const std::vector<std::string> files = list_frames(opt->frames_dir);
        const net::NetworkParams<float> params = net::load_model(opt->model).params;
        fs::create_directories(opt->out_dir);
        const fs::path out(opt->out_dir);

        pipe::SegmentConfig cfg;
        cfg.threshold = opt->threshold;
        cfg.median_kernel = opt->median;
        cfg.threads = resolve_threads(opt->threads);

        std::unique_ptr<bg::BackgroundModel> model;
        for (std::size_t i = 0; i < files.size(); ++i) {
            const img::Frame f = img::read_frame(files[i]);
            if (!model)
                model = std::make_unique<bg::BackgroundModel>(
                    f.height, f.width, bg_config(opt->bm_mode, opt->naive_tau));
            else
                check_frame_size(f, model->height(), model->width(), files[i]);
            const img::Frame background = model->step(f);

            img::LabelMask mask;
            const bool resample = opt->target_height > 0 && opt->target_width > 0 &&
                                  (opt->target_height != f.height || opt->target_width != f.width);
            if (resample)
                mask = pipe::segment_frame_resized(params, f, background, opt->target_height,
                                                   opt->target_width, cfg);
            else
                mask = pipe::segment_frame(params, f, background, cfg);
            img::write_mask((out / numbered("bin", static_cast<int>(i) + 1)).string(), mask);
        }
    });
}

void cseg_evaluate_options_init(cseg_evaluate_options* opt) {
    if (!opt) return;
    *opt = {};
}

cseg_status cseg_run_evaluate(const cseg_evaluate_options* opt, char** report_out) {
    return guarded([&] {
        require(opt, "options");
        require_path(opt->root, "root");
        require_path(opt->masks, "masks");

        const pipe::DatasetManifest manifest = eval::load_cdnet(opt->root);
        const pipe::GroundTruthCoding coding = pipe::GroundTruthCoding::cdnet();
        const fs::path masks_root(opt->masks);

        std::vector<eval::VideoScore> scores;
        for (const pipe::VideoEntry& video : manifest.videos) {
            eval::ConfusionCounts counts;
            bool any = false;
            std::vector<std::uint8_t> roi_cache;
            bool roi_loaded = false;
            for (std::size_t i = 0; i < video.frames.size(); ++i) {
                if (!video.frame_evaluable(static_cast<int>(i))) continue;
                const img::RawImage gt_raw = img::read_image(video.truths[i]);
                img::LabelMask gt = coding.decode(gt_raw);
                apply_roi(gt, video.roi_path, gt_raw.height, gt_raw.width, roi_cache,
                          roi_loaded);

                const fs::path mask_path =
                    masks_root / video.id / numbered("bin", static_cast<int>(i) + 1);
                if (!fs::is_regular_file(mask_path))
                    throw_io(video.id + ": missing mask " + mask_path.string());
                const img::RawImage mask_raw = img::read_image(mask_path.string());
                if (mask_raw.height != gt_raw.height || mask_raw.width != gt_raw.width)
                    throw_invalid(mask_path.string() + ": mask is " +
                                  std::to_string(mask_raw.height) + "x" +
                                  std::to_string(mask_raw.width) + " but ground truth is " +
                                  std::to_string(gt_raw.height) + "x" +
                                  std::to_string(gt_raw.width));
                counts += eval::accumulate(img::decode_mask(mask_raw), gt);
                any = true;
            }
            if (!any) {
                if (!opt->quiet)
                    std::fprintf(stderr, "warning: %s has no evaluable frames, skipping\n",
                                 video.id.c_str());
                continue;
            }
            scores.push_back({video.id, video.category, eval::metrics(counts)});
        }
        if (scores.empty())
            throw_invalid(std::string(opt->root) + ": no video had evaluable frames");

        const eval::Aggregate agg = eval::aggregate(scores);
        const std::string text = eval::report_text(agg);
        if (opt->report_txt && *opt->report_txt) {
            std::ofstream f(opt->report_txt);
            if (!(f << text)) throw_io(std::string("cannot write ") + opt->report_txt);
        }
        if (opt->report_json && *opt->report_json) {
            std::ofstream f(opt->report_json);
            if (!(f << eval::report_json(agg)))
                throw_io(std::string("cannot write ") + opt->report_json);
        }
        if (report_out) *report_out = dup_string(text);
    });
}

void cseg_bench_options_init(cseg_bench_options* opt) {
    if (!opt) return;
    *opt = {};
    opt->height = 240;
    opt->width = 320;
    opt->frames = 50;
    opt->repeats = 3;
}

cseg_status cseg_run_bench(const cseg_bench_options* opt, double fps_out[3],
                           char** report_out) {
    return guarded([&] {
        require(opt, "options");
        if (opt->frames < 1 || opt->repeats < 1)
            throw_invalid("frames and repeats must be >= 1");

        net::NetworkParams<float> params;
        if (opt->model && *opt->model)
            params = net::load_model(opt->model).params;
        else
            params = net::init_params<float>(net::NetworkShape{}, opt->seed);
        if (opt->height < params.shape.input_side || opt->width < params.shape.input_side)
            throw_invalid("bench size must be at least the patch side (" +
                          std::to_string(params.shape.input_side) + ")");

        const int n = opt->frames;
        const int threads = resolve_threads(opt->threads);
        const std::vector<img::Frame> frames =
            bench_frames(n, opt->height, opt->width, opt->seed);
        const bg::BackgroundConfig bg_cfg;  // defaults; timing only

        Timing bg_time;
        time_repeats(bg_time, opt->repeats, n, [&] {
            bg::BackgroundModel model(opt->height, opt->width, bg_cfg);
            for (const img::Frame& f : frames) model.step(f);
        });

        // A settled background for the network-only measurement.
        bg::BackgroundModel warm(opt->height, opt->width, bg_cfg);
        for (const img::Frame& f : frames) warm.step(f);
        const img::Frame background = warm.background();

        pipe::SegmentConfig seg_cfg;
        seg_cfg.threads = threads;

        Timing net_time;
        time_repeats(net_time, opt->repeats, n, [&] {
            for (const img::Frame& f : frames) pipe::score_frame(params, f, background, seg_cfg);
        });

        Timing pipe_time;
        time_repeats(pipe_time, opt->repeats, n, [&] {
            bg::BackgroundModel model(opt->height, opt->width, bg_cfg);
            for (const img::Frame& f : frames) {
                const img::Frame bg_frame = model.step(f);
                pipe::segment_frame(params, f, bg_frame, seg_cfg);
            }
        });

        if (fps_out) {
            fps_out[0] = bg_time.mean();
            fps_out[1] = net_time.mean();
            fps_out[2] = pipe_time.mean();
        }
        if (report_out) {
            std::ostringstream os;
            os << "benchmark: " << opt->height << "x" << opt->width << ", " << n
               << " frames, " << opt->repeats << " repeats, " << threads << " thread"
               << (threads == 1 ? "" : "s") << "\n";
            report_line(os, "background-model", bg_time);
            report_line(os, "network", net_time);
            report_line(os, "full-pipeline", pipe_time);
            os << "reference: 10.00 fps single-threaded (informational)\n";
            *report_out = dup_string(os.str());
        }
    });
}

} /* extern "C" */
