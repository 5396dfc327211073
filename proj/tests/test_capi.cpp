#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <doctest.h>

#include <cseg.h>

#include "imagecore/frame.hpp"
#include "network/model.hpp"
#include "support/synthetic.hpp"
#include "support/tmpdir.hpp"

using doctest::Contains;
using testsup::TmpDir;

namespace {

cseg::net::NetworkShape tiny_shape() {
    cseg::net::NetworkShape s;
    s.input_side = 21;
    s.kernel = 3;
    s.conv1_out = 3;
    s.conv2_out = 4;
    s.conv3_out = 4;
    s.hidden = 8;
    return s;
}

struct ImageHandle {
    cseg_image* p = nullptr;
    ~ImageHandle() { cseg_image_free(p); }
};

ImageHandle make_image(const cseg::img::Frame& f) {
    ImageHandle h;
    REQUIRE(cseg_image_new(f.height, f.width, f.data.data(), &h.p) == CSEG_OK);
    return h;
}

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("version and per-thread error reporting") {
    REQUIRE(cseg_version() != nullptr);
    CHECK(std::string(cseg_version()).size() > 0);

    cseg_image* img = nullptr;
    CHECK(cseg_image_read("/nonexistent/frame.png", &img) != CSEG_OK);
    CHECK(img == nullptr);
    CHECK(std::string(cseg_last_error()).c_str() == Contains("frame.png"));

    // A successful call clears the sticky message.
    cseg_bgmodel* bg = nullptr;
    REQUIRE(cseg_bgmodel_new(8, 8, CSEG_BM_MONOTONE_DECREASING, 0.08, &bg) == CSEG_OK);
    CHECK(std::string(cseg_last_error()).empty());
    cseg_bgmodel_free(bg);

    cseg_free(nullptr);  // must be a harmless no-op
}

TEST_CASE("image: buffer construction, accessors and file round trip") {
    const cseg::img::Frame f = testsup::textured_background(4, 5, 31);
    ImageHandle h = make_image(f);
    CHECK(cseg_image_height(h.p) == 4);
    CHECK(cseg_image_width(h.p) == 5);
    const float* data = cseg_image_data(h.p);
    REQUIRE(data != nullptr);
    CHECK(std::memcmp(data, f.data.data(), f.data.size() * sizeof(float)) == 0);

    TmpDir tmp("capi-image");
    const std::string path = tmp.sub("frame.png");
    REQUIRE(cseg_image_write(h.p, path.c_str()) == CSEG_OK);

    cseg_image* back = nullptr;
    REQUIRE(cseg_image_read(path.c_str(), &back) == CSEG_OK);
    CHECK(cseg_image_height(back) == 4);
    CHECK(cseg_image_width(back) == 5);
    const float* rb = cseg_image_data(back);
    for (std::size_t j = 0; j < f.data.size(); ++j)
        CHECK(std::abs(rb[j] - f.data[j]) <= 0.5f / 255.0f + 1e-6f);  // 8-bit quantization
    cseg_image_free(back);

    cseg_image* bad = nullptr;
    CHECK(cseg_image_new(0, 5, f.data.data(), &bad) == CSEG_ERR_INVALID_ARGUMENT);
    CHECK(cseg_image_new(4, 5, nullptr, &bad) == CSEG_ERR_INVALID_ARGUMENT);
    CHECK(cseg_image_write(h.p, tmp.sub("frame.xyz").c_str()) != CSEG_OK);
}

TEST_CASE("mask files round trip through the byte convention") {
    TmpDir tmp("capi-mask");
    const uint8_t bytes[6] = {0, 255, 170, 0, 255, 170};
    const std::string path = tmp.sub("mask.png");
    REQUIRE(cseg_mask_write(bytes, 2, 3, path.c_str()) == CSEG_OK);

    int h = 0, w = 0;
    uint8_t* back = nullptr;
    REQUIRE(cseg_mask_read(path.c_str(), &h, &w, &back) == CSEG_OK);
    REQUIRE(back != nullptr);
    CHECK(h == 2);
    CHECK(w == 3);
    CHECK(std::memcmp(back, bytes, 6) == 0);
    cseg_free(back);

    CHECK(cseg_mask_read(tmp.sub("missing.png").c_str(), &h, &w, &back) != CSEG_OK);
}

TEST_CASE("background model: stepping, motion readout and checkpointing") {
    cseg_bgmodel* model = nullptr;
    REQUIRE(cseg_bgmodel_new(16, 20, CSEG_BM_MONOTONE_DECREASING, 0.08, &model) == CSEG_OK);
    CHECK(cseg_bgmodel_height(model) == 16);
    CHECK(cseg_bgmodel_width(model) == 20);

    cseg_image* none = nullptr;
    CHECK(cseg_bgmodel_background(model, &none) == CSEG_ERR_NOT_READY);

    const cseg::img::Frame scene = testsup::textured_background(16, 20, 9);
    ImageHandle frame = make_image(scene);
    for (int i = 0; i < 8; ++i) REQUIRE(cseg_bgmodel_step(model, frame.p) == CSEG_OK);

    double fs = -1.0, bm = -1.0;
    int pad = -1;
    REQUIRE(cseg_bgmodel_motion(model, &fs, &bm, &pad) == CSEG_OK);
    CHECK(fs <= 0.02);  // static scene: the smoothed fraction only decays
    CHECK(bm == 90.0);
    CHECK(pad == 1);
    REQUIRE(cseg_bgmodel_motion(model, nullptr, nullptr, nullptr) == CSEG_OK);

    cseg_image* bg1 = nullptr;
    REQUIRE(cseg_bgmodel_background(model, &bg1) == CSEG_OK);

    TmpDir tmp("capi-bg");
    const std::string ckpt = tmp.sub("bg.state");
    REQUIRE(cseg_bgmodel_save(model, ckpt.c_str()) == CSEG_OK);
    cseg_bgmodel* restored = nullptr;
    REQUIRE(cseg_bgmodel_load(ckpt.c_str(), &restored) == CSEG_OK);
    CHECK(cseg_bgmodel_height(restored) == 16);

    cseg_image* bg2 = nullptr;
    REQUIRE(cseg_bgmodel_background(restored, &bg2) == CSEG_OK);
    CHECK(std::memcmp(cseg_image_data(bg1), cseg_image_data(bg2),
                      3u * 16 * 20 * sizeof(float)) == 0);

    // Mismatched frame size is rejected, model remains usable.
    const cseg::img::Frame small = testsup::textured_background(8, 8, 10);
    ImageHandle wrong = make_image(small);
    CHECK(cseg_bgmodel_step(model, wrong.p) == CSEG_ERR_INVALID_ARGUMENT);
    CHECK(cseg_bgmodel_step(model, frame.p) == CSEG_OK);

    cseg_image_free(bg1);
    cseg_image_free(bg2);
    cseg_bgmodel_free(model);
    cseg_bgmodel_free(restored);

    cseg_bgmodel* bad = nullptr;
    CHECK(cseg_bgmodel_new(16, 20, 7, 0.08, &bad) == CSEG_ERR_INVALID_ARGUMENT);
    CHECK(std::string(cseg_last_error()).c_str() == Contains("bm_mode"));
    CHECK(cseg_bgmodel_load(tmp.sub("absent.state").c_str(), &bad) != CSEG_OK);
}

TEST_CASE("segmentation model: load, score and segment") {
    TmpDir tmp("capi-model");
    const std::string model_path = tmp.sub("tiny.model");
    cseg::net::save_model(model_path, cseg::net::init_params<float>(tiny_shape(), 5));

    cseg_model* model = nullptr;
    REQUIRE(cseg_model_load(model_path.c_str(), &model) == CSEG_OK);
    CHECK(cseg_model_input_side(model) == 21);

    const cseg::img::Frame fr = testsup::textured_background(30, 40, 11);
    const cseg::img::Frame bg = testsup::textured_background(30, 40, 12);
    ImageHandle frame = make_image(fr), background = make_image(bg);

    std::vector<float> scores(30 * 40, -1.0f);
    REQUIRE(cseg_model_score(model, frame.p, background.p, 1, scores.data()) == CSEG_OK);
    for (float s : scores) {
        CHECK(s > 0.0f);
        CHECK(s < 1.0f);
    }

    std::vector<uint8_t> mask(30 * 40, 7);
    REQUIRE(cseg_model_segment(model, frame.p, background.p, 0.999f, 3, 1, mask.data()) ==
            CSEG_OK);
    for (uint8_t b : mask) CHECK(b == 0);  // a fresh net scores far below 0.999
    REQUIRE(cseg_model_segment(model, frame.p, background.p, 1e-6f, 3, 1, mask.data()) ==
            CSEG_OK);
    for (uint8_t b : mask) CHECK(b == 255);

    CHECK(cseg_model_score(model, frame.p, background.p, 1, nullptr) ==
          CSEG_ERR_INVALID_ARGUMENT);
    cseg_model_free(model);

    cseg_model* missing = nullptr;
    CHECK(cseg_model_load(tmp.sub("absent.model").c_str(), &missing) != CSEG_OK);
    CHECK(std::string(cseg_last_error()).c_str() == Contains("absent.model"));
}

TEST_CASE("confusion counting and metric vector") {
    const uint8_t pred[6] = {255, 255, 0, 0, 255, 0};
    const uint8_t truth[6] = {255, 0, 255, 0, 170, 170};
    cseg_confusion c = {0, 0, 0, 0};
    REQUIRE(cseg_confusion_accumulate(pred, truth, 6, &c) == CSEG_OK);
    CHECK(c.tp == 1);
    CHECK(c.fp == 1);
    CHECK(c.fn == 1);
    CHECK(c.tn == 1);  // the two 170-truth pixels are skipped

    REQUIRE(cseg_confusion_accumulate(pred, truth, 6, &c) == CSEG_OK);
    CHECK(c.tp == 2);  // accumulation adds

    const cseg_confusion hand = {50, 10, 930, 10};
    double m[7];
    cseg_metrics(&hand, m);
    CHECK(m[0] == doctest::Approx(50.0 / 60.0).epsilon(1e-12));   // Re
    CHECK(m[1] == doctest::Approx(930.0 / 940.0).epsilon(1e-12)); // Sp
    CHECK(m[2] == doctest::Approx(10.0 / 940.0).epsilon(1e-12));  // FPR
    CHECK(m[3] == doctest::Approx(10.0 / 60.0).epsilon(1e-12));   // FNR
    CHECK(m[4] == doctest::Approx(2.0).epsilon(1e-12));           // PWC
    CHECK(m[5] == doctest::Approx(5.0 / 6.0).epsilon(1e-12));     // FM
    CHECK(m[6] == doctest::Approx(50.0 / 60.0).epsilon(1e-12));   // Pr

    const cseg_confusion no_fg = {0, 0, 100, 0};
    cseg_metrics(&no_fg, m);
    CHECK(std::isnan(m[0]));  // recall undefined
    CHECK(m[1] == 1.0);       // specificity defined
    CHECK(std::isnan(m[5]));  // F-measure undefined
}

TEST_CASE("run_build_bg writes backgrounds, a motion log and a checkpoint") {
    TmpDir tmp("capi-buildbg");
    testsup::write_corpus(tmp.sub("data"), 1, 8, 24, 32, 8, 21, 1);
    const std::string out = tmp.sub("out");
    const std::string state = tmp.sub("bg.state");

    cseg_build_bg_options opt;
    cseg_build_bg_options_init(&opt);
    const std::string frames = tmp.sub("data/synthetic/vid1/input");
    opt.frames_dir = frames.c_str();
    opt.out_dir = out.c_str();
    opt.state_out = state.c_str();
    opt.quiet = 1;
    REQUIRE(cseg_run_build_bg(&opt) == CSEG_OK);

    for (int i = 1; i <= 8; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "bg%06d.png", i);
        CHECK(std::filesystem::exists(std::filesystem::path(out) / name));
    }
    CHECK(std::filesystem::exists(std::filesystem::path(out) / "motion_log.txt"));

    cseg_bgmodel* restored = nullptr;
    REQUIRE(cseg_bgmodel_load(state.c_str(), &restored) == CSEG_OK);
    CHECK(cseg_bgmodel_height(restored) == 24);
    CHECK(cseg_bgmodel_width(restored) == 32);
    cseg_bgmodel_free(restored);

    // every = 3 keeps frames 1, 4, 7 plus the final frame.
    const std::string sparse = tmp.sub("sparse");
    opt.out_dir = sparse.c_str();
    opt.state_out = nullptr;
    opt.every = 3;
    REQUIRE(cseg_run_build_bg(&opt) == CSEG_OK);
    std::vector<std::string> bg_files;
    for (const auto& e : std::filesystem::directory_iterator(sparse))
        if (e.path().filename().string().rfind("bg", 0) == 0)
            bg_files.push_back(e.path().filename().string());
    std::sort(bg_files.begin(), bg_files.end());
    const std::vector<std::string> expected = {"bg000001.png", "bg000004.png", "bg000007.png",
                                               "bg000008.png"};
    CHECK(bg_files == expected);
}

TEST_CASE("whole-run options are validated before any work") {
    cseg_train_options train;
    cseg_train_options_init(&train);
    TmpDir tmp("capi-validate");
    const std::string model_out = tmp.sub("m.model");
    train.model_out = model_out.c_str();
    CHECK(cseg_run_train(&train) == CSEG_ERR_INVALID_ARGUMENT);
    CHECK(std::string(cseg_last_error()).c_str() == Contains("root"));

    const std::string root = tmp.sub("root"), store = tmp.sub("store");
    train.root = root.c_str();
    train.store = store.c_str();
    CHECK(cseg_run_train(&train) == CSEG_ERR_INVALID_ARGUMENT);

    cseg_segment_options seg;
    cseg_segment_options_init(&seg);
    CHECK(cseg_run_segment(&seg) == CSEG_ERR_INVALID_ARGUMENT);

    cseg_evaluate_options ev;
    cseg_evaluate_options_init(&ev);
    CHECK(cseg_run_evaluate(&ev, nullptr) == CSEG_ERR_INVALID_ARGUMENT);

    cseg_bench_options bench;
    cseg_bench_options_init(&bench);
    bench.height = 8;  // smaller than any patch side
    bench.width = 8;
    CHECK(cseg_run_bench(&bench, nullptr, nullptr) == CSEG_ERR_INVALID_ARGUMENT);
}

}  // TEST_SUITE
