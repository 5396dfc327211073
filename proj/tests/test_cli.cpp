#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <doctest.h>

#include "imagecore/frame.hpp"
#include "imagecore/image_io.hpp"
#include "network/model.hpp"
#include "support/synthetic.hpp"
#include "support/tmpdir.hpp"

using namespace cseg;
using doctest::Contains;
using testsup::TmpDir;

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string output;  // stdout and stderr interleaved
};

RunResult run_cli(const TmpDir& tmp, const std::string& args, const std::string& env = "") {
    static int seq = 0;
    const std::string cap = tmp.sub("cli-capture-" + std::to_string(seq++) + ".txt");
    const std::string cmd =
        env + (env.empty() ? "" : " ") + CSEG_CLI_BIN + " " + args + " > '" + cap + "' 2>&1";
    const int rc = std::system(cmd.c_str());
    RunResult r;
    if (rc != -1 && WIFEXITED(rc)) r.code = WEXITSTATUS(rc);
    std::ifstream in(cap);
    std::ostringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

std::string write_frames_dir(const TmpDir& tmp, const std::string& name,
                             const std::vector<img::Frame>& frames) {
    const std::string dir = tmp.sub(name);
    fs::create_directories(dir);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "in%06zu.png", i + 1);
        img::write_frame((fs::path(dir) / buf).string(), frames[i]);
    }
    return dir;
}

std::string forge_model(const TmpDir& tmp, int side, std::uint32_t seed) {
    net::NetworkShape shape;
    shape.input_side = side;
    shape.kernel = 3;
    shape.conv1_out = 3;
    shape.conv2_out = 4;
    shape.conv3_out = 4;
    shape.hidden = 8;
    const std::string path = tmp.sub("tiny.model");
    net::save_model(path, net::init_params<float>(shape, seed));
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help lists the subcommands and exits cleanly") {
    TmpDir tmp("cli-help");
    const RunResult r = run_cli(tmp, "--help");
    CHECK(r.code == 0);
    CHECK(r.output.c_str() == Contains("build-bg"));
    CHECK(r.output.c_str() == Contains("train"));
    CHECK(r.output.c_str() == Contains("segment"));
    CHECK(r.output.c_str() == Contains("evaluate"));
    CHECK(r.output.c_str() == Contains("bench"));

    CHECK(run_cli(tmp, "").code == 1);            // a subcommand is required
    CHECK(run_cli(tmp, "frobnicate").code == 1);  // unknown subcommand
    CHECK(run_cli(tmp, "segment").code == 1);     // missing required options
}

TEST_CASE("build-bg: static scene converges and the motion log is complete") {
    TmpDir tmp("cli-buildbg");
    const img::Frame scene = testsup::textured_background(32, 40, 3);
    const std::string frames = write_frames_dir(tmp, "frames", std::vector<img::Frame>(10, scene));
    const std::string out = tmp.sub("out");

    const RunResult r = run_cli(tmp, "build-bg --root " + frames + " --out " + out);
    REQUIRE_MESSAGE(r.code == 0, r.output);

    int bg_count = 0;
    for (const auto& e : fs::directory_iterator(out))
        if (e.path().filename().string().rfind("bg", 0) == 0) ++bg_count;
    CHECK(bg_count == 10);

    // The final background reproduces the (quantized) static frame.
    const img::Frame quantized = img::read_frame((fs::path(frames) / "in000001.png").string());
    const img::Frame final_bg = img::read_frame((fs::path(out) / "bg000010.png").string());
    float linf = 0.0f;
    for (std::size_t j = 0; j < quantized.data.size(); ++j)
        linf = std::max(linf, std::abs(final_bg.data[j] - quantized.data[j]));
    CHECK(linf <= 1.5f / 255.0f);

    std::ifstream log(fs::path(out) / "motion_log.txt");
    REQUIRE(log.good());
    std::string line;
    std::getline(log, line);
    CHECK(line == "# frame fs bm padding");
    int rows = 0;
    std::string last;
    while (std::getline(log, line))
        if (!line.empty()) {
            last = line;
            ++rows;
        }
    CHECK(rows == 10);
    std::istringstream ls(last);
    int frame_no = 0, pad = -1;
    double fsv = -1.0, bmv = -1.0;
    ls >> frame_no >> fsv >> bmv >> pad;
    CHECK(frame_no == 10);
    CHECK(fsv <= 0.02);
    CHECK(bmv == 90.0);
    CHECK(pad == 1);
}

TEST_CASE("build-bg: a bad frames directory exits with code 1") {
    TmpDir tmp("cli-buildbg-bad");
    const RunResult r =
        run_cli(tmp, "build-bg --root " + tmp.sub("nowhere") + " --out " + tmp.sub("out"));
    CHECK(r.code == 1);
    CHECK(r.output.c_str() == Contains("error"));
}

TEST_CASE("segment: numbered binary masks, reproducible across runs and threads") {
    TmpDir tmp("cli-segment");
    const std::string model = forge_model(tmp, 21, 5);
    const testsup::Video video = testsup::make_video(6, 30, 40, 8, 17);
    const std::string frames = write_frames_dir(tmp, "frames", video.frames);

    const std::string out1 = tmp.sub("masks1");
    const RunResult r1 = run_cli(tmp, "segment --root " + frames + " --model " + model +
                                          " --out " + out1 + " --median 3");
    REQUIRE_MESSAGE(r1.code == 0, r1.output);

    for (int i = 1; i <= 6; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "bin%06d.png", i);
        const fs::path p = fs::path(out1) / buf;
        REQUIRE_MESSAGE(fs::exists(p), p.string());
        const img::RawImage m = img::read_image(p.string());
        CHECK(m.height == 30);
        CHECK(m.width == 40);
        for (std::uint8_t b : m.data) CHECK((b == 0 || b == 255));
    }

    const std::string out2 = tmp.sub("masks2");
    const RunResult r2 = run_cli(tmp,
                                 "segment --root " + frames + " --model " + model + " --out " +
                                     out2 + " --median 3",
                                 "CSEG_THREADS=3");
    REQUIRE_MESSAGE(r2.code == 0, r2.output);
    for (int i = 1; i <= 6; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "bin%06d.png", i);
        CHECK(slurp((fs::path(out1) / buf).string()) == slurp((fs::path(out2) / buf).string()));
    }
}

TEST_CASE("segment: a missing model file exits with code 1") {
    TmpDir tmp("cli-segment-bad");
    const testsup::Video video = testsup::make_video(2, 30, 40, 8, 18);
    const std::string frames = write_frames_dir(tmp, "frames", video.frames);
    const RunResult r = run_cli(tmp, "segment --root " + frames + " --model " +
                                         tmp.sub("absent.model") + " --out " + tmp.sub("m"));
    CHECK(r.code == 1);
    CHECK(r.output.c_str() == Contains("error"));
}

TEST_CASE("train: history, seeded reproducibility and the sample-store path") {
    TmpDir tmp("cli-train");
    testsup::write_corpus(tmp.sub("data"), 1, 12, 48, 64, 14, 23, 1);
    const std::string root = tmp.sub("data");
    const std::string common = " --epochs 1 --batch 64 --train-frames 3 --val-frames 1"
                               " --max-patches 6";

    const std::string m1 = tmp.sub("m1.model");
    const RunResult r1 = run_cli(tmp, "train --root " + root + " --out " + m1 + " --seed 5" +
                                          common + " --store-out " + tmp.sub("store"));
    REQUIRE_MESSAGE(r1.code == 0, r1.output);
    REQUIRE(fs::exists(m1));

    // History: header plus one row for the single epoch.
    std::ifstream hist(m1 + ".history");
    REQUIRE(hist.good());
    std::string line;
    std::getline(hist, line);
    CHECK(line == "# epoch train_loss val_loss");
    std::getline(hist, line);
    CHECK(line.substr(0, 2) == "1 ");
    CHECK(!std::getline(hist, line));

    // Same seed, same corpus: byte-identical model files.
    const std::string m2 = tmp.sub("m2.model");
    const RunResult r2 = run_cli(tmp, "train --root " + root + " --out " + m2 + " --seed 5" + common);
    REQUIRE_MESSAGE(r2.code == 0, r2.output);
    CHECK(slurp(m1) == slurp(m2));

    // A different seed must change the parameters.
    const std::string m3 = tmp.sub("m3.model");
    const RunResult r3 = run_cli(tmp, "train --root " + root + " --out " + m3 + " --seed 6" + common);
    REQUIRE_MESSAGE(r3.code == 0, r3.output);
    CHECK(slurp(m1) != slurp(m3));

    // Training from the saved store reproduces the root run bit for bit.
    REQUIRE(fs::exists(tmp.sub("store/train/index.json")));
    const std::string m4 = tmp.sub("m4.model");
    const RunResult r4 = run_cli(tmp, "train --store " + tmp.sub("store") + " --out " + m4 +
                                          " --seed 5 --epochs 1 --batch 64");
    REQUIRE_MESSAGE(r4.code == 0, r4.output);
    CHECK(slurp(m1) == slurp(m4));

    // Root and store are mutually exclusive; neither is an error too.
    CHECK(run_cli(tmp, "train --root " + root + " --store " + tmp.sub("store") + " --out " +
                           tmp.sub("m5.model") + common)
              .code == 1);
    CHECK(run_cli(tmp, "train --out " + tmp.sub("m6.model") + common).code == 1);
}

TEST_CASE("evaluate: perfect masks score 1.0 and reports reach stdout and files") {
    TmpDir tmp("cli-evaluate");
    const int frames = 8, eval_first = 2;
    testsup::write_corpus(tmp.sub("data"), 2, frames, 24, 32, 8, 29, eval_first);
    const std::string root = tmp.sub("data");

    // Perfect predictions: the ground truth itself (bytes 0/255 only).
    const std::string masks = tmp.sub("masks");
    for (int v = 1; v <= 2; ++v) {
        const fs::path vdir = fs::path(masks) / "synthetic" / ("vid" + std::to_string(v));
        fs::create_directories(vdir);
        for (int i = eval_first; i <= frames; ++i) {
            char gt[32], bin[32];
            std::snprintf(gt, sizeof gt, "gt%06d.png", i);
            std::snprintf(bin, sizeof bin, "bin%06d.png", i);
            fs::copy_file(fs::path(root) / "synthetic" / ("vid" + std::to_string(v)) /
                              "groundtruth" / gt,
                          vdir / bin);
        }
    }

    const std::string txt = tmp.sub("report.txt"), json = tmp.sub("report.json");
    const RunResult r = run_cli(tmp, "evaluate --root " + root + " --masks " + masks +
                                         " --report-txt " + txt + " --report-json " + json);
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.c_str() == Contains("category"));
    CHECK(r.output.c_str() == Contains("synthetic"));
    CHECK(r.output.c_str() == Contains("Overall"));
    CHECK(r.output.c_str() == Contains("1.0000"));  // recall of a perfect prediction
    CHECK(r.output.c_str() == Contains("0.0000"));  // PWC of a perfect prediction

    REQUIRE(fs::exists(txt));
    CHECK(r.output.c_str() == Contains(slurp(txt).substr(0, 40).c_str()));
    REQUIRE(fs::exists(json));
    const std::string j = slurp(json);
    CHECK(j.c_str() == Contains("\"overall\""));
    CHECK(j.c_str() == Contains("\"FM\""));

    // All-background predictions: recall drops to zero, run still succeeds.
    const std::string zeros = tmp.sub("zeros");
    const std::vector<std::uint8_t> zero_mask(24 * 32, 0);
    for (int v = 1; v <= 2; ++v) {
        const fs::path vdir = fs::path(zeros) / "synthetic" / ("vid" + std::to_string(v));
        fs::create_directories(vdir);
        for (int i = eval_first; i <= frames; ++i) {
            char bin[32];
            std::snprintf(bin, sizeof bin, "bin%06d.png", i);
            img::LabelMask all_bg(24, 32);
            img::write_mask((vdir / bin).string(), all_bg);
        }
    }
    const RunResult rz = run_cli(tmp, "evaluate --root " + root + " --masks " + zeros);
    REQUIRE_MESSAGE(rz.code == 0, rz.output);
    CHECK(rz.output.c_str() == Contains("0.0000"));

    // A missing mask file is an input error.
    fs::remove(fs::path(masks) / "synthetic" / "vid1" / "bin000005.png");
    const RunResult rm = run_cli(tmp, "evaluate --root " + root + " --masks " + masks);
    CHECK(rm.code == 1);
    CHECK(rm.output.c_str() == Contains("missing mask"));
}

TEST_CASE("bench: reports three positive frame rates") {
    TmpDir tmp("cli-bench");
    const RunResult r =
        run_cli(tmp, "bench --height 48 --width 64 --frames 3 --repeats 2 --seed 1");
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.c_str() == Contains("reference"));

    int fps_lines = 0;
    std::istringstream in(r.output);
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.find(" fps");
        if (pos == std::string::npos || line.find("reference") != std::string::npos) continue;
        ++fps_lines;
        // The number immediately before " fps" must parse and be positive.
        const auto start = line.find_last_of(' ', pos - 1);
        const double fps = std::stod(line.substr(start + 1, pos - start - 1));
        CHECK(fps > 0.0);
        CHECK(line.c_str() == Contains("variance"));
    }
    CHECK(fps_lines == 3);
}

}  // TEST_SUITE
