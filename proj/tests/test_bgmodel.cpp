#include <cmath>
#include <fstream>
#include <random>

#include <doctest.h>

#include "bgmodel/background_model.hpp"
#include "common/error.hpp"
#include "support/synthetic.hpp"
#include "support/tmpdir.hpp"

using namespace cseg;
using bg::BackgroundModel;
using bg::PixelLibrary;
using img::Frame;
using img::Label;
using img::LabelMask;

namespace {

Frame constant_rgb(int h, int w, float r, float g, float b) {
    Frame f(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            f.at(0, y, x) = r;
            f.at(1, y, x) = g;
            f.at(2, y, x) = b;
        }
    return f;
}

double linf(const Frame& a, const Frame& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.data[i]) - b.data[i]));
    return m;
}

}  // namespace

TEST_SUITE_BEGIN("bgmodel");

TEST_CASE("library: seeding fills every slot with the first frame") {
    PixelLibrary lib(4, 6);
    lib.seed(constant_rgb(4, 6, 0.3f, 0.5f, 0.7f));
    CHECK(lib.seeded());
    CHECK(lib.fill_count(0, 0) == PixelLibrary::kCapacity);
    CHECK(lib.sample_back(2, 3, 0, 0) == 0.3f);
    CHECK(lib.sample_back(2, 3, 89, 2) == 0.7f);

    const Frame r = lib.render(90.0);
    CHECK(r.at(0, 1, 1) == doctest::Approx(0.3f));
    CHECK(r.at(2, 3, 5) == doctest::Approx(0.7f));
}

TEST_CASE("library: render averages exactly the newest round(bm) samples") {
    PixelLibrary lib(1, 1);
    lib.seed(constant_rgb(1, 1, 0.5f, 0.5f, 0.5f));
    const LabelMask all_bg(1, 1, Label::Background);
    lib.update(constant_rgb(1, 1, 0.9f, 0.9f, 0.9f), all_bg, 0);

    CHECK(lib.render(1.0).at(0, 0, 0) == doctest::Approx(0.9f));            // newest only
    CHECK(lib.render(2.0).at(0, 0, 0) == doctest::Approx(0.7f));            // (0.9+0.5)/2
    CHECK(lib.render(90.0).at(0, 0, 0) ==
          doctest::Approx((0.9 + 89 * 0.5) / 90.0).epsilon(1e-6));
    // Fractional bm rounds to nearest: 1.4 -> 1 sample, 1.6 -> 2.
    CHECK(lib.render(1.4).at(0, 0, 0) == doctest::Approx(0.9f));
    CHECK(lib.render(1.6).at(0, 0, 0) == doctest::Approx(0.7f));
}

TEST_CASE("library: update skips the dilated foreground") {
    PixelLibrary lib(5, 5);
    lib.seed(constant_rgb(5, 5, 0.2f, 0.2f, 0.2f));
    LabelMask mask(5, 5, Label::Background);
    mask.at(2, 2) = Label::Foreground;

    const std::uint8_t before = lib.write_index(2, 2);
    lib.update(constant_rgb(5, 5, 0.8f, 0.8f, 0.8f), mask, 1);

    // 3x3 block around (2,2) is frozen; everything else took the sample.
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) {
            const bool frozen = std::abs(y - 2) <= 1 && std::abs(x - 2) <= 1;
            if (frozen) {
                CHECK(lib.write_index(y, x) == before);
                CHECK(lib.sample_back(y, x, 0, 0) == 0.2f);
            } else {
                CHECK(lib.sample_back(y, x, 0, 0) == 0.8f);
            }
        }
}

TEST_CASE("library: write pointer wraps around the ring") {
    PixelLibrary lib(1, 1);
    lib.seed(constant_rgb(1, 1, 0.0f, 0.0f, 0.0f));
    const LabelMask all_bg(1, 1, Label::Background);
    for (int i = 1; i <= 95; ++i) {
        const float v = static_cast<float>(i) / 100.0f;
        lib.update(constant_rgb(1, 1, v, v, v), all_bg, 0);
    }
    CHECK(lib.sample_back(0, 0, 0, 0) == doctest::Approx(0.95f));
    CHECK(lib.sample_back(0, 0, 1, 0) == doctest::Approx(0.94f));
    // 90 slots deep, the oldest survivor is update 6.
    CHECK(lib.sample_back(0, 0, 89, 0) == doctest::Approx(0.06f));
}

TEST_CASE("naive segmenter: strict max-channel threshold") {
    const Frame bgf = constant_rgb(2, 2, 0.5f, 0.5f, 0.5f);
    Frame f = bgf;
    f.at(1, 0, 0) = 0.58f;   // green +0.08 at (0,0): equality, stays BG
    f.at(2, 0, 1) = 0.581f;  // blue +0.081 at (0,1): exceeds tau
    const LabelMask m = bg::naive_segmenter(f, bgf, 0.08);
    CHECK(m.at(0, 0) == Label::Background);
    CHECK(m.at(0, 1) == Label::Foreground);
    CHECK(m.at(1, 1) == Label::Background);
}

TEST_CASE("model: first frame seeds and becomes the background") {
    const Frame scene = testsup::textured_background(10, 12, 5);
    BackgroundModel model(10, 12);
    const Frame out = model.step(scene);
    CHECK(linf(out, scene) == 0.0);
    CHECK(model.frames_seen() == 1);
    CHECK(model.library().seeded());
}

TEST_CASE("model: motion state stays at the static defaults until flux fills") {
    const Frame scene = testsup::textured_background(10, 12, 6);
    BackgroundModel model(10, 12);
    for (int t = 0; t < 4; ++t) {
        model.step(scene);
        CHECK(model.motion().bm == 90.0);
        CHECK(model.motion().padding_radius == 1);
        CHECK(model.motion().fs_filtered == 0.02);
    }
    model.step(scene);  // fifth frame: flux ready, static scene observes raw 0
    CHECK(model.motion().fs_filtered < 0.02);
    CHECK(model.motion().bm == 90.0);
}

TEST_CASE("model: static scene keeps an exact background") {
    const Frame scene = testsup::textured_background(12, 16, 7);
    BackgroundModel model(12, 16);
    for (int t = 0; t < 30; ++t) model.step(scene);
    CHECK(linf(model.background(), scene) == 0.0);
}

TEST_CASE("model: background converges under a moving square") {
    const int h = 24, w = 32;
    const testsup::Video video = testsup::make_video(90, h, w, 8, 123);
    const Frame truth = testsup::textured_background(h, w, 123);
    BackgroundModel model(h, w);
    for (const Frame& f : video.frames) model.step(f);
    CHECK(linf(model.background(), truth) <= 2.0 / 255.0);
}

TEST_CASE("model: wrong frame size is rejected") {
    BackgroundModel model(8, 8);
    model.step(constant_rgb(8, 8, 0.5f, 0.5f, 0.5f));
    CHECK_THROWS_AS(model.step(constant_rgb(8, 9, 0.5f, 0.5f, 0.5f)), Error);
}

TEST_CASE("model: custom hook drives the library gating") {
    // Hook that claims everything is foreground: the library never updates,
    // so the background stays pinned to the seed frame.
    const Frame first = constant_rgb(6, 6, 0.2f, 0.2f, 0.2f);
    const Frame later = constant_rgb(6, 6, 0.9f, 0.9f, 0.9f);
    BackgroundModel model(6, 6);
    const BackgroundModel::SegmenterHook all_fg = [](const Frame& f, const Frame&) {
        return LabelMask(f.height, f.width, Label::Foreground);
    };
    model.step(first, all_fg);  // seeding ignores the hook's verdict
    for (int t = 0; t < 10; ++t) model.step(later, all_fg);
    CHECK(linf(model.background(), first) == 0.0);
}

TEST_CASE("model: checkpoint round trip resumes bit-identically") {
    testsup::TmpDir tmp("bg-checkpoint");
    const testsup::Video video = testsup::make_video(40, 16, 20, 6, 77);

    BackgroundModel a(16, 20);
    for (int t = 0; t < 25; ++t) a.step(video.frames[t]);
    const std::string path = tmp.sub("state.bin");
    a.save(path);

    BackgroundModel b = BackgroundModel::load(path);
    CHECK(b.height() == 16);
    CHECK(b.frames_seen() == a.frames_seen());
    CHECK(b.motion().fs_filtered == a.motion().fs_filtered);
    CHECK(linf(b.background(), a.background()) == 0.0);

    for (int t = 25; t < 40; ++t) {
        const Frame fa = a.step(video.frames[t]);
        const Frame fb = b.step(video.frames[t]);
        CHECK(linf(fa, fb) == 0.0);
    }
}

TEST_CASE("model: checkpoint rejects corruption and missing files") {
    testsup::TmpDir tmp("bg-corrupt");
    BackgroundModel model(6, 6);
    model.step(constant_rgb(6, 6, 0.4f, 0.4f, 0.4f));
    const std::string path = tmp.sub("state.bin");
    model.save(path);

    // Flip one payload byte: the checksum must catch it.
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(20);
        char c;
        f.seekg(20);
        f.read(&c, 1);
        c = static_cast<char>(c ^ 0x5a);
        f.seekp(20);
        f.write(&c, 1);
    }
    CHECK_THROWS_AS(BackgroundModel::load(path), Error);
    CHECK_THROWS_AS(BackgroundModel::load(tmp.sub("nope.bin")), Error);
}

TEST_CASE("model: as-printed interpretation lengthens memory under motion") {
    // Sustained large motion: monotone reading shortens bm, printed reading
    // keeps it near the long end.
    bg::MotionState mono, printed;
    for (int i = 0; i < 2000; ++i) {
        mono.observe(0.2, bg::BmMode::MonotoneDecreasing);
        printed.observe(0.2, bg::BmMode::AsPrinted);
    }
    CHECK(mono.bm < 30.0);
    CHECK(printed.bm > 60.0);
}

TEST_SUITE_END();
