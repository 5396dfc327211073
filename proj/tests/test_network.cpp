#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <doctest.h>

#include "common/binary_io.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "network/layers.hpp"
#include "network/model.hpp"
#include "support/tmpdir.hpp"

using namespace cseg;
using net::NetworkShape;
using net::Tensor4;

namespace {

Tensor4<float> random_input(const NetworkShape& s, int n, std::uint32_t seed) {
    Tensor4<float> x(n, s.in_channels, s.input_side, s.input_side);
    std::mt19937 gen(seed);
    for (float& v : x.v) v = static_cast<float>(unit_rand(gen)) - 0.5f;
    return x;
}

// Small shape so full-precision tests stay fast.
NetworkShape tiny_shape() {
    NetworkShape s;
    s.input_side = 21;
    s.kernel = 3;
    s.conv1_out = 3;
    s.conv2_out = 4;
    s.conv3_out = 4;
    s.hidden = 8;
    return s;
}

}  // namespace

TEST_SUITE_BEGIN("network");

TEST_CASE("shape: the published chain 37 -> 33 -> 16 -> 12 -> 6 -> 2") {
    const NetworkShape s;
    CHECK(s.after_conv1() == 33);
    CHECK(s.after_pool1() == 16);
    CHECK(s.after_conv2() == 12);
    CHECK(s.after_pool2() == 6);
    CHECK(s.after_conv3() == 2);
    CHECK(s.flatten_dim() == 48 * 2 * 2);
    CHECK(s.output_dim() == 1369);
    s.validate();  // must not throw
}

TEST_CASE("shape: invalid geometries are named") {
    NetworkShape s;
    s.input_side = 36;
    CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("side"), Error);
    s = NetworkShape{};
    s.kernel = 4;
    CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("kernel"), Error);
    s = NetworkShape{};
    s.input_side = 9;  // collapses before conv3
    CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("forward: probabilities have the right shape and open range") {
    const NetworkShape s = tiny_shape();
    auto params = net::init_params<float>(s, 3);
    const Tensor4<float> x = random_input(s, 4, 9);
    const Tensor4<float> probs = net::infer(params, x);
    CHECK(probs.n == 4);
    CHECK(probs.c == s.output_dim());
    CHECK(probs.h == 1);
    CHECK(probs.w == 1);
    for (float p : probs.v) {
        CHECK(p >= 1e-7f);
        CHECK(p <= 1.0f - 1e-7f);
    }
}

TEST_CASE("forward: all-zero parameters give exactly one half") {
    const NetworkShape s = tiny_shape();
    const auto zeros = net::zero_like(net::init_params<float>(s, 1));
    const Tensor4<float> probs = net::infer(zeros, random_input(s, 2, 11));
    for (float p : probs.v) CHECK(p == 0.5f);
}

TEST_CASE("forward: train mode standardizes each batch-norm channel") {
    auto bn = net::BnParams<float>::make(5);
    Tensor4<float> x(6, 5, 7, 7);
    std::mt19937 gen(13);
    for (float& v : x.v) v = static_cast<float>(unit_rand(gen)) * 3.0f - 1.0f;
    net::BnCache<float> cache;
    const Tensor4<float> y = net::bn_forward_train(bn, x, cache, 1);

    for (int c = 0; c < 5; ++c) {
        double sum = 0.0, sq = 0.0;
        std::size_t count = 0;
        for (int n = 0; n < x.n; ++n)
            for (int h = 0; h < x.h; ++h)
                for (int w = 0; w < x.w; ++w) {
                    const double v = y.at(n, c, h, w);
                    sum += v;
                    sq += v * v;
                    ++count;
                }
        const double mean = sum / static_cast<double>(count);
        const double var = sq / static_cast<double>(count) - mean * mean;
        CHECK(std::abs(mean) < 1e-5);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("forward: batch norm running statistics blend with momentum 0.1") {
    auto bn = net::BnParams<float>::make(2);
    Tensor4<float> x(4, 2, 3, 3);
    std::mt19937 gen(17);
    for (float& v : x.v) v = static_cast<float>(unit_rand(gen)) * 2.0f;

    double mean0 = 0.0, var0 = 0.0;
    const std::size_t per = static_cast<std::size_t>(x.n) * x.h * x.w;
    for (int n = 0; n < x.n; ++n)
        for (int h = 0; h < x.h; ++h)
            for (int w = 0; w < x.w; ++w) mean0 += x.at(n, 0, h, w);
    mean0 /= static_cast<double>(per);
    for (int n = 0; n < x.n; ++n)
        for (int h = 0; h < x.h; ++h)
            for (int w = 0; w < x.w; ++w) {
                const double d = x.at(n, 0, h, w) - mean0;
                var0 += d * d;
            }
    var0 /= static_cast<double>(per);  // biased, as used throughout

    net::BnCache<float> cache;
    net::bn_forward_train(bn, x, cache, 1);
    CHECK(bn.run_mean[0] == doctest::Approx(0.1 * mean0).epsilon(1e-5));
    CHECK(bn.run_var[0] == doctest::Approx(0.9 * 1.0 + 0.1 * var0).epsilon(1e-5));
}

TEST_CASE("infer: never touches the parameters") {
    const NetworkShape s = tiny_shape();
    auto params = net::init_params<float>(s, 5);
    const auto before = params.bn1.run_mean;
    net::infer(params, random_input(s, 2, 19));
    CHECK(params.bn1.run_mean == before);
}

TEST_CASE("loss: the hand example and the masking rules") {
    const float pred[3] = {0.5f, 0.5f, 0.9f};
    const float target[3] = {1.0f, 1.0f, 0.0f};
    CHECK(net::bce_masked(pred, target, nullptr, 2) ==
          doctest::Approx(-std::log(0.5)).epsilon(1e-9));

    // Masking removes the third position from an otherwise different mean.
    const std::uint8_t ignore[3] = {0, 0, 1};
    CHECK(net::bce_masked(pred, target, ignore, 3) ==
          doctest::Approx(-std::log(0.5)).epsilon(1e-9));

    const std::uint8_t all[3] = {1, 1, 1};
    CHECK(net::bce_masked(pred, target, all, 3) == 0.0);
}

TEST_CASE("loss: clamping keeps saturated predictions finite") {
    const float pred[2] = {1.0f, 0.0f};
    const float target[2] = {0.0f, 1.0f};
    const double loss = net::bce_masked(pred, target, nullptr, 2);
    CHECK(std::isfinite(loss));
    CHECK(loss == doctest::Approx(-std::log(1e-7)).epsilon(1e-6));
}

TEST_CASE("rmsprop: frozen first step and zero-gradient stability") {
    const NetworkShape s = tiny_shape();
    auto params = net::zero_like(net::init_params<float>(s, 1));
    auto grads = net::zero_like(params);
    grads.conv1.w[0] = 1.0f;

    net::RmsProp<float> opt;
    opt.step(params, grads);
    // acc = 0.1, update = -lr / sqrt(0.1 + 1e-8).
    CHECK(params.conv1.w[0] == doctest::Approx(-0.00790569).epsilon(1e-6));
    for (std::size_t i = 1; i < params.conv1.w.size(); ++i) CHECK(params.conv1.w[i] == 0.0f);

    const float after_first = params.conv1.w[0];
    auto no_grads = net::zero_like(params);
    opt.step(params, no_grads);
    CHECK(params.conv1.w[0] == after_first);  // zero gradient moves nothing
}

TEST_CASE("init: deterministic per seed, bounded, identity batch norm") {
    const NetworkShape s;  // full published shape
    const auto a = net::init_params<float>(s, 42);
    const auto b = net::init_params<float>(s, 42);
    const auto c = net::init_params<float>(s, 43);
    CHECK(a.conv1.w == b.conv1.w);
    CHECK(a.dense2.w == b.dense2.w);
    CHECK(a.conv1.w != c.conv1.w);

    // Glorot bound for conv1: sqrt(6 / (6*25 + 24*25)).
    const float bound = std::sqrt(6.0f / (6 * 25 + 24 * 25));
    CHECK(bound == doctest::Approx(0.0894f).epsilon(1e-3));
    float max_abs = 0.0f;
    for (float w : a.conv1.w) max_abs = std::max(max_abs, std::abs(w));
    CHECK(max_abs <= bound);
    CHECK(max_abs > 0.5f * bound);  // the draw actually spreads out

    for (float v : a.conv1.b) CHECK(v == 0.0f);
    for (float v : a.bn1.gamma) CHECK(v == 1.0f);
    for (float v : a.bn1.beta) CHECK(v == 0.0f);
    for (float v : a.bn1.run_mean) CHECK(v == 0.0f);
    for (float v : a.bn1.run_var) CHECK(v == 1.0f);
}

TEST_CASE("model file: round trip is bit exact, with and without optimizer") {
    testsup::TmpDir tmp("model-file");
    const NetworkShape s = tiny_shape();
    auto params = net::init_params<float>(s, 7);
    params.input_mean = {0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f};

    // A real step so running stats and optimizer state are nontrivial.
    const Tensor4<float> x = random_input(s, 3, 23);
    Tensor4<float> targets(3, s.output_dim(), 1, 1);
    std::mt19937 gen(29);
    for (float& v : targets.v) v = (gen() & 1) ? 1.0f : 0.0f;
    const std::vector<std::uint8_t> ignore(targets.v.size(), 0);
    net::ForwardCache<float> cache;
    const auto probs = net::forward(params, x, net::RunMode::Train, &cache, 1);
    auto grads = net::zero_like(params);
    net::backward(params, cache, net::loss_logit_grad(probs, targets, ignore), grads, 1);
    net::RmsProp<float> opt;
    opt.step(params, grads);

    const std::string with_opt = tmp.sub("a.model");
    net::save_model(with_opt, params, &opt);
    const net::LoadedModel a = net::load_model(with_opt);
    CHECK(a.params.shape == params.shape);
    CHECK(a.params.input_mean == params.input_mean);
    CHECK(a.params.conv1.w == params.conv1.w);
    CHECK(a.params.bn3.run_var == params.bn3.run_var);
    CHECK(a.params.dense2.w == params.dense2.w);
    REQUIRE(a.optimizer.has_value());
    REQUIRE(a.optimizer->acc.size() == opt.acc.size());
    for (std::size_t i = 0; i < opt.acc.size(); ++i) CHECK(a.optimizer->acc[i] == opt.acc[i]);

    const std::string without = tmp.sub("b.model");
    net::save_model(without, params, nullptr);
    CHECK(!net::load_model(without).optimizer.has_value());
}

TEST_CASE("model file: version mismatch names both versions") {
    testsup::TmpDir tmp("model-version");
    const std::string path = tmp.sub("m.model");
    net::save_model(path, net::init_params<float>(tiny_shape(), 1), nullptr);

    // Rewrite with a bumped version field and a fixed-up checksum.
    std::string payload = bin::read_checksummed(path);
    REQUIRE(payload.size() > 8);
    payload[4] = 9;  // version u32 lives after the 4-byte magic
    bin::write_checksummed(path, payload);
    CHECK_THROWS_WITH_AS(net::load_model(path), doctest::Contains("version"), Error);
    CHECK_THROWS_WITH_AS(net::load_model(path), doctest::Contains("9"), Error);
}

TEST_CASE("model file: corruption and truncation are caught") {
    testsup::TmpDir tmp("model-corrupt");
    const std::string path = tmp.sub("m.model");
    net::save_model(path, net::init_params<float>(tiny_shape(), 2), nullptr);

    std::string payload = bin::read_checksummed(path);
    {
        std::string flipped = payload;
        flipped[40] = static_cast<char>(flipped[40] ^ 0x80);
        std::ofstream f(path, std::ios::binary);
        f << flipped;  // payload without a matching checksum
    }
    CHECK_THROWS_AS(net::load_model(path), Error);

    bin::write_checksummed(path, payload.substr(0, payload.size() / 2));
    CHECK_THROWS_AS(net::load_model(path), Error);

    bin::write_checksummed(path, payload + std::string(8, '\0'));
    CHECK_THROWS_WITH_AS(net::load_model(path), doctest::Contains("trailing"), Error);
}

TEST_CASE("parallel: thread count never changes forward or gradients") {
    const NetworkShape s = tiny_shape();
    const Tensor4<float> x = random_input(s, 5, 31);
    Tensor4<float> targets(5, s.output_dim(), 1, 1);
    std::mt19937 gen(37);
    for (float& v : targets.v) v = (gen() & 1) ? 1.0f : 0.0f;
    const std::vector<std::uint8_t> ignore(targets.v.size(), 0);

    auto run = [&](int threads) {
        auto params = net::init_params<float>(s, 77);
        net::ForwardCache<float> cache;
        const auto probs = net::forward(params, x, net::RunMode::Train, &cache, threads);
        auto grads = net::zero_like(params);
        net::backward(params, cache, net::loss_logit_grad(probs, targets, ignore), grads,
                      threads);
        return std::make_pair(probs, grads);
    };
    const auto [p1, g1] = run(1);
    const auto [p3, g3] = run(3);
    CHECK(p1.v == p3.v);
    CHECK(g1.conv1.w == g3.conv1.w);
    CHECK(g1.bn2.gamma == g3.bn2.gamma);
    CHECK(g1.dense1.w == g3.dense1.w);
    CHECK(g1.dense2.b == g3.dense2.b);
}

TEST_SUITE_END();
