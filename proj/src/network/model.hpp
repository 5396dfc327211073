#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "network/layers.hpp"
#include "network/tensor.hpp"

namespace cseg::net {

// Architecture descriptor. Production uses the defaults; tests may shrink the
// net (smaller side/channels need a smaller kernel to keep the chain alive).
struct NetworkShape {
    int input_side = 37;
    int in_channels = 6;  // RGB patch stacked on RGB background patch
    int conv1_out = 24;
    int conv2_out = 48;
    int conv3_out = 48;
    int hidden = 500;
    int kernel = 5;

    int after_conv1() const { return input_side - kernel + 1; }
    int after_pool1() const { return after_conv1() / 2; }
    int after_conv2() const { return after_pool1() - kernel + 1; }
    int after_pool2() const { return after_conv2() / 2; }
    int after_conv3() const { return after_pool2() - kernel + 1; }
    int flatten_dim() const { return conv3_out * after_conv3() * after_conv3(); }
    int output_dim() const { return input_side * input_side; }

    void validate() const;
    bool operator==(const NetworkShape&) const = default;
};

template <typename T>
struct NetworkParams {
    NetworkShape shape;
    ConvParams<T> conv1, conv2, conv3;
    BnParams<T> bn1, bn2, bn3, bn4;
    DenseParams<T> dense1, dense2;
    std::vector<T> input_mean;  // per input channel, subtracted upstream
};

/// Zero-valued parameter holder with the same geometry (gradient container).
template <typename T>
NetworkParams<T> zero_like(const NetworkParams<T>& p) {
    NetworkParams<T> z;
    z.shape = p.shape;
    z.conv1 = ConvParams<T>::make(p.conv1.in_ch, p.conv1.out_ch, p.conv1.k);
    z.conv2 = ConvParams<T>::make(p.conv2.in_ch, p.conv2.out_ch, p.conv2.k);
    z.conv3 = ConvParams<T>::make(p.conv3.in_ch, p.conv3.out_ch, p.conv3.k);
    z.bn1 = BnParams<T>::make(p.bn1.ch);
    z.bn2 = BnParams<T>::make(p.bn2.ch);
    z.bn3 = BnParams<T>::make(p.bn3.ch);
    z.bn4 = BnParams<T>::make(p.bn4.ch);
    for (auto* bn : {&z.bn1, &z.bn2, &z.bn3, &z.bn4}) {
        std::fill(bn->gamma.begin(), bn->gamma.end(), T(0));
        std::fill(bn->run_var.begin(), bn->run_var.end(), T(0));
    }
    z.dense1 = DenseParams<T>::make(p.dense1.in_dim, p.dense1.out_dim);
    z.dense2 = DenseParams<T>::make(p.dense2.in_dim, p.dense2.out_dim);
    z.input_mean.assign(p.input_mean.size(), T(0));
    return z;
}

// Trainable arrays in a fixed order shared by the optimizer and the on-disk
// format. Running BN statistics and the input mean are not trainable.
template <typename T>
std::vector<std::vector<T>*> trainable_arrays(NetworkParams<T>& p) {
    return {&p.conv1.w,  &p.conv1.b,  &p.bn1.gamma, &p.bn1.beta,  &p.conv2.w,   &p.conv2.b,
            &p.bn2.gamma, &p.bn2.beta, &p.conv3.w,  &p.conv3.b,   &p.bn3.gamma, &p.bn3.beta,
            &p.dense1.w, &p.dense1.b, &p.bn4.gamma, &p.bn4.beta,  &p.dense2.w,  &p.dense2.b};
}

/// Glorot-uniform weights, zero biases, identity batch-norm; bit-identical
/// across platforms for a given seed.
template <typename T>
NetworkParams<T> init_params(const NetworkShape& shape, std::uint32_t seed);

enum class RunMode { Train, Infer };

template <typename T>
struct ForwardCache {
    Tensor4<T> input;
    Tensor4<T> conv1_out, bn1_out, relu1_out, pool1_out;
    Tensor4<T> conv2_out, bn2_out, relu2_out, pool2_out;
    Tensor4<T> conv3_out, bn3_out, relu3_out;
    Tensor4<T> flat, dense1_out, bn4_out, relu4_out, dense2_out;
    BnCache<T> bn1c, bn2c, bn3c, bn4c;
    PoolCache pool1c, pool2c;
};

/// Runs the pipeline conv-BN-ReLU-pool x2, conv-BN-ReLU, dense-BN-ReLU,
/// dense-sigmoid. Returns (batch, side^2, 1, 1) probabilities. Train mode
/// requires a cache and refreshes the running BN statistics.
template <typename T>
Tensor4<T> forward(NetworkParams<T>& params, const Tensor4<T>& input, RunMode mode,
                   ForwardCache<T>* cache = nullptr, int threads = 1);

/// Inference-only forward; never mutates params.
template <typename T>
Tensor4<T> infer(const NetworkParams<T>& params, const Tensor4<T>& input, int threads = 1);

/// Mean BCE over the non-ignored positions of one sample; 0 if all ignored.
template <typename T>
double bce_masked(const T* pred, const T* target, const std::uint8_t* ignore, std::size_t dim);

/// Batch loss: mean over samples of the per-sample masked BCE.
template <typename T>
double batch_loss(const Tensor4<T>& probs, const Tensor4<T>& targets,
                  const std::vector<std::uint8_t>& ignore);

/// d(batch loss)/d(logits), fused through the sigmoid: (y - x) / (N * M_s).
template <typename T>
Tensor4<T> loss_logit_grad(const Tensor4<T>& probs, const Tensor4<T>& targets,
                           const std::vector<std::uint8_t>& ignore);

/// Exact gradients of the batch loss for every trainable array; fills the
/// corresponding fields of `grads` (running stats and input_mean stay zero).
template <typename T>
void backward(const NetworkParams<T>& params, const ForwardCache<T>& cache,
              const Tensor4<T>& dlogits, NetworkParams<T>& grads, int threads = 1);

// RMSProp: acc <- 0.9 acc + 0.1 g^2; p <- p - lr g / sqrt(acc + eps).
template <typename T>
struct RmsProp {
    T lr = T(2.5e-3);
    T decay = T(0.9);
    T eps = T(1e-8);
    std::vector<std::vector<T>> acc;  // parallels trainable_arrays order

    void step(NetworkParams<T>& params, NetworkParams<T>& grads);
};

/// Model file: magic, version, shape table, little-endian f32 arrays,
/// optional optimizer state, trailing CRC-32. Round-trip is bit-exact.
void save_model(const std::string& path, const NetworkParams<float>& params,
                const RmsProp<float>* optimizer = nullptr);

struct LoadedModel {
    NetworkParams<float> params;
    std::optional<RmsProp<float>> optimizer;
};

LoadedModel load_model(const std::string& path);

// ---- template implementations -------------------------------------------

template <typename T>
NetworkParams<T> init_params(const NetworkShape& shape, std::uint32_t seed) {
    shape.validate();
    NetworkParams<T> p;
    p.shape = shape;
    p.conv1 = ConvParams<T>::make(shape.in_channels, shape.conv1_out, shape.kernel);
    p.conv2 = ConvParams<T>::make(shape.conv1_out, shape.conv2_out, shape.kernel);
    p.conv3 = ConvParams<T>::make(shape.conv2_out, shape.conv3_out, shape.kernel);
    p.bn1 = BnParams<T>::make(shape.conv1_out);
    p.bn2 = BnParams<T>::make(shape.conv2_out);
    p.bn3 = BnParams<T>::make(shape.conv3_out);
    p.bn4 = BnParams<T>::make(shape.hidden);
    p.dense1 = DenseParams<T>::make(shape.flatten_dim(), shape.hidden);
    p.dense2 = DenseParams<T>::make(shape.hidden, shape.output_dim());
    p.input_mean.assign(shape.in_channels, T(0));

    std::mt19937 gen(seed);
    // 24-bit uniform keeps draws identical across platforms and precisions.
    auto uniform = [&gen](double lo, double hi) {
        return lo + (hi - lo) * ((gen() >> 8) * (1.0 / 16777216.0));
    };
    auto fill_glorot = [&uniform](std::vector<T>& w, double fan_in, double fan_out) {
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& v : w) v = static_cast<T>(uniform(-bound, bound));
    };
    const double k2 = static_cast<double>(shape.kernel) * shape.kernel;
    fill_glorot(p.conv1.w, shape.in_channels * k2, shape.conv1_out * k2);
    fill_glorot(p.conv2.w, shape.conv1_out * k2, shape.conv2_out * k2);
    fill_glorot(p.conv3.w, shape.conv2_out * k2, shape.conv3_out * k2);
    fill_glorot(p.dense1.w, p.dense1.in_dim, p.dense1.out_dim);
    fill_glorot(p.dense2.w, p.dense2.in_dim, p.dense2.out_dim);
    return p;
}

template <typename T>
Tensor4<T> forward(NetworkParams<T>& params, const Tensor4<T>& input, RunMode mode,
                   ForwardCache<T>* cache, int threads) {
    const NetworkShape& sh = params.shape;
    if (input.c != sh.in_channels || input.h != sh.input_side || input.w != sh.input_side)
        throw_invalid("network input shape mismatch");
    const bool train = mode == RunMode::Train;
    if (train && cache == nullptr) throw_invalid("training forward requires a cache");

    ForwardCache<T> local;
    ForwardCache<T>& cc = cache ? *cache : local;
    cc.input = input;

    cc.conv1_out = conv_forward(params.conv1, input, threads);
    cc.bn1_out = train ? bn_forward_train(params.bn1, cc.conv1_out, cc.bn1c, threads)
                       : bn_forward_infer(params.bn1, cc.conv1_out, threads);
    cc.relu1_out = relu_forward(cc.bn1_out);
    cc.pool1_out = maxpool_forward(cc.relu1_out, cc.pool1c);

    cc.conv2_out = conv_forward(params.conv2, cc.pool1_out, threads);
    cc.bn2_out = train ? bn_forward_train(params.bn2, cc.conv2_out, cc.bn2c, threads)
                       : bn_forward_infer(params.bn2, cc.conv2_out, threads);
    cc.relu2_out = relu_forward(cc.bn2_out);
    cc.pool2_out = maxpool_forward(cc.relu2_out, cc.pool2c);

    cc.conv3_out = conv_forward(params.conv3, cc.pool2_out, threads);
    cc.bn3_out = train ? bn_forward_train(params.bn3, cc.conv3_out, cc.bn3c, threads)
                       : bn_forward_infer(params.bn3, cc.conv3_out, threads);
    cc.relu3_out = relu_forward(cc.bn3_out);

    cc.flat = cc.relu3_out.flattened();
    cc.dense1_out = dense_forward(params.dense1, cc.flat, threads);
    cc.bn4_out = train ? bn_forward_train(params.bn4, cc.dense1_out, cc.bn4c, threads)
                       : bn_forward_infer(params.bn4, cc.dense1_out, threads);
    cc.relu4_out = relu_forward(cc.bn4_out);
    cc.dense2_out = dense_forward(params.dense2, cc.relu4_out, threads);
    return sigmoid_forward(cc.dense2_out);
}

template <typename T>
Tensor4<T> infer(const NetworkParams<T>& params, const Tensor4<T>& input, int threads) {
    // Infer mode never writes through params; the cast only satisfies the
    // shared signature.
    return forward(const_cast<NetworkParams<T>&>(params), input, RunMode::Infer,
                   static_cast<ForwardCache<T>*>(nullptr), threads);
}

template <typename T>
double bce_masked(const T* pred, const T* target, const std::uint8_t* ignore, std::size_t dim) {
    double sum = 0.0;
    std::size_t kept = 0;
    for (std::size_t j = 0; j < dim; ++j) {
        if (ignore && ignore[j]) continue;
        const double y = std::min(1.0 - 1e-7, std::max(1e-7, static_cast<double>(pred[j])));
        const double x = static_cast<double>(target[j]);
        sum += -(x * std::log(y) + (1.0 - x) * std::log1p(-y));
        ++kept;
    }
    return kept == 0 ? 0.0 : sum / static_cast<double>(kept);
}

template <typename T>
double batch_loss(const Tensor4<T>& probs, const Tensor4<T>& targets,
                  const std::vector<std::uint8_t>& ignore) {
    if (!probs.same_shape(targets) || ignore.size() != probs.size())
        throw_invalid("loss shape mismatch");
    const std::size_t dim = probs.per_sample();
    double sum = 0.0;
    for (int s = 0; s < probs.n; ++s)
        sum += bce_masked(probs.sample(s), targets.sample(s),
                          ignore.data() + static_cast<std::size_t>(s) * dim, dim);
    return sum / static_cast<double>(probs.n);
}

template <typename T>
Tensor4<T> loss_logit_grad(const Tensor4<T>& probs, const Tensor4<T>& targets,
                           const std::vector<std::uint8_t>& ignore) {
    if (!probs.same_shape(targets) || ignore.size() != probs.size())
        throw_invalid("loss shape mismatch");
    const std::size_t dim = probs.per_sample();
    Tensor4<T> dz(probs.n, probs.c, probs.h, probs.w);
    for (int s = 0; s < probs.n; ++s) {
        const std::uint8_t* ig = ignore.data() + static_cast<std::size_t>(s) * dim;
        std::size_t kept = 0;
        for (std::size_t j = 0; j < dim; ++j)
            if (!ig[j]) ++kept;
        if (kept == 0) continue;
        const T scale = static_cast<T>(1.0 / (static_cast<double>(probs.n) * kept));
        const T* y = probs.sample(s);
        const T* x = targets.sample(s);
        T* g = dz.sample(s);
        for (std::size_t j = 0; j < dim; ++j)
            if (!ig[j]) g[j] = (y[j] - x[j]) * scale;
    }
    return dz;
}

template <typename T>
void backward(const NetworkParams<T>& params, const ForwardCache<T>& cache,
              const Tensor4<T>& dlogits, NetworkParams<T>& grads, int threads) {
    Tensor4<T> d = dlogits;
    Tensor4<T> din;

    dense_backward(params.dense2, cache.relu4_out, d, din, grads.dense2.w, grads.dense2.b,
                   threads);
    d = relu_backward(cache.relu4_out, din);
    d = bn_backward(params.bn4, cache.bn4c, d, grads.bn4.gamma, grads.bn4.beta, threads);
    dense_backward(params.dense1, cache.flat, d, din, grads.dense1.w, grads.dense1.b, threads);

    // Un-flatten back to the conv3 activation shape.
    Tensor4<T> dflat(cache.relu3_out.n, cache.relu3_out.c, cache.relu3_out.h, cache.relu3_out.w);
    dflat.v = din.v;
    d = relu_backward(cache.relu3_out, dflat);
    d = bn_backward(params.bn3, cache.bn3c, d, grads.bn3.gamma, grads.bn3.beta, threads);
    conv_backward(params.conv3, cache.pool2_out, d, din, grads.conv3.w, grads.conv3.b, threads);

    d = maxpool_backward(cache.pool2c, cache.relu2_out, din);
    d = relu_backward(cache.relu2_out, d);
    d = bn_backward(params.bn2, cache.bn2c, d, grads.bn2.gamma, grads.bn2.beta, threads);
    conv_backward(params.conv2, cache.pool1_out, d, din, grads.conv2.w, grads.conv2.b, threads);

    d = maxpool_backward(cache.pool1c, cache.relu1_out, din);
    d = relu_backward(cache.relu1_out, d);
    d = bn_backward(params.bn1, cache.bn1c, d, grads.bn1.gamma, grads.bn1.beta, threads);
    conv_backward(params.conv1, cache.input, d, din, grads.conv1.w, grads.conv1.b, threads);
}

template <typename T>
void RmsProp<T>::step(NetworkParams<T>& params, NetworkParams<T>& grads) {
    const auto ps = trainable_arrays(params);
    const auto gs = trainable_arrays(grads);
    if (acc.empty()) {
        acc.resize(ps.size());
        for (std::size_t a = 0; a < ps.size(); ++a) acc[a].assign(ps[a]->size(), T(0));
    }
    if (acc.size() != ps.size()) throw_state("optimizer state does not match the model");
    for (std::size_t a = 0; a < ps.size(); ++a) {
        std::vector<T>& p = *ps[a];
        const std::vector<T>& g = *gs[a];
        std::vector<T>& m = acc[a];
        if (p.size() != g.size() || p.size() != m.size())
            throw_state("optimizer state does not match the model");
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = decay * m[j] + (T(1) - decay) * g[j] * g[j];
            p[j] -= lr * g[j] / std::sqrt(m[j] + eps);
        }
    }
}

}  // namespace cseg::net
