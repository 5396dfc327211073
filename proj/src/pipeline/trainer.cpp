#include "pipeline/trainer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace cseg::pipe {

namespace {

// Gathers store rows into network tensors.
void fill_batch(const SampleStore& store, const std::vector<std::size_t>& order, std::size_t lo,
                std::size_t hi, net::Tensor4<float>& inputs, net::Tensor4<float>& targets,
                std::vector<std::uint8_t>& ignores) {
    const int n = static_cast<int>(hi - lo);
    inputs = net::Tensor4<float>(n, store.channels, store.side, store.side);
    targets = net::Tensor4<float>(n, static_cast<int>(store.label_dim()), 1, 1);
    ignores.resize(static_cast<std::size_t>(n) * store.label_dim());
    for (std::size_t j = lo; j < hi; ++j) {
        const std::size_t row = order[j];
        const int s = static_cast<int>(j - lo);
        std::memcpy(inputs.sample(s), store.input(row), store.input_dim() * sizeof(float));
        std::memcpy(targets.sample(s), store.target(row), store.label_dim() * sizeof(float));
        std::memcpy(ignores.data() + static_cast<std::size_t>(s) * store.label_dim(),
                    store.ignore(row), store.label_dim());
    }
}

net::NetworkShape shape_for(const SampleStore& store, const TrainConfig& cfg) {
    net::NetworkShape shape = cfg.use_shape_override ? cfg.shape_override : net::NetworkShape{};
    shape.input_side = store.side;
    shape.in_channels = store.channels;
    shape.validate();
    return shape;
}

}  // namespace

double evaluate_loss(const net::NetworkParams<float>& params, const SampleStore& store,
                     int batch, int threads) {
    if (store.count() == 0) return std::numeric_limits<double>::quiet_NaN();
    std::vector<std::size_t> order(store.count());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    double sum = 0.0;
    net::Tensor4<float> inputs, targets;
    std::vector<std::uint8_t> ignores;
    for (std::size_t lo = 0; lo < order.size(); lo += batch) {
        const std::size_t hi = std::min(order.size(), lo + batch);
        fill_batch(store, order, lo, hi, inputs, targets, ignores);
        const net::Tensor4<float> probs = net::infer(params, inputs, threads);
        sum += net::batch_loss(probs, targets, ignores) * static_cast<double>(hi - lo);
    }
    return sum / static_cast<double>(order.size());
}

TrainResult train(const SampleStore& train_store, const SampleStore* val_store,
                  const TrainConfig& config) {
    if (train_store.count() == 0) throw_invalid("training store is empty");
    if (config.epochs <= 0 || config.batch <= 0) throw_invalid("epochs and batch must be positive");
    if (!(config.lr > 0.0f)) throw_invalid("learning rate must be positive");
    if (val_store &&
        (val_store->side != train_store.side || val_store->channels != train_store.channels))
        throw_invalid("validation store shape differs from the training store");

    TrainResult result;
    result.params = net::init_params<float>(shape_for(train_store, config), config.seed);
    result.params.input_mean.assign(train_store.mean.begin(), train_store.mean.end());
    result.optimizer.lr = config.lr;

    std::mt19937 rng(config.seed);
    std::vector<std::size_t> order(train_store.count());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    net::Tensor4<float> inputs, targets;
    std::vector<std::uint8_t> ignores;
    net::ForwardCache<float> cache;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        seeded_shuffle(order, rng);
        double loss_sum = 0.0;
        int batch_no = 0;
        for (std::size_t lo = 0; lo < order.size(); lo += config.batch, ++batch_no) {
            const std::size_t hi = std::min(order.size(), lo + config.batch);
            fill_batch(train_store, order, lo, hi, inputs, targets, ignores);

            const net::Tensor4<float> probs =
                net::forward(result.params, inputs, net::RunMode::Train, &cache, config.threads);
            const double loss = net::batch_loss(probs, targets, ignores);
            if (!std::isfinite(loss))
                throw_internal("training diverged: loss " + std::to_string(loss) + " at epoch " +
                               std::to_string(epoch) + ", batch " + std::to_string(batch_no + 1));
            loss_sum += loss * static_cast<double>(hi - lo);

            const net::Tensor4<float> dz = net::loss_logit_grad(probs, targets, ignores);
            net::NetworkParams<float> grads = net::zero_like(result.params);
            net::backward(result.params, cache, dz, grads, config.threads);
            result.optimizer.step(result.params, grads);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(order.size());
        stats.val_loss = val_store ? evaluate_loss(result.params, *val_store, config.batch,
                                                   config.threads)
                                   : std::numeric_limits<double>::quiet_NaN();
        result.history.push_back(stats);
        if (!config.quiet)
            std::cerr << "epoch " << epoch << "/" << config.epochs << "  train " << stats.train_loss
                      << "  val " << stats.val_loss << "\n";
    }
    return result;
}

void save_history(const std::string& path, const std::vector<EpochStats>& history) {
    std::ofstream out(path);
    if (!out) throw_io("cannot open '" + path + "' for writing");
    out << "# epoch train_loss val_loss\n";
    for (const EpochStats& e : history)
        out << e.epoch << " " << e.train_loss << " " << e.val_loss << "\n";
    if (!out) throw_io("write failed for '" + path + "'");
}

}  // namespace cseg::pipe
