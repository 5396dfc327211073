#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "network/model.hpp"
#include "pipeline/dataset.hpp"

namespace cseg::pipe {

struct TrainConfig {
    int epochs = 10;
    int batch = 150;
    float lr = 2.5e-3f;
    std::uint32_t seed = 0;
    int threads = 1;
    // 0 derives conv3/hidden widths from the defaults; tests may shrink them.
    net::NetworkShape shape_override{};
    bool use_shape_override = false;
    bool quiet = true;  // per-epoch progress on stderr when false
};

struct EpochStats {
    int epoch = 0;           // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;   // NaN when no validation store was given
};

struct TrainResult {
    net::NetworkParams<float> params;
    net::RmsProp<float> optimizer;
    std::vector<EpochStats> history;
};

/// Seeded mini-batch training: per epoch a fresh shuffle, batches in order,
/// RMSProp updates; per-epoch mean training loss and validation loss
/// recorded. Identical (seed, store) pairs give identical results, down to
/// the parameter bits. A NaN loss aborts with the epoch/batch named.
TrainResult train(const SampleStore& train_store, const SampleStore* val_store,
                  const TrainConfig& config);

/// Mean masked BCE of a store under inference-mode forward.
double evaluate_loss(const net::NetworkParams<float>& params, const SampleStore& store,
                     int batch, int threads = 1);

/// Plain text history: "epoch train_loss val_loss" per row.
void save_history(const std::string& path, const std::vector<EpochStats>& history);

}  // namespace cseg::pipe
