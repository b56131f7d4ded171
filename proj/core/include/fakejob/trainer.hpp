#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fakejob/bilstm.hpp"
#include "fakejob/features.hpp"

namespace fakejob::trainer {

struct SplitResult {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;

    friend bool operator==(const SplitResult&, const SplitResult&) = default;
};

/// Shuffles 0..n−1 (Fisher–Yates over SplitMix64(seed)); the first
/// floor(0.2n) indices are test, the next floor(0.2·(n−|test|)) validation,
/// the rest train. Throws DataError for n < 5.
SplitResult split_dataset(std::size_t n, std::uint64_t seed);

struct TrainConfig {
    std::size_t epochs_max = 25;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    // 0 disables early stopping.
    std::size_t patience = 2;
    std::uint64_t seed = 42;

    void validate() const;
};

struct EpochRecord {
    double train_loss = 0;
    double val_loss = 0;
    double val_accuracy = 0;
};

struct History {
    std::vector<EpochRecord> epochs;
    std::size_t stopped_epoch = 0;  // 1-based count of epochs run
    std::size_t best_epoch = 0;     // 1-based
};

// First and second moment buffers, one per parameter tensor.
struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::size_t step = 0;
};

struct NamedTensor {
    std::string name;
    ndgrad::Tensor tensor;
};

AdamState make_adam_state(std::span<const NamedTensor> params);

/// One bias-corrected Adam update using each tensor's .grad(). `t` is the
/// 1-based step index. Throws NumericError naming the first tensor whose
/// gradient is not finite (before any parameter is modified).
void adam_step(std::span<NamedTensor> params, AdamState& state, std::size_t t, const TrainConfig& cfg);

struct StopDecision {
    bool stop = false;
    std::size_t best_index = 0;  // 0-based argmin, first on ties
};

/// An epoch "improves" when its loss is strictly below every earlier loss;
/// the first epoch has nothing to beat and does not count as an improvement.
/// Stop once the last `patience` epochs all failed to improve.
StopDecision early_stop_check(std::span<const double> val_losses, std::size_t patience);

using EpochCallback = std::function<void(std::size_t epoch, const EpochRecord&)>;

struct TrainResult {
    bilstm::ModelParams params;  // restored from the best validation epoch
    History history;
};

/// Mini-batch Adam on mean BCE with per-epoch reshuffling (SplitMix64(seed)),
/// validation after every epoch, early stopping on validation loss, and
/// best-weights restore. `params` is trained in place and also returned.
TrainResult train(bilstm::ModelParams params, std::span<const features::EncodedExample> train_set,
                  std::span<const features::EncodedExample> validation_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Mean BCE and accuracy at 0.5 over a set.
struct Evaluation {
    double loss = 0;
    double accuracy = 0;
};
Evaluation evaluate(const bilstm::ModelParams& params, std::span<const features::EncodedExample> set,
                    std::size_t batch_size = 64);

}  // namespace fakejob::trainer
