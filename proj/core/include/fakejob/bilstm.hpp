#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fakejob/features.hpp"
#include "fakejob/ndgrad.hpp"

// Dual-input classifier: token ids -> embedding -> bidirectional LSTM
// (final hidden state of each direction) -> concat with the numeric
// features -> dense ReLU -> single sigmoid unit.
namespace fakejob::bilstm {

using ndgrad::Graph;
using ndgrad::Tensor;

struct ModelConfig {
    std::size_t vocab_size = features::kDefaultVocabSize;
    std::size_t embedding_dim = 32;
    std::size_t hidden_units = 64;
    std::size_t dense_units = 64;
    std::size_t sequence_length = features::kDefaultSequenceLength;
    std::size_t numeric_width = 0;
    std::size_t layers = 1;
    std::uint64_t seed = 42;

    /// Throws ContractError if any size is zero.
    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Gate row blocks are ordered (input, forget, candidate, output).
struct LstmParams {
    Tensor wx;  // [4H × in]
    Tensor wh;  // [4H × H]
    Tensor b;   // [4H]

    std::size_t hidden() const { return wh.shape()[1]; }
    std::size_t input() const { return wx.shape()[1]; }
};

struct ModelParams {
    Tensor embedding;                    // [V × E]
    std::vector<LstmParams> forward;     // one per layer
    std::vector<LstmParams> backward;
    Tensor dense_w;                      // [(2H + D) × U]
    Tensor dense_b;                      // [U]
    Tensor out_w;                        // [U × 1]
    Tensor out_b;                        // [1]

    /// Every trainable tensor with a stable name, in serialization order.
    std::vector<std::pair<std::string, Tensor>> named();
    std::vector<std::pair<std::string, const Tensor>> named() const;

    std::size_t parameter_count() const;
    ModelParams clone() const;
    void zero_grad();
};

/// V·E + Σ_layers 2·(4H·in + 4H·H + 4H) + (2H+D)·U + U + U + 1
std::size_t expected_parameter_count(const ModelConfig& cfg);

/// Glorot-uniform matrices (bound sqrt(6/(rows+cols))), embedding
/// U(−0.05, 0.05), zero biases except the forget block (+1). Draws come from
/// one SplitMix64(cfg.seed) stream in this order: embedding, then per layer
/// forward wx, forward wh, backward wx, backward wh, then dense_w, out_w.
ModelParams init_params(const ModelConfig& cfg);

/// Zero-filled parameters with the shapes implied by cfg.
ModelParams zero_params(const ModelConfig& cfg);

struct CellState {
    Tensor h;  // [B × H]
    Tensor c;  // [B × H]
};

/// One step for a batch: z = x·Wxᵀ + h·Whᵀ + b; c' = f⊙c + i⊙g; h' = o⊙tanh(c').
CellState lstm_cell(Graph& g, const Tensor& x, const CellState& prev, const LstmParams& p);

/// Same step with x·Wxᵀ + b precomputed.
CellState lstm_step(Graph& g, const Tensor& projected_input, const CellState& prev, const LstmParams& p);

/// Token-id matrix for a batch: row b holds example b's ids.
using IdBatch = std::span<const std::vector<features::TokenId>>;

/// [B × 2H]: concat(final forward state, final backward state) of the top layer.
Tensor bilstm_encode(Graph& g, IdBatch ids, const ModelParams& p);
std::vector<double> bilstm_encode(std::span<const features::TokenId> ids, const ModelParams& p);

/// [B × 1] probabilities.
Tensor model_forward(Graph& g, std::span<const features::EncodedExample> batch, const ModelParams& p);

/// Inference in chunks of `batch_size`; no tape is recorded.
std::vector<double> predict(std::span<const features::EncodedExample> examples, const ModelParams& p,
                            std::size_t batch_size = 64);

}  // namespace fakejob::bilstm
