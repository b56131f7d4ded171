#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "fakejob/bilstm.hpp"
#include "fakejob/forests.hpp"
#include "fakejob/metrics.hpp"
#include "fakejob/trainer.hpp"

namespace fakejob {

struct FeatureConfig {
    std::size_t vocab_size = features::kDefaultVocabSize;
    std::size_t sequence_length = features::kDefaultSequenceLength;
    std::size_t top_terms = forests::kDefaultTopTerms;
};

struct NetworkConfig {
    std::size_t embedding_dim = 32;
    std::size_t hidden_units = 64;
    std::size_t dense_units = 64;
    std::size_t layers = 1;
};

// Everything one run needs. A single seed drives the split, the initial
// weights, batch shuffling and the forest bootstraps (each from its own
// SplitMix64 stream).
struct RunConfig {
    std::uint64_t seed = 42;
    double threshold = metrics::kDefaultThreshold;
    FeatureConfig features;
    NetworkConfig model;
    trainer::TrainConfig train;
    forests::ForestParams random_forest;
    forests::GbmParams gbm;
    forests::LeafwiseParams leafwise_gbm;

    /// Propagates `seed` into the per-module parameter blocks.
    void apply_seed(std::uint64_t s);
    bilstm::ModelConfig model_config(std::size_t vocab_size, std::size_t numeric_width) const;
};

/// Parses a config document; absent keys keep their defaults, unknown keys
/// throw DataError naming the offending path.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string to_json(const RunConfig& cfg);

}  // namespace fakejob
