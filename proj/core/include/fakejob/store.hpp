#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fakejob/bilstm.hpp"
#include "fakejob/features.hpp"
#include "fakejob/forests.hpp"
#include "fakejob/metrics.hpp"
#include "fakejob/run_config.hpp"
#include "fakejob/trainer.hpp"

// Model bundles on disk: a directory holding manifest.json and weights.bin.
// weights.bin is the concatenation of every network tensor (row-major IEEE-754
// binary64, little-endian) in manifest order; its CRC-32 is recorded in the
// manifest and verified on load. Ensembles keep their trees in the manifest
// and write an empty blob.
namespace fakejob::store {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kWeightsFile = "weights.bin";

enum class ModelKind { bilstm, random_forest, gbm, leafwise_gbm };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);
/// CLI aliases: bilstm | rf | gbm | lgbt.
ModelKind model_kind_from_cli(const std::string& name);

struct ModelBundle {
    ModelKind kind = ModelKind::bilstm;
    RunConfig config;
    std::size_t dataset_rows = 0;  // rows of the file the split was drawn from
    features::Vocabulary vocabulary;
    features::CategoricalEncoders encoders;
    forests::FeatureSpec feature_spec;  // ensembles only
    bilstm::ModelConfig model_config;   // bilstm only
    std::optional<bilstm::ModelParams> network;
    std::optional<forests::EnsembleModel> ensemble;
    std::optional<trainer::History> history;
    std::optional<metrics::MetricsReport> test_metrics;
};

struct TensorEntry {
    std::string name;
    ndgrad::Shape shape;
    std::uint64_t offset = 0;  // bytes
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

/// Little-endian binary64 blob of the network tensors plus its directory.
std::vector<std::uint8_t> pack_weights(const bilstm::ModelParams& params, std::vector<TensorEntry>& directory);

void save_model(const ModelBundle& bundle, const std::filesystem::path& dir);

/// Throws ModelStoreError whose kind() tells missing files, malformed JSON,
/// checksum mismatch, layout mismatch and unsupported versions apart.
ModelBundle load_model(const std::filesystem::path& dir);

}  // namespace fakejob::store
