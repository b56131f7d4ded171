#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fakejob/ingest.hpp"
#include "fakejob/metrics.hpp"
#include "fakejob/run_config.hpp"
#include "fakejob/store.hpp"
#include "fakejob/trainer.hpp"

// End-to-end workflows shared by the CLI and the acceptance harness.
namespace fakejob::pipeline {

using Logger = std::function<void(const std::string&)>;

/// parse_csv + assemble_dataset; parse warnings go to `log`.
ingest::Dataset load_dataset(const std::filesystem::path& path, const Logger& log = {});

// A dataset split with every fitted preprocessing artifact. All artifacts
// are fitted on the training rows only.
struct Prepared {
    trainer::SplitResult split;
    features::Vocabulary vocabulary;
    features::CategoricalEncoders encoders;
    forests::FeatureSpec feature_spec;
};

Prepared prepare(const ingest::Dataset& d, const RunConfig& cfg);

std::vector<ingest::CleanPosting> select_rows(const ingest::Dataset& d, std::span<const std::size_t> rows);
std::vector<int> labels_of(std::span<const ingest::CleanPosting> postings);

/// Trains one model on the split's training rows (the network also uses the
/// validation rows for early stopping) and records its test metrics.
store::ModelBundle train_model(const ingest::Dataset& d, const Prepared& prep, const RunConfig& cfg,
                               store::ModelKind kind, const Logger& log = {});

/// Fraud probabilities for arbitrary postings under a trained bundle.
std::vector<double> predict(const store::ModelBundle& bundle, std::span<const ingest::CleanPosting> postings);

struct Comparison {
    trainer::SplitResult split;
    std::vector<metrics::NamedReport> reports;     // bilstm, random forest, gbm, leaf-wise gbm
    std::vector<std::vector<double>> test_scores;  // same order
    std::vector<store::ModelBundle> bundles;
};

/// Display names used in reports, in comparison order.
const std::vector<std::string>& model_display_names();

/// All four models on one split; every model is scored on the same test rows.
Comparison compare(const ingest::Dataset& d, const RunConfig& cfg, const Logger& log = {});

}  // namespace fakejob::pipeline
