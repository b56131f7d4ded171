#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fakejob::metrics {

inline constexpr double kDefaultThreshold = 0.5;

// Positive class is label 1 (fraudulent).
struct ConfusionMatrix {
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tp = 0;

    std::size_t total() const noexcept { return tn + fp + fn + tp; }
    std::size_t errors() const noexcept { return fp + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct Scores {
    double accuracy = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

struct MetricsReport {
    ConfusionMatrix confusion;
    double accuracy = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    double auroc = 0;
    double threshold = kDefaultThreshold;
};

/// Predicted positive iff score >= threshold.
ConfusionMatrix confusion_at(std::span<const int> labels, std::span<const double> scores,
                             double threshold = kDefaultThreshold);

/// Zero denominators yield 0 for precision, recall and F1.
Scores classification_scores(const ConfusionMatrix& cm);

/// Mann–Whitney AUC with average ranks for ties. Throws DataError when only
/// one class is present.
double roc_auc(std::span<const int> labels, std::span<const double> scores);

MetricsReport evaluate(std::span<const int> labels, std::span<const double> scores,
                       double threshold = kDefaultThreshold);

using NamedReport = std::pair<std::string, MetricsReport>;

/// Markdown table (model | auroc | accuracy | precision | recall | f1, two
/// decimals) followed by one confusion matrix per model.
std::string report_markdown(std::span<const NamedReport> results);

/// {"model", "threshold", "confusion": {tn, fp, fn, tp}, "accuracy", ...}
std::string report_json(const NamedReport& result);
/// JSON array of report_json objects.
std::string report_json(std::span<const NamedReport> results);

}  // namespace fakejob::metrics
