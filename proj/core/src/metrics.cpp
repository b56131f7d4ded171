#include "fakejob/metrics.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "fakejob/error.hpp"

namespace fakejob::metrics {

namespace {

void check_lengths(std::span<const int> labels, std::span<const double> scores) {
    if (labels.size() != scores.size()) {
        throw ContractError(fmt::format("{} labels but {} scores", labels.size(), scores.size()));
    }
    if (labels.empty()) throw ContractError("no examples to score");
}

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::ordered_json to_json(const NamedReport& r) {
    const auto& m = r.second;
    return {{"model", r.first},
            {"threshold", m.threshold},
            {"confusion", {{"tn", m.confusion.tn}, {"fp", m.confusion.fp}, {"fn", m.confusion.fn}, {"tp", m.confusion.tp}}},
            {"accuracy", m.accuracy},
            {"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1},
            {"auroc", m.auroc}};
}

}  // namespace

ConfusionMatrix confusion_at(std::span<const int> labels, std::span<const double> scores, double threshold) {
    check_lengths(labels, scores);
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (labels[i] == 1) {
            ++(predicted ? cm.tp : cm.fn);
        } else {
            ++(predicted ? cm.fp : cm.tn);
        }
    }
    return cm;
}

Scores classification_scores(const ConfusionMatrix& cm) {
    Scores s;
    s.accuracy = ratio(cm.tp + cm.tn, cm.total());
    s.precision = ratio(cm.tp, cm.tp + cm.fp);
    s.recall = ratio(cm.tp, cm.tp + cm.fn);
    // Harmonic mean of precision and recall, as one division of counts.
    s.f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn);
    return s;
}

double roc_auc(std::span<const int> labels, std::span<const double> scores) {
    check_lengths(labels, scores);
    const auto n = labels.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Twice the average rank keeps tie ranks integral: a run at sorted
    // positions [i, j) has 1-based ranks i+1..j, average (i+1+j)/2.
    double positive_rank_x2 = 0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const auto rank_x2 = static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) {
                positive_rank_x2 += rank_x2;
                ++n_pos;
            }
        }
        i = j;
    }
    const auto n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DataError("ROC AUC is undefined when only one class is present");
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    const double u_x2 = positive_rank_x2 - np * (np + 1);
    return u_x2 / (2.0 * np * nn);
}

MetricsReport evaluate(std::span<const int> labels, std::span<const double> scores, double threshold) {
    MetricsReport r;
    r.threshold = threshold;
    r.confusion = confusion_at(labels, scores, threshold);
    const auto s = classification_scores(r.confusion);
    r.accuracy = s.accuracy;
    r.precision = s.precision;
    r.recall = s.recall;
    r.f1 = s.f1;
    r.auroc = roc_auc(labels, scores);
    return r;
}

std::string report_markdown(std::span<const NamedReport> results) {
    std::string out = "| model | auroc | accuracy | precision | recall | f1 |\n";
    out += "|---|---|---|---|---|---|\n";
    for (const auto& [name, m] : results) {
        out += fmt::format("| {} | {:.2f} | {:.2f}% | {:.2f} | {:.2f} | {:.2f} |\n", name, m.auroc,
                           100.0 * m.accuracy, m.precision, m.recall, m.f1);
    }
    for (const auto& [name, m] : results) {
        const auto& c = m.confusion;
        out += fmt::format("\n### Confusion matrix: {} (threshold {})\n\n", name, m.threshold);
        out += "| | predicted genuine | predicted fake |\n|---|---|---|\n";
        out += fmt::format("| actual genuine | {} | {} |\n", c.tn, c.fp);
        out += fmt::format("| actual fake | {} | {} |\n", c.fn, c.tp);
        out += fmt::format("\n{} of {} correct; {} true positives, {} true negatives.\n", c.tp + c.tn, c.total(),
                           c.tp, c.tn);
    }
    return out;
}

std::string report_json(const NamedReport& result) { return to_json(result).dump(2); }

std::string report_json(std::span<const NamedReport> results) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : results) arr.push_back(to_json(r));
    return arr.dump(2);
}

}  // namespace fakejob::metrics
