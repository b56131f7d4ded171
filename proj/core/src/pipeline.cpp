#include "fakejob/pipeline.hpp"

#include <fmt/format.h>

#include "fakejob/error.hpp"

namespace fakejob::pipeline {

namespace {

void say(const Logger& log, const std::string& msg) {
    if (log) log(msg);
}

std::vector<std::string> texts_of(std::span<const ingest::CleanPosting> postings) {
    std::vector<std::string> out;
    out.reserve(postings.size());
    for (const auto& p : postings) out.push_back(p.full_text);
    return out;
}

std::vector<features::EncodedExample> encode_all(std::span<const ingest::CleanPosting> postings,
                                                 const store::ModelBundle& b) {
    std::vector<features::EncodedExample> out;
    out.reserve(postings.size());
    for (const auto& p : postings) {
        out.push_back(features::encode_example(p, b.vocabulary, b.encoders, b.model_config.sequence_length));
    }
    return out;
}

forests::EnsembleKind ensemble_kind(store::ModelKind k) {
    switch (k) {
        case store::ModelKind::random_forest: return forests::EnsembleKind::random_forest;
        case store::ModelKind::gbm: return forests::EnsembleKind::gbm;
        case store::ModelKind::leafwise_gbm: return forests::EnsembleKind::leafwise_gbm;
        case store::ModelKind::bilstm: break;
    }
    throw ContractError("not an ensemble kind");
}

}  // namespace

ingest::Dataset load_dataset(const std::filesystem::path& path, const Logger& log) {
    auto parsed = ingest::parse_csv(path);
    for (const auto& w : parsed.warnings) say(log, "warning: " + w);
    auto d = ingest::assemble_dataset(parsed.postings);
    say(log, fmt::format("loaded {} postings ({} genuine, {} fraudulent)", d.summary.total, d.summary.genuine,
                         d.summary.fake));
    return d;
}

std::vector<ingest::CleanPosting> select_rows(const ingest::Dataset& d, std::span<const std::size_t> rows) {
    std::vector<ingest::CleanPosting> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(d.postings.at(r));
    return out;
}

std::vector<int> labels_of(std::span<const ingest::CleanPosting> postings) {
    std::vector<int> y;
    y.reserve(postings.size());
    for (const auto& p : postings) y.push_back(p.raw.fraudulent);
    return y;
}

Prepared prepare(const ingest::Dataset& d, const RunConfig& cfg) {
    Prepared prep;
    prep.split = trainer::split_dataset(d.postings.size(), cfg.seed);
    const auto train = select_rows(d, prep.split.train);
    const auto texts = texts_of(train);
    prep.vocabulary = features::Vocabulary::build(texts, cfg.features.vocab_size);
    prep.encoders = features::fit_categorical_encoders(train);
    prep.feature_spec =
        forests::make_feature_spec(prep.encoders, forests::select_terms(texts, cfg.features.top_terms));
    return prep;
}

store::ModelBundle train_model(const ingest::Dataset& d, const Prepared& prep, const RunConfig& cfg,
                               store::ModelKind kind, const Logger& log) {
    store::ModelBundle b;
    b.kind = kind;
    b.config = cfg;
    b.dataset_rows = d.postings.size();
    b.encoders = prep.encoders;

    const auto train = select_rows(d, prep.split.train);
    const auto test = select_rows(d, prep.split.test);

    if (kind == store::ModelKind::bilstm) {
        b.vocabulary = prep.vocabulary;
        b.model_config = cfg.model_config(prep.vocabulary.size(), prep.encoders.width() + features::kFlagFeatures);
        const auto val = select_rows(d, prep.split.validation);
        const auto train_x = encode_all(train, b);
        const auto val_x = encode_all(val, b);
        say(log, fmt::format("bilstm: {} train / {} validation rows, {} parameters", train_x.size(), val_x.size(),
                             bilstm::expected_parameter_count(b.model_config)));
        auto result = trainer::train(bilstm::init_params(b.model_config), train_x, val_x, cfg.train,
                                     [&](std::size_t epoch, const trainer::EpochRecord& r) {
                                         say(log, fmt::format("epoch {}: train_loss {:.5f} val_loss {:.5f} "
                                                              "val_accuracy {:.4f}",
                                                              epoch, r.train_loss, r.val_loss, r.val_accuracy));
                                     });
        b.network = std::move(result.params);
        b.history = std::move(result.history);
    } else {
        b.feature_spec = prep.feature_spec;
        const auto x = forests::build_tabular(train, prep.encoders, prep.feature_spec);
        const auto y = labels_of(train);
        forests::EnsembleModel m;
        switch (kind) {
            case store::ModelKind::random_forest: m = forests::fit_random_forest(x, y, cfg.random_forest); break;
            case store::ModelKind::gbm: m = forests::fit_gbm(x, y, cfg.gbm); break;
            default: m = forests::fit_leafwise_gbm(x, y, cfg.leafwise_gbm); break;
        }
        m.kind = ensemble_kind(kind);
        m.feature_spec = prep.feature_spec;
        for (const auto& w : m.warnings) say(log, "warning: " + w);
        say(log, fmt::format("{}: {} trees over {} features", to_string(kind), m.trees.size(), x.cols()));
        b.ensemble = std::move(m);
    }

    if (!test.empty()) {
        const auto scores = predict(b, test);
        b.test_metrics = metrics::evaluate(labels_of(test), scores, cfg.threshold);
    }
    return b;
}

std::vector<double> predict(const store::ModelBundle& b, std::span<const ingest::CleanPosting> postings) {
    if (postings.empty()) return {};
    if (b.kind == store::ModelKind::bilstm) {
        if (!b.network) throw ContractError("bundle has no network parameters");
        return bilstm::predict(encode_all(postings, b), *b.network);
    }
    if (!b.ensemble) throw ContractError("bundle has no ensemble");
    return forests::ensemble_predict(*b.ensemble, forests::build_tabular(postings, b.encoders, b.feature_spec));
}

const std::vector<std::string>& model_display_names() {
    static const std::vector<std::string> names{"BiLSTM", "Random Forest", "GBM", "Leaf-wise GBM"};
    return names;
}

Comparison compare(const ingest::Dataset& d, const RunConfig& cfg, const Logger& log) {
    const auto prep = prepare(d, cfg);
    const auto test = select_rows(d, prep.split.test);
    const auto y = labels_of(test);

    Comparison c;
    c.split = prep.split;
    const store::ModelKind kinds[] = {store::ModelKind::bilstm, store::ModelKind::random_forest,
                                      store::ModelKind::gbm, store::ModelKind::leafwise_gbm};
    for (std::size_t k = 0; k < 4; ++k) {
        say(log, fmt::format("training {}", model_display_names()[k]));
        auto b = train_model(d, prep, cfg, kinds[k], log);
        auto scores = predict(b, test);
        c.reports.emplace_back(model_display_names()[k], metrics::evaluate(y, scores, cfg.threshold));
        c.test_scores.push_back(std::move(scores));
        c.bundles.push_back(std::move(b));
    }
    return c;
}

}  // namespace fakejob::pipeline
