#include "fakejob/cli.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "fakejob/error.hpp"
#include "fakejob/pipeline.hpp"

namespace fakejob {

namespace {

using nlohmann::ordered_json;

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out << text;
    if (!out) throw IoError(fmt::format("error writing '{}'", path.string()));
}

RunConfig config_from(const std::string& path) {
    return path.empty() ? RunConfig{} : load_run_config(path);
}

ordered_json history_json(const trainer::History& h) {
    auto epochs = ordered_json::array();
    for (std::size_t i = 0; i < h.epochs.size(); ++i) {
        const auto& e = h.epochs[i];
        epochs.push_back({{"epoch", i + 1}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss},
                          {"val_accuracy", e.val_accuracy}});
    }
    return {{"epochs", epochs}, {"stopped_epoch", h.stopped_epoch}, {"best_epoch", h.best_epoch}};
}

struct Options {
    std::string data;
    std::string out;
    std::string config;
    std::string model = "bilstm";
    std::string model_dir;
    std::string input;
    std::string split = "test";
    std::size_t top_k = 20;
    std::uint64_t seed = 42;
    double threshold = metrics::kDefaultThreshold;
};

int cmd_eda(const Options& o, std::ostream& out, const pipeline::Logger& log) {
    const auto d = pipeline::load_dataset(o.data, log);
    const auto json = features::eda_json(features::exploratory_analysis(d, o.top_k));
    if (o.out.empty()) {
        out << json << "\n";
    } else {
        write_text(o.out, json + "\n");
        log(fmt::format("wrote {}", o.out));
    }
    return kExitOk;
}

int cmd_train(const Options& o, bool seed_given, std::ostream& out, const pipeline::Logger& log) {
    auto cfg = config_from(o.config);
    if (seed_given) cfg.apply_seed(o.seed);
    const auto kind = store::model_kind_from_cli(o.model);
    const auto d = pipeline::load_dataset(o.data, log);
    const auto prep = pipeline::prepare(d, cfg);
    const auto bundle = pipeline::train_model(d, prep, cfg, kind, log);
    store::save_model(bundle, o.out);
    log(fmt::format("saved {} bundle to {}", store::to_string(kind), o.out));

    ordered_json j;
    j["model"] = store::to_string(kind);
    j["history"] = bundle.history ? history_json(*bundle.history) : ordered_json(nullptr);
    j["test_metrics"] = bundle.test_metrics
                            ? ordered_json::parse(metrics::report_json({store::to_string(kind), *bundle.test_metrics}))
                            : ordered_json(nullptr);
    out << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out, const pipeline::Logger& log) {
    const auto bundle = store::load_model(o.model_dir);
    const auto d = pipeline::load_dataset(o.data, log);

    std::vector<std::size_t> rows;
    if (o.split == "all") {
        rows.resize(d.postings.size());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    } else {
        if (d.postings.size() != bundle.dataset_rows) {
            throw DataError(fmt::format("the bundle was trained on {} rows but '{}' has {}; use --split all",
                                        bundle.dataset_rows, o.data, d.postings.size()));
        }
        const auto split = trainer::split_dataset(d.postings.size(), bundle.config.seed);
        rows = o.split == "test" ? split.test : split.validation;
    }
    const auto postings = pipeline::select_rows(d, rows);
    const auto scores = pipeline::predict(bundle, postings);
    const auto report = metrics::evaluate(pipeline::labels_of(postings), scores, o.threshold);
    out << metrics::report_json({store::to_string(bundle.kind), report}) << "\n";
    return kExitOk;
}

int cmd_predict(const Options& o, const pipeline::Logger& log) {
    const auto bundle = store::load_model(o.model_dir);
    auto table = csv::read_file(o.input);
    auto parsed = ingest::postings_from_table(table);
    for (const auto& w : parsed.warnings) log("warning: " + w);
    if (parsed.postings.empty()) throw DataError(fmt::format("'{}' has no rows", o.input));
    const auto d = ingest::assemble_dataset(parsed.postings);
    const auto scores = pipeline::predict(bundle, d.postings);

    table.header.push_back("probability");
    table.header.push_back("predicted_label");
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        table.rows[i].resize(table.header.size() - 2);
        table.rows[i].push_back(fmt::format("{}", scores[i]));
        table.rows[i].push_back(scores[i] >= bundle.config.threshold ? "1" : "0");
    }
    csv::write_file(table, o.out);
    log(fmt::format("wrote {} predictions to {}", scores.size(), o.out));
    return kExitOk;
}

int cmd_compare(const Options& o, std::ostream& out, const pipeline::Logger& log) {
    const auto cfg = config_from(o.config);
    const auto d = pipeline::load_dataset(o.data, log);
    const auto c = pipeline::compare(d, cfg, log);
    write_text(o.out, metrics::report_markdown(c.reports));
    log(fmt::format("wrote {}", o.out));
    out << metrics::report_json(std::span<const metrics::NamedReport>(c.reports)) << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fake job posting detection: EDA, training, evaluation and model comparison", "fakejob"};
    app.require_subcommand(1, 1);
    Options o;

    auto* eda = app.add_subcommand("eda", "Class balance and term frequencies of a postings CSV");
    eda->add_option("--data", o.data, "Postings CSV")->required();
    eda->add_option("--top-k", o.top_k, "Terms to report")->capture_default_str();
    eda->add_option("--out", o.out, "Output JSON (stdout when omitted)");

    auto* train = app.add_subcommand("train", "Train one model and save its bundle");
    train->add_option("--data", o.data, "Postings CSV")->required();
    train->add_option("--config", o.config, "Run config JSON");
    train->add_option("--out", o.out, "Bundle directory")->required();
    auto* seed_opt = train->add_option("--seed", o.seed, "Overrides the config seed");
    train->add_option("--model", o.model, "bilstm | rf | gbm | lgbt")
        ->check(CLI::IsMember({"bilstm", "rf", "gbm", "lgbt"}))
        ->capture_default_str();

    auto* evaluate = app.add_subcommand("evaluate", "Score a saved bundle on a split of a postings CSV");
    evaluate->add_option("--model", o.model_dir, "Bundle directory")->required();
    evaluate->add_option("--data", o.data, "Postings CSV")->required();
    evaluate->add_option("--split", o.split, "test | val | all")
        ->check(CLI::IsMember({"test", "val", "all"}))
        ->capture_default_str();
    evaluate->add_option("--threshold", o.threshold, "Decision threshold")->capture_default_str();

    auto* predict = app.add_subcommand("predict", "Append fraud probabilities to a postings CSV");
    predict->add_option("--model", o.model_dir, "Bundle directory")->required();
    predict->add_option("--input", o.input, "Postings CSV")->required();
    predict->add_option("--out", o.out, "Output CSV")->required();

    auto* compare = app.add_subcommand("compare", "Train all four models on one split and report");
    compare->add_option("--data", o.data, "Postings CSV")->required();
    compare->add_option("--config", o.config, "Run config JSON");
    compare->add_option("--out", o.out, "Markdown report")->required();

    if (argc <= 1) {
        err << app.help();
        return kExitUsage;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    const pipeline::Logger log = [&err](const std::string& msg) { err << msg << std::endl; };
    try {
        if (eda->parsed()) return cmd_eda(o, out, log);
        if (train->parsed()) return cmd_train(o, seed_opt->count() > 0, out, log);
        if (evaluate->parsed()) return cmd_evaluate(o, out, log);
        if (predict->parsed()) return cmd_predict(o, log);
        return cmd_compare(o, out, log);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ModelStoreError& e) {
        err << "model store error: " << e.what() << "\n";
        return kExitModelStore;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ParseError& e) {
        err << "parse error (record " << e.record() << "): " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
}

}  // namespace fakejob
