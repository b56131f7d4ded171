#include "fakejob/run_config.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "fakejob/error.hpp"

namespace fakejob {

using nlohmann::json;

namespace {

// Reads the keys a section allows; anything left over is rejected.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw DataError(fmt::format("config: '{}' must be an object", path_));
    }

    template <typename T>
    void read(const char* key, T& target) {
        seen_.push_back(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!it->is_boolean()) throw DataError("expected a boolean");
                target = it->template get<bool>();
            } else if constexpr (std::is_integral_v<T>) {
                if (!it->is_number_unsigned() && !(it->is_number_integer() && it->template get<long long>() >= 0)) {
                    throw DataError("expected a non-negative integer");
                }
                target = it->template get<T>();
            } else {
                if (!it->is_number()) throw DataError("expected a number");
                target = it->template get<T>();
            }
        } catch (const DataError& e) {
            throw DataError(fmt::format("config: '{}.{}': {}", path_, key, e.what()));
        }
    }

    Section sub(const char* key) {
        seen_.push_back(key);
        const auto it = j_.find(key);
        static const json empty = json::object();
        return Section(it == j_.end() ? empty : *it, path_.empty() ? key : path_ + "." + key);
    }

    bool has(const char* key) const { return j_.contains(key); }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) {
                throw DataError(fmt::format("config: unknown key '{}{}'", path_.empty() ? "" : path_ + ".", k));
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::vector<std::string> seen_;
};

}  // namespace

void RunConfig::apply_seed(std::uint64_t s) {
    seed = s;
    train.seed = s;
    random_forest.seed = s;
    gbm.seed = s;
    leafwise_gbm.seed = s;
}

bilstm::ModelConfig RunConfig::model_config(std::size_t vocab_size, std::size_t numeric_width) const {
    bilstm::ModelConfig m;
    m.vocab_size = vocab_size;
    m.embedding_dim = model.embedding_dim;
    m.hidden_units = model.hidden_units;
    m.dense_units = model.dense_units;
    m.sequence_length = features.sequence_length;
    m.numeric_width = numeric_width;
    m.layers = model.layers;
    m.seed = seed;
    return m;
}

RunConfig parse_run_config(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw DataError(fmt::format("config is not valid JSON: {}", e.what()));
    }
    RunConfig cfg;
    Section root(doc, "");
    std::uint64_t seed = cfg.seed;
    root.read("seed", seed);
    root.read("threshold", cfg.threshold);

    auto f = root.sub("features");
    f.read("vocab_size", cfg.features.vocab_size);
    f.read("sequence_length", cfg.features.sequence_length);
    f.read("top_terms", cfg.features.top_terms);
    f.finish();

    auto m = root.sub("model");
    m.read("embedding_dim", cfg.model.embedding_dim);
    m.read("hidden_units", cfg.model.hidden_units);
    m.read("dense_units", cfg.model.dense_units);
    m.read("layers", cfg.model.layers);
    m.finish();

    auto t = root.sub("train");
    t.read("epochs_max", cfg.train.epochs_max);
    t.read("batch_size", cfg.train.batch_size);
    t.read("learning_rate", cfg.train.learning_rate);
    t.read("beta1", cfg.train.beta1);
    t.read("beta2", cfg.train.beta2);
    t.read("epsilon", cfg.train.epsilon);
    t.read("patience", cfg.train.patience);
    t.finish();

    auto rf = root.sub("random_forest");
    rf.read("n_trees", cfg.random_forest.n_trees);
    rf.read("max_depth", cfg.random_forest.max_depth);
    rf.read("min_samples_leaf", cfg.random_forest.min_samples_leaf);
    rf.read("max_features", cfg.random_forest.max_features);
    rf.read("bootstrap", cfg.random_forest.bootstrap);
    rf.finish();

    auto gb = root.sub("gbm");
    gb.read("n_rounds", cfg.gbm.n_rounds);
    gb.read("learning_rate", cfg.gbm.learning_rate);
    gb.read("max_depth", cfg.gbm.max_depth);
    gb.read("min_samples_leaf", cfg.gbm.min_samples_leaf);
    gb.finish();

    auto lw = root.sub("leafwise_gbm");
    lw.read("n_rounds", cfg.leafwise_gbm.n_rounds);
    lw.read("learning_rate", cfg.leafwise_gbm.learning_rate);
    lw.read("max_leaves", cfg.leafwise_gbm.max_leaves);
    lw.read("n_bins", cfg.leafwise_gbm.n_bins);
    lw.read("min_samples_leaf", cfg.leafwise_gbm.min_samples_leaf);
    lw.finish();

    root.finish();
    cfg.apply_seed(seed);

    try {
        cfg.train.validate();
        cfg.model_config(3, 0).validate();
    } catch (const ContractError& e) {
        throw DataError(fmt::format("config: {}", e.what()));
    }
    if (cfg.features.vocab_size < 3) throw DataError("config: features.vocab_size must be >= 3");
    if (cfg.features.sequence_length == 0) throw DataError("config: features.sequence_length must be >= 1");
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open config '{}'", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

std::string to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["seed"] = c.seed;
    j["threshold"] = c.threshold;
    j["features"] = {{"vocab_size", c.features.vocab_size},
                     {"sequence_length", c.features.sequence_length},
                     {"top_terms", c.features.top_terms}};
    j["model"] = {{"embedding_dim", c.model.embedding_dim},
                  {"hidden_units", c.model.hidden_units},
                  {"dense_units", c.model.dense_units},
                  {"layers", c.model.layers}};
    j["train"] = {{"epochs_max", c.train.epochs_max},     {"batch_size", c.train.batch_size},
                  {"learning_rate", c.train.learning_rate}, {"beta1", c.train.beta1},
                  {"beta2", c.train.beta2},                 {"epsilon", c.train.epsilon},
                  {"patience", c.train.patience}};
    j["random_forest"] = {{"n_trees", c.random_forest.n_trees},
                          {"max_depth", c.random_forest.max_depth},
                          {"min_samples_leaf", c.random_forest.min_samples_leaf},
                          {"max_features", c.random_forest.max_features},
                          {"bootstrap", c.random_forest.bootstrap}};
    j["gbm"] = {{"n_rounds", c.gbm.n_rounds},
                {"learning_rate", c.gbm.learning_rate},
                {"max_depth", c.gbm.max_depth},
                {"min_samples_leaf", c.gbm.min_samples_leaf}};
    j["leafwise_gbm"] = {{"n_rounds", c.leafwise_gbm.n_rounds},
                         {"learning_rate", c.leafwise_gbm.learning_rate},
                         {"max_leaves", c.leafwise_gbm.max_leaves},
                         {"n_bins", c.leafwise_gbm.n_bins},
                         {"min_samples_leaf", c.leafwise_gbm.min_samples_leaf}};
    return j.dump(2);
}

}  // namespace fakejob
