#include "fakejob/store.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <zlib.h>

#include "fakejob/error.hpp"

namespace fakejob::store {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(StoreFailure kind, const std::string& what) { throw ModelStoreError(kind, what); }

ordered_json tree_to_json(const forests::Tree& t, std::size_t i) {
    const auto& n = t.nodes.at(i);
    if (n.is_leaf()) return {{"leaf", n.value}};
    return {{"feature", n.feature},
            {"threshold", n.threshold},
            {"left", tree_to_json(t, static_cast<std::size_t>(n.left))},
            {"right", tree_to_json(t, static_cast<std::size_t>(n.right))}};
}

std::int32_t tree_from_json(const json& j, forests::Tree& t) {
    const auto id = static_cast<std::int32_t>(t.nodes.size());
    t.nodes.emplace_back();
    if (j.contains("leaf")) {
        t.nodes.back().value = j.at("leaf").get<double>();
        return id;
    }
    forests::TreeNode node;
    node.feature = j.at("feature").get<std::int32_t>();
    node.threshold = j.at("threshold").get<double>();
    if (node.feature < 0) throw std::invalid_argument("negative feature index");
    node.left = tree_from_json(j.at("left"), t);
    node.right = tree_from_json(j.at("right"), t);
    t.nodes[static_cast<std::size_t>(id)] = node;
    return id;
}

ordered_json history_to_json(const trainer::History& h) {
    auto epochs = ordered_json::array();
    for (const auto& e : h.epochs) {
        epochs.push_back({{"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"val_accuracy", e.val_accuracy}});
    }
    return {{"epochs", epochs}, {"stopped_epoch", h.stopped_epoch}, {"best_epoch", h.best_epoch}};
}

trainer::History history_from_json(const json& j) {
    trainer::History h;
    for (const auto& e : j.at("epochs")) {
        h.epochs.push_back({e.at("train_loss").get<double>(), e.at("val_loss").get<double>(),
                            e.at("val_accuracy").get<double>()});
    }
    h.stopped_epoch = j.at("stopped_epoch").get<std::size_t>();
    h.best_epoch = j.at("best_epoch").get<std::size_t>();
    return h;
}

metrics::MetricsReport metrics_from_json(const json& j) {
    metrics::MetricsReport m;
    const auto& c = j.at("confusion");
    m.confusion = {c.at("tn").get<std::size_t>(), c.at("fp").get<std::size_t>(), c.at("fn").get<std::size_t>(),
                   c.at("tp").get<std::size_t>()};
    m.threshold = j.at("threshold").get<double>();
    m.accuracy = j.at("accuracy").get<double>();
    m.precision = j.at("precision").get<double>();
    m.recall = j.at("recall").get<double>();
    m.f1 = j.at("f1").get<double>();
    m.auroc = j.at("auroc").get<double>();
    return m;
}

ordered_json model_config_to_json(const bilstm::ModelConfig& m) {
    return {{"vocab_size", m.vocab_size},       {"embedding_dim", m.embedding_dim}, {"hidden_units", m.hidden_units},
            {"dense_units", m.dense_units},     {"sequence_length", m.sequence_length},
            {"numeric_width", m.numeric_width}, {"layers", m.layers},           {"seed", m.seed}};
}

bilstm::ModelConfig model_config_from_json(const json& j) {
    bilstm::ModelConfig m;
    m.vocab_size = j.at("vocab_size").get<std::size_t>();
    m.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    m.hidden_units = j.at("hidden_units").get<std::size_t>();
    m.dense_units = j.at("dense_units").get<std::size_t>();
    m.sequence_length = j.at("sequence_length").get<std::size_t>();
    m.numeric_width = j.at("numeric_width").get<std::size_t>();
    m.layers = j.at("layers").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
}

void put_le(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

double get_le(const std::uint8_t* p) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
    return std::bit_cast<double>(bits);
}

std::string read_file(const std::filesystem::path& p, bool binary) {
    std::ifstream in(p, binary ? std::ios::binary : std::ios::in);
    if (!in) fail(StoreFailure::missing_file, fmt::format("cannot open '{}'", p.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& p, const void* data, std::size_t size) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) fail(StoreFailure::unwritable, fmt::format("cannot write '{}'", p.string()));
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) fail(StoreFailure::unwritable, fmt::format("error writing '{}'", p.string()));
}

}  // namespace

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::bilstm: return "bilstm";
        case ModelKind::random_forest: return "random_forest";
        case ModelKind::gbm: return "gbm";
        case ModelKind::leafwise_gbm: return "leafwise_gbm";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "bilstm") return ModelKind::bilstm;
    if (name == "random_forest") return ModelKind::random_forest;
    if (name == "gbm") return ModelKind::gbm;
    if (name == "leafwise_gbm") return ModelKind::leafwise_gbm;
    throw DataError(fmt::format("unknown model kind '{}'", name));
}

ModelKind model_kind_from_cli(const std::string& name) {
    if (name == "bilstm") return ModelKind::bilstm;
    if (name == "rf") return ModelKind::random_forest;
    if (name == "gbm") return ModelKind::gbm;
    if (name == "lgbt") return ModelKind::leafwise_gbm;
    throw UsageError(fmt::format("unknown model '{}'; expected bilstm, rf, gbm or lgbt", name));
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    uLong c = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in chunks.
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
        c = ::crc32(c, bytes.data() + pos, n);
        pos += n;
    }
    return static_cast<std::uint32_t>(c);
}

std::vector<std::uint8_t> pack_weights(const bilstm::ModelParams& params, std::vector<TensorEntry>& directory) {
    std::vector<std::uint8_t> blob;
    blob.reserve(params.parameter_count() * 8);
    directory.clear();
    for (const auto& [name, t] : params.named()) {
        directory.push_back({name, t.shape(), blob.size()});
        for (double v : t.values()) put_le(blob, v);
    }
    return blob;
}

void save_model(const ModelBundle& b, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(StoreFailure::unwritable, fmt::format("cannot create '{}': {}", dir.string(), ec.message()));

    ordered_json m;
    m["format_version"] = kFormatVersion;
    m["kind"] = to_string(b.kind);
    m["config"] = ordered_json::parse(to_json(b.config));
    m["dataset_rows"] = b.dataset_rows;

    auto enc = ordered_json::array();
    for (const auto& c : b.encoders.columns) enc.push_back({{"name", c.name}, {"categories", c.categories}});
    m["encoders"] = enc;

    std::vector<std::uint8_t> blob;
    auto tensors = ordered_json::array();
    if (b.kind == ModelKind::bilstm) {
        if (!b.network) throw ContractError("save_model: bilstm bundle without parameters");
        m["model_config"] = model_config_to_json(b.model_config);
        m["vocabulary"] = b.vocabulary.tokens();
        std::vector<TensorEntry> directory;
        blob = pack_weights(*b.network, directory);
        for (const auto& e : directory) tensors.push_back({{"name", e.name}, {"shape", e.shape}, {"offset", e.offset}});
    } else {
        if (!b.ensemble) throw ContractError("save_model: ensemble bundle without trees");
        const auto& e = *b.ensemble;
        auto trees = ordered_json::array();
        for (const auto& t : e.trees) trees.push_back(tree_to_json(t, 0));
        m["ensemble"] = {{"learning_rate", e.learning_rate},
                         {"base_score", e.base_score},
                         {"n_features", e.n_features},
                         {"trees", trees}};
        m["feature_spec"] = {{"numeric_names", b.feature_spec.numeric_names}, {"terms", b.feature_spec.terms}};
    }
    m["tensors"] = tensors;
    m["weights"] = {{"bytes", blob.size()}, {"crc32", crc32(blob)}};
    if (b.history) m["history"] = history_to_json(*b.history);
    if (b.test_metrics) m["test_metrics"] = ordered_json::parse(metrics::report_json({to_string(b.kind), *b.test_metrics}));

    const auto text = m.dump(2) + "\n";
    write_file(dir / kWeightsFile, blob.data(), blob.size());
    write_file(dir / kManifestFile, text.data(), text.size());
}

ModelBundle load_model(const std::filesystem::path& dir) {
    const auto manifest_path = dir / kManifestFile;
    const auto weights_path = dir / kWeightsFile;
    if (!std::filesystem::exists(manifest_path)) fail(StoreFailure::missing_file, fmt::format("missing '{}'", manifest_path.string()));
    if (!std::filesystem::exists(weights_path)) fail(StoreFailure::missing_file, fmt::format("missing '{}'", weights_path.string()));

    json m;
    try {
        m = json::parse(read_file(manifest_path, false));
    } catch (const json::parse_error& e) {
        fail(StoreFailure::malformed_manifest, fmt::format("'{}' is not valid JSON: {}", manifest_path.string(), e.what()));
    }
    const auto blob_text = read_file(weights_path, true);
    const std::span<const std::uint8_t> blob(reinterpret_cast<const std::uint8_t*>(blob_text.data()), blob_text.size());

    ModelBundle b;
    try {
        const auto version = m.at("format_version").get<int>();
        if (version != kFormatVersion) {
            fail(StoreFailure::version_mismatch,
                 fmt::format("bundle format version {} is not supported (this build reads version {})", version, kFormatVersion));
        }
        const auto& w = m.at("weights");
        if (w.at("bytes").get<std::size_t>() != blob.size()) {
            fail(StoreFailure::layout_mismatch, fmt::format("weights.bin holds {} bytes, manifest declares {}",
                                                            blob.size(), w.at("bytes").get<std::size_t>()));
        }
        if (w.at("crc32").get<std::uint32_t>() != crc32(blob)) {
            fail(StoreFailure::checksum_mismatch, "weights.bin checksum does not match the manifest");
        }

        b.kind = model_kind_from_string(m.at("kind").get<std::string>());
        b.config = parse_run_config(m.at("config").dump());
        b.dataset_rows = m.at("dataset_rows").get<std::size_t>();
        for (const auto& c : m.at("encoders")) {
            b.encoders.columns.push_back({c.at("name").get<std::string>(), c.at("categories").get<std::vector<std::string>>()});
        }
        if (m.contains("history")) b.history = history_from_json(m.at("history"));
        if (m.contains("test_metrics")) b.test_metrics = metrics_from_json(m.at("test_metrics"));

        if (b.kind == ModelKind::bilstm) {
            b.model_config = model_config_from_json(m.at("model_config"));
            b.vocabulary = features::Vocabulary::from_tokens(m.at("vocabulary").get<std::vector<std::string>>());
            if (b.vocabulary.size() != b.model_config.vocab_size) {
                fail(StoreFailure::layout_mismatch, "vocabulary size disagrees with the model config");
            }
            auto params = bilstm::zero_params(b.model_config);
            auto named = params.named();
            const auto& tensors = m.at("tensors");
            if (tensors.size() != named.size()) {
                fail(StoreFailure::layout_mismatch,
                     fmt::format("manifest lists {} tensors, the model has {}", tensors.size(), named.size()));
            }
            std::uint64_t expected_offset = 0;
            for (std::size_t k = 0; k < named.size(); ++k) {
                auto& [name, t] = named[k];
                const auto& e = tensors[k];
                const auto shape = e.at("shape").get<ndgrad::Shape>();
                const auto offset = e.at("offset").get<std::uint64_t>();
                if (e.at("name").get<std::string>() != name || shape != t.shape()) {
                    fail(StoreFailure::layout_mismatch,
                         fmt::format("tensor {} is '{}' {} in the manifest, expected '{}' {}", k,
                                     e.at("name").get<std::string>(), ndgrad::to_string(shape), name,
                                     ndgrad::to_string(t.shape())));
                }
                if (offset != expected_offset) {
                    fail(StoreFailure::layout_mismatch,
                         fmt::format("tensor '{}' starts at byte {}, expected {}", name, offset, expected_offset));
                }
                const auto bytes = t.size() * 8;
                if (offset + bytes > blob.size()) {
                    fail(StoreFailure::layout_mismatch, fmt::format("tensor '{}' runs past the end of weights.bin", name));
                }
                auto values = t.values();
                for (std::size_t i = 0; i < values.size(); ++i) values[i] = get_le(blob.data() + offset + 8 * i);
                expected_offset += bytes;
            }
            if (expected_offset != blob.size()) {
                fail(StoreFailure::layout_mismatch,
                     fmt::format("tensors cover {} bytes but weights.bin has {}", expected_offset, blob.size()));
            }
            b.network = std::move(params);
        } else {
            if (!blob.empty()) fail(StoreFailure::layout_mismatch, "ensemble bundles must have an empty weights.bin");
            forests::EnsembleModel e;
            e.kind = b.kind == ModelKind::random_forest ? forests::EnsembleKind::random_forest
                     : b.kind == ModelKind::gbm         ? forests::EnsembleKind::gbm
                                                        : forests::EnsembleKind::leafwise_gbm;
            const auto& ej = m.at("ensemble");
            e.learning_rate = ej.at("learning_rate").get<double>();
            e.base_score = ej.at("base_score").get<double>();
            e.n_features = ej.at("n_features").get<std::size_t>();
            for (const auto& tj : ej.at("trees")) {
                forests::Tree t;
                tree_from_json(tj, t);
                for (const auto& n : t.nodes) {
                    if (!n.is_leaf() && static_cast<std::size_t>(n.feature) >= e.n_features) {
                        fail(StoreFailure::layout_mismatch, "tree splits on a feature beyond the feature spec");
                    }
                }
                e.trees.push_back(std::move(t));
            }
            const auto& fs = m.at("feature_spec");
            b.feature_spec.numeric_names = fs.at("numeric_names").get<std::vector<std::string>>();
            b.feature_spec.terms = fs.at("terms").get<std::vector<std::string>>();
            if (b.feature_spec.width() != e.n_features) {
                fail(StoreFailure::layout_mismatch, "feature spec width disagrees with the ensemble");
            }
            e.feature_spec = b.feature_spec;
            b.ensemble = std::move(e);
        }
    } catch (const ModelStoreError&) {
        throw;
    } catch (const json::exception& e) {
        fail(StoreFailure::malformed_manifest, fmt::format("manifest is malformed: {}", e.what()));
    } catch (const std::invalid_argument& e) {
        fail(StoreFailure::malformed_manifest, fmt::format("manifest is malformed: {}", e.what()));
    } catch (const Error& e) {
        fail(StoreFailure::malformed_manifest, fmt::format("manifest is malformed: {}", e.what()));
    }
    return b;
}

}  // namespace fakejob::store
