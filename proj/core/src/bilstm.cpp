#include "fakejob/bilstm.hpp"

#include <cmath>

#include <fmt/format.h>

#include "fakejob/error.hpp"
#include "fakejob/rng.hpp"

namespace fakejob::bilstm {

namespace nd = ndgrad;

void ModelConfig::validate() const {
    const std::pair<const char*, std::size_t> fields[] = {
        {"vocab_size", vocab_size}, {"embedding_dim", embedding_dim}, {"hidden_units", hidden_units},
        {"dense_units", dense_units}, {"sequence_length", sequence_length}, {"layers", layers}};
    for (const auto& [name, v] : fields) {
        if (v == 0) throw ContractError(fmt::format("model config: {} must be positive", name));
    }
}

namespace {

void glorot(Tensor& t, SplitMix64& rng) {
    const double r = std::sqrt(6.0 / static_cast<double>(t.shape()[0] + t.shape()[1]));
    for (auto& v : t.values()) v = rng.uniform(-r, r);
}

LstmParams lstm_zeros(std::size_t input, std::size_t hidden) {
    return {Tensor::zeros({4 * hidden, input}, true), Tensor::zeros({4 * hidden, hidden}, true),
            Tensor::zeros({4 * hidden}, true)};
}

void set_forget_bias(LstmParams& p) {
    const auto h = p.hidden();
    auto b = p.b.values();
    for (std::size_t j = h; j < 2 * h; ++j) b[j] = 1.0;
}

std::size_t layer_input(const ModelConfig& cfg, std::size_t layer) {
    return layer == 0 ? cfg.embedding_dim : 2 * cfg.hidden_units;
}

LstmParams clone_lstm(const LstmParams& p) {
    auto c = LstmParams{p.wx.clone(), p.wh.clone(), p.b.clone()};
    return c;
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> ModelParams::named() {
    std::vector<std::pair<std::string, Tensor>> out{{"embedding", embedding}};
    for (std::size_t l = 0; l < forward.size(); ++l) {
        for (auto [dir, layer] : {std::pair{"fwd", &forward[l]}, std::pair{"bwd", &backward[l]}}) {
            const auto prefix = fmt::format("lstm.{}.{}", dir, l);
            out.emplace_back(prefix + ".wx", layer->wx);
            out.emplace_back(prefix + ".wh", layer->wh);
            out.emplace_back(prefix + ".b", layer->b);
        }
    }
    out.emplace_back("dense.w", dense_w);
    out.emplace_back("dense.b", dense_b);
    out.emplace_back("out.w", out_w);
    out.emplace_back("out.b", out_b);
    return out;
}

std::vector<std::pair<std::string, const Tensor>> ModelParams::named() const {
    auto mut = const_cast<ModelParams*>(this)->named();
    return {mut.begin(), mut.end()};
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : named()) n += t.size();
    return n;
}

ModelParams ModelParams::clone() const {
    ModelParams c;
    c.embedding = embedding.clone();
    for (const auto& l : forward) c.forward.push_back(clone_lstm(l));
    for (const auto& l : backward) c.backward.push_back(clone_lstm(l));
    c.dense_w = dense_w.clone();
    c.dense_b = dense_b.clone();
    c.out_w = out_w.clone();
    c.out_b = out_b.clone();
    return c;
}

void ModelParams::zero_grad() {
    for (auto& [name, t] : named()) t.zero_grad();
}

std::size_t expected_parameter_count(const ModelConfig& cfg) {
    const auto e = cfg.embedding_dim, h = cfg.hidden_units, u = cfg.dense_units;
    std::size_t n = cfg.vocab_size * e;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const auto in = layer_input(cfg, l);
        n += 2 * (4 * h * in + 4 * h * h + 4 * h);
    }
    n += (2 * h + cfg.numeric_width) * u + u + u + 1;
    return n;
}

ModelParams zero_params(const ModelConfig& cfg) {
    cfg.validate();
    ModelParams p;
    p.embedding = Tensor::zeros({cfg.vocab_size, cfg.embedding_dim}, true);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        p.forward.push_back(lstm_zeros(layer_input(cfg, l), cfg.hidden_units));
        p.backward.push_back(lstm_zeros(layer_input(cfg, l), cfg.hidden_units));
    }
    p.dense_w = Tensor::zeros({2 * cfg.hidden_units + cfg.numeric_width, cfg.dense_units}, true);
    p.dense_b = Tensor::zeros({cfg.dense_units}, true);
    p.out_w = Tensor::zeros({cfg.dense_units, 1}, true);
    p.out_b = Tensor::zeros({1}, true);
    return p;
}

ModelParams init_params(const ModelConfig& cfg) {
    auto p = zero_params(cfg);
    SplitMix64 rng(cfg.seed);
    for (auto& v : p.embedding.values()) v = rng.uniform(-0.05, 0.05);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        glorot(p.forward[l].wx, rng);
        glorot(p.forward[l].wh, rng);
        glorot(p.backward[l].wx, rng);
        glorot(p.backward[l].wh, rng);
        set_forget_bias(p.forward[l]);
        set_forget_bias(p.backward[l]);
    }
    glorot(p.dense_w, rng);
    glorot(p.out_w, rng);
    return p;
}

CellState lstm_step(Graph& g, const Tensor& projected_input, const CellState& prev, const LstmParams& p) {
    const auto h = p.hidden();
    if (projected_input.rank() != 2 || projected_input.cols() != 4 * h) {
        throw ShapeError(fmt::format("lstm: projected input {} does not match 4H = {}",
                                     nd::to_string(projected_input.shape()), 4 * h));
    }
    auto z = nd::add(g, projected_input, nd::matmul_bt(g, prev.h, p.wh));
    auto i = nd::activation(g, nd::Activation::sigmoid, nd::slice_cols(g, z, 0, h));
    auto f = nd::activation(g, nd::Activation::sigmoid, nd::slice_cols(g, z, h, 2 * h));
    auto cand = nd::activation(g, nd::Activation::tanh, nd::slice_cols(g, z, 2 * h, 3 * h));
    auto o = nd::activation(g, nd::Activation::sigmoid, nd::slice_cols(g, z, 3 * h, 4 * h));
    auto c = nd::add(g, nd::mul(g, f, prev.c), nd::mul(g, i, cand));
    auto hidden = nd::mul(g, o, nd::activation(g, nd::Activation::tanh, c));
    return {hidden, c};
}

CellState lstm_cell(Graph& g, const Tensor& x, const CellState& prev, const LstmParams& p) {
    if (x.rank() != 2 || x.cols() != p.input()) {
        throw ShapeError(fmt::format("lstm_cell: input {} does not match Wx {}", nd::to_string(x.shape()),
                                     nd::to_string(p.wx.shape())));
    }
    if (prev.h.shape() != ndgrad::Shape{x.rows(), p.hidden()} || prev.c.shape() != prev.h.shape()) {
        throw ShapeError(fmt::format("lstm_cell: state {} does not match batch {} × H {}",
                                     nd::to_string(prev.h.shape()), x.rows(), p.hidden()));
    }
    return lstm_step(g, nd::add_row(g, nd::matmul_bt(g, x, p.wx), p.b), prev, p);
}

namespace {

// Runs one direction over a time-major input [(L·B) × in]; returns the
// per-step hidden states indexed by time.
std::vector<Tensor> run_direction(Graph& g, const Tensor& inputs, std::size_t steps, std::size_t batch,
                                  const LstmParams& p, bool reverse, bool keep_all) {
    const auto projected = nd::add_row(g, nd::matmul_bt(g, inputs, p.wx), p.b);
    CellState state{Tensor::zeros({batch, p.hidden()}), Tensor::zeros({batch, p.hidden()})};
    std::vector<Tensor> outputs(keep_all ? steps : 1);
    for (std::size_t s = 0; s < steps; ++s) {
        const auto t = reverse ? steps - 1 - s : s;
        state = lstm_step(g, nd::slice_rows(g, projected, t * batch, (t + 1) * batch), state, p);
        if (keep_all) outputs[t] = state.h;
    }
    if (!keep_all) outputs[0] = state.h;
    return outputs;
}

}  // namespace

Tensor bilstm_encode(Graph& g, IdBatch ids, const ModelParams& p) {
    if (ids.empty()) throw ContractError("bilstm_encode: empty batch");
    const auto batch = ids.size();
    const auto steps = ids.front().size();
    if (steps == 0) throw ContractError("bilstm_encode: sequence length must be >= 1");
    std::vector<features::TokenId> time_major(steps * batch);
    for (std::size_t b = 0; b < batch; ++b) {
        if (ids[b].size() != steps) {
            throw ShapeError(fmt::format("bilstm_encode: example {} has {} ids, expected {}", b, ids[b].size(), steps));
        }
        for (std::size_t t = 0; t < steps; ++t) time_major[t * batch + b] = ids[b][t];
    }

    auto layer_input = nd::gather(g, p.embedding, time_major);
    Tensor fwd_final, bwd_final;
    for (std::size_t l = 0; l < p.forward.size(); ++l) {
        const bool last = l + 1 == p.forward.size();
        auto fwd = run_direction(g, layer_input, steps, batch, p.forward[l], false, !last);
        auto bwd = run_direction(g, layer_input, steps, batch, p.backward[l], true, !last);
        if (last) {
            fwd_final = fwd[0];
            bwd_final = bwd[0];
        } else {
            std::vector<Tensor> merged;
            merged.reserve(steps);
            for (std::size_t t = 0; t < steps; ++t) merged.push_back(nd::concat_cols(g, fwd[t], bwd[t]));
            layer_input = nd::stack_rows(g, merged);
        }
    }
    return nd::concat_cols(g, fwd_final, bwd_final);
}

std::vector<double> bilstm_encode(std::span<const features::TokenId> ids, const ModelParams& p) {
    Graph g(Graph::Mode::inference);
    std::vector<std::vector<features::TokenId>> one{{ids.begin(), ids.end()}};
    auto out = bilstm_encode(g, one, p);
    return {out.values().begin(), out.values().end()};
}

Tensor model_forward(Graph& g, std::span<const features::EncodedExample> batch, const ModelParams& p) {
    if (batch.empty()) throw ContractError("model_forward: empty batch");
    const auto width = batch.front().numeric.size();
    const auto expected = p.dense_w.shape()[0] - 2 * p.forward.back().hidden();
    if (width != expected) {
        throw ShapeError(fmt::format("model_forward: numeric width {} but the model expects {}", width, expected));
    }
    std::vector<std::vector<features::TokenId>> ids;
    ids.reserve(batch.size());
    std::vector<double> numeric;
    numeric.reserve(batch.size() * width);
    for (const auto& ex : batch) {
        if (ex.numeric.size() != width) {
            throw ShapeError(fmt::format("model_forward: numeric widths differ ({} vs {})", ex.numeric.size(), width));
        }
        ids.push_back(ex.token_ids);
        numeric.insert(numeric.end(), ex.numeric.begin(), ex.numeric.end());
    }
    auto encoded = bilstm_encode(g, ids, p);
    auto merged = nd::concat_cols(g, encoded, Tensor::from({batch.size(), width}, std::move(numeric)));
    auto hidden = nd::activation(g, nd::Activation::relu, nd::add_row(g, nd::matmul(g, merged, p.dense_w), p.dense_b));
    auto logits = nd::add_row(g, nd::matmul(g, hidden, p.out_w), p.out_b);
    return nd::activation(g, nd::Activation::sigmoid, logits);
}

std::vector<double> predict(std::span<const features::EncodedExample> examples, const ModelParams& p,
                            std::size_t batch_size) {
    std::vector<double> out;
    out.reserve(examples.size());
    for (std::size_t start = 0; start < examples.size(); start += batch_size) {
        const auto n = std::min(batch_size, examples.size() - start);
        Graph g(Graph::Mode::inference);
        auto probs = model_forward(g, examples.subspan(start, n), p);
        out.insert(out.end(), probs.values().begin(), probs.values().end());
    }
    return out;
}

}  // namespace fakejob::bilstm
