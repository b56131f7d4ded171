// Micro benchmarks for the hot paths: dense algebra, one BiLSTM training
// step, AUC ranking, tree fitting and CSV parsing.
#include <benchmark/benchmark.h>

#include <numeric>
#include <string>
#include <vector>

#include "fakejob/bilstm.hpp"
#include "fakejob/csv.hpp"
#include "fakejob/forests.hpp"
#include "fakejob/ingest.hpp"
#include "fakejob/metrics.hpp"
#include "fakejob/ndgrad.hpp"
#include "fakejob/rng.hpp"
#include "fakejob/synthetic.hpp"

namespace {

using namespace fakejob;
namespace nd = ndgrad;

nd::Tensor random_tensor(nd::Shape shape, SplitMix64& rng, bool requires_grad = false) {
    auto t = nd::Tensor::zeros(std::move(shape), requires_grad);
    for (auto& v : t.values()) v = rng.uniform(-1, 1);
    return t;
}

void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    SplitMix64 rng(1);
    const auto a = random_tensor({n, n}, rng);
    const auto b = random_tensor({n, n}, rng);
    nd::Graph g(nd::Graph::Mode::inference);
    for (auto _ : state) benchmark::DoNotOptimize(nd::matmul(g, a, b));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

bilstm::ModelConfig bench_config(std::size_t length) {
    bilstm::ModelConfig cfg;
    cfg.vocab_size = 2000;
    cfg.embedding_dim = 32;
    cfg.hidden_units = 64;
    cfg.dense_units = 32;
    cfg.sequence_length = length;
    cfg.numeric_width = 20;
    cfg.seed = 3;
    return cfg;
}

std::vector<features::EncodedExample> bench_batch(const bilstm::ModelConfig& cfg, std::size_t n) {
    SplitMix64 rng(4);
    std::vector<features::EncodedExample> out(n);
    for (auto& ex : out) {
        for (std::size_t t = 0; t < cfg.sequence_length; ++t) {
            ex.token_ids.push_back(static_cast<features::TokenId>(rng.below(cfg.vocab_size)));
        }
        ex.numeric.assign(cfg.numeric_width, 0.0);
        ex.label = static_cast<int>(rng.below(2));
    }
    return out;
}

void BM_BilstmForward(benchmark::State& state) {
    const auto cfg = bench_config(static_cast<std::size_t>(state.range(0)));
    const auto p = bilstm::init_params(cfg);
    const auto batch = bench_batch(cfg, 32);
    for (auto _ : state) benchmark::DoNotOptimize(bilstm::predict(batch, p));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch.size()));
}
BENCHMARK(BM_BilstmForward)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_BilstmForwardBackward(benchmark::State& state) {
    const auto cfg = bench_config(static_cast<std::size_t>(state.range(0)));
    auto p = bilstm::init_params(cfg);
    const auto batch = bench_batch(cfg, 32);
    std::vector<double> y;
    for (const auto& ex : batch) y.push_back(ex.label);
    for (auto _ : state) {
        nd::Graph g;
        auto loss = nd::bce_mean(g, bilstm::model_forward(g, batch, p), y);
        g.backward(loss);
        p.zero_grad();
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch.size()));
}
BENCHMARK(BM_BilstmForwardBackward)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_RocAuc(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    SplitMix64 rng(5);
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<int>(rng.below(2));
        s[i] = rng.uniform();
    }
    for (auto _ : state) benchmark::DoNotOptimize(metrics::roc_auc(y, s));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_RocAuc)->Arg(3576)->Arg(100000);

void BM_FitTree(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    SplitMix64 rng(6);
    forests::Matrix x(n, 40);
    std::vector<double> targets(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t f = 0; f < 40; ++f) x(r, f) = static_cast<double>(rng.below(4));
        targets[r] = x(r, 0) + x(r, 1) > 4 ? 1.0 : 0.0;
    }
    forests::TreeParams params;
    params.max_depth = 10;
    params.max_features = 6;
    for (auto _ : state) {
        SplitMix64 stream(7);
        benchmark::DoNotOptimize(forests::fit_tree(x, targets, params, {}, &stream));
    }
}
BENCHMARK(BM_FitTree)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_ParseCsv(benchmark::State& state) {
    synthetic::FixtureConfig fc;
    fc.rows = static_cast<std::size_t>(state.range(0));
    const auto text = ingest::write_csv(synthetic::make_postings(fc));
    for (auto _ : state) benchmark::DoNotOptimize(csv::parse(text));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseCsv)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
