#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "fakejob/error.hpp"
#include "fakejob/rng.hpp"
#include "fakejob/trainer.hpp"

namespace fakejob {
namespace {

using namespace trainer;

bilstm::ModelConfig toy_config() {
    bilstm::ModelConfig cfg;
    cfg.vocab_size = 6;
    cfg.embedding_dim = 4;
    cfg.hidden_units = 3;
    cfg.dense_units = 4;
    cfg.sequence_length = 3;
    cfg.numeric_width = 2;
    cfg.seed = 5;
    return cfg;
}

// Balanced, linearly separable: the first numeric feature is the label.
std::vector<features::EncodedExample> toy_set(std::size_t n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<features::EncodedExample> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& ex = out[i];
        ex.label = static_cast<int>(i % 2);
        for (int t = 0; t < 3; ++t) ex.token_ids.push_back(static_cast<features::TokenId>(2 + rng.below(4)));
        ex.numeric = {static_cast<double>(ex.label), rng.uniform()};
    }
    return out;
}

TEST(Split, FloorArithmetic) {
    const auto s = split_dataset(10, 42);
    EXPECT_EQ(s.test.size(), 2u);
    EXPECT_EQ(s.validation.size(), 1u);
    EXPECT_EQ(s.train.size(), 7u);
    EXPECT_EQ(split_dataset(17880, 42).test.size(), 3576u);
    EXPECT_THROW(split_dataset(4, 42), DataError);
}

TEST(Split, PartitionAndDeterminism) {
    for (std::size_t n : {5u, 37u, 2000u}) {
        const auto a = split_dataset(n, 7);
        EXPECT_EQ(a, split_dataset(n, 7));
        std::set<std::size_t> all(a.train.begin(), a.train.end());
        all.insert(a.validation.begin(), a.validation.end());
        all.insert(a.test.begin(), a.test.end());
        EXPECT_EQ(all.size(), n);
        EXPECT_EQ(*all.rbegin(), n - 1);
    }
    EXPECT_NE(split_dataset(100, 1).test, split_dataset(100, 2).test);
}

// Independent oracle: inline splitmix64 and Fisher–Yates.
TEST(Split, MatchesReferenceShuffle) {
    std::uint64_t s = 42;
    auto next = [&] {
        s += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    };
    std::vector<std::size_t> order(50);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size() - 1; i >= 1; --i) std::swap(order[i], order[next() % (i + 1)]);
    const auto split = split_dataset(50, 42);
    EXPECT_EQ(split.test, std::vector<std::size_t>(order.begin(), order.begin() + 10));
    EXPECT_EQ(split.validation, std::vector<std::size_t>(order.begin() + 10, order.begin() + 18));
}

TEST(Adam, ZeroGradientIsIdentity) {
    auto t = ndgrad::Tensor::from({3}, {0.5, -1, 2}, true);
    t.zero_grad();
    std::vector<NamedTensor> params{{"t", t}};
    auto state = make_adam_state(params);
    for (std::size_t step = 1; step <= 3; ++step) adam_step(params, state, step, TrainConfig{});
    EXPECT_EQ((std::vector<double>(t.values().begin(), t.values().end())), (std::vector<double>{0.5, -1, 2}));
}

TEST(Adam, FirstStepMagnitude) {
    auto t = ndgrad::Tensor::from({1}, {0.0}, true);
    t.grad()[0] = 1.0;
    std::vector<NamedTensor> params{{"t", t}};
    auto state = make_adam_state(params);
    TrainConfig cfg;
    adam_step(params, state, 1, cfg);
    EXPECT_NEAR(t.values()[0], -cfg.learning_rate / (1 + cfg.epsilon), 1e-18);
}

TEST(Adam, ConstantGradientMovesMonotonically) {
    auto t = ndgrad::Tensor::from({1}, {1.0}, true);
    std::vector<NamedTensor> params{{"t", t}};
    auto state = make_adam_state(params);
    double prev = t.values()[0];
    for (std::size_t step = 1; step <= 50; ++step) {
        t.grad()[0] = 0.3;
        adam_step(params, state, step, TrainConfig{});
        EXPECT_LT(t.values()[0], prev);
        prev = t.values()[0];
    }
}

TEST(Adam, NonFiniteGradientNamesTensorAndLeavesParams) {
    auto a = ndgrad::Tensor::from({1}, {1.0}, true);
    auto b = ndgrad::Tensor::from({1}, {2.0}, true);
    a.grad()[0] = 1.0;
    b.grad()[0] = std::numeric_limits<double>::quiet_NaN();
    std::vector<NamedTensor> params{{"a", a}, {"b", b}};
    auto state = make_adam_state(params);
    try {
        adam_step(params, state, 1, TrainConfig{});
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
    }
    EXPECT_EQ(a.values()[0], 1.0);
}

TEST(EarlyStop, Examples) {
    const std::vector<double> bump{0.5, 0.4, 0.45, 0.46};
    auto d = early_stop_check(bump, 2);
    EXPECT_TRUE(d.stop);
    EXPECT_EQ(d.best_index, 1u);

    const std::vector<double> falling{0.9, 0.8, 0.7, 0.6};
    EXPECT_FALSE(early_stop_check(falling, 2).stop);

    const std::vector<double> flat{0.3, 0.3};
    d = early_stop_check(flat, 2);
    EXPECT_TRUE(d.stop);
    EXPECT_EQ(d.best_index, 0u);

    EXPECT_FALSE(early_stop_check(bump, 0).stop);
    const std::vector<double> one{0.3};
    EXPECT_FALSE(early_stop_check(one, 2).stop);
}

TEST(TrainConfig, Validation) {
    TrainConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.patience = cfg.epochs_max;
    EXPECT_THROW(cfg.validate(), ContractError);
    cfg = TrainConfig{};
    cfg.learning_rate = 0;
    EXPECT_THROW(cfg.validate(), ContractError);
}

TEST(Train, SeparableToyReachesFullAccuracy) {
    const auto set = toy_set(20, 1);
    TrainConfig cfg;
    cfg.epochs_max = 200;
    cfg.patience = 0;
    cfg.batch_size = 4;
    std::size_t reached = 0;
    auto result = train(bilstm::init_params(toy_config()), set, set, cfg,
                        [&](std::size_t epoch, const EpochRecord& r) {
                            if (reached == 0 && r.val_accuracy == 1.0) reached = epoch;
                        });
    EXPECT_GT(reached, 0u);
    EXPECT_EQ(evaluate(result.params, set).accuracy, 1.0);
}

TEST(Train, LearnsBelowUninformedLoss) {
    const auto set = toy_set(40, 2);
    TrainConfig cfg;
    cfg.epochs_max = 30;
    cfg.patience = 0;
    cfg.batch_size = 4;
    const auto model_cfg = toy_config();
    // zero weights keep every hidden state at zero, so the output is exactly one half
    EXPECT_NEAR(evaluate(bilstm::zero_params(model_cfg), set).loss, std::log(2.0), 1e-12);
    const auto result = train(bilstm::init_params(model_cfg), set, set, cfg);
    EXPECT_LT(evaluate(result.params, set).loss, std::log(2.0) - 0.1);
}

TEST(Train, FrozenBatchLossDecreases) {
    const auto set = toy_set(8, 3);
    auto params = bilstm::init_params(toy_config());
    std::vector<NamedTensor> named;
    for (auto& [n, t] : params.named()) named.push_back({n, t});
    auto state = make_adam_state(named);
    std::vector<double> labels;
    for (const auto& ex : set) labels.push_back(ex.label);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t step = 1; step <= 5; ++step) {
        params.zero_grad();
        ndgrad::Graph g;
        auto loss = ndgrad::bce_mean(g, bilstm::model_forward(g, set, params), labels);
        EXPECT_LT(loss.item(), prev);
        prev = loss.item();
        g.backward(loss);
        adam_step(named, state, step, TrainConfig{});
    }
}

TEST(Train, RestoresBestEpochAndIsDeterministic) {
    const auto train_set = toy_set(24, 4);
    auto val_set = toy_set(10, 5);
    for (auto& ex : val_set) ex.numeric[0] = 1.0 - ex.numeric[0];  // flipped: val loss rises
    TrainConfig cfg;
    cfg.epochs_max = 12;
    cfg.patience = 2;
    cfg.batch_size = 6;
    const auto a = train(bilstm::init_params(toy_config()), train_set, val_set, cfg);
    const auto b = train(bilstm::init_params(toy_config()), train_set, val_set, cfg);

    const auto& h = a.history;
    ASSERT_FALSE(h.epochs.empty());
    EXPECT_EQ(h.stopped_epoch, h.epochs.size());
    double min_loss = h.epochs[0].val_loss;
    for (const auto& e : h.epochs) min_loss = std::min(min_loss, e.val_loss);
    EXPECT_EQ(h.epochs[h.best_epoch - 1].val_loss, min_loss);
    EXPECT_DOUBLE_EQ(evaluate(a.params, val_set).loss, min_loss);

    ASSERT_EQ(b.history.epochs.size(), h.epochs.size());
    for (std::size_t i = 0; i < h.epochs.size(); ++i) {
        EXPECT_EQ(b.history.epochs[i].train_loss, h.epochs[i].train_loss);
        EXPECT_EQ(b.history.epochs[i].val_loss, h.epochs[i].val_loss);
    }
}

TEST(Train, EmptySplitsRejected) {
    const auto set = toy_set(4, 1);
    EXPECT_THROW(train(bilstm::init_params(toy_config()), {}, set, TrainConfig{}), DataError);
    EXPECT_THROW(train(bilstm::init_params(toy_config()), set, {}, TrainConfig{}), DataError);
}

}  // namespace
}  // namespace fakejob
