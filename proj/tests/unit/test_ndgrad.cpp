#include <gtest/gtest.h>

#include <cmath>

#include "fakejob/error.hpp"
#include "fakejob/ndgrad.hpp"
#include "fakejob/rng.hpp"
#include "oracles.hpp"

namespace fakejob {
namespace {

using namespace ndgrad;

using oracles::random_tensor;

std::vector<double> vec(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

TEST(Matmul, HandArithmetic) {
    Graph g;
    const auto a = Tensor::from({2, 2}, {1, 2, 3, 4});
    const auto b = Tensor::from({2, 1}, {1, 1});
    const auto c = matmul(g, a, b);
    EXPECT_EQ(c.shape(), (Shape{2, 1}));
    EXPECT_EQ(vec(c), (std::vector<double>{3, 7}));
}

TEST(Matmul, IdentityAndShapeError) {
    Graph g;
    SplitMix64 rng(1);
    const auto a = random_tensor({3, 3}, rng);
    const auto eye = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    EXPECT_EQ(vec(matmul(g, a, eye)), vec(a));
    EXPECT_THROW(matmul(g, Tensor::zeros({2, 3}), Tensor::zeros({4, 1})), ShapeError);
}

TEST(Matmul, TransposedVariantAgrees) {
    Graph g;
    SplitMix64 rng(2);
    const auto a = random_tensor({4, 5}, rng);
    const auto b = random_tensor({3, 5}, rng);
    std::vector<double> bt(15);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 5; ++j) bt[j * 3 + i] = b.values()[i * 5 + j];
    }
    const auto want = matmul(g, a, Tensor::from({5, 3}, bt));
    const auto got = matmul_bt(g, a, b);
    for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(got.values()[i], want.values()[i], 1e-12);
}

TEST(Activation, Definitions) {
    Graph g;
    const auto x = Tensor::from({1, 3}, {0, -2, 2});
    EXPECT_EQ(activation(g, Activation::sigmoid, x).values()[0], 0.5);
    EXPECT_EQ(activation(g, Activation::tanh, x).values()[0], 0.0);
    EXPECT_EQ(activation(g, Activation::relu, x).values()[1], 0.0);
    EXPECT_EQ(activation(g, Activation::relu, x).values()[2], 2.0);
}

TEST(Activation, SigmoidSymmetryProperty) {
    SplitMix64 rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform(-30, 30);
        EXPECT_NEAR(sigmoid(x) + sigmoid(-x), 1.0, 1e-15);
    }
    EXPECT_EQ(sigmoid(-800), 0.0);
    EXPECT_EQ(sigmoid(800), 1.0);
}

TEST(Concat, DefinitionAndEmptyIdentity) {
    Graph g;
    EXPECT_EQ(vec(concat_cols(g, Tensor::from({1, 2}, {1, 2}), Tensor::from({1, 1}, {3}))),
              (std::vector<double>{1, 2, 3}));
    const auto a = Tensor::from({2, 2}, {1, 2, 3, 4});
    const auto c = concat_cols(g, a, Tensor::zeros({2, 0}));
    EXPECT_EQ(c.shape(), a.shape());
    EXPECT_EQ(vec(c), vec(a));
}

TEST(Concat, SliceRecoversInjectedGradient) {
    SplitMix64 rng(4);
    auto a = random_tensor({2, 3}, rng);
    auto b = random_tensor({2, 2}, rng);
    const auto w = Tensor::from({2, 2}, {0.5, -1, 2, 3});
    Graph g;
    auto joined = concat_cols(g, a, b);
    auto loss = sum(g, mul(g, slice_cols(g, joined, 3, 5), w));
    g.backward(loss);
    EXPECT_EQ(vec(Tensor::from({2, 2}, {b.grad().begin(), b.grad().end()})), vec(w));
    for (double v : a.grad()) EXPECT_EQ(v, 0.0);

    std::vector<Tensor> params{a, b};
    const double err = grad_check(
        [&](Graph& gg) { return sum(gg, mul(gg, slice_cols(gg, concat_cols(gg, a, b), 2, 4), w)); }, params);
    EXPECT_LT(err, 1e-6);
}

TEST(Gather, DefinitionEmptyAndRepeatedIds) {
    Graph g;
    auto table = Tensor::from({2, 2}, {1, 2, 3, 4}, true);
    const std::int32_t ids[] = {1, 1, 0};
    auto out = gather(g, table, ids);
    EXPECT_EQ(vec(out), (std::vector<double>{3, 4, 3, 4, 1, 2}));
    EXPECT_EQ(gather(g, table, {}).shape(), (Shape{0, 2}));
    EXPECT_THROW(gather(g, table, std::vector<std::int32_t>{2}), IndexError);

    auto loss = sum(g, out);
    g.backward(loss);
    EXPECT_EQ((std::vector<double>(table.grad().begin(), table.grad().end())), (std::vector<double>{1, 1, 2, 2}));

    SplitMix64 rng(5);
    auto t2 = random_tensor({3, 2}, rng);
    const auto w = Tensor::from({3, 2}, {1, -2, 0.5, 3, -1, 2});
    std::vector<Tensor> params{t2};
    const double err = grad_check([&](Graph& gg) { return sum(gg, mul(gg, gather(gg, t2, ids), w)); }, params);
    EXPECT_LT(err, 1e-6);
}

TEST(Bce, Values) {
    EXPECT_NEAR(bce(0.5, 1), std::log(2.0), 1e-15);
    EXPECT_NEAR(bce(0.5, 0), std::log(2.0), 1e-15);
    EXPECT_LT(bce(1 - 1e-12, 1), 1e-11);
    EXPECT_TRUE(std::isfinite(bce(0.0, 1)));
}

TEST(Bce, NonNegativeProperty) {
    SplitMix64 rng(6);
    for (int i = 0; i < 2000; ++i) {
        const double p = rng.uniform();
        EXPECT_GE(bce(p, 1), 0.0);
        EXPECT_GE(bce(p, 0), 0.0);
    }
}

TEST(Backward, SumGivesOnes) {
    auto w = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}, true);
    Graph g;
    auto loss = sum(g, w);
    g.backward(loss);
    for (double v : w.grad()) EXPECT_EQ(v, 1.0);
}

TEST(Backward, SquareDerivative) {
    auto x = Tensor::scalar(3, true);
    Graph g;
    auto loss = sum(g, mul(g, x, x));
    g.backward(loss);
    EXPECT_EQ(x.grad()[0], 6.0);
}

TEST(Backward, UnusedParameterHasZeroGradient) {
    auto x = Tensor::scalar(3, true);
    auto unused = Tensor::from({2}, {1, 2}, true);
    Graph g;
    auto loss = sum(g, scale(g, x, 2));
    g.backward(loss);
    for (double v : unused.grad()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, RejectsNonScalarLoss) {
    Graph g;
    auto x = Tensor::from({2}, {1, 2}, true);
    auto y = scale(g, x, 2);
    EXPECT_THROW(g.backward(y), ContractError);
}

TEST(Backward, InferenceModeRecordsNothing) {
    Graph g(Graph::Mode::inference);
    auto x = Tensor::from({2, 2}, {1, 2, 3, 4}, true);
    matmul(g, x, x);
    EXPECT_EQ(g.size(), 0u);
}

TEST(Backward, LinearityProperty) {
    SplitMix64 rng(7);
    auto x = random_tensor({3, 3}, rng);
    const auto w = random_tensor({3, 3}, rng);
    auto f = [&](Graph& g) { return sum(g, activation(g, Activation::tanh, matmul(g, x, w))); };
    auto h = [&](Graph& g) { return sum(g, mul(g, x, x)); };
    auto grad_of = [&](const std::function<Tensor(Graph&)>& fn) {
        x.zero_grad();
        Graph g;
        auto loss = fn(g);
        g.backward(loss);
        return std::vector<double>(x.grad().begin(), x.grad().end());
    };
    const auto gf = grad_of(f);
    const auto gh = grad_of(h);
    const auto gc = grad_of([&](Graph& g) { return add(g, scale(g, f(g), 2.5), scale(g, h(g), -0.75)); });
    for (std::size_t i = 0; i < gf.size(); ++i) EXPECT_NEAR(gc[i], 2.5 * gf[i] - 0.75 * gh[i], 1e-12);
}

TEST(Backward, RepeatableBitwise) {
    SplitMix64 rng(8);
    auto x = random_tensor({4, 3}, rng);
    const auto w = random_tensor({3, 2}, rng);
    std::vector<std::vector<double>> runs;
    for (int r = 0; r < 2; ++r) {
        x.zero_grad();
        Graph g;
        auto loss = sum(g, activation(g, Activation::sigmoid, matmul(g, x, w)));
        g.backward(loss);
        runs.emplace_back(x.grad().begin(), x.grad().end());
    }
    EXPECT_EQ(runs[0], runs[1]);
}

TEST(GradCheck, QuadraticForm) {
    SplitMix64 rng(9);
    auto x = random_tensor({1, 4}, rng);
    const auto a = random_tensor({4, 4}, rng);
    std::vector<Tensor> params{x};
    const double err = grad_check([&](Graph& g) { return sum(g, mul(g, matmul(g, x, a), x)); }, params);
    EXPECT_LT(err, 1e-8);
}

// One finite-difference check per op at the 1e-6 tolerance.
TEST(GradCheck, EveryOp) {
    for (const auto& [name, err] : oracles::op_gradient_errors()) EXPECT_LT(err, 1e-6) << name;
}

}  // namespace
}  // namespace fakejob
