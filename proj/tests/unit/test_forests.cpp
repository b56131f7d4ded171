#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fakejob/error.hpp"
#include "fakejob/forests.hpp"
#include "fakejob/rng.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace fakejob {
namespace {

using namespace forests;

using Instance = oracles::GiniInstance;
using oracles::exhaustive_gini;

Instance random_instance(SplitMix64& rng, std::size_t max_rows = 50, std::size_t features = 5) {
    return oracles::random_gini_instance(rng, max_rows, features);
}

std::vector<std::size_t> iota_n(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

TEST(Tabular, CountsAndShape) {
    auto p = testing::posting(1, "", "b b a", 0);
    auto q = testing::posting(2, "", "", 0);
    const auto d = ingest::assemble_dataset({p, q});
    const auto enc = features::fit_categorical_encoders(d.postings);
    const auto spec = make_feature_spec(enc, {"a", "b"});
    const auto m = build_tabular(d.postings, enc, spec);
    ASSERT_EQ(m.cols(), spec.width());
    const auto base = spec.numeric_names.size();
    EXPECT_EQ(m(0, base), 1.0);
    EXPECT_EQ(m(0, base + 1), 2.0);
    EXPECT_EQ(m(1, base), 0.0);
    EXPECT_EQ(m(1, base + 1), 0.0);
}

TEST(Tree, HandSplit) {
    const Matrix x(4, 1, {0, 1, 0, 1});
    const std::vector<double> y{0, 1, 0, 1};
    const auto t = fit_tree(x, y, TreeParams{});
    ASSERT_EQ(t.nodes.size(), 3u);
    EXPECT_EQ(t.nodes[0].feature, 0);
    EXPECT_EQ(t.nodes[0].threshold, 0.5);
    EXPECT_EQ(t.nodes[static_cast<std::size_t>(t.nodes[0].left)].value, 0.0);
    EXPECT_EQ(t.nodes[static_cast<std::size_t>(t.nodes[0].right)].value, 1.0);
}

TEST(Tree, PureAndConstantGiveSingleLeaf) {
    const Matrix x(3, 2, {0, 1, 2, 3, 4, 5});
    const std::vector<double> ones{1, 1, 1};
    auto t = fit_tree(x, ones, TreeParams{});
    ASSERT_EQ(t.nodes.size(), 1u);
    EXPECT_EQ(t.nodes[0].value, 1.0);

    const Matrix constant(4, 1, {7, 7, 7, 7});
    const std::vector<double> mixed{0, 1, 0, 1};
    t = fit_tree(constant, mixed, TreeParams{});
    ASSERT_EQ(t.nodes.size(), 1u);
    EXPECT_EQ(t.nodes[0].value, 0.5);
}

TEST(Tree, TieBreakLowestFeatureThenThreshold) {
    // Features 1 and 2 separate equally well; feature 1 must win.
    const Matrix x(4, 3, {5, 0, 0, 5, 0, 0, 5, 1, 1, 5, 1, 1});
    const std::vector<double> y{0, 0, 1, 1};
    const auto feats = iota_n(3);
    const auto s = best_split(x, y, iota_n(4), feats, TreeParams{});
    ASSERT_TRUE(s.found);
    EXPECT_EQ(s.feature, 1u);
}

TEST(Tree, SplitMatchesExhaustiveSearch) {
    SplitMix64 rng(2024);
    const auto feats = iota_n(5);
    for (int trial = 0; trial < 300; ++trial) {
        const auto inst = random_instance(rng);
        const auto oracle = exhaustive_gini(inst);
        const auto s = best_split(inst.x, inst.targets, iota_n(inst.x.rows()), feats, TreeParams{});
        ASSERT_EQ(s.found, oracle.found) << "trial " << trial;
        if (!oracle.found) continue;
        ASSERT_EQ(s.feature, oracle.feature) << "trial " << trial;
        ASSERT_EQ(s.threshold, oracle.threshold) << "trial " << trial;
        ASSERT_NEAR(s.gain, oracle.gain, 1e-12) << "trial " << trial;
    }
}

TEST(Tree, MinSamplesLeafAndDepthRespected) {
    SplitMix64 rng(5);
    const auto inst = random_instance(rng, 50);
    TreeParams p;
    p.min_samples_leaf = 5;
    p.max_depth = 3;
    const auto t = fit_tree(inst.x, inst.targets, p);
    // Count rows per leaf by routing every row.
    std::vector<std::size_t> hits(t.nodes.size(), 0);
    for (std::size_t r = 0; r < inst.x.rows(); ++r) {
        std::size_t i = 0, depth = 0;
        while (!t.nodes[i].is_leaf()) {
            i = static_cast<std::size_t>(inst.x(r, static_cast<std::size_t>(t.nodes[i].feature)) <= t.nodes[i].threshold
                                             ? t.nodes[i].left
                                             : t.nodes[i].right);
            ++depth;
        }
        EXPECT_LE(depth, 3u);
        ++hits[i];
    }
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        if (t.nodes[i].is_leaf()) {
            EXPECT_GE(hits[i], 5u);
        }
    }
}

TEST(Forest, SeparatingFeatureGeneralizes) {
    SplitMix64 rng(6);
    Matrix x(60, 3);
    std::vector<int> y(60);
    for (std::size_t r = 0; r < 60; ++r) {
        y[r] = static_cast<int>(r % 2);
        x(r, 0) = rng.uniform();
        x(r, 1) = y[r] ? 1.0 : 0.0;
        x(r, 2) = rng.uniform();
    }
    ForestParams p;
    p.n_trees = 25;
    p.max_features = 3;
    const auto m = fit_random_forest(x, y, p);
    Matrix held(2, 3, {0.3, 1, 0.9, 0.7, 0, 0.1});
    const auto probs = ensemble_predict(m, held);
    EXPECT_GE(probs[0], 0.5);
    EXPECT_LT(probs[1], 0.5);
}

TEST(Forest, SingleTreeWithoutBootstrapEqualsFitTree) {
    SplitMix64 rng(7);
    const auto inst = random_instance(rng);
    ForestParams p;
    p.n_trees = 1;
    p.bootstrap = false;
    p.max_features = inst.x.cols();
    const auto m = fit_random_forest(inst.x, inst.y, p);
    TreeParams tp;
    tp.max_depth = p.max_depth;
    EXPECT_EQ(m.trees.at(0), fit_tree(inst.x, inst.targets, tp));
}

TEST(Forest, DeterministicAndOrderInvariant) {
    SplitMix64 rng(8);
    const auto inst = random_instance(rng);
    ForestParams p;
    p.n_trees = 10;
    p.seed = 3;
    const auto a = fit_random_forest(inst.x, inst.y, p);
    const auto b = fit_random_forest(inst.x, inst.y, p);
    EXPECT_EQ(a.trees, b.trees);

    auto shuffled = a;
    std::reverse(shuffled.trees.begin(), shuffled.trees.end());
    const auto pa = ensemble_predict(a, inst.x);
    const auto pb = ensemble_predict(shuffled, inst.x);
    for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_NEAR(pa[i], pb[i], 1e-15);
}

TEST(Forest, TreeUsesItsOwnStream) {
    SplitMix64 rng(9);
    const auto inst = random_instance(rng);
    ForestParams p;
    p.n_trees = 3;
    p.seed = 11;
    const auto all = fit_random_forest(inst.x, inst.y, p);
    ForestParams third = p;
    third.n_trees = 1;
    third.seed = 13;
    EXPECT_EQ(fit_random_forest(inst.x, inst.y, third).trees[0], all.trees[2]);
}

TEST(Ensemble, IdenticalStumps) {
    EnsembleModel m;
    m.kind = EnsembleKind::random_forest;
    m.n_features = 1;
    Tree stump;
    stump.nodes = {{0, 0.5, 1, 2, 0}, {-1, 0, -1, -1, 0.25}, {-1, 0, -1, -1, 0.75}};
    m.trees = {stump, stump, stump};
    const auto p = ensemble_predict(m, Matrix(2, 1, {0, 1}));
    EXPECT_EQ(p[0], 0.25);
    EXPECT_EQ(p[1], 0.75);
    EXPECT_THROW(ensemble_predict(m, Matrix(1, 2)), ShapeError);
}

TEST(Gbm, DegenerateLabels) {
    const Matrix x(4, 1, {0, 1, 2, 3});
    const std::vector<int> ones{1, 1, 1, 1};
    const auto m = fit_gbm(x, ones, GbmParams{});
    EXPECT_TRUE(m.trees.empty());
    EXPECT_FALSE(m.warnings.empty());
    EXPECT_EQ(m.base_score, 10.0);
    for (double p : ensemble_predict(m, x)) EXPECT_GT(p, 0.9999);
}

TEST(Gbm, BalancedBaseIsZeroAndZeroRoundsConstant) {
    const Matrix x(4, 1, {0, 1, 2, 3});
    const std::vector<int> y{0, 1, 0, 1};
    GbmParams p;
    p.n_rounds = 0;
    const auto m = fit_gbm(x, y, p);
    EXPECT_EQ(m.base_score, 0.0);
    for (double v : ensemble_predict(m, x)) EXPECT_EQ(v, 0.5);

    const std::vector<int> skewed{0, 0, 0, 1};
    const auto ms = fit_gbm(x, skewed, p);
    EXPECT_NEAR(ms.base_score, std::log(0.25 / 0.75), 1e-15);
    for (double v : ensemble_predict(ms, x)) EXPECT_NEAR(v, 0.25, 1e-15);
}

double log_loss(const std::vector<double>& p, const std::vector<int>& y) {
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) s -= y[i] ? std::log(p[i]) : std::log(1 - p[i]);
    return s / static_cast<double>(p.size());
}

template <typename Fit>
void expect_monotone_boosting(Fit&& fit) {
    SplitMix64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        auto inst = random_instance(rng, 50, 3);
        inst.y[0] = 0;
        inst.y[1] = 1;
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t rounds = 0; rounds <= 6; ++rounds) {
            const auto m = fit(inst, rounds);
            const double loss = log_loss(ensemble_predict(m, inst.x), inst.y);
            EXPECT_LE(loss, prev + 1e-12) << "trial " << trial << " rounds " << rounds;
            prev = loss;
        }
    }
}

TEST(Gbm, TrainingLossNonIncreasing) {
    expect_monotone_boosting([](const Instance& inst, std::size_t rounds) {
        GbmParams p;
        p.n_rounds = rounds;
        return fit_gbm(inst.x, inst.y, p);
    });
}

TEST(Gbm, FirstRoundImprovesSeparableToy) {
    const Matrix x(6, 1, {0, 1, 2, 3, 4, 5});
    const std::vector<int> y{0, 0, 0, 1, 1, 1};
    GbmParams p;
    p.n_rounds = 0;
    const double l0 = log_loss(ensemble_predict(fit_gbm(x, y, p), x), y);
    p.n_rounds = 1;
    const double l1 = log_loss(ensemble_predict(fit_gbm(x, y, p), x), y);
    EXPECT_LT(l1, l0);
}

TEST(Leafwise, TrainingLossNonIncreasing) {
    expect_monotone_boosting([](const Instance& inst, std::size_t rounds) {
        LeafwiseParams p;
        p.n_rounds = rounds;
        p.min_samples_leaf = 2;
        return fit_leafwise_gbm(inst.x, inst.y, p);
    });
}

TEST(Leafwise, TwoLeavesIsOneSplit) {
    SplitMix64 rng(13);
    const auto inst = random_instance(rng);
    LeafwiseParams p;
    p.max_leaves = 2;
    p.min_samples_leaf = 1;
    p.n_rounds = 5;
    const auto m = fit_leafwise_gbm(inst.x, inst.y, p);
    for (const auto& t : m.trees) EXPECT_LE(t.leaf_count(), 2u);
}

TEST(Leafwise, Deterministic) {
    SplitMix64 rng(14);
    const auto inst = random_instance(rng);
    LeafwiseParams p;
    p.n_rounds = 10;
    p.min_samples_leaf = 2;
    EXPECT_EQ(fit_leafwise_gbm(inst.x, inst.y, p).trees, fit_leafwise_gbm(inst.x, inst.y, p).trees);
}

TEST(Histogram, EdgesAreTrainingValues) {
    const Matrix x(6, 1, {3, 1, 2, 2, 9, 5});
    const auto h = build_histogram(x, 3);
    ASSERT_EQ(h.bins(0), 3u);
    for (std::size_t b = 0; b < 3; ++b) EXPECT_LE(h.lower_edges[0][b], h.upper_edges[0][b]);
    for (std::size_t r = 0; r < 6; ++r) {
        const auto b = h.bin_of[0][r];
        EXPECT_GE(x(r, 0), h.lower_edges[0][b]);
        EXPECT_LE(x(r, 0), h.upper_edges[0][b]);
    }
}

// Exact variance-reduction gain of splitting `rows` on x[f] <= t.
double exact_gain(const Instance& inst, std::size_t f, double t) {
    double total = 0, left = 0;
    std::size_t nl = 0;
    const auto n = inst.x.rows();
    for (std::size_t r = 0; r < n; ++r) {
        total += inst.targets[r];
        if (inst.x(r, f) <= t) {
            left += inst.targets[r];
            ++nl;
        }
    }
    if (nl == 0 || nl == n) return 0;
    const double nr = static_cast<double>(n - nl);
    return (left * left / double(nl) + (total - left) * (total - left) / nr - total * total / double(n)) / double(n);
}

TEST(Histogram, FineBinsMatchExactSearch) {
    SplitMix64 rng(15);
    const auto feats = iota_n(5);
    TreeParams tp;
    tp.criterion = Criterion::variance;
    for (int trial = 0; trial < 100; ++trial) {
        auto inst = random_instance(rng);
        for (auto& t : inst.targets) t = rng.uniform(-1, 1);
        const auto rows = iota_n(inst.x.rows());
        const auto exact = best_split(inst.x, inst.targets, rows, feats, tp);
        const auto hs = best_histogram_split(inst.x, build_histogram(inst.x, 255), inst.targets, rows, 1);
        ASSERT_EQ(hs.found, exact.found);
        if (!exact.found) continue;
        EXPECT_EQ(hs.feature, exact.feature);
        EXPECT_EQ(hs.threshold, exact.threshold);
        EXPECT_NEAR(hs.gain, exact.gain, 1e-12);
    }
}

// Coarse bins: the histogram searches a subset of the exact candidates and
// does at least as well as the bin boundaries around the exact optimum.
TEST(Histogram, CoarseBinsWithinOneBinOfExact) {
    SplitMix64 rng(16);
    const auto feats = iota_n(5);
    TreeParams tp;
    tp.criterion = Criterion::variance;
    for (int trial = 0; trial < 100; ++trial) {
        auto inst = random_instance(rng);
        for (std::size_t r = 0; r < inst.x.rows(); ++r) {
            for (std::size_t f = 0; f < 5; ++f) inst.x(r, f) = std::floor(rng.uniform(0, 20));
            inst.targets[r] = rng.uniform(-1, 1);
        }
        const auto rows = iota_n(inst.x.rows());
        const auto hist = build_histogram(inst.x, 4);
        const auto exact = best_split(inst.x, inst.targets, rows, feats, tp);
        const auto hs = best_histogram_split(inst.x, hist, inst.targets, rows, 1);
        if (!exact.found) continue;
        ASSERT_TRUE(hs.found || hist.bins(exact.feature) < 2);
        if (!hs.found) continue;
        EXPECT_LE(hs.gain, exact.gain + 1e-12);
        EXPECT_NEAR(hs.gain, exact_gain(inst, hs.feature, hs.threshold), 1e-12);

        const auto f = exact.feature;
        const auto& up = hist.upper_edges[f];
        const auto& lo = hist.lower_edges[f];
        const auto b = static_cast<std::size_t>(std::lower_bound(up.begin(), up.end(), exact.threshold) - up.begin());
        for (std::size_t edge : {b, b + 1}) {
            if (edge == 0 || edge >= up.size()) continue;
            const double t = (up[edge - 1] + lo[edge]) / 2;
            EXPECT_GE(hs.gain + 1e-12, exact_gain(inst, f, t));
        }
    }
}

TEST(Ensemble, ProbabilitiesInUnitInterval) {
    SplitMix64 rng(17);
    const auto inst = random_instance(rng);
    GbmParams g;
    g.n_rounds = 20;
    LeafwiseParams l;
    l.n_rounds = 20;
    l.min_samples_leaf = 1;
    ForestParams f;
    f.n_trees = 5;
    Matrix random(30, inst.x.cols());
    for (std::size_t r = 0; r < 30; ++r) {
        for (std::size_t c = 0; c < inst.x.cols(); ++c) random(r, c) = rng.uniform(-10, 10);
    }
    for (const auto& m : {fit_gbm(inst.x, inst.y, g), fit_leafwise_gbm(inst.x, inst.y, l),
                          fit_random_forest(inst.x, inst.y, f)}) {
        for (double p : ensemble_predict(m, random)) {
            EXPECT_GE(p, 0.0);
            EXPECT_LE(p, 1.0);
        }
    }
}

}  // namespace
}  // namespace fakejob
