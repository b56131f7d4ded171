#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fakejob/features.hpp"
#include "fakejob/ingest.hpp"
#include "fakejob/rng.hpp"

// Tree-ensemble baselines over a tabular view of the postings: a CART random
// forest, depth-wise logistic gradient boosting, and a leaf-wise histogram
// booster.
namespace fakejob::forests {

// Dense row-major feature matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline constexpr std::size_t kDefaultTopTerms = 500;

// Column layout of a tabular matrix: numeric features, then one count
// column per term.
struct FeatureSpec {
    std::vector<std::string> numeric_names;
    std::vector<std::string> terms;

    std::size_t width() const { return numeric_names.size() + terms.size(); }
};

/// Top-k tokens of the given (training) texts.
std::vector<std::string> select_terms(std::span<const std::string> texts, std::size_t k);

FeatureSpec make_feature_spec(const features::CategoricalEncoders& enc, std::vector<std::string> terms);

/// [encode_numeric(p), count(term_1), ..., count(term_K)] per posting.
Matrix build_tabular(std::span<const ingest::CleanPosting> postings, const features::CategoricalEncoders& enc,
                     const FeatureSpec& spec);

// Flattened binary tree; node 0 is the root. Rows with x[feature] <= threshold
// go left.
struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0;

    bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const;
    std::size_t leaf_count() const;
    friend bool operator==(const Tree&, const Tree&) = default;
};

enum class Criterion { gini, variance };

struct TreeParams {
    std::size_t max_depth = 25;
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 0;  // per-node feature subsample; 0 = all
    Criterion criterion = Criterion::gini;
};

struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0;
    double gain = 0;  // impurity decrease per row of the node
    // Σ over children of (Σ target)²/n, the quantity being maximized.
    // With 0/1 targets this is Σ_class c²/n, i.e. Gini in count form.
    double score = 0;
};

/// Exhaustive best split of `rows` over `candidate_features` (ascending).
/// Ties go to the lower feature index, then the lower threshold.
Split best_split(const Matrix& x, std::span<const double> targets, std::span<const std::size_t> rows,
                 std::span<const std::size_t> candidate_features, const TreeParams& params);

using LeafValue = std::function<double(std::span<const std::size_t> rows)>;

/// Greedy recursive CART over `rows` (all rows when empty). Leaves hold the
/// class-1 fraction (gini) or the mean target (variance) unless `leaf_value`
/// is given. `rng` drives per-node feature subsampling when max_features > 0.
Tree fit_tree(const Matrix& x, std::span<const double> targets, const TreeParams& params,
              std::span<const std::size_t> rows = {}, SplitMix64* rng = nullptr,
              const LeafValue& leaf_value = {});

enum class EnsembleKind { random_forest, gbm, leafwise_gbm };

std::string to_string(EnsembleKind kind);
EnsembleKind ensemble_kind_from_string(const std::string& name);

struct EnsembleModel {
    EnsembleKind kind = EnsembleKind::random_forest;
    std::vector<Tree> trees;
    double learning_rate = 0;  // boosting only
    double base_score = 0;     // boosting only; log-odds
    std::size_t n_features = 0;
    FeatureSpec feature_spec;
    std::vector<std::string> warnings;
};

struct ForestParams {
    std::size_t n_trees = 100;
    std::size_t max_depth = 25;
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 0;  // 0 = floor(sqrt(width))
    bool bootstrap = true;
    std::uint64_t seed = 42;
};

struct GbmParams {
    std::size_t n_rounds = 100;
    double learning_rate = 0.1;
    std::size_t max_depth = 3;
    std::size_t min_samples_leaf = 1;
    std::uint64_t seed = 42;  // no stochastic steps; kept for a uniform interface
};

struct LeafwiseParams {
    std::size_t n_rounds = 100;
    double learning_rate = 0.1;
    std::size_t max_leaves = 31;
    std::size_t n_bins = 255;
    std::size_t min_samples_leaf = 20;
    std::uint64_t seed = 42;  // no stochastic steps; kept for a uniform interface
};

/// Tree i trains on a bootstrap drawn from SplitMix64(seed + i); the same
/// stream then drives its per-node feature subsampling.
EnsembleModel fit_random_forest(const Matrix& x, std::span<const int> y, const ForestParams& params);

/// Logistic boosting; leaves take the Newton value Σr / Σp(1−p).
EnsembleModel fit_gbm(const Matrix& x, std::span<const int> y, const GbmParams& params);

// Equal-frequency per-feature bins computed on a training matrix.
struct Histogram {
    // Smallest / largest training value in bin b of feature f.
    std::vector<std::vector<double>> lower_edges;
    std::vector<std::vector<double>> upper_edges;
    std::vector<std::vector<std::uint16_t>> bin_of;  // [feature][row]

    std::size_t bins(std::size_t f) const { return upper_edges[f].size(); }
};

Histogram build_histogram(const Matrix& x, std::size_t n_bins);

/// Best split of `rows` searched over bin boundaries only; the threshold
/// is the midpoint between the bounding bins' extreme training values.
Split best_histogram_split(const Matrix& x, const Histogram& hist, std::span<const double> targets,
                           std::span<const std::size_t> rows, std::size_t min_samples_leaf);

/// Grows one tree leaf-wise: always splits the leaf whose best split removes
/// the most impurity in total (per-row gain times leaf size).
Tree fit_leafwise_tree(const Matrix& x, const Histogram& hist, std::span<const double> targets,
                       std::size_t max_leaves, std::size_t min_samples_leaf, const LeafValue& leaf_value);

EnsembleModel fit_leafwise_gbm(const Matrix& x, std::span<const int> y, const LeafwiseParams& params);

/// Forest: mean leaf probability. Boosting: σ(base + lr·Σ tree(x)).
/// Throws ShapeError on a width mismatch.
std::vector<double> ensemble_predict(const EnsembleModel& m, const Matrix& x);

}  // namespace fakejob::forests
