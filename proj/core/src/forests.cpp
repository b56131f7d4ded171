#include "fakejob/forests.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "fakejob/error.hpp"
#include "fakejob/ndgrad.hpp"

namespace fakejob::forests {

namespace {

constexpr double kMinGain = 1e-12;
constexpr double kBaseScoreLimit = 10.0;

double child_score(Criterion c, double sum, double n) {
    if (c == Criterion::gini) {
        const double neg = n - sum;
        return (sum * sum + neg * neg) / n;
    }
    return sum * sum / n;
}

double mean_target(std::span<const double> targets, std::span<const std::size_t> rows) {
    double s = 0;
    for (auto r : rows) s += targets[r];
    return s / static_cast<double>(rows.size());
}

bool all_equal(std::span<const double> targets, std::span<const std::size_t> rows) {
    for (auto r : rows) {
        if (targets[r] != targets[rows.front()]) return false;
    }
    return true;
}

// Scores within rounding noise count as ties, so the earlier candidate
// (lower feature, then lower threshold) keeps winning.
bool beats(double score, const Split& best) {
    return !best.found || score > best.score + 1e-14 * std::max(1.0, std::abs(best.score));
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

void check_labels(const Matrix& x, std::span<const int> y) {
    if (x.rows() != y.size()) {
        throw ShapeError(fmt::format("{} feature rows but {} labels", x.rows(), y.size()));
    }
    if (y.empty()) throw DataError("cannot fit an ensemble on zero rows");
    for (int v : y) {
        if (v != 0 && v != 1) throw DataError(fmt::format("label {} is not 0 or 1", v));
    }
}

struct TreeBuilder {
    const Matrix& x;
    std::span<const double> targets;
    const TreeParams& params;
    SplitMix64* rng;
    const LeafValue& leaf_value;
    std::vector<std::size_t> feature_pool;
    Tree tree;

    std::vector<std::size_t> candidates() {
        const auto f = x.cols();
        if (params.max_features == 0 || params.max_features >= f) return feature_pool;
        if (!rng) throw ContractError("fit_tree: feature subsampling needs a random stream");
        // Partial Fisher–Yates over a fresh 0..F−1 permutation.
        std::vector<std::size_t> pool(f);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t j = 0; j < params.max_features; ++j) {
            const auto k = j + static_cast<std::size_t>(rng->below(f - j));
            std::swap(pool[j], pool[k]);
        }
        pool.resize(params.max_features);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    std::int32_t make_leaf(std::span<const std::size_t> rows) {
        TreeNode leaf;
        leaf.value = leaf_value ? leaf_value(rows) : mean_target(targets, rows);
        tree.nodes.push_back(leaf);
        return static_cast<std::int32_t>(tree.nodes.size() - 1);
    }

    std::int32_t grow(std::vector<std::size_t> rows, std::size_t depth) {
        if (depth >= params.max_depth || rows.size() < 2 * std::max<std::size_t>(1, params.min_samples_leaf) ||
            all_equal(targets, rows)) {
            return make_leaf(rows);
        }
        const auto feats = candidates();
        const auto split = best_split(x, targets, rows, feats, params);
        if (!split.found) return make_leaf(rows);

        std::vector<std::size_t> left, right;
        for (auto r : rows) (x(r, split.feature) <= split.threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        const auto id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.push_back({static_cast<std::int32_t>(split.feature), split.threshold, -1, -1, 0.0});
        const auto l = grow(std::move(left), depth + 1);
        const auto r = grow(std::move(right), depth + 1);
        tree.nodes[static_cast<std::size_t>(id)].left = l;
        tree.nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }
};

double sigmoid(double v) { return ndgrad::sigmoid(v); }

double clamp_base(double p_mean, std::vector<std::string>& warnings) {
    if (p_mean <= 0.0 || p_mean >= 1.0) {
        warnings.push_back("all labels identical; base score clamped and no trees fitted");
        return p_mean <= 0.0 ? -kBaseScoreLimit : kBaseScoreLimit;
    }
    return std::clamp(std::log(p_mean / (1.0 - p_mean)), -kBaseScoreLimit, kBaseScoreLimit);
}

// Σr / Σp(1−p) over the leaf's rows.
LeafValue newton_leaf(const std::vector<double>& residual, const std::vector<double>& hessian) {
    return [&residual, &hessian](std::span<const std::size_t> rows) {
        double g = 0, h = 0;
        for (auto r : rows) {
            g += residual[r];
            h += hessian[r];
        }
        return g / std::max(h, 1e-12);
    };
}

template <typename FitRound>
EnsembleModel boost(const Matrix& x, std::span<const int> y, std::size_t rounds, double lr, EnsembleKind kind,
                    FitRound&& fit_round) {
    check_labels(x, y);
    EnsembleModel m;
    m.kind = kind;
    m.learning_rate = lr;
    m.n_features = x.cols();
    const double p_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    m.base_score = clamp_base(p_mean, m.warnings);
    if (!m.warnings.empty()) return m;

    const auto n = x.rows();
    std::vector<double> f(n, m.base_score), residual(n), hessian(n);
    for (std::size_t round = 0; round < rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(f[i]);
            residual[i] = y[i] - p;
            hessian[i] = p * (1.0 - p);
        }
        auto tree = fit_round(residual, newton_leaf(residual, hessian));
        for (std::size_t i = 0; i < n; ++i) f[i] += lr * tree.predict(x.row(i));
        m.trees.push_back(std::move(tree));
    }
    return m;
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw ShapeError(fmt::format("matrix {}x{} needs {} values, got {}", rows, cols, rows * cols, data_.size()));
    }
}

std::vector<std::string> select_terms(std::span<const std::string> texts, std::size_t k) {
    std::vector<std::string> terms;
    for (auto& [tok, n] : features::term_frequencies(texts, k)) terms.push_back(tok);
    return terms;
}

FeatureSpec make_feature_spec(const features::CategoricalEncoders& enc, std::vector<std::string> terms) {
    return {features::numeric_feature_names(enc), std::move(terms)};
}

Matrix build_tabular(std::span<const ingest::CleanPosting> postings, const features::CategoricalEncoders& enc,
                     const FeatureSpec& spec) {
    const auto d = spec.numeric_names.size();
    if (d != features::kFlagFeatures + enc.width()) {
        throw ShapeError(fmt::format("feature spec lists {} numeric columns, encoders produce {}", d,
                                     features::kFlagFeatures + enc.width()));
    }
    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t k = 0; k < spec.terms.size(); ++k) column.emplace(spec.terms[k], d + k);

    Matrix m(postings.size(), spec.width());
    for (std::size_t r = 0; r < postings.size(); ++r) {
        const auto numeric = features::encode_numeric(postings[r], enc);
        for (std::size_t c = 0; c < d; ++c) m(r, c) = numeric[c];
        for (auto tok : features::tokenize(postings[r].full_text)) {
            const auto it = column.find(std::string(tok));
            if (it != column.end()) m(r, it->second) += 1.0;
        }
    }
    return m;
}

double Tree::predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

std::size_t Tree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

Split best_split(const Matrix& x, std::span<const double> targets, std::span<const std::size_t> rows,
                 std::span<const std::size_t> candidate_features, const TreeParams& params) {
    Split best;
    const auto n = rows.size();
    if (n < 2) return best;
    const auto min_leaf = std::max<std::size_t>(1, params.min_samples_leaf);

    double total = 0;
    for (auto r : rows) total += targets[r];
    const double nd = static_cast<double>(n);
    const double parent = child_score(params.criterion, total, nd);

    std::vector<std::pair<double, double>> column(n);
    for (auto f : candidate_features) {
        for (std::size_t i = 0; i < n; ++i) column[i] = {x(rows[i], f), targets[rows[i]]};
        std::sort(column.begin(), column.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        double left_sum = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left_sum += column[i].second;
            if (column[i].first == column[i + 1].first) continue;
            const auto nl = i + 1, nr = n - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            const double score = child_score(params.criterion, left_sum, static_cast<double>(nl)) +
                                 child_score(params.criterion, total - left_sum, static_cast<double>(nr));
            const double gain = (score - parent) / nd;
            if (gain > kMinGain && beats(score, best)) {
                best = {true, f, (column[i].first + column[i + 1].first) / 2.0, gain, score};
            }
        }
    }
    return best;
}

Tree fit_tree(const Matrix& x, std::span<const double> targets, const TreeParams& params,
              std::span<const std::size_t> rows, SplitMix64* rng, const LeafValue& leaf_value) {
    if (targets.size() != x.rows()) {
        throw ShapeError(fmt::format("fit_tree: {} rows but {} targets", x.rows(), targets.size()));
    }
    std::vector<std::size_t> start = rows.empty() ? all_rows(x.rows()) : std::vector<std::size_t>(rows.begin(), rows.end());
    if (start.empty()) throw DataError("fit_tree: no rows");
    TreeBuilder b{x, targets, params, rng, leaf_value, all_rows(x.cols()), {}};
    b.grow(std::move(start), 0);
    return std::move(b.tree);
}

std::string to_string(EnsembleKind kind) {
    switch (kind) {
        case EnsembleKind::random_forest: return "random_forest";
        case EnsembleKind::gbm: return "gbm";
        case EnsembleKind::leafwise_gbm: return "leafwise_gbm";
    }
    return "unknown";
}

EnsembleKind ensemble_kind_from_string(const std::string& name) {
    if (name == "random_forest") return EnsembleKind::random_forest;
    if (name == "gbm") return EnsembleKind::gbm;
    if (name == "leafwise_gbm") return EnsembleKind::leafwise_gbm;
    throw DataError(fmt::format("unknown ensemble kind '{}'", name));
}

EnsembleModel fit_random_forest(const Matrix& x, std::span<const int> y, const ForestParams& params) {
    check_labels(x, y);
    if (params.n_trees == 0) throw ContractError("random forest needs at least one tree");
    std::vector<double> targets(y.begin(), y.end());

    TreeParams tp;
    tp.max_depth = params.max_depth;
    tp.min_samples_leaf = params.min_samples_leaf;
    tp.criterion = Criterion::gini;
    tp.max_features = params.max_features != 0
                          ? params.max_features
                          : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(x.cols()))));

    EnsembleModel m;
    m.kind = EnsembleKind::random_forest;
    m.n_features = x.cols();
    const auto n = x.rows();
    for (std::size_t t = 0; t < params.n_trees; ++t) {
        SplitMix64 rng(params.seed + t);
        std::vector<std::size_t> rows;
        if (params.bootstrap) {
            rows.resize(n);
            for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
        } else {
            rows = all_rows(n);
        }
        m.trees.push_back(fit_tree(x, targets, tp, rows, &rng));
    }
    return m;
}

EnsembleModel fit_gbm(const Matrix& x, std::span<const int> y, const GbmParams& params) {
    TreeParams tp;
    tp.max_depth = params.max_depth;
    tp.min_samples_leaf = params.min_samples_leaf;
    tp.criterion = Criterion::variance;
    return boost(x, y, params.n_rounds, params.learning_rate, EnsembleKind::gbm,
                 [&](const std::vector<double>& residual, const LeafValue& leaf) {
                     return fit_tree(x, residual, tp, {}, nullptr, leaf);
                 });
}

Histogram build_histogram(const Matrix& x, std::size_t n_bins) {
    if (n_bins < 2 || n_bins > 65535) throw ContractError(fmt::format("n_bins {} outside [2, 65535]", n_bins));
    Histogram h;
    const auto n = x.rows();
    h.lower_edges.resize(x.cols());
    h.upper_edges.resize(x.cols());
    h.bin_of.resize(x.cols());
    std::vector<double> sorted(n);
    for (std::size_t f = 0; f < x.cols(); ++f) {
        for (std::size_t r = 0; r < n; ++r) sorted[r] = x(r, f);
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> distinct(sorted);
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

        auto& upper = h.upper_edges[f];
        if (distinct.size() <= n_bins) {
            upper = distinct;
        } else {
            for (std::size_t b = 1; b <= n_bins; ++b) {
                const auto idx = (b * n + n_bins - 1) / n_bins - 1;  // ceil(b·n/bins) − 1
                if (upper.empty() || sorted[idx] != upper.back()) upper.push_back(sorted[idx]);
            }
        }
        // Lower edge of bin b: first distinct value above the previous upper edge.
        auto& lower = h.lower_edges[f];
        lower.resize(upper.size());
        for (std::size_t b = 0; b < upper.size(); ++b) {
            lower[b] = b == 0 ? distinct.front()
                              : *std::upper_bound(distinct.begin(), distinct.end(), upper[b - 1]);
        }
        auto& bins = h.bin_of[f];
        bins.resize(n);
        for (std::size_t r = 0; r < n; ++r) {
            bins[r] = static_cast<std::uint16_t>(std::lower_bound(upper.begin(), upper.end(), x(r, f)) - upper.begin());
        }
    }
    return h;
}

Split best_histogram_split(const Matrix& x, const Histogram& hist, std::span<const double> targets,
                           std::span<const std::size_t> rows, std::size_t min_samples_leaf) {
    Split best;
    const auto n = rows.size();
    if (n < 2) return best;
    const auto min_leaf = std::max<std::size_t>(1, min_samples_leaf);
    double total = 0;
    for (auto r : rows) total += targets[r];
    const double nd = static_cast<double>(n);
    const double parent = total * total / nd;

    std::vector<std::size_t> count;
    std::vector<double> sum;
    for (std::size_t f = 0; f < x.cols(); ++f) {
        const auto nb = hist.bins(f);
        count.assign(nb, 0);
        sum.assign(nb, 0.0);
        for (auto r : rows) {
            const auto b = hist.bin_of[f][r];
            ++count[b];
            sum[b] += targets[r];
        }
        std::size_t nl = 0;
        double left_sum = 0;
        std::size_t last_left = nb;
        for (std::size_t b = 0; b < nb; ++b) {
            if (count[b] == 0) continue;
            if (last_left != nb && nl >= min_leaf && n - nl >= min_leaf) {
                const auto nr = n - nl;
                const double score = left_sum * left_sum / static_cast<double>(nl) +
                                     (total - left_sum) * (total - left_sum) / static_cast<double>(nr);
                const double gain = (score - parent) / nd;
                if (gain > kMinGain && beats(score, best)) {
                    const double thr = (hist.upper_edges[f][last_left] + hist.lower_edges[f][b]) / 2.0;
                    best = {true, f, thr, gain, score};
                }
            }
            nl += count[b];
            left_sum += sum[b];
            last_left = b;
        }
    }
    return best;
}

Tree fit_leafwise_tree(const Matrix& x, const Histogram& hist, std::span<const double> targets,
                       std::size_t max_leaves, std::size_t min_samples_leaf, const LeafValue& leaf_value) {
    struct Leaf {
        std::size_t node;
        std::vector<std::size_t> rows;
        Split split;
    };
    Tree tree;
    tree.nodes.push_back({});
    std::vector<Leaf> leaves;
    {
        auto rows = all_rows(x.rows());
        auto split = best_histogram_split(x, hist, targets, rows, min_samples_leaf);
        leaves.push_back({0, std::move(rows), split});
    }
    // Leaves compete on their total impurity decrease, not the per-row gain.
    auto total_gain = [](const Leaf& leaf) { return leaf.split.gain * static_cast<double>(leaf.rows.size()); };
    while (leaves.size() < max_leaves) {
        std::size_t pick = leaves.size();
        for (std::size_t i = 0; i < leaves.size(); ++i) {
            if (!leaves[i].split.found) continue;
            if (pick == leaves.size() || total_gain(leaves[i]) > total_gain(leaves[pick])) pick = i;
        }
        if (pick == leaves.size()) break;

        Leaf parent = std::move(leaves[pick]);
        leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));
        std::vector<std::size_t> left, right;
        for (auto r : parent.rows) (x(r, parent.split.feature) <= parent.split.threshold ? left : right).push_back(r);

        const auto l = tree.nodes.size();
        tree.nodes.push_back({});
        tree.nodes.push_back({});
        auto& node = tree.nodes[parent.node];
        node.feature = static_cast<std::int32_t>(parent.split.feature);
        node.threshold = parent.split.threshold;
        node.left = static_cast<std::int32_t>(l);
        node.right = static_cast<std::int32_t>(l + 1);

        auto ls = best_histogram_split(x, hist, targets, left, min_samples_leaf);
        auto rs = best_histogram_split(x, hist, targets, right, min_samples_leaf);
        leaves.push_back({l, std::move(left), ls});
        leaves.push_back({l + 1, std::move(right), rs});
    }
    for (const auto& leaf : leaves) {
        tree.nodes[leaf.node].value = leaf_value ? leaf_value(leaf.rows) : mean_target(targets, leaf.rows);
    }
    return tree;
}

EnsembleModel fit_leafwise_gbm(const Matrix& x, std::span<const int> y, const LeafwiseParams& params) {
    if (params.max_leaves < 2) throw ContractError("leaf-wise boosting needs max_leaves >= 2");
    const auto hist = build_histogram(x, params.n_bins);
    return boost(x, y, params.n_rounds, params.learning_rate, EnsembleKind::leafwise_gbm,
                 [&](const std::vector<double>& residual, const LeafValue& leaf) {
                     return fit_leafwise_tree(x, hist, residual, params.max_leaves, params.min_samples_leaf, leaf);
                 });
}

std::vector<double> ensemble_predict(const EnsembleModel& m, const Matrix& x) {
    if (x.cols() != m.n_features) {
        throw ShapeError(fmt::format("ensemble expects {} features, matrix has {}", m.n_features, x.cols()));
    }
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto row = x.row(r);
        if (m.kind == EnsembleKind::random_forest) {
            double s = 0;
            for (const auto& t : m.trees) s += t.predict(row);
            out[r] = m.trees.empty() ? 0.0 : s / static_cast<double>(m.trees.size());
        } else {
            double f = m.base_score;
            for (const auto& t : m.trees) f += m.learning_rate * t.predict(row);
            out[r] = sigmoid(f);
        }
    }
    return out;
}

}  // namespace fakejob::forests
