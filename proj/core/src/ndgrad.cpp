#include "fakejob/ndgrad.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fakejob/error.hpp"

namespace fakejob::ndgrad {

std::string to_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

std::size_t element_count(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

// ---------------------------------------------------------------- Tensor

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    auto s = std::make_shared<Storage>();
    s->values.assign(element_count(shape), 0.0);
    s->shape = std::move(shape);
    s->requires_grad = requires_grad;
    return Tensor(std::move(s));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (element_count(shape) != values.size()) {
        throw ShapeError(fmt::format("shape {} needs {} values, got {}", to_string(shape),
                                     element_count(shape), values.size()));
    }
    auto s = std::make_shared<Storage>();
    s->shape = std::move(shape);
    s->values = std::move(values);
    s->requires_grad = requires_grad;
    return Tensor(std::move(s));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from({1}, {value}, requires_grad);
}

std::size_t Tensor::rows() const {
    return rank() == 0 ? 1 : (rank() == 1 ? 1 : data_->shape[0]);
}

std::size_t Tensor::cols() const {
    if (rank() == 0) return 1;
    return rank() == 1 ? data_->shape[0] : data_->shape[1];
}

double Tensor::item() const {
    if (size() != 1) throw ContractError(fmt::format("item() on tensor of shape {}", to_string(shape())));
    return data_->values[0];
}

std::span<double> Tensor::grad() const {
    if (data_->grad.size() != data_->values.size()) data_->grad.assign(data_->values.size(), 0.0);
    return data_->grad;
}

void Tensor::zero_grad() {
    std::fill(data_->grad.begin(), data_->grad.end(), 0.0);
}

void Tensor::release_grad() {
    std::vector<double>().swap(data_->grad);
}

Tensor Tensor::clone() const {
    return from(data_->shape, data_->values, data_->requires_grad);
}

// ----------------------------------------------------------------- Graph

void Graph::record(const char* op, Tensor output, std::function<void()> backward) {
    nodes_.push_back({op, std::move(output), std::move(backward)});
}

void Graph::backward(Tensor& loss) {
    if (loss.size() != 1) {
        throw ContractError(fmt::format("backward needs a scalar loss, got shape {}", to_string(loss.shape())));
    }
    if (!loss.requires_grad()) return;
    loss.grad()[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        it->backward();
        if (!it->output.same_storage(loss)) it->output.release_grad();
    }
    nodes_.clear();
}

// --------------------------------------------------------------- kernels

namespace {

// C[m×n] += A[m×k]·B[k×n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

// C[m×n] += A[m×k]·B[n×k]ᵀ
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b + j * k;
            double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
            std::size_t p = 0;
            for (; p + 4 <= k; p += 4) {
                s0 += ai[p] * bj[p];
                s1 += ai[p + 1] * bj[p + 1];
                s2 += ai[p + 2] * bj[p + 2];
                s3 += ai[p + 3] * bj[p + 3];
            }
            for (; p < k; ++p) s0 += ai[p] * bj[p];
            ci[j] += (s0 + s1) + (s2 + s3);
        }
    }
}

// C[m×n] += A[k×m]ᵀ·B[k×n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t k, std::size_t m, std::size_t n) {
    for (std::size_t p = 0; p < k; ++p) {
        const double* ap = a + p * m;
        const double* bp = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = ap[i];
            double* ci = c + i * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

bool tracks(const Graph& g, std::initializer_list<const Tensor*> inputs) {
    if (!g.recording()) return false;
    for (const auto* t : inputs) {
        if (t->requires_grad()) return true;
    }
    return false;
}

void require_matrix(const Tensor& t, const char* op) {
    if (t.rank() != 2) {
        throw ShapeError(fmt::format("{}: expected a matrix, got shape {}", op, to_string(t.shape())));
    }
}

void axpy(std::span<double> dst, std::span<const double> src, double factor = 1.0) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += factor * src[i];
}

}  // namespace

// ------------------------------------------------------------------- ops

Tensor matmul(Graph& g, const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    const auto m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    if (b.shape()[0] != k) {
        throw ShapeError(fmt::format("matmul: shapes {} and {} do not chain", to_string(a.shape()),
                                     to_string(b.shape())));
    }
    auto out = Tensor::zeros({m, n});
    gemm_nn(a.values().data(), b.values().data(), out.values().data(), m, k, n);
    if (tracks(g, {&a, &b})) {
        out.set_requires_grad(true);
        g.record("matmul", out, [a, b, out, m, k, n]() mutable {
            const double* dc = out.grad().data();
            if (a.requires_grad()) gemm_nt(dc, b.values().data(), a.grad().data(), m, n, k);
            if (b.requires_grad()) gemm_tn(a.values().data(), dc, b.grad().data(), m, k, n);
        });
    }
    return out;
}

Tensor matmul_bt(Graph& g, const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul_bt");
    require_matrix(b, "matmul_bt");
    const auto m = a.shape()[0], k = a.shape()[1], n = b.shape()[0];
    if (b.shape()[1] != k) {
        throw ShapeError(fmt::format("matmul_bt: shapes {} and {}ᵀ do not chain", to_string(a.shape()),
                                     to_string(b.shape())));
    }
    auto out = Tensor::zeros({m, n});
    gemm_nt(a.values().data(), b.values().data(), out.values().data(), m, k, n);
    if (tracks(g, {&a, &b})) {
        out.set_requires_grad(true);
        g.record("matmul_bt", out, [a, b, out, m, k, n]() mutable {
            const double* dc = out.grad().data();
            if (a.requires_grad()) gemm_nn(dc, b.values().data(), a.grad().data(), m, n, k);
            if (b.requires_grad()) gemm_tn(dc, a.values().data(), b.grad().data(), m, n, k);
        });
    }
    return out;
}

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError(fmt::format("add: shapes {} and {} differ", to_string(a.shape()), to_string(b.shape())));
    }
    auto out = Tensor::from(a.shape(), std::vector<double>(a.values().begin(), a.values().end()));
    axpy(out.values(), b.values());
    if (tracks(g, {&a, &b})) {
        out.set_requires_grad(true);
        g.record("add", out, [a, b, out]() mutable {
            if (a.requires_grad()) axpy(a.grad(), out.grad());
            if (b.requires_grad()) axpy(b.grad(), out.grad());
        });
    }
    return out;
}

Tensor add_row(Graph& g, const Tensor& a, const Tensor& bias) {
    require_matrix(a, "add_row");
    const auto m = a.shape()[0], n = a.shape()[1];
    const bool row_shaped = (bias.rank() == 1 && bias.shape()[0] == n) ||
                            (bias.rank() == 2 && bias.shape()[0] == 1 && bias.shape()[1] == n);
    if (!row_shaped) {
        throw ShapeError(fmt::format("add_row: bias {} does not match matrix {}", to_string(bias.shape()),
                                     to_string(a.shape())));
    }
    auto out = Tensor::from(a.shape(), std::vector<double>(a.values().begin(), a.values().end()));
    auto ov = out.values();
    const auto bv = bias.values();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) ov[i * n + j] += bv[j];
    }
    if (tracks(g, {&a, &bias})) {
        out.set_requires_grad(true);
        g.record("add_row", out, [a, bias, out, m, n]() mutable {
            const auto dy = out.grad();
            if (a.requires_grad()) axpy(a.grad(), dy);
            if (bias.requires_grad()) {
                auto db = bias.grad();
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t j = 0; j < n; ++j) db[j] += dy[i * n + j];
                }
            }
        });
    }
    return out;
}

Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError(fmt::format("mul: shapes {} and {} differ", to_string(a.shape()), to_string(b.shape())));
    }
    auto out = Tensor::zeros(a.shape());
    auto ov = out.values();
    const auto av = a.values(), bv = b.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
    if (tracks(g, {&a, &b})) {
        out.set_requires_grad(true);
        g.record("mul", out, [a, b, out]() mutable {
            const auto dy = out.grad();
            if (a.requires_grad()) {
                auto da = a.grad();
                const auto bv2 = b.values();
                for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * bv2[i];
            }
            if (b.requires_grad()) {
                auto db = b.grad();
                const auto av2 = a.values();
                for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * av2[i];
            }
        });
    }
    return out;
}

Tensor scale(Graph& g, const Tensor& a, double factor) {
    auto out = Tensor::zeros(a.shape());
    auto ov = out.values();
    const auto av = a.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * factor;
    if (tracks(g, {&a})) {
        out.set_requires_grad(true);
        g.record("scale", out, [a, out, factor]() mutable { axpy(a.grad(), out.grad(), factor); });
    }
    return out;
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor activation(Graph& g, Activation kind, const Tensor& x) {
    auto out = Tensor::zeros(x.shape());
    auto y = out.values();
    const auto xv = x.values();
    switch (kind) {
        case Activation::sigmoid:
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = sigmoid(xv[i]);
            break;
        case Activation::tanh:
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(xv[i]);
            break;
        case Activation::relu:
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = xv[i] > 0 ? xv[i] : 0.0;
            break;
    }
    if (tracks(g, {&x})) {
        out.set_requires_grad(true);
        g.record("activation", out, [x, out, kind]() mutable {
            auto dx = x.grad();
            const auto dy = out.grad();
            const auto yv = out.values();
            switch (kind) {
                case Activation::sigmoid:
                    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * yv[i] * (1.0 - yv[i]);
                    break;
                case Activation::tanh:
                    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * (1.0 - yv[i] * yv[i]);
                    break;
                case Activation::relu: {
                    const auto xv2 = x.values();
                    for (std::size_t i = 0; i < dx.size(); ++i) {
                        if (xv2[i] > 0) dx[i] += dy[i];
                    }
                    break;
                }
            }
        });
    }
    return out;
}

Tensor concat_cols(Graph& g, const Tensor& a, const Tensor& b) {
    require_matrix(a, "concat_cols");
    require_matrix(b, "concat_cols");
    const auto m = a.shape()[0], na = a.shape()[1], nb = b.shape()[1];
    if (b.shape()[0] != m) {
        throw ShapeError(fmt::format("concat_cols: row counts differ, {} vs {}", to_string(a.shape()),
                                     to_string(b.shape())));
    }
    const auto n = na + nb;
    auto out = Tensor::zeros({m, n});
    auto ov = out.values();
    const auto av = a.values(), bv = b.values();
    for (std::size_t i = 0; i < m; ++i) {
        std::copy_n(av.begin() + i * na, na, ov.begin() + i * n);
        std::copy_n(bv.begin() + i * nb, nb, ov.begin() + i * n + na);
    }
    if (tracks(g, {&a, &b})) {
        out.set_requires_grad(true);
        g.record("concat_cols", out, [a, b, out, m, na, nb, n]() mutable {
            const auto dy = out.grad();
            if (a.requires_grad()) {
                auto da = a.grad();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < na; ++j) da[i * na + j] += dy[i * n + j];
            }
            if (b.requires_grad()) {
                auto db = b.grad();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < nb; ++j) db[i * nb + j] += dy[i * n + na + j];
            }
        });
    }
    return out;
}

Tensor slice_cols(Graph& g, const Tensor& a, std::size_t begin, std::size_t end) {
    require_matrix(a, "slice_cols");
    const auto m = a.shape()[0], n = a.shape()[1];
    if (begin > end || end > n) {
        throw ShapeError(fmt::format("slice_cols: [{}, {}) out of range for {}", begin, end, to_string(a.shape())));
    }
    const auto w = end - begin;
    auto out = Tensor::zeros({m, w});
    auto ov = out.values();
    const auto av = a.values();
    for (std::size_t i = 0; i < m; ++i) std::copy_n(av.begin() + i * n + begin, w, ov.begin() + i * w);
    if (tracks(g, {&a})) {
        out.set_requires_grad(true);
        g.record("slice_cols", out, [a, out, m, n, w, begin]() mutable {
            auto da = a.grad();
            const auto dy = out.grad();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < w; ++j) da[i * n + begin + j] += dy[i * w + j];
        });
    }
    return out;
}

Tensor slice_rows(Graph& g, const Tensor& a, std::size_t begin, std::size_t end) {
    require_matrix(a, "slice_rows");
    const auto m = a.shape()[0], n = a.shape()[1];
    if (begin > end || end > m) {
        throw ShapeError(fmt::format("slice_rows: [{}, {}) out of range for {}", begin, end, to_string(a.shape())));
    }
    const auto av = a.values();
    auto out = Tensor::from({end - begin, n},
                            std::vector<double>(av.begin() + begin * n, av.begin() + end * n));
    if (tracks(g, {&a})) {
        out.set_requires_grad(true);
        g.record("slice_rows", out, [a, out, begin, n]() mutable {
            auto da = a.grad();
            const auto dy = out.grad();
            for (std::size_t i = 0; i < dy.size(); ++i) da[begin * n + i] += dy[i];
        });
    }
    return out;
}

Tensor stack_rows(Graph& g, std::span<const Tensor> parts) {
    if (parts.empty()) throw ShapeError("stack_rows: nothing to stack");
    const auto n = parts.front().cols();
    std::size_t m = 0;
    bool any_grad = false;
    for (const auto& p : parts) {
        require_matrix(p, "stack_rows");
        if (p.cols() != n) {
            throw ShapeError(fmt::format("stack_rows: widths differ, {} vs {}", to_string(parts.front().shape()),
                                         to_string(p.shape())));
        }
        m += p.rows();
        any_grad = any_grad || p.requires_grad();
    }
    std::vector<double> values;
    values.reserve(m * n);
    for (const auto& p : parts) values.insert(values.end(), p.values().begin(), p.values().end());
    auto out = Tensor::from({m, n}, std::move(values));
    if (g.recording() && any_grad) {
        out.set_requires_grad(true);
        std::vector<Tensor> inputs(parts.begin(), parts.end());
        g.record("stack_rows", out, [inputs, out]() mutable {
            const auto dy = out.grad();
            std::size_t offset = 0;
            for (auto& p : inputs) {
                if (p.requires_grad()) axpy(p.grad(), dy.subspan(offset, p.size()));
                offset += p.size();
            }
        });
    }
    return out;
}

Tensor gather(Graph& g, const Tensor& table, std::span<const std::int32_t> ids) {
    require_matrix(table, "gather");
    const auto v = table.shape()[0], e = table.shape()[1];
    auto out = Tensor::zeros({ids.size(), e});
    auto ov = out.values();
    const auto tv = table.values();
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= v) {
            throw IndexError(fmt::format("gather: id {} out of range for table of {} rows", ids[r], v));
        }
        std::copy_n(tv.begin() + static_cast<std::size_t>(ids[r]) * e, e, ov.begin() + r * e);
    }
    if (tracks(g, {&table})) {
        out.set_requires_grad(true);
        std::vector<std::int32_t> kept(ids.begin(), ids.end());
        g.record("gather", out, [table, out, kept = std::move(kept), e]() mutable {
            auto dt = table.grad();
            const auto dy = out.grad();
            for (std::size_t r = 0; r < kept.size(); ++r) {
                const auto row = static_cast<std::size_t>(kept[r]) * e;
                for (std::size_t j = 0; j < e; ++j) dt[row + j] += dy[r * e + j];
            }
        });
    }
    return out;
}

Tensor sum(Graph& g, const Tensor& a) {
    double s = 0;
    for (double x : a.values()) s += x;
    auto out = Tensor::scalar(s);
    if (tracks(g, {&a})) {
        out.set_requires_grad(true);
        g.record("sum", out, [a, out]() mutable {
            const double dy = out.grad()[0];
            for (auto& d : a.grad()) d += dy;
        });
    }
    return out;
}

double bce(double p, double y) {
    const double pc = std::clamp(p, kBceEpsilon, 1.0 - kBceEpsilon);
    return -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
}

Tensor bce_mean(Graph& g, const Tensor& probabilities, std::span<const double> labels) {
    if (probabilities.size() != labels.size() || labels.empty()) {
        throw ShapeError(fmt::format("bce_mean: {} probabilities vs {} labels", probabilities.size(), labels.size()));
    }
    const auto pv = probabilities.values();
    double total = 0;
    for (std::size_t i = 0; i < pv.size(); ++i) total += bce(pv[i], labels[i]);
    const double count = static_cast<double>(labels.size());
    auto out = Tensor::scalar(total / count);
    if (tracks(g, {&probabilities})) {
        out.set_requires_grad(true);
        std::vector<double> y(labels.begin(), labels.end());
        g.record("bce_mean", out, [probabilities, out, y = std::move(y), count]() mutable {
            const double dl = out.grad()[0] / count;
            auto dp = probabilities.grad();
            const auto p = probabilities.values();
            for (std::size_t i = 0; i < p.size(); ++i) {
                if (p[i] <= kBceEpsilon || p[i] >= 1.0 - kBceEpsilon) continue;
                dp[i] += dl * (-y[i] / p[i] + (1.0 - y[i]) / (1.0 - p[i]));
            }
        });
    }
    return out;
}

double grad_check(const std::function<Tensor(Graph&)>& loss_fn, std::span<Tensor> params, double eps) {
    for (auto& p : params) {
        p.set_requires_grad(true);
        p.zero_grad();
    }
    std::vector<std::vector<double>> analytic;
    {
        Graph g;
        auto loss = loss_fn(g);
        g.backward(loss);
        for (auto& p : params) {
            const auto gr = p.grad();
            analytic.emplace_back(gr.begin(), gr.end());
        }
    }

    auto evaluate = [&] {
        Graph g(Graph::Mode::inference);
        const double v = loss_fn(g).item();
        if (!std::isfinite(v)) throw NumericError("grad_check: loss is not finite");
        return v;
    };

    double worst = 0;
    for (std::size_t t = 0; t < params.size(); ++t) {
        auto values = params[t].values();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + eps;
            const double up = evaluate();
            values[i] = saved - eps;
            const double down = evaluate();
            values[i] = saved;
            const double numeric = (up - down) / (2 * eps);
            const double a = analytic[t][i];
            if (!std::isfinite(a)) throw NumericError("grad_check: analytic gradient is not finite");
            const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace fakejob::ndgrad
