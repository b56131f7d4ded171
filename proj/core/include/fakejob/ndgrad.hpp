#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

// Dense float64 tensors with tape-based reverse-mode differentiation.
//
// A Tensor is a shared handle: copies alias the same storage, which is what
// parameters need (the model, the optimizer and the tape all see one buffer).
// Use clone() for an independent copy.
//
// Every op takes the Graph it records into. When no input requires a
// gradient, or the graph is in inference mode, nothing is recorded and the
// op is a plain forward computation.
namespace fakejob::ndgrad {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t element_count(const Shape& shape);

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const noexcept { return static_cast<bool>(data_); }
    const Shape& shape() const { return data_->shape; }
    std::size_t rank() const { return data_->shape.size(); }
    std::size_t size() const { return data_->values.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<double> values() { return data_->values; }
    std::span<const double> values() const { return data_->values; }
    double item() const;

    bool requires_grad() const { return data_->requires_grad; }
    void set_requires_grad(bool on) { data_->requires_grad = on; }

    /// Gradient buffer, allocated (zero-filled) on first access. Tensors are
    /// handles, so a const handle still hands out the shared buffer.
    std::span<double> grad() const;
    bool has_grad() const { return !data_->grad.empty() || data_->values.empty(); }
    void zero_grad();
    void release_grad();

    /// Deep copy of shape and values; the copy has no gradient.
    Tensor clone() const;

    bool same_storage(const Tensor& other) const noexcept { return data_ == other.data_; }

private:
    struct Storage {
        Shape shape;
        std::vector<double> values;
        std::vector<double> grad;
        bool requires_grad = false;
    };

    explicit Tensor(std::shared_ptr<Storage> s) : data_(std::move(s)) {}

    std::shared_ptr<Storage> data_;
};

// Operation tape. Confined to one thread; independent graphs may run on
// separate threads.
class Graph {
public:
    enum class Mode { training, inference };

    explicit Graph(Mode mode = Mode::training) : mode_(mode) {}
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    bool recording() const noexcept { return mode_ == Mode::training; }

    /// Appends a node. `backward` reads output.grad() and accumulates into
    /// the inputs' gradients.
    void record(const char* op, Tensor output, std::function<void()> backward);

    /// Seeds d(loss)/d(loss) = 1 and runs every recorded rule in reverse
    /// order. Leaf tensors accumulate (+=); intermediate gradients are
    /// released once consumed. Throws ContractError if loss is not a scalar.
    void backward(Tensor& loss);

    std::size_t size() const noexcept { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    struct Node {
        const char* op;
        Tensor output;
        std::function<void()> backward;
    };

    Mode mode_;
    std::vector<Node> nodes_;
};

enum class Activation { sigmoid, tanh, relu };

Tensor matmul(Graph& g, const Tensor& a, const Tensor& b);     // [m×k]·[k×n]
Tensor matmul_bt(Graph& g, const Tensor& a, const Tensor& b);  // [m×k]·[n×k]ᵀ
Tensor add(Graph& g, const Tensor& a, const Tensor& b);
/// [m×n] + bias broadcast over rows; bias is [n] or [1×n].
Tensor add_row(Graph& g, const Tensor& a, const Tensor& bias);
Tensor mul(Graph& g, const Tensor& a, const Tensor& b);
Tensor scale(Graph& g, const Tensor& a, double factor);
Tensor activation(Graph& g, Activation kind, const Tensor& x);
Tensor concat_cols(Graph& g, const Tensor& a, const Tensor& b);
Tensor slice_cols(Graph& g, const Tensor& a, std::size_t begin, std::size_t end);
Tensor slice_rows(Graph& g, const Tensor& a, std::size_t begin, std::size_t end);
Tensor stack_rows(Graph& g, std::span<const Tensor> parts);
Tensor gather(Graph& g, const Tensor& table, std::span<const std::int32_t> ids);
Tensor sum(Graph& g, const Tensor& a);

inline constexpr double kBceEpsilon = 1e-12;

/// −[y·ln p + (1−y)·ln(1−p)] with p clamped to [ε, 1−ε].
double bce(double p, double y);
/// Mean BCE over a column of probabilities.
Tensor bce_mean(Graph& g, const Tensor& probabilities, std::span<const double> labels);

double sigmoid(double x);

/// Max relative error |a−n| / max(1, |a|, |n|) between the tape gradient of
/// `loss_fn` and central differences, over every coordinate of `params`.
double grad_check(const std::function<Tensor(Graph&)>& loss_fn, std::span<Tensor> params, double eps = 1e-4);

}  // namespace fakejob::ndgrad
