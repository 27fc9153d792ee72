#pragma once

#include <span>
#include <string>
#include <vector>

#include "pmf/common.hpp"

// Minimal dense feed-forward engine with manual reverse-mode differentiation.
// All math is f64; forward/backward are deterministic for a fixed batch order
// regardless of thread count (each output element is reduced serially).

namespace pmf::nn {

struct Tensor {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;  // row-major

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }
};

enum class LayerKind { Dense, BatchNorm, ReLU };

struct LayerSpec {
    LayerKind kind;
    std::size_t in = 0, out = 0;  // Dense: in/out; BatchNorm: in == out == features
    bool bias = true;
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    std::size_t class_count = 0;

    std::size_t input_dim() const { return layers.front().in; }
    std::size_t param_count() const;

    // 784-300-100-10 with bias, BatchNorm + ReLU after each hidden Dense.
    static NetworkSpec lenet300();
    // Small MLP for synthetic data: in-hidden-classes, BatchNorm + ReLU.
    static NetworkSpec mlp_small(std::size_t in, std::size_t hidden,
                                 std::size_t classes);
    static NetworkSpec by_name(const std::string& name, std::size_t input_dim,
                               std::size_t classes);
};

// Maps the flat parameter vector onto per-layer weight/bias segments.
struct ParamLayout {
    struct Segment {
        std::size_t layer;   // index into NetworkSpec::layers
        std::size_t offset;  // into the flat vector
        std::size_t length;
        bool is_bias;
    };
    std::vector<Segment> segments;
    std::size_t total = 0;

    static ParamLayout build(const NetworkSpec& spec);
};

struct BatchNormStats {
    std::vector<double> mean, var;
};

enum class Mode { Train, Eval };

// Per-forward cache of everything backward needs.
struct Cache {
    std::vector<Tensor> inputs;         // input to each layer
    std::vector<Tensor> bn_xhat;        // normalized activations per BN layer
    std::vector<BatchNormStats> bn_batch;  // batch statistics per BN layer
    std::size_t batch = 0;
    bool valid = false;
};

class Network {
public:
    explicit Network(NetworkSpec spec);

    const NetworkSpec& spec() const { return spec_; }
    const ParamLayout& layout() const { return layout_; }
    std::size_t param_count() const { return layout_.total; }

    // BatchNorm running statistics (used in Eval mode). No learnable
    // scale/shift; eps = 1e-5, running momentum 0.1.
    void reset_running_stats();
    std::vector<BatchNormStats>& running_stats() { return running_; }
    const std::vector<BatchNormStats>& running_stats() const { return running_; }

    Tensor forward(std::span<const double> params, const Tensor& batch,
                   Mode mode, Cache& cache);
    Tensor forward(std::span<const double> params, const Tensor& batch, Mode mode);

    // Full flat parameter gradient from a matching forward's cache.
    void backward(const Cache& cache, std::span<const double> params,
                  const Tensor& dlogits, std::span<double> grad_out) const;

    static constexpr double kBnEps = 1e-5;
    static constexpr double kBnMomentum = 0.1;

private:
    NetworkSpec spec_;
    ParamLayout layout_;
    std::vector<BatchNormStats> running_;
    std::vector<long> bn_index_;  // layer -> BN slot (-1 otherwise)
};

// Mean over the batch of -log softmax(logits)[label], log-sum-exp guarded.
// Returns the loss and its gradient w.r.t. the logits.
std::pair<double, Tensor> cross_entropy(const Tensor& logits,
                                        std::span<const int> labels);

// Central differences on selected flat coordinates; returns the max relative
// error against backward().
double finite_diff_check(Network& net, std::span<const double> params,
                         const Tensor& batch, std::span<const int> labels,
                         std::span<const std::size_t> coords, double h);

// Dense/BN kernels, exposed for the serial-vs-parallel equivalence tests and
// the benchmark. The omp versions parallelize over independent outputs.
namespace kernels {
// y[b,out] = x[b,in] * w[out,in]^T (+ bias)
void dense_forward(const Tensor& x, std::span<const double> w,
                   std::span<const double> bias, Tensor& y);
void dense_backward(const Tensor& x, std::span<const double> w, const Tensor& dy,
                    Tensor& dx, std::span<double> dw, std::span<double> dbias);
namespace serial {
void dense_forward(const Tensor& x, std::span<const double> w,
                   std::span<const double> bias, Tensor& y);
void dense_backward(const Tensor& x, std::span<const double> w, const Tensor& dy,
                    Tensor& dx, std::span<double> dw, std::span<double> dbias);
}  // namespace serial
}  // namespace kernels

}  // namespace pmf::nn
