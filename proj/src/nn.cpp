#include "pmf/nn.hpp"

#include <algorithm>
#include <cmath>

namespace pmf::nn {

namespace kernels {

namespace {

// Four-lane dot product with a fixed combine order. Both kernel variants use
// this, so their results stay bitwise identical while the lanes vectorize.
inline double dot4(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    double tail = 0.0;
    for (; k < n; ++k) tail += a[k] * b[k];
    return ((s0 + s1) + (s2 + s3)) + tail;
}

}  // namespace

namespace serial {

void dense_forward(const Tensor& x, std::span<const double> w,
                   std::span<const double> bias, Tensor& y) {
    const std::size_t b = x.rows, in = x.cols, out = y.cols;
    for (std::size_t i = 0; i < b; ++i) {
        const double* xi = x.row(i);
        double* yi = y.row(i);
        for (std::size_t j = 0; j < out; ++j) {
            const double* wj = w.data() + j * in;
            const double acc = bias.empty() ? 0.0 : bias[j];
            yi[j] = acc + dot4(xi, wj, in);
        }
    }
}

void dense_backward(const Tensor& x, std::span<const double> w, const Tensor& dy,
                    Tensor& dx, std::span<double> dw, std::span<double> dbias) {
    const std::size_t b = x.rows, in = x.cols, out = dy.cols;
    for (std::size_t i = 0; i < b; ++i) {
        const double* dyi = dy.row(i);
        double* dxi = dx.row(i);
        std::fill(dxi, dxi + in, 0.0);
        for (std::size_t j = 0; j < out; ++j) {
            const double g = dyi[j];
            const double* wj = w.data() + j * in;
            for (std::size_t k = 0; k < in; ++k) dxi[k] += g * wj[k];
        }
    }
    for (std::size_t j = 0; j < out; ++j) {
        double* dwj = dw.data() + j * in;
        std::fill(dwj, dwj + in, 0.0);
        for (std::size_t i = 0; i < b; ++i) {
            const double g = dy.row(i)[j];
            const double* xi = x.row(i);
            for (std::size_t k = 0; k < in; ++k) dwj[k] += g * xi[k];
        }
        if (!dbias.empty()) {
            double acc = 0.0;
            for (std::size_t i = 0; i < b; ++i) acc += dy.row(i)[j];
            dbias[j] = acc;
        }
    }
}

}  // namespace serial

// Parallel over independent output elements; each element is reduced in a
// fixed serial order, so results are bitwise identical to the serial kernels.
void dense_forward(const Tensor& x, std::span<const double> w,
                   std::span<const double> bias, Tensor& y) {
    const std::size_t b = x.rows, in = x.cols, out = y.cols;
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(b); ++i) {
        const double* xi = x.row(static_cast<std::size_t>(i));
        double* yi = y.row(static_cast<std::size_t>(i));
        for (std::size_t j = 0; j < out; ++j) {
            const double* wj = w.data() + j * in;
            const double acc = bias.empty() ? 0.0 : bias[j];
            yi[j] = acc + dot4(xi, wj, in);
        }
    }
}

void dense_backward(const Tensor& x, std::span<const double> w, const Tensor& dy,
                    Tensor& dx, std::span<double> dw, std::span<double> dbias) {
    const std::size_t b = x.rows, in = x.cols, out = dy.cols;
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(b); ++i) {
        const double* dyi = dy.row(static_cast<std::size_t>(i));
        double* dxi = dx.row(static_cast<std::size_t>(i));
        std::fill(dxi, dxi + in, 0.0);
        for (std::size_t j = 0; j < out; ++j) {
            const double g = dyi[j];
            const double* wj = w.data() + j * in;
            for (std::size_t k = 0; k < in; ++k) dxi[k] += g * wj[k];
        }
    }
#pragma omp parallel for schedule(static)
    for (long j = 0; j < static_cast<long>(out); ++j) {
        double* dwj = dw.data() + static_cast<std::size_t>(j) * in;
        std::fill(dwj, dwj + in, 0.0);
        for (std::size_t i = 0; i < b; ++i) {
            const double g = dy.row(i)[static_cast<std::size_t>(j)];
            const double* xi = x.row(i);
            for (std::size_t k = 0; k < in; ++k) dwj[k] += g * xi[k];
        }
        if (!dbias.empty()) {
            double acc = 0.0;
            for (std::size_t i = 0; i < b; ++i) acc += dy.row(i)[static_cast<std::size_t>(j)];
            dbias[static_cast<std::size_t>(j)] = acc;
        }
    }
}

}  // namespace kernels

std::size_t NetworkSpec::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers)
        if (l.kind == LayerKind::Dense) n += l.in * l.out + (l.bias ? l.out : 0);
    return n;
}

NetworkSpec NetworkSpec::lenet300() {
    NetworkSpec s;
    s.class_count = 10;
    s.layers = {
        {LayerKind::Dense, 784, 300, true}, {LayerKind::BatchNorm, 300, 300},
        {LayerKind::ReLU, 300, 300},        {LayerKind::Dense, 300, 100, true},
        {LayerKind::BatchNorm, 100, 100},   {LayerKind::ReLU, 100, 100},
        {LayerKind::Dense, 100, 10, true},
    };
    return s;
}

NetworkSpec NetworkSpec::mlp_small(std::size_t in, std::size_t hidden,
                                   std::size_t classes) {
    NetworkSpec s;
    s.class_count = classes;
    s.layers = {
        {LayerKind::Dense, in, hidden, true},
        {LayerKind::BatchNorm, hidden, hidden},
        {LayerKind::ReLU, hidden, hidden},
        {LayerKind::Dense, hidden, classes, true},
    };
    return s;
}

NetworkSpec NetworkSpec::by_name(const std::string& name, std::size_t input_dim,
                                 std::size_t classes) {
    if (name == "lenet300") return lenet300();
    if (name == "mlp_small") return mlp_small(input_dim, 32, classes);
    throw std::invalid_argument("unknown architecture: " + name);
}

ParamLayout ParamLayout::build(const NetworkSpec& spec) {
    ParamLayout layout;
    std::size_t off = 0;
    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        const auto& l = spec.layers[li];
        if (l.kind != LayerKind::Dense) continue;
        layout.segments.push_back({li, off, l.in * l.out, false});
        off += l.in * l.out;
        if (l.bias) {
            layout.segments.push_back({li, off, l.out, true});
            off += l.out;
        }
    }
    layout.total = off;
    return layout;
}

Network::Network(NetworkSpec spec)
    : spec_(std::move(spec)), layout_(ParamLayout::build(spec_)) {
    for (std::size_t i = 0; i + 1 < spec_.layers.size(); ++i)
        if (spec_.layers[i].out != spec_.layers[i + 1].in)
            throw ShapeError("NetworkSpec: adjacent layer dimensions do not chain");
    bn_index_.assign(spec_.layers.size(), -1);
    for (std::size_t i = 0; i < spec_.layers.size(); ++i)
        if (spec_.layers[i].kind == LayerKind::BatchNorm) {
            bn_index_[i] = static_cast<long>(running_.size());
            running_.push_back({std::vector<double>(spec_.layers[i].in, 0.0),
                                std::vector<double>(spec_.layers[i].in, 1.0)});
        }
}

void Network::reset_running_stats() {
    for (auto& s : running_) {
        std::fill(s.mean.begin(), s.mean.end(), 0.0);
        std::fill(s.var.begin(), s.var.end(), 1.0);
    }
}

Tensor Network::forward(std::span<const double> params, const Tensor& batch,
                        Mode mode, Cache& cache) {
    if (params.size() != layout_.total)
        throw ShapeError("forward: wrong parameter vector length");
    if (batch.cols != spec_.input_dim())
        throw ShapeError("forward: wrong input dimension");
    cache.inputs.clear();
    cache.bn_xhat.clear();
    cache.bn_batch.clear();
    cache.batch = batch.rows;
    cache.valid = true;

    Tensor cur = batch;
    std::size_t seg = 0;
    for (std::size_t li = 0; li < spec_.layers.size(); ++li) {
        const auto& l = spec_.layers[li];
        cache.inputs.push_back(cur);
        if (l.kind == LayerKind::Dense) {
            const auto& wseg = layout_.segments[seg++];
            std::span<const double> w = params.subspan(wseg.offset, wseg.length);
            std::span<const double> bias;
            if (l.bias) {
                const auto& bseg = layout_.segments[seg++];
                bias = params.subspan(bseg.offset, bseg.length);
            }
            Tensor y(cur.rows, l.out);
            kernels::dense_forward(cur, w, bias, y);
            cur = std::move(y);
        } else if (l.kind == LayerKind::ReLU) {
            for (double& v : cur.data) v = std::max(v, 0.0);
        } else {  // BatchNorm
            const std::size_t f = l.in, b = cur.rows;
            BatchNormStats stats;
            if (mode == Mode::Train) {
                stats.mean.assign(f, 0.0);
                stats.var.assign(f, 0.0);
#pragma omp parallel for schedule(static)
                for (long c = 0; c < static_cast<long>(f); ++c) {
                    double mu = 0.0;
                    for (std::size_t i = 0; i < b; ++i) mu += cur.row(i)[c];
                    mu /= static_cast<double>(b);
                    double var = 0.0;
                    for (std::size_t i = 0; i < b; ++i) {
                        const double dev = cur.row(i)[c] - mu;
                        var += dev * dev;
                    }
                    var /= static_cast<double>(b);
                    stats.mean[static_cast<std::size_t>(c)] = mu;
                    stats.var[static_cast<std::size_t>(c)] = var;
                }
                auto& run = running_[static_cast<std::size_t>(bn_index_[li])];
                for (std::size_t c = 0; c < f; ++c) {
                    run.mean[c] = (1.0 - kBnMomentum) * run.mean[c] + kBnMomentum * stats.mean[c];
                    run.var[c] = (1.0 - kBnMomentum) * run.var[c] + kBnMomentum * stats.var[c];
                }
            } else {
                stats = running_[static_cast<std::size_t>(bn_index_[li])];
            }
            Tensor xhat(b, f);
#pragma omp parallel for schedule(static)
            for (long c = 0; c < static_cast<long>(f); ++c) {
                const double mu = stats.mean[static_cast<std::size_t>(c)];
                const double ivar =
                    1.0 / std::sqrt(stats.var[static_cast<std::size_t>(c)] + kBnEps);
                for (std::size_t i = 0; i < b; ++i)
                    xhat.row(i)[c] = (cur.row(i)[c] - mu) * ivar;
            }
            cache.bn_batch.push_back(std::move(stats));
            cache.bn_xhat.push_back(xhat);
            cur = std::move(xhat);
        }
    }
    return cur;
}

Tensor Network::forward(std::span<const double> params, const Tensor& batch, Mode mode) {
    Cache cache;
    return forward(params, batch, mode, cache);
}

void Network::backward(const Cache& cache, std::span<const double> params,
                       const Tensor& dlogits, std::span<double> grad_out) const {
    if (!cache.valid) throw std::logic_error("backward: stale or missing cache");
    if (grad_out.size() != layout_.total)
        throw ShapeError("backward: wrong gradient vector length");
    Tensor dcur = dlogits;
    std::size_t seg = layout_.segments.size();
    std::size_t bn = cache.bn_batch.size();
    for (std::size_t li = spec_.layers.size(); li-- > 0;) {
        const auto& l = spec_.layers[li];
        const Tensor& x = cache.inputs[li];
        if (l.kind == LayerKind::Dense) {
            std::span<double> dbias;
            if (l.bias) {
                const auto& bseg = layout_.segments[--seg];
                dbias = grad_out.subspan(bseg.offset, bseg.length);
            }
            const auto& wseg = layout_.segments[--seg];
            std::span<const double> w = params.subspan(wseg.offset, wseg.length);
            Tensor dx(x.rows, l.in);
            kernels::dense_backward(x, w, dcur, dx,
                                    grad_out.subspan(wseg.offset, wseg.length), dbias);
            dcur = std::move(dx);
        } else if (l.kind == LayerKind::ReLU) {
            for (std::size_t i = 0; i < dcur.data.size(); ++i)
                if (x.data[i] <= 0.0) dcur.data[i] = 0.0;
        } else {  // BatchNorm (train-mode statistics)
            --bn;
            const auto& stats = cache.bn_batch[bn];
            const std::size_t f = l.in, b = x.rows;
            const double invb = 1.0 / static_cast<double>(b);
            Tensor dx(b, f);
#pragma omp parallel for schedule(static)
            for (long c = 0; c < static_cast<long>(f); ++c) {
                const std::size_t cc = static_cast<std::size_t>(c);
                const double mu = stats.mean[cc];
                const double ivar = 1.0 / std::sqrt(stats.var[cc] + kBnEps);
                double sum_dy = 0.0, sum_dy_dev = 0.0;
                for (std::size_t i = 0; i < b; ++i) {
                    sum_dy += dcur.row(i)[cc];
                    sum_dy_dev += dcur.row(i)[cc] * (x.row(i)[cc] - mu);
                }
                const double dvar = sum_dy_dev * (-0.5) * ivar * ivar * ivar;
                const double dmu = -sum_dy * ivar;
                for (std::size_t i = 0; i < b; ++i) {
                    const double dev = x.row(i)[cc] - mu;
                    dx.row(i)[cc] = dcur.row(i)[cc] * ivar + dvar * 2.0 * dev * invb +
                                    dmu * invb;
                }
            }
            dcur = std::move(dx);
        }
    }
}

std::pair<double, Tensor> cross_entropy(const Tensor& logits,
                                        std::span<const int> labels) {
    const std::size_t b = logits.rows, c = logits.cols;
    if (labels.size() != b) throw ShapeError("cross_entropy: label count mismatch");
    Tensor dlogits(b, c);
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= c)
            throw std::out_of_range("cross_entropy: label out of range");
        const double* zi = logits.row(i);
        double mx = zi[0];
        for (std::size_t k = 1; k < c; ++k) mx = std::max(mx, zi[k]);
        double sum = 0.0;
        for (std::size_t k = 0; k < c; ++k) sum += std::exp(zi[k] - mx);
        const double lse = mx + std::log(sum);
        loss += lse - zi[y];
        double* di = dlogits.row(i);
        for (std::size_t k = 0; k < c; ++k)
            di[k] = std::exp(zi[k] - lse) / static_cast<double>(b);
        di[y] -= 1.0 / static_cast<double>(b);
    }
    return {loss / static_cast<double>(b), std::move(dlogits)};
}

double finite_diff_check(Network& net, std::span<const double> params,
                         const Tensor& batch, std::span<const int> labels,
                         std::span<const std::size_t> coords, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: h must be > 0");
    std::vector<double> p(params.begin(), params.end());
    Cache cache;
    auto run_stats = net.running_stats();  // keep stats unchanged by the probes
    Tensor logits = net.forward(p, batch, Mode::Train, cache);
    auto [loss, dlogits] = cross_entropy(logits, labels);
    (void)loss;
    std::vector<double> grad(p.size(), 0.0);
    net.backward(cache, p, dlogits, grad);

    double max_rel = 0.0;
    for (std::size_t c : coords) {
        const double orig = p[c];
        p[c] = orig + h;
        net.running_stats() = run_stats;
        const double lp = cross_entropy(net.forward(p, batch, Mode::Train), labels).first;
        p[c] = orig - h;
        net.running_stats() = run_stats;
        const double lm = cross_entropy(net.forward(p, batch, Mode::Train), labels).first;
        p[c] = orig;
        const double fd = (lp - lm) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(grad[c]), 1e-3});
        max_rel = std::max(max_rel, std::abs(fd - grad[c]) / denom);
    }
    net.running_stats() = run_stats;
    return max_rel;
}

}  // namespace pmf::nn
