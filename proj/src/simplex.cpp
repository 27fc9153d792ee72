#include "pmf/simplex.hpp"

#include <algorithm>
#include <cmath>

namespace pmf::simplex {

namespace {

void check_input(std::span<const double> u_tilde, double beta) {
    if (u_tilde.size() < 2)
        throw std::invalid_argument("simplex projection needs d >= 2");
    require_finite(u_tilde, "simplex projection");
    if (!(beta > 0.0))
        throw std::domain_error("simplex projection: beta must be > 0");
}

}  // namespace

void softmax_project(std::span<const double> u_tilde, double beta,
                     std::span<double> out) {
    check_input(u_tilde, beta);
    const std::size_t d = u_tilde.size();
    double mx = u_tilde[0];
    for (std::size_t l = 1; l < d; ++l) mx = std::max(mx, u_tilde[l]);
    double sum = 0.0;
    for (std::size_t l = 0; l < d; ++l) {
        out[l] = std::exp(beta * (u_tilde[l] - mx));
        sum += out[l];
    }
    const double inv = 1.0 / sum;
    for (std::size_t l = 0; l < d; ++l) out[l] *= inv;
}

std::vector<double> softmax_project(std::span<const double> u_tilde, double beta) {
    std::vector<double> out(u_tilde.size());
    softmax_project(u_tilde, beta, out);
    return out;
}

void sparsemax_project(std::span<const double> u_tilde, double beta,
                       std::span<double> out) {
    check_input(u_tilde, beta);
    const std::size_t d = u_tilde.size();
    std::vector<double> v(d);
    for (std::size_t l = 0; l < d; ++l) v[l] = beta * u_tilde[l];
    std::vector<double> sorted(v);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double cumsum = 0.0, tau = 0.0;
    std::size_t support = 0;
    for (std::size_t k = 0; k < d; ++k) {
        cumsum += sorted[k];
        const double cand = (cumsum - 1.0) / static_cast<double>(k + 1);
        if (sorted[k] > cand) {
            tau = cand;
            support = k + 1;
        }
    }
    (void)support;
    for (std::size_t l = 0; l < d; ++l) out[l] = std::max(v[l] - tau, 0.0);
}

std::vector<double> sparsemax_project(std::span<const double> u_tilde, double beta) {
    std::vector<double> out(u_tilde.size());
    sparsemax_project(u_tilde, beta, out);
    return out;
}

std::size_t argmax_index(std::span<const double> u_tilde) {
    std::size_t best = 0;
    for (std::size_t l = 1; l < u_tilde.size(); ++l)
        if (u_tilde[l] > u_tilde[best]) best = l;
    return best;
}

void hardmax_project(std::span<const double> u_tilde, std::span<double> out) {
    if (u_tilde.size() < 2)
        throw std::invalid_argument("hardmax needs d >= 2");
    require_finite(u_tilde, "hardmax");
    std::fill(out.begin(), out.end(), 0.0);
    out[argmax_index(u_tilde)] = 1.0;
}

std::vector<double> hardmax_project(std::span<const double> u_tilde) {
    std::vector<double> out(u_tilde.size());
    hardmax_project(u_tilde, out);
    return out;
}

double entropy(std::span<const double> z) {
    double h = 0.0;
    for (double p : z)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

double entropic_objective(std::span<const double> u_tilde,
                          std::span<const double> z, double beta) {
    double dot = 0.0;
    for (std::size_t l = 0; l < z.size(); ++l) dot += u_tilde[l] * z[l];
    return dot + entropy(z) / beta;
}

std::vector<double> softmax_jacobian(std::span<const double> u_tilde, double beta) {
    const std::size_t d = u_tilde.size();
    std::vector<double> u = softmax_project(u_tilde, beta);
    std::vector<double> jac(d * d);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
            jac[a * d + b] = beta * (((a == b) ? u[a] : 0.0) - u[a] * u[b]);
    return jac;
}

std::vector<double> sparsemax_jacobian(std::span<const double> u_tilde, double beta) {
    const std::size_t d = u_tilde.size();
    std::vector<double> u = sparsemax_project(u_tilde, beta);
    std::vector<double> s(d, 0.0);
    double size = 0.0;
    for (std::size_t l = 0; l < d; ++l)
        if (u[l] > 0.0) {
            s[l] = 1.0;
            size += 1.0;
        }
    std::vector<double> jac(d * d);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
            jac[a * d + b] = beta * (((a == b) ? s[a] : 0.0) - s[a] * s[b] / size);
    return jac;
}

void softmax_backward(std::span<const double> u, double beta,
                      std::span<const double> g, std::span<double> out) {
    double dot = 0.0;
    for (std::size_t l = 0; l < u.size(); ++l) dot += u[l] * g[l];
    for (std::size_t l = 0; l < u.size(); ++l) out[l] = beta * u[l] * (g[l] - dot);
}

void sparsemax_backward(std::span<const double> u, double beta,
                        std::span<const double> g, std::span<double> out) {
    double sum = 0.0, size = 0.0;
    for (std::size_t l = 0; l < u.size(); ++l)
        if (u[l] > 0.0) {
            sum += g[l];
            size += 1.0;
        }
    const double mean = sum / size;
    for (std::size_t l = 0; l < u.size(); ++l)
        out[l] = (u[l] > 0.0) ? beta * (g[l] - mean) : 0.0;
}

}  // namespace pmf::simplex
