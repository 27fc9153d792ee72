#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pmf/common.hpp"

// The w <-> u lifting: each scalar weight becomes a probability row over the
// quantization levels, with w_j = <u_j, q>. Also the straight-through
// estimators for the binary case and the bit-packed weight format.

namespace pmf {

// Ordered discrete level set Q as a strictly ascending vector q.
struct QuantLevels {
    std::vector<double> q;

    explicit QuantLevels(std::vector<double> levels);
    std::size_t d() const { return q.size(); }
    double qmin() const { return q.front(); }
    double qmax() const { return q.back(); }
    bool binary() const { return q.size() == 2 && q[0] == -1.0 && q[1] == 1.0; }
};

// Row-stochastic m x d field, one probability row per learnable parameter.
struct SimplexField {
    std::size_t m = 0, d = 0;
    std::vector<double> p;  // row-major

    SimplexField() = default;
    SimplexField(std::size_t m_, std::size_t d_) : m(m_), d(d_), p(m_ * d_, 0.0) {}
    std::span<double> row(std::size_t j) { return {p.data() + j * d, d}; }
    std::span<const double> row(std::size_t j) const { return {p.data() + j * d, d}; }
    // Checks row-stochasticity to `tol`; throws on violation.
    void validate(double tol = 1e-9) const;
};

// Unconstrained m x d auxiliary logits.
struct AuxField {
    std::size_t m = 0, d = 0;
    std::vector<double> a;

    AuxField() = default;
    AuxField(std::size_t m_, std::size_t d_) : m(m_), d(d_), a(m_ * d_, 0.0) {}
    std::span<double> row(std::size_t j) { return {a.data() + j * d, d}; }
    std::span<const double> row(std::size_t j) const { return {a.data() + j * d, d}; }
};

// Level indices plus their level set; decoded weights lie in Q by construction.
struct QuantizedWeights {
    QuantLevels levels;
    std::vector<std::uint32_t> level_index;

    std::size_t m() const { return level_index.size(); }
    std::vector<double> decode() const;
};

// w_j = <u_j, q> for every row: the expectation of the level value.
std::vector<double> collapse(const SimplexField& u, const QuantLevels& levels);
void collapse(const SimplexField& u, const QuantLevels& levels, std::span<double> w);

// Chain rule between spaces: row j of the output is g_w[j] * q^T.
void lift_gradient(std::span<const double> g_w, const QuantLevels& levels,
                   AuxField& g_u);

// Straight-through estimator for sign: 1[|w~| <= 1], boundary inclusive.
double ste_sign_jacobian(double w_tilde);

// STE through hardmax for d = 2: (i/2) * [[1,-1],[-1,1]] with
// i = 1[|u~_0 - u~_1| <= 1].
std::array<double, 4> ste_hardmax_jacobian_binary(std::span<const double> u_tilde_row);

// Bit-packed serialization. Header: magic "PQW1", u32 LE m, u16 LE d,
// d x f64 LE levels; payload: indices at ceil(log2 d) bits each,
// LSB-first within bytes.
std::vector<std::uint8_t> pack_quantized(const QuantizedWeights& w);
QuantizedWeights unpack_quantized(std::span<const std::uint8_t> bytes);

void save_pqw(const QuantizedWeights& w, const std::string& path);
QuantizedWeights load_pqw(const std::string& path);

std::size_t packed_bits_per_index(std::size_t d);

}  // namespace pmf
