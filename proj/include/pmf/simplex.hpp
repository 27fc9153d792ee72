#pragma once

#include <span>
#include <vector>

#include "pmf/common.hpp"

// Vector-level simplex geometry: the three projections onto the probability
// simplex, their (generalized) Jacobians, entropy and the entropic objective
// certifying that the softmax projection maximizes <u~, z> + H(z)/beta.

namespace pmf::simplex {

// u_l = exp(beta*u~_l) / sum_m exp(beta*u~_m), max-subtracted.
// All outputs strictly positive; preserves the relative order of the input.
void softmax_project(std::span<const double> u_tilde, double beta,
                     std::span<double> out);
std::vector<double> softmax_project(std::span<const double> u_tilde, double beta);

// argmin_{z in simplex} ||z - beta*u~||^2 via sort-then-threshold.
void sparsemax_project(std::span<const double> u_tilde, double beta,
                       std::span<double> out);
std::vector<double> sparsemax_project(std::span<const double> u_tilde, double beta);

// Vertex at the argmax coordinate; ties broken by the lowest index.
void hardmax_project(std::span<const double> u_tilde, std::span<double> out);
std::vector<double> hardmax_project(std::span<const double> u_tilde);
std::size_t argmax_index(std::span<const double> u_tilde);

// -sum z_l log z_l with 0*log 0 := 0.
double entropy(std::span<const double> z);

// <u~, z> + entropy(z)/beta.
double entropic_objective(std::span<const double> u_tilde,
                          std::span<const double> z, double beta);

// beta * (diag(u) - u u^T) with u = softmax_project(u~, beta). Row-major d*d.
std::vector<double> softmax_jacobian(std::span<const double> u_tilde, double beta);

// beta * (diag(s) - s s^T / |S|) with s the 0/1 support indicator of
// sparsemax_project(u~, beta). A generalized Jacobian at support boundaries.
std::vector<double> sparsemax_jacobian(std::span<const double> u_tilde, double beta);

// Jacobian-vector products used by the training steps (J is symmetric).
// out = J g, computed from the projected point without forming J.
void softmax_backward(std::span<const double> u, double beta,
                      std::span<const double> g, std::span<double> out);
void sparsemax_backward(std::span<const double> u, double beta,
                        std::span<const double> g, std::span<double> out);

}  // namespace pmf::simplex
