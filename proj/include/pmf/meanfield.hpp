#pragma once

#include <utility>
#include <vector>

#include "pmf/quant.hpp"

// Exact mean-field machinery on tiny explicit energy tables, plus the grid
// oracle over the simplex used to certify the closed-form proximal updates.
// Everything here is deliberately brute-force; size caps are enforced loudly.

namespace pmf::meanfield {

// Explicit loss table over Q^m, row-major over label tuples with w_0 the
// most significant digit (so ascending table index is lexicographic order).
struct DiscreteEnergy {
    std::size_t m = 0, d = 0;
    std::vector<double> table;

    DiscreteEnergy(std::size_t m_, std::size_t d_, std::vector<double> table_);
    std::size_t configs() const { return table.size(); }
    double at(const std::vector<std::size_t>& w) const;
};

struct GibbsDistribution {
    DiscreteEnergy energy;
    double logZ;  // log sum_w exp(-L(w))

    explicit GibbsDistribution(DiscreteEnergy e);
};

// E(u) = sum_w prod_j u_{j:w_j} L(w) by explicit enumeration.
double exact_expectation(const DiscreteEnergy& energy, const SimplexField& u);

// KL(u || Gibbs) = E(u) - sum_j H(u_j) + logZ. Nonnegative; zero iff u
// factorizes the Gibbs distribution exactly.
double kl_to_gibbs(const DiscreteEnergy& energy, const SimplexField& u);

// Mean-field objective F(u) = E(u) - H(u).
double mean_field_objective(const DiscreteEnergy& energy, const SimplexField& u);

// Replaces row j with softmax(-dE/du_j); dE/du_{j:l} is computed by
// enumeration with row j pinned to l.
SimplexField mean_field_fixed_point_update(const DiscreteEnergy& energy,
                                           const SimplexField& u, std::size_t j);

// Exhaustive minimum; ties broken lexicographically.
std::pair<std::vector<std::size_t>, double> brute_force_min(const DiscreteEnergy& energy);

// Evaluates eta*<g,u> - <u_k,u> - H(u)/beta over a simplex grid (d in {2,3};
// barycentric lattice for d = 3) and returns the grid argmin and value.
std::pair<std::vector<double>, double> grid_argmin_proximal_objective(
    std::span<const double> u_k, std::span<const double> g, double eta,
    double beta, double grid_step);

// The same objective at an arbitrary point (beta <= 0 drops the entropy term,
// giving the ICM objective of the hardmax update).
double proximal_objective(std::span<const double> u_k, std::span<const double> g,
                          double eta, double beta, std::span<const double> u);

}  // namespace pmf::meanfield
