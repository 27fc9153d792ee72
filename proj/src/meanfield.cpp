#include "pmf/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pmf/simplex.hpp"

namespace pmf::meanfield {

namespace {

constexpr std::size_t kMaxConfigs = 1'000'000;

std::size_t checked_configs(std::size_t m, std::size_t d) {
    std::size_t n = 1;
    for (std::size_t j = 0; j < m; ++j) {
        if (n > kMaxConfigs / d)
            throw SizeError("DiscreteEnergy: d^m exceeds the enumeration cap (1e6)");
        n *= d;
    }
    return n;
}

}  // namespace

DiscreteEnergy::DiscreteEnergy(std::size_t m_, std::size_t d_, std::vector<double> table_)
    : m(m_), d(d_), table(std::move(table_)) {
    if (m < 1 || d < 2) throw std::invalid_argument("DiscreteEnergy: need m >= 1, d >= 2");
    const std::size_t n = checked_configs(m, d);
    if (table.size() != n)
        throw ShapeError("DiscreteEnergy: table length must be exactly d^m");
    require_finite(table, "DiscreteEnergy");
}

double DiscreteEnergy::at(const std::vector<std::size_t>& w) const {
    std::size_t idx = 0;
    for (std::size_t j = 0; j < m; ++j) idx = idx * d + w[j];
    return table[idx];
}

GibbsDistribution::GibbsDistribution(DiscreteEnergy e) : energy(std::move(e)), logZ(0.0) {
    double mn = *std::min_element(energy.table.begin(), energy.table.end());
    double sum = 0.0;
    for (double L : energy.table) sum += std::exp(-(L - mn));
    logZ = std::log(sum) - mn;
}

double exact_expectation(const DiscreteEnergy& energy, const SimplexField& u) {
    if (u.m != energy.m || u.d != energy.d)
        throw ShapeError("exact_expectation: field/energy shape mismatch");
    const std::size_t m = energy.m, d = energy.d;
    double total = 0.0;
    std::vector<std::size_t> w(m, 0);
    for (std::size_t idx = 0; idx < energy.table.size(); ++idx) {
        double prob = 1.0;
        std::size_t rem = idx;
        for (std::size_t j = m; j-- > 0;) {
            w[j] = rem % d;
            rem /= d;
        }
        for (std::size_t j = 0; j < m; ++j) prob *= u.row(j)[w[j]];
        total += prob * energy.table[idx];
    }
    return total;
}

double kl_to_gibbs(const DiscreteEnergy& energy, const SimplexField& u) {
    GibbsDistribution gibbs(energy);
    double h = 0.0;
    for (std::size_t j = 0; j < u.m; ++j) h += simplex::entropy(u.row(j));
    return exact_expectation(energy, u) - h + gibbs.logZ;
}

double mean_field_objective(const DiscreteEnergy& energy, const SimplexField& u) {
    double h = 0.0;
    for (std::size_t j = 0; j < u.m; ++j) h += simplex::entropy(u.row(j));
    return exact_expectation(energy, u) - h;
}

SimplexField mean_field_fixed_point_update(const DiscreteEnergy& energy,
                                           const SimplexField& u, std::size_t j) {
    if (j >= u.m) throw std::invalid_argument("mean_field_fixed_point_update: bad index");
    const std::size_t m = energy.m, d = energy.d;
    // dE/du_{j:l}: expectation of L over the other rows with w_j pinned to l.
    std::vector<double> grad(d, 0.0);
    std::vector<std::size_t> w(m, 0);
    for (std::size_t idx = 0; idx < energy.table.size(); ++idx) {
        std::size_t rem = idx;
        for (std::size_t i = m; i-- > 0;) {
            w[i] = rem % d;
            rem /= d;
        }
        double prob = 1.0;
        for (std::size_t i = 0; i < m; ++i)
            if (i != j) prob *= u.row(i)[w[i]];
        grad[w[j]] += prob * energy.table[idx];
    }
    SimplexField out = u;
    std::vector<double> neg(d);
    for (std::size_t l = 0; l < d; ++l) neg[l] = -grad[l];
    simplex::softmax_project(neg, 1.0, out.row(j));
    return out;
}

std::pair<std::vector<std::size_t>, double> brute_force_min(const DiscreteEnergy& energy) {
    std::size_t best = 0;
    for (std::size_t idx = 1; idx < energy.table.size(); ++idx)
        if (energy.table[idx] < energy.table[best]) best = idx;
    std::vector<std::size_t> w(energy.m);
    std::size_t rem = best;
    for (std::size_t j = energy.m; j-- > 0;) {
        w[j] = rem % energy.d;
        rem /= energy.d;
    }
    return {w, energy.table[best]};
}

double proximal_objective(std::span<const double> u_k, std::span<const double> g,
                          double eta, double beta, std::span<const double> u) {
    double obj = 0.0;
    for (std::size_t l = 0; l < u.size(); ++l)
        obj += eta * g[l] * u[l] - u_k[l] * u[l];
    if (beta > 0.0) obj -= simplex::entropy(u) / beta;
    return obj;
}

std::pair<std::vector<double>, double> grid_argmin_proximal_objective(
    std::span<const double> u_k, std::span<const double> g, double eta,
    double beta, double grid_step) {
    const std::size_t d = u_k.size();
    if (d != 2 && d != 3)
        throw SizeError("grid_argmin_proximal_objective: only d in {2,3}");
    if (!(grid_step > 0.0 && grid_step <= 1e-2))
        throw std::invalid_argument("grid_argmin_proximal_objective: grid_step must be in (0, 1e-2]");
    const long n = std::lround(1.0 / grid_step);
    const double s = 1.0 / static_cast<double>(n);
    std::vector<double> best(d, 0.0);
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> z(d);
    if (d == 2) {
        for (long i = 0; i <= n; ++i) {
            z[0] = static_cast<double>(i) * s;
            z[1] = 1.0 - z[0];
            const double v = proximal_objective(u_k, g, eta, beta, z);
            if (v < best_val) {
                best_val = v;
                best = z;
            }
        }
    } else {
        for (long i = 0; i <= n; ++i) {
            for (long jj = 0; jj <= n - i; ++jj) {
                z[0] = static_cast<double>(i) * s;
                z[1] = static_cast<double>(jj) * s;
                z[2] = 1.0 - z[0] - z[1];
                if (z[2] < 0.0) z[2] = 0.0;
                const double v = proximal_objective(u_k, g, eta, beta, z);
                if (v < best_val) {
                    best_val = v;
                    best = z;
                }
            }
        }
    }
    return {best, best_val};
}

}  // namespace pmf::meanfield
