#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "pmf/meanfield.hpp"
#include "pmf/simplex.hpp"

using namespace pmf;
using namespace pmf::meanfield;

namespace {

// Separable energy: L(w) = sum_j theta[j][w_j], w_0 most significant.
DiscreteEnergy separable(const std::vector<std::vector<double>>& theta) {
    const std::size_t m = theta.size(), d = theta[0].size();
    std::size_t n = 1;
    for (std::size_t j = 0; j < m; ++j) n *= d;
    std::vector<double> table(n, 0.0);
    for (std::size_t idx = 0; idx < n; ++idx) {
        std::size_t rest = idx;
        for (std::size_t j = m; j-- > 0;) {
            table[idx] += theta[j][rest % d];
            rest /= d;
        }
    }
    return DiscreteEnergy(m, d, std::move(table));
}

SimplexField random_field(std::size_t m, std::size_t d, std::mt19937_64& rng) {
    std::exponential_distribution<double> e(1.0);
    SimplexField u(m, d);
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        auto r = u.row(j);
        for (auto& v : r) s += (v = e(rng));
        for (auto& v : r) v /= s;
    }
    return u;
}

}  // namespace

TEST_CASE("energy table validation and size cap") {
    CHECK_THROWS_AS(DiscreteEnergy(2, 2, {0.0, 1.0, 2.0}), ShapeError);
    CHECK_THROWS_AS(DiscreteEnergy(12, 4, std::vector<double>(16, 0.0)),
                    SizeError);
}

TEST_CASE("exact_expectation examples") {
    DiscreteEnergy e(2, 2, {0.0, 1.0, 2.0, 3.0});

    SimplexField vertex(2, 2);
    vertex.row(0)[1] = 1.0;  // w_0 = 1
    vertex.row(1)[0] = 1.0;  // w_1 = 0
    CHECK(exact_expectation(e, vertex) == doctest::Approx(2.0).epsilon(1e-15));

    SimplexField uniform(2, 2);
    for (auto& v : uniform.p) v = 0.5;
    CHECK(exact_expectation(e, uniform) == doctest::Approx(1.5).epsilon(1e-13));

    DiscreteEnergy c(3, 2, std::vector<double>(8, 4.25));
    std::mt19937_64 rng(1);
    CHECK(exact_expectation(c, random_field(3, 2, rng)) ==
          doctest::Approx(4.25).epsilon(1e-13));
}

TEST_CASE("kl_to_gibbs examples") {
    // Separable with theta = [0, log 2]: Gibbs marginal [2/3, 1/3].
    auto e = separable({{0.0, std::log(2.0)}});
    SimplexField u(1, 2);
    u.row(0)[0] = 2.0 / 3.0;
    u.row(0)[1] = 1.0 / 3.0;
    CHECK(std::abs(kl_to_gibbs(e, u)) <= 1e-10);

    auto e2 = separable({{0.0, 0.7}, {0.2, -0.4}, {1.0, 0.0}});
    SimplexField g(3, 2);
    for (std::size_t j = 0; j < 3; ++j)
        simplex::softmax_project(
            std::vector<double>{-((j == 0) ? 0.0 : (j == 1) ? 0.2 : 1.0),
                                -((j == 0) ? 0.7 : (j == 1) ? -0.4 : 0.0)},
            1.0, g.row(j));
    CHECK(std::abs(kl_to_gibbs(e2, g)) <= 1e-10);

    std::mt19937_64 rng(9);
    for (int t = 0; t < 200; ++t) {
        const std::size_t m = 1 + rng() % 3, d = 2 + rng() % 2;
        std::size_t n = 1;
        for (std::size_t j = 0; j < m; ++j) n *= d;
        std::vector<double> table(n);
        std::uniform_real_distribution<double> dist(-2.0, 2.0);
        for (auto& v : table) v = dist(rng);
        DiscreteEnergy re(m, d, std::move(table));
        CHECK(kl_to_gibbs(re, random_field(m, d, rng)) >= -1e-10);
    }
}

TEST_CASE("gibbs logZ matches direct summation") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    std::vector<double> table(8);
    for (auto& v : table) v = dist(rng);
    DiscreteEnergy e(3, 2, table);
    GibbsDistribution gibbs(e);
    double z = 0.0;
    for (double v : table) z += std::exp(-v);
    CHECK(gibbs.logZ == doctest::Approx(std::log(z)).epsilon(1e-10));
}

TEST_CASE("mean_field_fixed_point_update examples") {
    auto e = separable({{0.0, std::log(2.0)}, {0.5, 0.5}});
    SimplexField u(2, 2);
    for (auto& v : u.p) v = 0.5;
    u = mean_field_fixed_point_update(e, u, 0);
    CHECK(u.row(0)[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(u.row(0)[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    DiscreteEnergy c(2, 3, std::vector<double>(9, 1.0));
    SimplexField v(2, 3);
    for (auto& x : v.p) x = 1.0 / 3.0;
    v.row(0)[0] = 0.5;
    v.row(0)[1] = 0.25;
    v.row(0)[2] = 0.25;
    v = mean_field_fixed_point_update(c, v, 0);
    for (std::size_t l = 0; l < 3; ++l)
        CHECK(v.row(0)[l] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("separable energies: one sweep reaches KL 0") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> dist(-1.5, 1.5);
    for (int t = 0; t < 50; ++t) {
        const std::size_t m = 1 + rng() % 4, d = 2 + rng() % 2;
        std::vector<std::vector<double>> theta(m, std::vector<double>(d));
        for (auto& row : theta)
            for (auto& v : row) v = dist(rng);
        auto e = separable(theta);
        auto u = random_field(m, d, rng);
        for (std::size_t j = 0; j < m; ++j)
            u = mean_field_fixed_point_update(e, u, j);
        CHECK(std::abs(kl_to_gibbs(e, u)) <= 1e-10);
    }
}

TEST_CASE("sequential sweeps are monotone and beat random sampling") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int t = 0; t < 100; ++t) {
        const std::size_t m = 2 + rng() % 3, d = 2 + rng() % 2;  // m <= 4, d <= 3
        std::size_t n = 1;
        for (std::size_t j = 0; j < m; ++j) n *= d;
        std::vector<double> table(n);
        for (auto& v : table) v = dist(rng);
        DiscreteEnergy e(m, d, std::move(table));

        auto u = random_field(m, d, rng);
        double f = mean_field_objective(e, u);
        for (int sweep = 0; sweep < 30; ++sweep) {
            for (std::size_t j = 0; j < m; ++j)
                u = mean_field_fixed_point_update(e, u, j);
            const double f2 = mean_field_objective(e, u);
            CHECK(f2 <= f + 1e-12);
            f = f2;
        }
        for (int s = 0; s < 100; ++s)
            CHECK(f <= mean_field_objective(e, random_field(m, d, rng)) + 1e-12);
    }
}

TEST_CASE("brute_force_min examples") {
    DiscreteEnergy e(2, 2, {0.0, 1.0, 2.0, 3.0});
    auto [w, v] = brute_force_min(e);
    CHECK(w == std::vector<std::size_t>{0, 0});
    CHECK(v == 0.0);

    DiscreteEnergy c(2, 3, std::vector<double>(9, 2.0));
    auto [wc, vc] = brute_force_min(c);
    CHECK(wc == std::vector<std::size_t>{0, 0});
    CHECK(vc == 2.0);

    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::vector<double> table(27);
    for (auto& x : table) x = dist(rng);
    DiscreteEnergy r(3, 3, table);
    auto [wr, vr] = brute_force_min(r);
    (void)wr;
    for (std::size_t idx = 0; idx < 27; ++idx) CHECK(vr <= table[idx]);
}

TEST_CASE("grid_argmin_proximal_objective examples") {
    // g = u_k / eta cancels the linear terms; pure entropy leaves uniform.
    std::vector<double> uk{0.3, 0.7};
    const double eta = 0.5;
    std::vector<double> g{uk[0] / eta, uk[1] / eta};
    auto [z, val] = grid_argmin_proximal_objective(uk, g, eta, 1.0, 1e-3);
    CHECK(z[0] == doctest::Approx(0.5).epsilon(1e-2));
    CHECK(z[1] == doctest::Approx(0.5).epsilon(1e-2));
    (void)val;

    // Huge beta: entropy negligible; argmin is the best vertex of the LP.
    std::vector<double> g2{1.0, -0.5};
    auto [z2, v2] = grid_argmin_proximal_objective(uk, g2, 0.3, 1e6, 1e-3);
    CHECK(z2[1] == doctest::Approx(1.0).epsilon(1e-2));
    (void)v2;

    CHECK_THROWS_AS(grid_argmin_proximal_objective(
                        std::vector<double>{0.25, 0.25, 0.25, 0.25},
                        std::vector<double>{0, 0, 0, 0}, 0.1, 1.0, 1e-3),
                    SizeError);
}

TEST_CASE("closed-form softmax update minimizes the proximal objective") {
    // 100 random instances, d in {2,3}: the grid never beats the closed form
    // by more than the grid resolution allowance.
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    for (int t = 0; t < 100; ++t) {
        const std::size_t d = 2 + rng() % 2;
        auto uk = random_field(1, d, rng);
        std::vector<double> g(d);
        for (auto& v : g) v = dist(rng);
        const double eta = unit(rng), beta = 0.2 + 3.0 * unit(rng);

        std::vector<double> arg(d);
        for (std::size_t l = 0; l < d; ++l) arg[l] = uk.row(0)[l] - eta * g[l];
        auto u1 = simplex::softmax_project(arg, beta);
        const double closed = proximal_objective(uk.row(0), g, eta, beta, u1);
        auto [zg, vg] =
            grid_argmin_proximal_objective(uk.row(0), g, eta, beta, 1e-3);
        (void)zg;
        CHECK(closed <= vg + 1e-5);
    }
}

TEST_CASE("hardmax update minimizes the ICM objective over vertices") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    for (int t = 0; t < 100; ++t) {
        const std::size_t d = 2 + rng() % 3;
        auto uk = random_field(1, d, rng);
        std::vector<double> g(d);
        for (auto& v : g) v = dist(rng);
        const double eta = unit(rng);

        std::vector<double> arg(d);
        for (std::size_t l = 0; l < d; ++l) arg[l] = uk.row(0)[l] - eta * g[l];
        auto u1 = simplex::hardmax_project(arg);
        // beta <= 0 drops the entropy term (ICM objective).
        const double icm = proximal_objective(uk.row(0), g, eta, 0.0, u1);
        for (std::size_t v = 0; v < d; ++v) {
            std::vector<double> vert(d, 0.0);
            vert[v] = 1.0;
            CHECK(icm <= proximal_objective(uk.row(0), g, eta, 0.0, vert) + 1e-12);
        }
    }
}
