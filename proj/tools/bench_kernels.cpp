// Benchmarks the OpenMP dense kernels against the serial reference and
// checks that both produce bitwise-identical results.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <random>
#include <vector>

#include "pmf/nn.hpp"

using pmf::nn::Tensor;
namespace kernels = pmf::nn::kernels;

namespace {

double now() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <class F>
double time_best(F&& f, int reps) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t = now();
        f();
        best = std::min(best, now() - t);
    }
    return best;
}

}  // namespace

int main() {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);

    const struct {
        std::size_t batch, in, out;
    } cases[] = {{100, 784, 300}, {100, 300, 100}, {256, 512, 512}};

    std::puts("case             serial_ms  omp_ms  speedup  bitwise_equal");
    for (const auto& c : cases) {
        Tensor x(c.batch, c.in), dy(c.batch, c.out);
        std::vector<double> w(c.out * c.in), bias(c.out);
        for (auto& v : x.data) v = dist(rng);
        for (auto& v : dy.data) v = dist(rng);
        for (auto& v : w) v = dist(rng);
        for (auto& v : bias) v = dist(rng);

        Tensor y_s(c.batch, c.out), y_p(c.batch, c.out);
        Tensor dx_s(c.batch, c.in), dx_p(c.batch, c.in);
        std::vector<double> dw_s(w.size()), dw_p(w.size());
        std::vector<double> db_s(c.out), db_p(c.out);

        const double fwd_s =
            time_best([&] { kernels::serial::dense_forward(x, w, bias, y_s); }, 5);
        const double fwd_p =
            time_best([&] { kernels::dense_forward(x, w, bias, y_p); }, 5);
        const double bwd_s = time_best(
            [&] { kernels::serial::dense_backward(x, w, dy, dx_s, dw_s, db_s); },
            5);
        const double bwd_p = time_best(
            [&] { kernels::dense_backward(x, w, dy, dx_p, dw_p, db_p); }, 5);

        const bool same =
            std::memcmp(y_s.data.data(), y_p.data.data(),
                        y_s.data.size() * sizeof(double)) == 0 &&
            std::memcmp(dx_s.data.data(), dx_p.data.data(),
                        dx_s.data.size() * sizeof(double)) == 0 &&
            std::memcmp(dw_s.data(), dw_p.data(), dw_s.size() * sizeof(double)) ==
                0 &&
            std::memcmp(db_s.data(), db_p.data(), db_s.size() * sizeof(double)) ==
                0;

        std::printf("fwd %4zux%4zux%4zu  %8.3f %7.3f %8.2fx  %s\n", c.batch, c.in,
                    c.out, fwd_s * 1e3, fwd_p * 1e3, fwd_s / fwd_p,
                    same ? "yes" : "NO");
        std::printf("bwd %4zux%4zux%4zu  %8.3f %7.3f %8.2fx  %s\n", c.batch, c.in,
                    c.out, bwd_s * 1e3, bwd_p * 1e3, bwd_s / bwd_p,
                    same ? "yes" : "NO");
        if (!same) return 1;
    }
    return 0;
}
