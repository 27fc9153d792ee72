#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <omp.h>

#include <random>
#include <vector>

#include "doctest.h"
#include "pmf/nn.hpp"

using namespace pmf::nn;

namespace {

Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    Tensor t(rows, cols);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : t.data) v = gauss(rng);
    return t;
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::vector<double> v(n);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& x : v) x = gauss(rng);
    return v;
}

struct Shape {
    std::size_t batch, in, out;
};

// Odd, prime, and power-of-two sizes; batch 1 and non-multiple-of-4 inner
// dimensions exercise the tail path of the dot product.
const Shape kShapes[] = {{1, 1, 1},   {1, 7, 3},   {5, 4, 9},
                         {3, 13, 17}, {8, 32, 16}, {11, 100, 23},
                         {64, 50, 10}};

}  // namespace

TEST_CASE("serial and parallel dense forward are bitwise identical") {
    std::mt19937_64 rng(1);
    for (const auto& s : kShapes) {
        auto x = random_tensor(s.batch, s.in, rng);
        auto w = random_vec(s.out * s.in, rng);
        auto bias = random_vec(s.out, rng);

        Tensor y_serial(s.batch, s.out), y_omp(s.batch, s.out);
        kernels::serial::dense_forward(x, w, bias, y_serial);
        kernels::dense_forward(x, w, bias, y_omp);
        CHECK(y_serial.data == y_omp.data);

        // Bias-free variant (empty span).
        kernels::serial::dense_forward(x, w, {}, y_serial);
        kernels::dense_forward(x, w, {}, y_omp);
        CHECK(y_serial.data == y_omp.data);
    }
}

TEST_CASE("serial and parallel dense backward are bitwise identical") {
    std::mt19937_64 rng(2);
    for (const auto& s : kShapes) {
        auto x = random_tensor(s.batch, s.in, rng);
        auto w = random_vec(s.out * s.in, rng);
        auto dy = random_tensor(s.batch, s.out, rng);

        Tensor dx_serial(s.batch, s.in), dx_omp(s.batch, s.in);
        std::vector<double> dw_serial(s.out * s.in), dw_omp(s.out * s.in);
        std::vector<double> db_serial(s.out), db_omp(s.out);

        kernels::serial::dense_backward(x, w, dy, dx_serial, dw_serial,
                                        db_serial);
        kernels::dense_backward(x, w, dy, dx_omp, dw_omp, db_omp);
        CHECK(dx_serial.data == dx_omp.data);
        CHECK(dw_serial == dw_omp);
        CHECK(db_serial == db_omp);

        kernels::serial::dense_backward(x, w, dy, dx_serial, dw_serial, {});
        kernels::dense_backward(x, w, dy, dx_omp, dw_omp, {});
        CHECK(dx_serial.data == dx_omp.data);
        CHECK(dw_serial == dw_omp);
    }
}

TEST_CASE("parallel kernels are invariant to the thread count") {
    std::mt19937_64 rng(3);
    const Shape s{13, 37, 21};
    auto x = random_tensor(s.batch, s.in, rng);
    auto w = random_vec(s.out * s.in, rng);
    auto bias = random_vec(s.out, rng);
    auto dy = random_tensor(s.batch, s.out, rng);

    std::vector<double> y_ref, dx_ref, dw_ref, db_ref;
    const int saved = omp_get_max_threads();
    for (int threads : {1, 2, 3, 7}) {
        omp_set_num_threads(threads);
        Tensor y(s.batch, s.out), dx(s.batch, s.in);
        std::vector<double> dw(s.out * s.in), db(s.out);
        kernels::dense_forward(x, w, bias, y);
        kernels::dense_backward(x, w, dy, dx, dw, db);
        if (y_ref.empty()) {
            y_ref = y.data;
            dx_ref = dx.data;
            dw_ref = dw;
            db_ref = db;
        } else {
            CHECK(y.data == y_ref);
            CHECK(dx.data == dx_ref);
            CHECK(dw == dw_ref);
            CHECK(db == db_ref);
        }
    }
    omp_set_num_threads(saved);
}

TEST_CASE("dense forward matches a plain triple loop") {
    std::mt19937_64 rng(4);
    const Shape s{6, 11, 5};
    auto x = random_tensor(s.batch, s.in, rng);
    auto w = random_vec(s.out * s.in, rng);
    auto bias = random_vec(s.out, rng);

    Tensor y(s.batch, s.out);
    kernels::dense_forward(x, w, bias, y);
    for (std::size_t i = 0; i < s.batch; ++i)
        for (std::size_t j = 0; j < s.out; ++j) {
            double acc = bias[j];
            for (std::size_t k = 0; k < s.in; ++k)
                acc += x.row(i)[k] * w[j * s.in + k];
            CHECK(y.row(i)[j] == doctest::Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("dense backward matches the transposed products") {
    std::mt19937_64 rng(5);
    const Shape s{4, 9, 6};
    auto x = random_tensor(s.batch, s.in, rng);
    auto w = random_vec(s.out * s.in, rng);
    auto dy = random_tensor(s.batch, s.out, rng);

    Tensor dx(s.batch, s.in);
    std::vector<double> dw(s.out * s.in), db(s.out);
    kernels::dense_backward(x, w, dy, dx, dw, db);

    for (std::size_t i = 0; i < s.batch; ++i)
        for (std::size_t k = 0; k < s.in; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < s.out; ++j)
                acc += dy.row(i)[j] * w[j * s.in + k];
            CHECK(dx.row(i)[k] == doctest::Approx(acc).epsilon(1e-12));
        }
    for (std::size_t j = 0; j < s.out; ++j) {
        double bacc = 0.0;
        for (std::size_t i = 0; i < s.batch; ++i) bacc += dy.row(i)[j];
        CHECK(db[j] == doctest::Approx(bacc).epsilon(1e-12));
        for (std::size_t k = 0; k < s.in; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < s.batch; ++i)
                acc += dy.row(i)[j] * x.row(i)[k];
            CHECK(dw[j * s.in + k] == doctest::Approx(acc).epsilon(1e-12));
        }
    }
}

TEST_CASE("full network forward is bitwise reproducible across thread counts") {
    std::mt19937_64 rng(6);
    Network net(NetworkSpec::by_name("mlp_small", 20, 10));
    auto params = random_vec(net.param_count(), rng);
    auto batch = random_tensor(30, 20, rng);
    std::vector<int> labels(30);
    for (std::size_t i = 0; i < 30; ++i) labels[i] = static_cast<int>(i % 10);

    std::vector<double> loss_grad_ref;
    double loss_ref = 0.0;
    const int saved = omp_get_max_threads();
    for (int threads : {1, 2, 5}) {
        omp_set_num_threads(threads);
        Cache cache;
        Tensor logits = net.forward(params, batch, Mode::Train, cache);
        auto [loss, dlogits] = cross_entropy(logits, labels);
        std::vector<double> grad(net.param_count());
        net.backward(cache, params, dlogits, grad);
        if (loss_grad_ref.empty()) {
            loss_ref = loss;
            loss_grad_ref = grad;
        } else {
            CHECK(loss == loss_ref);
            CHECK(grad == loss_grad_ref);
        }
    }
    omp_set_num_threads(saved);
}
