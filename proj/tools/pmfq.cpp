// pmfq: train / evaluate / verify quantized networks.
//
// Exit codes: 0 ok, 1 verification failure, 2 config/argument parse error,
// 3 training divergence, 4 I/O or file-format error.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "pmf/meanfield.hpp"
#include "pmf/runner.hpp"
#include "pmf/simplex.hpp"

namespace {

int cmd_train(const std::string& config_path, long seed_override,
              const std::string& out_override) {
    auto cfg = pmf::runner::parse_config_file(config_path);
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    if (!out_override.empty()) cfg.out_dir = out_override;
    auto r = pmf::runner::run_experiment(cfg);
    std::cout << pmf::runner::summary_text(r);
    return 0;
}

int cmd_eval(const std::string& weights_path, const std::string& arch,
             const std::string& dataset, const std::string& data_dir,
             long seed) {
    pmf::data::DatasetSplit train, test;
    std::size_t classes = 10;
    if (dataset == "mnist") {
        auto splits = pmf::data::load_mnist(data_dir);
        train = std::move(splits.train);
        test = std::move(splits.test);
    } else if (dataset == "blobs") {
        auto splits =
            pmf::data::blob_splits(10, 100, 20, static_cast<std::uint64_t>(seed));
        train = std::move(splits.train);
        test = std::move(splits.test);
    } else {
        throw pmf::ParseError("unknown dataset: " + dataset);
    }
    pmf::nn::Network net(
        pmf::nn::NetworkSpec::by_name(arch, train.images.cols, classes));
    auto qw = pmf::load_pqw(weights_path);
    if (qw.m() != net.param_count())
        throw pmf::FormatError("weight count " + std::to_string(qw.m()) +
                               " does not match arch '" + arch + "' (" +
                               std::to_string(net.param_count()) + " params)");
    auto w = qw.decode();
    pmf::runner::reestimate_bn(net, w, train);
    const double acc = pmf::runner::evaluate(net, w, test);
    std::printf("test_accuracy=%.6f\n", acc);
    return 0;
}

bool check(bool ok, const char* what, int& failures) {
    std::printf("%s %s\n", ok ? "ok" : "FAIL", what);
    if (!ok) ++failures;
    return ok;
}

int cmd_verify() {
    using namespace pmf;
    int failures = 0;

    {
        std::vector<double> u(3);
        simplex::softmax_project(std::vector<double>{1.0, 2.0, 3.0}, 1.0, u);
        double s = u[0] + u[1] + u[2];
        check(std::abs(s - 1.0) < 1e-12 && u[2] > u[1] && u[1] > u[0],
              "softmax projection is row-stochastic and order-preserving",
              failures);
    }
    {
        std::vector<double> u(3);
        simplex::sparsemax_project(std::vector<double>{3.0, 1.0, -1.0}, 1.0, u);
        check(std::abs(u[0] + u[1] + u[2] - 1.0) < 1e-12 && u[2] == 0.0,
              "sparsemax projection reaches the boundary", failures);
    }
    {
        // The softmax image maximizes <u~,z> + H(z)/beta over random simplex
        // points.
        std::vector<double> ut{0.3, -1.2, 0.7};
        const double beta = 2.5;
        std::vector<double> u(3);
        simplex::softmax_project(ut, beta, u);
        const double best = simplex::entropic_objective(ut, u, beta);
        std::mt19937_64 rng(7);
        std::exponential_distribution<double> exp_dist(1.0);
        bool ok = true;
        for (int t = 0; t < 2000; ++t) {
            std::vector<double> z(3);
            double s = 0;
            for (auto& v : z) s += (v = exp_dist(rng));
            for (auto& v : z) v /= s;
            if (simplex::entropic_objective(ut, z, beta) > best + 1e-12)
                ok = false;
        }
        check(ok, "softmax maximizes the entropy-regularized objective",
              failures);
    }
    {
        QuantLevels q({-1.0, -0.5, 0.5, 1.0});
        QuantizedWeights w{q, {3, 2, 1, 0, 0, 1, 2, 3, 1}};
        auto bytes = pack_quantized(w);
        auto back = unpack_quantized(bytes);
        check(back.level_index == w.level_index && back.levels.q == q.q,
              "pqw pack/unpack round-trip", failures);
    }
    {
        // For a separable energy the Gibbs distribution factorizes, so the
        // mean-field fixed point drives the KL to zero.
        meanfield::DiscreteEnergy e(2, 2, {0.0, 1.0, 0.5, 1.5});
        SimplexField u(2, 2);
        for (auto& v : u.p) v = 0.5;
        for (int t = 0; t < 50; ++t)
            for (std::size_t j = 0; j < 2; ++j)
                u = meanfield::mean_field_fixed_point_update(e, u, j);
        check(std::abs(meanfield::kl_to_gibbs(e, u)) < 1e-10,
              "mean-field fixed point factorizes a separable Gibbs distribution",
              failures);
    }
    {
        nn::Network net(nn::NetworkSpec::mlp_small(6, 8, 3));
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> dist(-0.5, 0.5);
        std::vector<double> params(net.param_count());
        for (auto& v : params) v = dist(rng);
        nn::Tensor x(5, 6);
        for (auto& v : x.data) v = dist(rng);
        std::vector<int> labels{0, 1, 2, 1, 0};
        std::vector<std::size_t> coords;
        for (std::size_t i = 0; i < net.param_count(); i += 7) coords.push_back(i);
        const double err =
            nn::finite_diff_check(net, params, x, labels, coords, 1e-5);
        check(err < 1e-5, "backprop matches central finite differences",
              failures);
    }

    if (failures) {
        std::printf("verify: %d check(s) failed\n", failures);
        return 1;
    }
    std::printf("verify: all checks passed\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantized-network training toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_override;
    long seed_override = -1;
    auto* train = app.add_subcommand("train", "run a training experiment");
    train->add_option("--config", config_path, "config file (key=value)")
        ->required();
    train->add_option("--seed", seed_override, "override the config seed");
    train->add_option("--out", out_override, "override the output directory");

    std::string weights_path, arch, dataset, data_dir = "data/mnist";
    long eval_seed = 1;
    auto* eval = app.add_subcommand("eval", "evaluate a .pqw weight file");
    eval->add_option("--weights", weights_path, "packed weight file")->required();
    eval->add_option("--arch", arch, "network architecture")->required();
    eval->add_option("--dataset", dataset, "dataset name")->required();
    eval->add_option("--data-dir", data_dir, "mnist directory");
    eval->add_option("--seed", eval_seed, "blob dataset seed");

    auto* verify = app.add_subcommand("verify", "run the built-in oracle checks");
    (void)verify;

    try {
        app.parse(argc, argv);
        if (train->parsed())
            return cmd_train(config_path, seed_override, out_override);
        if (eval->parsed())
            return cmd_eval(weights_path, arch, dataset, data_dir, eval_seed);
        return cmd_verify();
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const pmf::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const pmf::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const pmf::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 4;
    } catch (const pmf::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
