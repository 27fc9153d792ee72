#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pmf/data.hpp"
#include "pmf/nn.hpp"
#include "pmf/optim.hpp"
#include "pmf/quant.hpp"

namespace pmf::runner {

// Flat key=value experiment description.  Every field has a default except
// `dataset`, `arch` and `method`, which must be present in the config file.
struct ExperimentConfig {
    std::string dataset;  // "mnist" | "blobs"
    std::string arch;     // "lenet300" | "mlp_small"
    std::string method;   // "ref" | "bc" | "picm" | "pgd_sparsemax" | "pmf"

    std::string optimizer = "adam";  // "adam" | "sgd"
    double lr = 0.001;
    long lr_interval = 7000;
    double lr_scale = 0.2;
    double momentum = 0.0;
    double weight_decay = 0.0;
    bool store_aux = true;

    double beta0 = 1.0;
    double rho = 1.2;
    long anneal_period = 100;

    std::vector<double> levels = {-1.0, 1.0};

    long batch = 100;
    long iters = 20000;
    long eval_every = 500;
    std::uint64_t seed = 1;

    std::string out_dir = "out";
    std::string data_dir = "data/mnist";

    // Synthetic-blob generator knobs (ignored for mnist).
    long blob_classes = 10;
    long blob_per_class = 100;
    long blob_dim = 20;

    optim::Method method_enum() const;
    optim::MethodConfig method_config() const;
    QuantLevels quant_levels() const;
    void validate() const;
};

// Parses the flat key=value format.  Blank lines and lines starting with '#'
// are skipped; unknown or duplicated keys raise ParseError naming the line.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);

// Inverse of parse_config: fixed key order, round-trips exactly.
std::string serialize_config(const ExperimentConfig& cfg);

struct MetricsRow {
    long iter = 0;
    double train_loss = 0.0;
    double val_acc_quantized = 0.0;
    double val_acc_continuous = 0.0;
    double beta = 0.0;
    double lr = 0.0;
    double elapsed_seconds = 0.0;
};

void emit_metrics_header(std::ostream& os);
void emit_metrics_row(std::ostream& os, const MetricsRow& row);

// Top-1 accuracy on `split` in inference mode (argmax; lowest index wins ties).
double evaluate(nn::Network& net, std::span<const double> params,
                const data::DatasetSplit& split, long batch = 1000);

// Recomputes batch-norm running statistics from the leading samples of
// `train` (plain average of per-batch moments).  Needed because the
// quantized / continuous parameter sets seen at eval time are not the ones
// the running stats were tracking during training.
void reestimate_bn(nn::Network& net, std::span<const double> params,
                   const data::DatasetSplit& train, long batches = 50,
                   long batch = 200);

struct RunResult {
    ExperimentConfig config;
    long best_iter = -1;
    double best_val_acc_quantized = 0.0;
    double test_acc_quantized = 0.0;
    double test_acc_continuous = 0.0;
    double final_train_loss = 0.0;
    std::vector<MetricsRow> metrics;
    std::string weights_path;  // .pqw (quantized methods) or .f64 (ref)
    std::string metrics_path;
    std::string summary_path;
};

// Runs the full training loop and writes metrics.csv, summary.txt and the
// best-validation weight snapshot into cfg.out_dir.  Throws DivergenceError
// (with the failing iteration and last finite loss in the message) if the
// loss or a gradient leaves the finite range.
RunResult run_experiment(const ExperimentConfig& cfg);

std::string summary_text(const RunResult& r);

}  // namespace pmf::runner
