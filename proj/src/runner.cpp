#include "pmf/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>

#include "pmf/simplex.hpp"

namespace pmf::runner {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(long line, const std::string& msg) {
    throw ParseError("config line " + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& v, long line, const std::string& key) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        parse_fail(line, "invalid number for '" + key + "': " + v);
    }
}

long to_long(const std::string& v, long line, const std::string& key) {
    try {
        std::size_t pos = 0;
        long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        parse_fail(line, "invalid integer for '" + key + "': " + v);
    }
}

bool to_bool(const std::string& v, long line, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    parse_fail(line, "invalid bool for '" + key + "': " + v);
}

std::vector<double> to_levels(const std::string& v, long line) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) parse_fail(line, "empty level in 'levels': " + v);
        out.push_back(to_double(item, line, "levels"));
    }
    if (out.size() < 2) parse_fail(line, "'levels' needs at least two values");
    return out;
}

std::string fmt(double x, const char* spec = "%.9g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, x);
    return buf;
}

std::string join_levels(const std::vector<double>& q) {
    std::string s;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (i) s += ',';
        s += fmt(q[i], "%.17g");
    }
    return s;
}

}  // namespace

optim::Method ExperimentConfig::method_enum() const {
    if (method == "ref") return optim::Method::REF;
    if (method == "bc") return optim::Method::BC;
    if (method == "picm") return optim::Method::PICM;
    if (method == "pgd_sparsemax") return optim::Method::PGD_SPARSEMAX;
    if (method == "pmf") return optim::Method::PMF;
    throw ParseError("unknown method: " + method);
}

optim::MethodConfig ExperimentConfig::method_config() const {
    optim::MethodConfig m;
    m.method = method_enum();
    m.lr = lr;
    m.lr_interval = lr_interval;
    m.lr_scale = lr_scale;
    if (optimizer == "adam")
        m.optimizer = optim::InnerOpt::ADAM;
    else if (optimizer == "sgd")
        m.optimizer = optim::InnerOpt::SGD;
    else
        throw ParseError("unknown optimizer: " + optimizer);
    m.momentum = momentum;
    m.weight_decay = weight_decay;
    m.store_aux = store_aux;
    m.schedule.beta0 = beta0;
    m.schedule.rho = rho;
    m.schedule.period = anneal_period;
    m.validate();
    return m;
}

QuantLevels ExperimentConfig::quant_levels() const {
    return QuantLevels(levels);
}

void ExperimentConfig::validate() const {
    if (dataset != "mnist" && dataset != "blobs")
        throw ParseError("unknown dataset: " + (dataset.empty() ? "<unset>" : dataset));
    if (arch != "lenet300" && arch != "mlp_small")
        throw ParseError("unknown arch: " + (arch.empty() ? "<unset>" : arch));
    if (batch < 1 || iters < 1 || eval_every < 1)
        throw ParseError("batch, iters and eval_every must be >= 1");
    if (blob_classes < 2 || blob_per_class < 1 || blob_dim < 1)
        throw ParseError("blob_* settings must be positive (classes >= 2)");
    auto q = quant_levels();
    auto me = method_enum();
    if ((me == optim::Method::BC || me == optim::Method::PICM) && !q.binary())
        throw ParseError("method '" + method + "' requires levels=-1,1");
    method_config();  // runs the optimizer-side validation
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::vector<std::string> seen;
    std::string raw;
    long line = 0;
    bool have_dataset = false, have_arch = false, have_method = false;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = trim(raw);
        if (s.empty() || s[0] == '#') continue;
        auto eq = s.find('=');
        if (eq == std::string::npos) parse_fail(line, "expected key=value, got: " + s);
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (key.empty()) parse_fail(line, "empty key");
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            parse_fail(line, "duplicate key '" + key + "'");
        seen.push_back(key);

        if (key == "dataset") { cfg.dataset = val; have_dataset = true; }
        else if (key == "arch") { cfg.arch = val; have_arch = true; }
        else if (key == "method") { cfg.method = val; have_method = true; }
        else if (key == "optimizer") cfg.optimizer = val;
        else if (key == "lr") cfg.lr = to_double(val, line, key);
        else if (key == "lr_interval") cfg.lr_interval = to_long(val, line, key);
        else if (key == "lr_scale") cfg.lr_scale = to_double(val, line, key);
        else if (key == "momentum") cfg.momentum = to_double(val, line, key);
        else if (key == "weight_decay") cfg.weight_decay = to_double(val, line, key);
        else if (key == "store_aux") cfg.store_aux = to_bool(val, line, key);
        else if (key == "beta0") cfg.beta0 = to_double(val, line, key);
        else if (key == "rho") cfg.rho = to_double(val, line, key);
        else if (key == "anneal_period") cfg.anneal_period = to_long(val, line, key);
        else if (key == "levels") cfg.levels = to_levels(val, line);
        else if (key == "batch") cfg.batch = to_long(val, line, key);
        else if (key == "iters") cfg.iters = to_long(val, line, key);
        else if (key == "eval_every") cfg.eval_every = to_long(val, line, key);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_long(val, line, key));
        else if (key == "out_dir") cfg.out_dir = val;
        else if (key == "data_dir") cfg.data_dir = val;
        else if (key == "blob_classes") cfg.blob_classes = to_long(val, line, key);
        else if (key == "blob_per_class") cfg.blob_per_class = to_long(val, line, key);
        else if (key == "blob_dim") cfg.blob_dim = to_long(val, line, key);
        else parse_fail(line, "unknown key '" + key + "'");
    }
    if (!have_dataset || !have_arch || !have_method)
        throw ParseError("config must set dataset, arch and method");
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    return parse_config(in);
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "dataset=" << cfg.dataset << '\n'
       << "arch=" << cfg.arch << '\n'
       << "method=" << cfg.method << '\n'
       << "optimizer=" << cfg.optimizer << '\n'
       << "lr=" << fmt(cfg.lr, "%.17g") << '\n'
       << "lr_interval=" << cfg.lr_interval << '\n'
       << "lr_scale=" << fmt(cfg.lr_scale, "%.17g") << '\n'
       << "momentum=" << fmt(cfg.momentum, "%.17g") << '\n'
       << "weight_decay=" << fmt(cfg.weight_decay, "%.17g") << '\n'
       << "store_aux=" << (cfg.store_aux ? "true" : "false") << '\n'
       << "beta0=" << fmt(cfg.beta0, "%.17g") << '\n'
       << "rho=" << fmt(cfg.rho, "%.17g") << '\n'
       << "anneal_period=" << cfg.anneal_period << '\n'
       << "levels=" << join_levels(cfg.levels) << '\n'
       << "batch=" << cfg.batch << '\n'
       << "iters=" << cfg.iters << '\n'
       << "eval_every=" << cfg.eval_every << '\n'
       << "seed=" << cfg.seed << '\n'
       << "out_dir=" << cfg.out_dir << '\n'
       << "data_dir=" << cfg.data_dir << '\n'
       << "blob_classes=" << cfg.blob_classes << '\n'
       << "blob_per_class=" << cfg.blob_per_class << '\n'
       << "blob_dim=" << cfg.blob_dim << '\n';
    return os.str();
}

void emit_metrics_header(std::ostream& os) {
    os << "iter,train_loss,val_acc_quantized,val_acc_continuous,beta,lr,"
          "elapsed_seconds\n";
}

void emit_metrics_row(std::ostream& os, const MetricsRow& r) {
    os << r.iter << ',' << fmt(r.train_loss) << ',' << fmt(r.val_acc_quantized)
       << ',' << fmt(r.val_acc_continuous) << ',' << fmt(r.beta) << ','
       << fmt(r.lr) << ',' << fmt(r.elapsed_seconds) << '\n';
}

double evaluate(nn::Network& net, std::span<const double> params,
                const data::DatasetSplit& split, long batch) {
    const std::size_t n = split.size();
    const std::size_t dim = split.images.cols;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch)) {
        const std::size_t b = std::min(static_cast<std::size_t>(batch), n - start);
        nn::Tensor x(b, dim);
        std::copy_n(split.images.row(start), b * dim, x.data.data());
        nn::Tensor logits = net.forward(params, x, nn::Mode::Eval);
        for (std::size_t i = 0; i < b; ++i) {
            std::span<const double> row(logits.row(i), logits.cols);
            if (simplex::argmax_index(row) ==
                static_cast<std::size_t>(split.labels[start + i]))
                ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

void reestimate_bn(nn::Network& net, std::span<const double> params,
                   const data::DatasetSplit& train, long batches, long batch) {
    auto& running = net.running_stats();
    if (running.empty()) return;
    const std::size_t n = train.size();
    const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(batch), n);
    const std::size_t nb =
        std::min<std::size_t>(static_cast<std::size_t>(batches), n / b);
    std::vector<nn::BatchNormStats> acc(running.size());
    for (std::size_t s = 0; s < running.size(); ++s) {
        acc[s].mean.assign(running[s].mean.size(), 0.0);
        acc[s].var.assign(running[s].var.size(), 0.0);
    }
    const std::size_t dim = train.images.cols;
    nn::Cache cache;
    for (std::size_t k = 0; k < nb; ++k) {
        nn::Tensor x(b, dim);
        std::copy_n(train.images.row(k * b), b * dim, x.data.data());
        (void)net.forward(params, x, nn::Mode::Train, cache);
        for (std::size_t s = 0; s < running.size(); ++s)
            for (std::size_t f = 0; f < acc[s].mean.size(); ++f) {
                acc[s].mean[f] += cache.bn_batch[s].mean[f];
                acc[s].var[f] += cache.bn_batch[s].var[f];
            }
    }
    for (std::size_t s = 0; s < running.size(); ++s)
        for (std::size_t f = 0; f < acc[s].mean.size(); ++f) {
            running[s].mean[f] = acc[s].mean[f] / static_cast<double>(nb);
            running[s].var[f] = acc[s].var[f] / static_cast<double>(nb);
        }
}

namespace {

void init_fan_in(const nn::Network& net, std::vector<double>& params,
                 std::mt19937_64& rng) {
    params.assign(net.param_count(), 0.0);
    for (const auto& seg : net.layout().segments) {
        const double bound =
            1.0 / std::sqrt(static_cast<double>(net.spec().layers[seg.layer].in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (std::size_t i = 0; i < seg.length; ++i)
            params[seg.offset + i] = dist(rng);
    }
}

void init_aux(AuxField& aux, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-0.01, 0.01);
    for (double& v : aux.a) v = dist(rng);
}

QuantizedWeights quantize_field(const SimplexField& u,
                                       const QuantLevels& levels) {
    QuantizedWeights w{levels, {}};
    w.level_index.resize(u.m);
    for (std::size_t j = 0; j < u.m; ++j)
        w.level_index[j] =
            static_cast<std::uint32_t>(simplex::argmax_index(u.row(j)));
    return w;
}

QuantizedWeights quantize_aux(const AuxField& aux,
                                     const QuantLevels& levels) {
    QuantizedWeights w{levels, {}};
    w.level_index.resize(aux.m);
    for (std::size_t j = 0; j < aux.m; ++j)
        w.level_index[j] =
            static_cast<std::uint32_t>(simplex::argmax_index(aux.row(j)));
    return w;
}

std::vector<double> aux_dot_q(const AuxField& aux,
                              const QuantLevels& levels) {
    std::vector<double> w(aux.m, 0.0);
    for (std::size_t j = 0; j < aux.m; ++j) {
        auto r = aux.row(j);
        double acc = 0.0;
        for (std::size_t l = 0; l < aux.d; ++l) acc += r[l] * levels.q[l];
        w[j] = acc;
    }
    return w;
}

SimplexField project_aux(const AuxField& aux, double beta,
                                optim::Method method) {
    SimplexField u(aux.m, aux.d);
    for (std::size_t j = 0; j < aux.m; ++j) {
        if (method == optim::Method::PGD_SPARSEMAX)
            simplex::sparsemax_project(aux.row(j), beta, u.row(j));
        else
            simplex::softmax_project(aux.row(j), beta, u.row(j));
    }
    return u;
}

void write_f64(const std::string& path, std::span<const double> v) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!os) throw IoError("write failed: " + path);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    };

    data::DatasetSplit train, val, test;
    if (cfg.dataset == "mnist") {
        auto splits = data::load_mnist(cfg.data_dir);
        train = std::move(splits.train);
        val = std::move(splits.val);
        test = std::move(splits.test);
    } else {
        const auto c = static_cast<std::size_t>(cfg.blob_classes);
        const auto pc = static_cast<std::size_t>(cfg.blob_per_class);
        const auto dim = static_cast<std::size_t>(cfg.blob_dim);
        auto splits = data::blob_splits(c, pc, dim, cfg.seed);
        train = std::move(splits.train);
        val = std::move(splits.val);
        test = std::move(splits.test);
    }
    const std::size_t classes =
        cfg.dataset == "mnist" ? 10 : static_cast<std::size_t>(cfg.blob_classes);

    nn::Network net(
        nn::NetworkSpec::by_name(cfg.arch, train.images.cols, classes));
    const std::size_t m = net.param_count();
    const auto mcfg = cfg.method_config();
    const auto levels = cfg.quant_levels();
    const auto method = mcfg.method;
    const std::size_t d = levels.d();

    std::mt19937_64 rng(cfg.seed);
    std::vector<double> params;       // REF weights / BC w~
    AuxField aux(m, d);        // logit methods
    SimplexField u_state;      // pmf without stored logits
    if (method == optim::Method::REF || method == optim::Method::BC) {
        init_fan_in(net, params, rng);
    } else {
        init_aux(aux, rng);
        if (method == optim::Method::PMF && !mcfg.store_aux) {
            u_state = project_aux(aux, mcfg.schedule.beta0, method);
            aux = AuxField();
        }
    }

    optim::OptimizerState state;
    state.init(method == optim::Method::REF || method == optim::Method::BC
                   ? m
                   : m * d,
               mcfg.optimizer);

    std::filesystem::create_directories(cfg.out_dir);
    const std::string metrics_path = cfg.out_dir + "/metrics.csv";
    std::ofstream metrics_out(metrics_path);
    if (!metrics_out) throw IoError("cannot open for writing: " + metrics_path);
    emit_metrics_header(metrics_out);
    {
        std::ofstream cfg_out(cfg.out_dir + "/config.txt");
        cfg_out << serialize_config(cfg);
    }

    RunResult result;
    result.config = cfg;
    result.metrics_path = metrics_path;

    nn::Tensor batch;
    std::vector<int> labels;
    std::uint64_t epoch = 0;
    std::optional<data::BatchIterator> it;
    it.emplace(train, static_cast<std::size_t>(cfg.batch), cfg.seed, epoch);
    double window_loss = 0.0;
    long window_count = 0;
    double last_finite_loss = std::numeric_limits<double>::quiet_NaN();

    // Loss+gradient of the relaxed objective at explicit weights w.
    double step_loss = 0.0;
    auto flat_grad = [&](std::span<const double> w, std::span<double> g_w) {
        nn::Cache cache;
        nn::Tensor logits = net.forward(w, batch, nn::Mode::Train, cache);
        auto [loss, dlogits] = nn::cross_entropy(logits, labels);
        net.backward(cache, w, dlogits, g_w);
        step_loss = loss;
    };
    std::vector<double> w_buf(m, 0.0), g_w_buf(m, 0.0);
    optim::FieldGradFn field_grad = [&](const SimplexField& u,
                                        AuxField& g_u) {
        collapse(u, levels, w_buf);
        std::fill(g_w_buf.begin(), g_w_buf.end(), 0.0);
        flat_grad(w_buf, g_w_buf);
        lift_gradient(g_w_buf, levels, g_u);
    };

    QuantizedWeights best_quant{levels, {}};
    std::vector<double> best_params;  // REF snapshot
    result.best_val_acc_quantized = -1.0;

    try {
        for (long k = 0; k < cfg.iters; ++k) {
            if (!it->next(batch, labels)) {
                ++epoch;
                it.emplace(train, static_cast<std::size_t>(cfg.batch), cfg.seed,
                           epoch);
                it->next(batch, labels);
            }
            const double beta = optim::anneal_beta(mcfg.schedule, k);
            const double lr = optim::lr_at(k, mcfg);

            switch (method) {
                case optim::Method::REF: {
                    std::fill(g_w_buf.begin(), g_w_buf.end(), 0.0);
                    flat_grad(params, g_w_buf);
                    optim::apply_update(state, mcfg, params, g_w_buf, lr);
                    break;
                }
                case optim::Method::BC:
                    (void)optim::bc_step(params, flat_grad, mcfg, state, lr, levels);
                    break;
                case optim::Method::PICM:
                    (void)optim::picm_step(aux, field_grad, mcfg, state, lr, levels);
                    break;
                case optim::Method::PGD_SPARSEMAX:
                    (void)optim::pgd_sparsemax_step(aux, beta, field_grad, mcfg,
                                                    state, lr);
                    break;
                case optim::Method::PMF:
                    if (mcfg.store_aux) {
                        (void)optim::pmf_step(aux, beta, field_grad, mcfg, state,
                                              lr);
                    } else {
                        AuxField g_u(m, d);
                        field_grad(u_state, g_u);
                        if (!all_finite(g_u.a))
                            throw DivergenceError(
                                k, "non-finite gradient at iteration " +
                                       std::to_string(k));
                        optim::pgd_softmax_update(u_state, g_u, lr, beta);
                        ++state.step;
                    }
                    break;
            }
            if (!std::isfinite(step_loss))
                throw DivergenceError(k, "non-finite training loss at iteration " +
                                             std::to_string(k));
            last_finite_loss = step_loss;
            window_loss += step_loss;
            ++window_count;

            const long iter = k + 1;
            if (iter % cfg.eval_every == 0 || iter == cfg.iters) {
                QuantizedWeights qw{levels, {}};
                std::vector<double> w_cont;
                if (method == optim::Method::REF) {
                    w_cont = params;
                } else if (method == optim::Method::BC) {
                    w_cont = params;
                    qw.level_index.resize(m);
                    for (std::size_t j = 0; j < m; ++j)
                        qw.level_index[j] = params[j] < 0.0 ? 0u : 1u;
                } else if (method == optim::Method::PICM) {
                    w_cont = aux_dot_q(aux, levels);
                    qw = quantize_aux(aux, levels);
                } else if (mcfg.store_aux) {
                    auto u = project_aux(aux, optim::anneal_beta(mcfg.schedule, iter),
                                         method);
                    w_cont = collapse(u, levels);
                    qw = quantize_field(u, levels);
                } else {
                    w_cont = collapse(u_state, levels);
                    qw = quantize_field(u_state, levels);
                }

                MetricsRow row;
                row.iter = iter;
                row.train_loss = window_loss / static_cast<double>(window_count);
                window_loss = 0.0;
                window_count = 0;
                row.beta = optim::anneal_beta(mcfg.schedule, iter);
                row.lr = optim::lr_at(iter, mcfg);
                reestimate_bn(net, w_cont, train, 20, std::min<long>(cfg.batch, 200));
                row.val_acc_continuous = evaluate(net, w_cont, val);
                if (method == optim::Method::REF) {
                    row.val_acc_quantized = row.val_acc_continuous;
                } else {
                    auto wq = qw.decode();
                    reestimate_bn(net, wq, train, 20, std::min<long>(cfg.batch, 200));
                    row.val_acc_quantized = evaluate(net, wq, val);
                }
                row.elapsed_seconds = elapsed();
                emit_metrics_row(metrics_out, row);
                metrics_out.flush();
                result.metrics.push_back(row);
                result.final_train_loss = row.train_loss;

                if (row.val_acc_quantized > result.best_val_acc_quantized) {
                    result.best_val_acc_quantized = row.val_acc_quantized;
                    result.best_iter = iter;
                    if (method == optim::Method::REF)
                        best_params = params;
                    else
                        best_quant = qw;
                }
            }
        }
    } catch (const DivergenceError& e) {
        std::ostringstream os;
        os << e.what() << "; last finite loss "
           << (std::isnan(last_finite_loss) ? std::string("<none>")
                                            : fmt(last_finite_loss));
        throw DivergenceError(e.iteration, os.str());
    }

    if (method == optim::Method::REF) {
        result.weights_path = cfg.out_dir + "/weights_best.f64";
        write_f64(result.weights_path, best_params);
        reestimate_bn(net, best_params, train, 20, std::min<long>(cfg.batch, 200));
        result.test_acc_quantized = evaluate(net, best_params, test);
        result.test_acc_continuous = result.test_acc_quantized;
    } else {
        result.weights_path = cfg.out_dir + "/weights_best.pqw";
        save_pqw(best_quant, result.weights_path);
        auto wq = best_quant.decode();
        reestimate_bn(net, wq, train, 20, std::min<long>(cfg.batch, 200));
        result.test_acc_quantized = evaluate(net, wq, test);
        const auto& last = result.metrics.back();
        result.test_acc_continuous = last.val_acc_continuous;  // see summary
        std::vector<double> w_cont;
        if (method == optim::Method::BC)
            w_cont = params;
        else if (method == optim::Method::PICM)
            w_cont = aux_dot_q(aux, levels);
        else if (mcfg.store_aux)
            w_cont = collapse(
                project_aux(aux, optim::anneal_beta(mcfg.schedule, cfg.iters),
                            method),
                levels);
        else
            w_cont = collapse(u_state, levels);
        reestimate_bn(net, w_cont, train, 20, std::min<long>(cfg.batch, 200));
        result.test_acc_continuous = evaluate(net, w_cont, test);
    }

    result.summary_path = cfg.out_dir + "/summary.txt";
    {
        std::ofstream os(result.summary_path);
        if (!os) throw IoError("cannot open for writing: " + result.summary_path);
        os << summary_text(result);
    }
    return result;
}

std::string summary_text(const RunResult& r) {
    std::ostringstream os;
    os << "method=" << r.config.method << '\n'
       << "dataset=" << r.config.dataset << '\n'
       << "arch=" << r.config.arch << '\n'
       << "seed=" << r.config.seed << '\n'
       << "iters=" << r.config.iters << '\n'
       << "best_iter=" << r.best_iter << '\n'
       << "best_val_acc_quantized=" << fmt(r.best_val_acc_quantized) << '\n'
       << "test_acc_quantized=" << fmt(r.test_acc_quantized) << '\n'
       << "test_acc_continuous=" << fmt(r.test_acc_continuous) << '\n'
       << "final_train_loss=" << fmt(r.final_train_loss) << '\n'
       << "weights=" << r.weights_path << '\n';
    return os.str();
}

}  // namespace pmf::runner
