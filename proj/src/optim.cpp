#include "pmf/optim.hpp"

#include <cmath>

#include "pmf/simplex.hpp"

namespace pmf::optim {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void check_grad_finite(std::span<const double> g, long iter) {
    if (!all_finite(g))
        throw DivergenceError(iter, "non-finite gradient at iteration " +
                                        std::to_string(iter));
}

void add_weight_decay(std::span<double> grad, std::span<const double> var,
                      double wd) {
    if (wd == 0.0) return;
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += wd * var[i];
}

void inner_update(OptimizerState& state, const MethodConfig& cfg,
                  std::span<double> var, std::span<const double> grad, double lr) {
    if (cfg.optimizer == InnerOpt::ADAM)
        adam_update(state, var, grad, lr);
    else
        sgd_update(state, var, grad, lr, cfg.momentum);
}

}  // namespace

void apply_update(OptimizerState& state, const MethodConfig& cfg,
                  std::span<double> var, std::span<double> grad, double lr) {
    check_grad_finite(grad, state.step);
    add_weight_decay(grad, var, cfg.weight_decay);
    inner_update(state, cfg, var, grad, lr);
}

namespace {

}  // namespace

void AnnealSchedule::validate() const {
    if (!(beta0 > 0.0)) throw std::invalid_argument("AnnealSchedule: beta0 must be > 0");
    if (!(rho > 1.0)) throw std::invalid_argument("AnnealSchedule: rho must be > 1");
    if (period < 1) throw std::invalid_argument("AnnealSchedule: period must be >= 1");
}

void MethodConfig::validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("MethodConfig: lr must be > 0");
    if (!(lr_scale > 0.0 && lr_scale <= 1.0))
        throw std::invalid_argument("MethodConfig: lr_scale must be in (0, 1]");
    if (lr_interval < 1) throw std::invalid_argument("MethodConfig: lr_interval must be >= 1");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw std::invalid_argument("MethodConfig: momentum must be in [0, 1)");
    if (!(weight_decay >= 0.0))
        throw std::invalid_argument("MethodConfig: weight_decay must be >= 0");
    if (method == Method::PMF || method == Method::PGD_SPARSEMAX ||
        method == Method::PICM)
        schedule.validate();
}

void OptimizerState::init(std::size_t n, InnerOpt opt) {
    step = 0;
    if (opt == InnerOpt::ADAM) {
        first_moment.assign(n, 0.0);
        second_moment.assign(n, 0.0);
        velocity.clear();
    } else {
        velocity.assign(n, 0.0);
        first_moment.clear();
        second_moment.clear();
    }
}

double anneal_beta(const AnnealSchedule& schedule, long iter) {
    if (iter < 0) throw std::invalid_argument("anneal_beta: iter must be >= 0");
    return schedule.beta0 * std::pow(schedule.rho, static_cast<double>(iter / schedule.period));
}

double lr_at(long iter, const MethodConfig& cfg) {
    if (iter < 0) throw std::invalid_argument("lr_at: iter must be >= 0");
    return cfg.lr * std::pow(cfg.lr_scale, static_cast<double>(iter / cfg.lr_interval));
}

void adam_update(OptimizerState& state, std::span<double> var,
                 std::span<const double> grad, double lr) {
    if (state.first_moment.size() != var.size())
        throw ShapeError("adam_update: state shape mismatch");
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(kAdamBeta1, t);
    const double c2 = 1.0 - std::pow(kAdamBeta2, t);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(var.size()); ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        state.first_moment[k] = kAdamBeta1 * state.first_moment[k] + (1.0 - kAdamBeta1) * grad[k];
        state.second_moment[k] =
            kAdamBeta2 * state.second_moment[k] + (1.0 - kAdamBeta2) * grad[k] * grad[k];
        const double mhat = state.first_moment[k] / c1;
        const double vhat = state.second_moment[k] / c2;
        var[k] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
    }
}

void sgd_update(OptimizerState& state, std::span<double> var,
                std::span<const double> grad, double lr, double momentum) {
    state.step += 1;
    if (momentum == 0.0) {
        for (std::size_t i = 0; i < var.size(); ++i) var[i] -= lr * grad[i];
        return;
    }
    if (state.velocity.size() != var.size())
        throw ShapeError("sgd_update: state shape mismatch");
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(var.size()); ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        state.velocity[k] = momentum * state.velocity[k] + grad[k];
        var[k] -= lr * state.velocity[k];
    }
}

SimplexField pmf_step(AuxField& aux, double beta, const FieldGradFn& grad_fn,
                      const MethodConfig& cfg, OptimizerState& state, double lr) {
    const std::size_t m = aux.m, d = aux.d;
    SimplexField u(m, d);
#pragma omp parallel for schedule(static)
    for (long j = 0; j < static_cast<long>(m); ++j)
        simplex::softmax_project(aux.row(static_cast<std::size_t>(j)), beta,
                                 u.row(static_cast<std::size_t>(j)));
    AuxField g_u(m, d);
    grad_fn(u, g_u);
    check_grad_finite(g_u.a, state.step);
    AuxField g_aux(m, d);
#pragma omp parallel for schedule(static)
    for (long j = 0; j < static_cast<long>(m); ++j)
        simplex::softmax_backward(u.row(static_cast<std::size_t>(j)), beta,
                                  g_u.row(static_cast<std::size_t>(j)),
                                  g_aux.row(static_cast<std::size_t>(j)));
    add_weight_decay(g_aux.a, aux.a, cfg.weight_decay);
    inner_update(state, cfg, aux.a, g_aux.a, lr);
    return u;
}

SimplexField pgd_sparsemax_step(AuxField& aux, double beta,
                                const FieldGradFn& grad_fn,
                                const MethodConfig& cfg, OptimizerState& state,
                                double lr) {
    const std::size_t m = aux.m, d = aux.d;
    SimplexField u(m, d);
#pragma omp parallel for schedule(static)
    for (long j = 0; j < static_cast<long>(m); ++j)
        simplex::sparsemax_project(aux.row(static_cast<std::size_t>(j)), beta,
                                   u.row(static_cast<std::size_t>(j)));
    AuxField g_u(m, d);
    grad_fn(u, g_u);
    check_grad_finite(g_u.a, state.step);
    AuxField g_aux(m, d);
#pragma omp parallel for schedule(static)
    for (long j = 0; j < static_cast<long>(m); ++j)
        simplex::sparsemax_backward(u.row(static_cast<std::size_t>(j)), beta,
                                    g_u.row(static_cast<std::size_t>(j)),
                                    g_aux.row(static_cast<std::size_t>(j)));
    add_weight_decay(g_aux.a, aux.a, cfg.weight_decay);
    inner_update(state, cfg, aux.a, g_aux.a, lr);
    return u;
}

SimplexField picm_step(AuxField& aux, const FieldGradFn& grad_fn,
                       const MethodConfig& cfg, OptimizerState& state, double lr,
                       const QuantLevels& levels) {
    if (aux.d != 2 || levels.d() != 2)
        throw std::invalid_argument("picm_step: defined only for the binary case (d = 2)");
    const std::size_t m = aux.m;
    SimplexField u(m, 2);
    for (std::size_t j = 0; j < m; ++j)
        simplex::hardmax_project(aux.row(j), u.row(j));
    AuxField g_u(m, 2);
    grad_fn(u, g_u);
    check_grad_finite(g_u.a, state.step);
    AuxField g_aux(m, 2);
    for (std::size_t j = 0; j < m; ++j) {
        const auto jac = ste_hardmax_jacobian_binary(aux.row(j));
        const auto g = g_u.row(j);
        g_aux.row(j)[0] = jac[0] * g[0] + jac[1] * g[1];
        g_aux.row(j)[1] = jac[2] * g[0] + jac[3] * g[1];
    }
    add_weight_decay(g_aux.a, aux.a, cfg.weight_decay);
    inner_update(state, cfg, aux.a, g_aux.a, lr);
    // Clip along q so the decoded auxiliary weight u~q stays in [qmin, qmax];
    // this is the u-space image of the BinaryConnect clip.
    const double q0 = levels.q[0], q1 = levels.q[1];
    const double qq = q0 * q0 + q1 * q1;
    for (std::size_t j = 0; j < m; ++j) {
        auto r = aux.row(j);
        const double w = r[0] * q0 + r[1] * q1;
        const double clipped = std::min(std::max(w, q0), q1);
        if (clipped != w) {
            const double delta = (clipped - w) / qq;
            r[0] += delta * q0;
            r[1] += delta * q1;
        }
    }
    return u;
}

void pgd_softmax_update(SimplexField& u, const AuxField& g_u, double eta,
                        double beta) {
    if (u.m != g_u.m || u.d != g_u.d)
        throw ShapeError("pgd_softmax_update: shape mismatch");
#pragma omp parallel for schedule(static)
    for (long j = 0; j < static_cast<long>(u.m); ++j) {
        const std::size_t jj = static_cast<std::size_t>(j);
        auto row = u.row(jj);
        const auto g = g_u.row(jj);
        std::vector<double> step(u.d);
        for (std::size_t l = 0; l < u.d; ++l) step[l] = row[l] - eta * g[l];
        simplex::softmax_project(step, beta, row);
    }
}

std::vector<double> bc_step(std::vector<double>& w_tilde,
                            const FlatGradFn& grad_fn, const MethodConfig& cfg,
                            OptimizerState& state, double lr,
                            const QuantLevels& levels) {
    if (!levels.binary())
        throw std::invalid_argument("bc_step: requires Q = {-1, 1}");
    const std::size_t m = w_tilde.size();
    std::vector<double> w(m);
    for (std::size_t j = 0; j < m; ++j) w[j] = w_tilde[j] < 0.0 ? -1.0 : 1.0;
    std::vector<double> g_w(m, 0.0);
    grad_fn(w, g_w);
    check_grad_finite(g_w, state.step);
    for (std::size_t j = 0; j < m; ++j) g_w[j] *= ste_sign_jacobian(w_tilde[j]);
    add_weight_decay(g_w, w_tilde, cfg.weight_decay);
    inner_update(state, cfg, w_tilde, g_w, lr);
    for (double& v : w_tilde) v = std::min(std::max(v, -1.0), 1.0);
    return w;
}

QuantizedWeights final_quantize(const AuxField& aux, const QuantLevels& levels) {
    if (aux.d != levels.d())
        throw ShapeError("final_quantize: level dimension mismatch");
    QuantizedWeights out{levels, std::vector<std::uint32_t>(aux.m)};
#pragma omp parallel for schedule(static)
    for (long j = 0; j < static_cast<long>(aux.m); ++j)
        out.level_index[static_cast<std::size_t>(j)] = static_cast<std::uint32_t>(
            simplex::argmax_index(aux.row(static_cast<std::size_t>(j))));
    return out;
}

}  // namespace pmf::optim
