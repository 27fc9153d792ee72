#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pmf/quant.hpp"

// Training-step implementations: PMF (softmax-projected descent on auxiliary
// logits with annealed temperature), PGD-sparsemax, proximal ICM, and
// BinaryConnect, plus the inner optimizers (SGD with momentum, Adam) and the
// stateless beta / learning-rate schedules.

namespace pmf::optim {

struct AnnealSchedule {
    double beta0 = 1.0;
    double rho = 1.2;   // growth factor, > 1
    long period = 100;  // iterations between growth steps

    void validate() const;
};

enum class Method { REF, BC, PICM, PGD_SPARSEMAX, PMF };
enum class InnerOpt { SGD, ADAM };

struct MethodConfig {
    Method method = Method::PMF;
    double lr = 1e-3;
    long lr_interval = 7000;
    double lr_scale = 0.2;
    InnerOpt optimizer = InnerOpt::ADAM;
    double momentum = 0.0;
    double weight_decay = 0.0;
    bool store_aux = true;
    AnnealSchedule schedule;

    void validate() const;
};

struct OptimizerState {
    long step = 0;
    std::vector<double> first_moment, second_moment;  // Adam
    std::vector<double> velocity;                     // SGD momentum

    void init(std::size_t n, InnerOpt opt);
};

// beta0 * rho^floor(iter/period): stateless recomputation of "beta <- rho*beta
// every period iterations".
double anneal_beta(const AnnealSchedule& schedule, long iter);

// Step decay: lr * lr_scale^floor(iter/lr_interval).
double lr_at(long iter, const MethodConfig& cfg);

// Adam with bias-corrected moments; beta1=0.9, beta2=0.999, eps=1e-8.
void adam_update(OptimizerState& state, std::span<double> var,
                 std::span<const double> grad, double lr);
void sgd_update(OptimizerState& state, std::span<double> var,
                std::span<const double> grad, double lr, double momentum);

// Weight decay (additive L2 term) followed by the configured inner optimizer.
// Mutates `grad`.
void apply_update(OptimizerState& state, const MethodConfig& cfg,
                  std::span<double> var, std::span<double> grad, double lr);

// Gradient of the (relaxed) loss w.r.t. u, evaluated at the projected field.
using FieldGradFn = std::function<void(const SimplexField& u, AuxField& g_u)>;
// Gradient of the loss w.r.t. w (BinaryConnect path).
using FlatGradFn =
    std::function<void(std::span<const double> w, std::span<double> g_w)>;

// One iteration of softmax-projected descent on the auxiliary logits:
// u = softmax(beta*u~) row-wise, backward through the projection Jacobian,
// inner-optimizer update on u~. Returns the projected field that was used.
// beta itself is not modified here (see anneal_beta).
SimplexField pmf_step(AuxField& aux, double beta, const FieldGradFn& grad_fn,
                      const MethodConfig& cfg, OptimizerState& state, double lr);

// Same structure with the sparsemax projection and its generalized Jacobian.
SimplexField pgd_sparsemax_step(AuxField& aux, double beta,
                                const FieldGradFn& grad_fn,
                                const MethodConfig& cfg, OptimizerState& state,
                                double lr);

// Hardmax projection with the straight-through estimator (binary only).
// After the update, u~ rows are clipped along q so that u~q stays in [-1,1],
// mirroring the BinaryConnect clip.
SimplexField picm_step(AuxField& aux, const FieldGradFn& grad_fn,
                       const MethodConfig& cfg, OptimizerState& state, double lr,
                       const QuantLevels& levels);

// The no-auxiliary variant: u <- softmax(beta*(u - eta*g)) row-wise, the exact
// minimizer of eta*<g,u> - <u_k,u> - H(u)/beta per row.
void pgd_softmax_update(SimplexField& u, const AuxField& g_u, double eta,
                        double beta);

// BinaryConnect: w = sign(w~) (sign(0) := +1), straight-through gradient,
// inner-optimizer update, then clip w~ to [-1,1]. Returns the projected w.
std::vector<double> bc_step(std::vector<double>& w_tilde,
                            const FlatGradFn& grad_fn, const MethodConfig& cfg,
                            OptimizerState& state, double lr,
                            const QuantLevels& levels);

// Hardmax per row mapped to level indices.
QuantizedWeights final_quantize(const AuxField& aux, const QuantLevels& levels);

}  // namespace pmf::optim
