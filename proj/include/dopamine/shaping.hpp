#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dopamine/common.hpp"
#include "dopamine/kernels.hpp"
#include "dopamine/progress.hpp"

// Policy-invariant reward construction on top of progress estimates.
//
// The shaping term gamma*Phi(s') - Phi(s) telescopes under discounting to a
// boundary term that depends only on the start state, so adding it to the
// sparse gold reward leaves the optimal policy unchanged while densifying the
// signal. The raw progress difference Phi(s') - Phi(s) does not telescope at
// gamma < 1 and silently rewards stagnation in high-progress states; it is
// provided only so the failure mode can be demonstrated.
namespace dopamine::shaping {

// Discounting configuration. gamma is tied to a continuous-time decay rate
// lambda and step size h by gamma = exp(-lambda*h); time-consistency forces
// the exponential form, and rescaling (lambda, h) -> (lambda/k, k*h) leaves
// gamma unchanged.
struct ShapingConfig {
    double lambda_rate = 0.0;            // continuous discount rate, >= 0
    double step_h = 1.0;                 // discretization step, > 0
    double gamma = 1.0;                  // derived: exp(-lambda*h), in (0,1)
    double completion_margin_delta = 0.05;

    static ShapingConfig from_rate(double lambda, double h, double delta = 0.05);
    static ShapingConfig from_gamma(double gamma, double h = 1.0, double delta = 0.05);

    void validate() const;

    // Flat key-value serialization (keys: lambda, step_h, gamma, delta).
    std::string to_kv() const;
    static ShapingConfig from_kv_text(const std::string& text);
};

struct Transition {
    progress::Progress phi_s;       // Phi(s_t)
    progress::Progress phi_s_next;  // Phi(s_{t+1})
};

// gamma*Phi(s_{t+1}) - Phi(s_t); range [-1, gamma].
inline double shaping_term(const Transition& t, const ShapingConfig& cfg) {
    return cfg.gamma * t.phi_s_next.value() - t.phi_s.value();
}

// Automated sparse outcome reward: 1 once estimated progress crosses the
// completion margin, Phi(s_{t+1}) >= 1 - delta.
inline double gold_reward(const Transition& t, const ShapingConfig& cfg) {
    return t.phi_s_next.value() >= 1.0 - cfg.completion_margin_delta ? 1.0 : 0.0;
}

// Final shaped reward: gold + shaping term.
inline double grm_reward(const Transition& t, const ShapingConfig& cfg) {
    return gold_reward(t, cfg) + shaping_term(t, cfg);
}

// Raw progress difference Phi(s_{t+1}) - Phi(s_t). UNSAFE FOR TRAINING: with
// gamma < 1 the discounted return under this reward is maximized by camping
// in high-progress states instead of finishing the task. Kept public for the
// trap demonstration only.
inline double naive_reward(const Transition& t) {
    return t.phi_s_next.value() - t.phi_s.value();
}

// sum_{t=0}^{T-1} gamma^t * (gamma*phi[t+1] - phi[t]) over a progress path;
// equals gamma^T * phi[T] - phi[0] up to rounding (finite-horizon telescoping).
inline double discounted_shaping_sum(std::span<const double> phis, const ShapingConfig& cfg) {
    return kernels::discounted_shaping_sum(phis, cfg.gamma);
}

double discounted_shaping_sum(std::span<const progress::Progress> phis,
                              const ShapingConfig& cfg);

// A smooth progress path phi(t) with its time derivative, for the
// continuous-time consistency check.
struct PhiPath {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
};

// Forward-Euler residual of the discounted-potential ODE: integrates
// d/dt (e^{-lambda t} phi(t)) with step h over [0, T] by rectangles,
//   sum_k h * e^{-lambda t_k} * (phi'(t_k) - lambda*phi(t_k)),
// and returns the absolute error against the analytic boundary term
// e^{-lambda T} phi(T) - phi(0). First-order in h: halving h roughly halves
// the error. (The sampled shaping sum itself telescopes exactly; this is the
// instantaneous-density form that connects it to continuous time.)
double euler_consistency_error(double lambda_rate, const PhiPath& phi_path, double h,
                               double horizon_T);

}  // namespace dopamine::shaping
