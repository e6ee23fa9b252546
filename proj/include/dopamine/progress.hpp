#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "dopamine/kernels.hpp"

// Hop algebra over normalized task progress.
//
// Progress lives in [0,1] (0 at the initial state, 1 at the goal). A hop is
// relative-relative progress between two states: forward change normalized by
// the remaining distance to the goal, backward change by the distance already
// covered. Applying hops can never leave [0,1], which is the whole point of
// the formulation.
namespace dopamine::progress {

// Normalized completion in [0,1]. Construction validates; clamped() is the
// lenient entry point for noisy estimator outputs.
class Progress {
  public:
    Progress() = default;
    explicit Progress(double v) : v_(v) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::domain_error("Progress outside [0,1]: " + std::to_string(v));
        }
    }
    static Progress clamped(double v) {
        Progress p;
        p.v_ = std::clamp(v, 0.0, 1.0);
        return p;
    }
    double value() const { return v_; }

  private:
    double v_ = 0.0;
};

// Relative-relative progress in [-1,1].
class Hop {
  public:
    Hop() = default;
    explicit Hop(double v) : v_(v) {
        if (!(v >= -1.0 && v <= 1.0)) {
            throw std::domain_error("Hop outside [-1,1]: " + std::to_string(v));
        }
    }
    static Hop clamped(double v) {
        Hop h;
        h.v_ = std::clamp(v, -1.0, 1.0);
        return h;
    }
    double value() const { return v_; }

  private:
    double v_ = 0.0;
};

struct PerspectiveEstimates {
    Progress incremental;
    Progress forward;
    Progress backward;
};

// Hop label between two progress values:
//   (phi_q - phi_p) / (1 - phi_p)  when phi_q >= phi_p   (progress)
//   (phi_q - phi_p) / phi_p        when phi_q <  phi_p   (regress)
// Degenerate denominators (phi_p == 1 with progress, phi_p == 0 with regress)
// have a zero numerator or are unreachable; both return exactly 0.
inline Hop hop_label(Progress phi_p, Progress phi_q) {
    const double p = phi_p.value();
    const double q = phi_q.value();
    if (q >= p) {
        const double denom = 1.0 - p;
        if (denom <= 0.0) return Hop(0.0);
        return Hop(std::clamp((q - p) / denom, -1.0, 1.0));
    }
    if (p <= 0.0) return Hop(0.0);
    return Hop(std::clamp((q - p) / p, -1.0, 1.0));
}

// Signed progress change produced by a hop from phi_prev:
//   (1 - phi_prev) * hop  if hop >= 0
//   phi_prev * hop        otherwise.
inline double incremental_delta(Progress phi_prev, Hop hop) {
    const double p = phi_prev.value();
    const double h = hop.value();
    return h >= 0.0 ? (1.0 - p) * h : p * h;
}

// Applies a hop: phi_prev + incremental_delta. Stays in [0,1] for any valid
// inputs; the clamp only absorbs float rounding at the boundaries.
inline Progress apply_hop(Progress phi_prev, Hop hop) {
    return Progress::clamped(phi_prev.value() + incremental_delta(phi_prev, hop));
}

// Forward-anchored estimate: progress equals the hop from the initial state.
// A wrong-signed (negative) hop from the start is clamped to 0 rather than
// rejected, since learned estimators can emit either sign.
inline Progress forward_anchored(Hop hop_from_init) {
    return Progress::clamped(std::max(hop_from_init.value(), 0.0));
}

// Backward-anchored estimate: 1 + hop from the goal state. Positive hops from
// the goal are clamped to 0.
inline Progress backward_anchored(Hop hop_from_goal) {
    return Progress::clamped(1.0 + std::min(hop_from_goal.value(), 0.0));
}

// Arithmetic mean of the three perspectives.
inline Progress fuse_average(const PerspectiveEstimates& p) {
    return Progress::clamped(
        (p.incremental.value() + p.forward.value() + p.backward.value()) / 3.0);
}

struct ConsistencyConfig {
    double sensitivity_alpha = 20.0;
    double epsilon_stability = 1e-6;

    void validate() const {
        if (!(sensitivity_alpha > 0.0)) throw std::domain_error("sensitivity_alpha must be > 0");
        if (!(epsilon_stability > 0.0)) throw std::domain_error("epsilon_stability must be > 0");
    }
};

// Gaussian confidence weight from the normalized forward/backward discrepancy:
//   w = exp(-alpha * (|phi_b - phi_f| / (mean + eps))^2), in (0,1].
// Discrepancies weigh more heavily where progress is still small.
inline double consistency_weight(Progress phi_f, Progress phi_b, const ConsistencyConfig& cfg) {
    const double f = phi_f.value();
    const double b = phi_b.value();
    const double mean = 0.5 * (f + b);
    const double d_norm = std::fabs(b - f) / (mean + cfg.epsilon_stability);
    return std::exp(-cfg.sensitivity_alpha * d_norm * d_norm);
}

// Folds apply_hop along a hop sequence, yielding one progress value per hop.
inline std::vector<Progress> reconstruct_trajectory(Progress initial, std::span<const Hop> hops) {
    std::vector<Progress> out;
    out.reserve(hops.size());
    Progress cur = initial;
    for (const Hop& h : hops) {
        cur = apply_hop(cur, h);
        out.push_back(cur);
    }
    return out;
}

// Raw-array reconstruction for bulk property checks: lane i of phi is an
// independent chain, advanced in place by hops[i]. Validates ranges once,
// then runs on the batch kernel.
inline void reconstruct_step_batch(std::span<double> phi, std::span<const double> hops) {
    for (double h : hops) {
        if (!(h >= -1.0 && h <= 1.0)) throw std::domain_error("hop outside [-1,1] in batch");
    }
    kernels::apply_hop_batch(phi, hops, phi);
}

}  // namespace dopamine::progress
