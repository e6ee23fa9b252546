#pragma once

#include <cstdint>

#include "dopamine/progress.hpp"

namespace dopamine::progress {

enum class TrackerMode {
    FusionAverage,     // plain three-way mean each step
    ConsistencyGated,  // conservative update weighted by forward/backward agreement
};

// Value-type progress accumulator for one rollout. Copyable and cheap; a
// single instance must not be mutated from two threads.
struct TrackerState {
    Progress current{};           // maintained fused progress
    double last_weight = 1.0;     // consistency weight of the latest step, in (0,1]
    std::uint64_t step_index = 0;
    TrackerMode mode = TrackerMode::ConsistencyGated;
};

inline TrackerState make_tracker(TrackerMode mode, Progress initial = Progress(0.0)) {
    TrackerState s;
    s.current = initial;
    s.mode = mode;
    return s;
}

// Advances the tracker by one observation triple:
//   hop_inc       predicted hop from the previous state to the current one
//   hop_from_init predicted hop anchored at the initial state
//   hop_from_goal predicted hop anchored at the goal state
//
// FusionAverage: current <- mean(incremental, forward, backward), weight 1.
// ConsistencyGated: current <- current + (w/2)*(mean(F,B) - current + delta),
// where w is the Gaussian agreement weight; w -> 0 freezes the estimate, so
// divergent (out-of-distribution) signals are ignored.
inline TrackerState tracker_step(const TrackerState& state, Hop hop_inc, Hop hop_from_init,
                                 Hop hop_from_goal, const ConsistencyConfig& cfg) {
    cfg.validate();
    const Progress phi_f = forward_anchored(hop_from_init);
    const Progress phi_b = backward_anchored(hop_from_goal);
    const double delta = incremental_delta(state.current, hop_inc);

    TrackerState next = state;
    next.step_index = state.step_index + 1;
    if (state.mode == TrackerMode::FusionAverage) {
        const Progress phi_i = Progress::clamped(state.current.value() + delta);
        next.current = fuse_average({phi_i, phi_f, phi_b});
        next.last_weight = 1.0;
        return next;
    }
    const double w = consistency_weight(phi_f, phi_b, cfg);
    const double mean_fb = 0.5 * (phi_f.value() + phi_b.value());
    const double updated =
        state.current.value() + 0.5 * w * (mean_fb - state.current.value() + delta);
    next.current = Progress::clamped(updated);
    next.last_weight = w;
    return next;
}

}  // namespace dopamine::progress
