#pragma once

#include <string>
#include <vector>

#include "dopamine/testbed/mdp.hpp"

namespace dopamine::testbed {

inline constexpr double kGreedyTieTol = 1e-6;

struct VISolution {
    std::vector<double> q;  // [s][a]
    std::vector<double> v;  // max_a q
    int iterations = 0;
    double residual = 0.0;

    double q_at(int s, int a, int n_actions) const {
        return q[static_cast<std::size_t>(s) * n_actions + static_cast<std::size_t>(a)];
    }
    // Actions within kGreedyTieTol of the state's max.
    std::vector<int> greedy_set(int s, int n_actions) const;
};

// Exact fixed-point solve by successive approximation; stops once the
// sup-norm change drops below tol. Throws if the iteration cap is hit, which
// signals a malformed MDP rather than a tolerance problem.
VISolution value_iteration(const TabularMDP& mdp, const RewardFn& reward, double gamma,
                           double tol = 1e-10, int max_iter = 200000);

struct InvarianceReport {
    bool invariant = false;
    double q_shift_max_err = 0.0;       // max |Q_grm - (Q_gold - Phi)|
    std::vector<int> mismatched_states; // non-terminal states whose greedy sets differ
    std::string describe() const;
};

// Solves the MDP under the sparse gold reward and under the shaped reward,
// then checks the two exact guarantees: identical greedy-action sets at every
// non-terminal state, and Q_grm = Q_gold - Phi within tol.
InvarianceReport verify_policy_invariance(const TabularMDP& mdp,
                                          const shaping::ShapingConfig& cfg,
                                          double tol = 1e-6);

// Same check against an arbitrary alternative reward (used to demonstrate
// that a mis-shaped reward fails the check).
InvarianceReport verify_invariance_against(const TabularMDP& mdp, const RewardFn& alternative,
                                           double gamma, double tol = 1e-6);

struct TrapReport {
    std::vector<int> naive_greedy_at_honeypot;
    std::vector<int> grm_greedy_at_honeypot;
    bool naive_self_loops = false;   // naive-optimal action at the lure is "stay"
    bool grm_advances = false;       // shaped-optimal action is "advance"
    double naive_goal_probability = 0.0;  // within the horizon, greedy naive policy
    double grm_goal_probability = 0.0;    // within the horizon, greedy shaped policy
    double stagnation_objective = 0.0;    // sum_{t>=1} gamma^{t-1} Phi(s_t), stay-forever policy
    std::string describe() const;
};

// Solves the trap MDP under the raw progress-difference reward and under the
// shaped reward, and reports how the two optimal policies part ways at the
// honeypot. Goal probabilities come from exact forward propagation of each
// greedy policy, not from sampling.
TrapReport demonstrate_semantic_trap(const TrapMDPSpec& spec, double gamma);

}  // namespace dopamine::testbed
