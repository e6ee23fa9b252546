#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dopamine/estimators.hpp"
#include "dopamine/shaping.hpp"
#include "dopamine/trajectory.hpp"

// Small finite MDPs with ground-truth potentials. Value iteration over these
// is cheap enough to serve as an exact oracle for every shaping claim, which
// is why state counts are capped at 400.
namespace dopamine::testbed {

inline constexpr int kMaxStates = 400;

struct TabularMDP {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> transition;     // dense [s][a][s'], rows sum to 1
    std::vector<std::uint8_t> terminal; // absorbing states
    std::vector<std::uint8_t> gold;     // r_gold = 1 on entering
    int start_state = 0;
    std::vector<double> true_potential; // Phi per state, Phi(start)=0, Phi(gold)=1
    std::vector<std::string> state_keys;  // estimator references, default "s<i>"

    std::span<const double> row(int s, int a) const {
        const std::size_t off =
            (static_cast<std::size_t>(s) * n_actions + static_cast<std::size_t>(a)) *
            static_cast<std::size_t>(n_states);
        return {transition.data() + off, static_cast<std::size_t>(n_states)};
    }
    double* row_mut(int s, int a) {
        return transition.data() +
               (static_cast<std::size_t>(s) * n_actions + static_cast<std::size_t>(a)) *
                   static_cast<std::size_t>(n_states);
    }

    const std::string& key(int s) const { return state_keys[static_cast<std::size_t>(s)]; }
    estimators::PotentialFn potential_fn() const;

    void finalize();        // fills default keys, makes terminals absorbing
    void validate() const;  // row sums, absorbing terminals, potential anchors
};

// Transition-indexed reward r(s, a, s').
using RewardFn = std::function<double(int, int, int)>;

// Sparse outcome reward: 1 on entering a gold state (absorbing self-loops do
// not re-fire).
RewardFn make_gold_reward(const TabularMDP& mdp);

// Gold plus the policy-invariant shaping term gamma*Phi(s') - Phi(s) over the
// MDP's true potential. Applied on every transition, absorbing ones included,
// which is what makes the Q-shift identity exact.
RewardFn make_grm_reward(const TabularMDP& mdp, const shaping::ShapingConfig& cfg);

// Pure progress difference Phi(s') - Phi(s): the trap-inducing reward.
RewardFn make_naive_reward(const TabularMDP& mdp);

// Gold plus the UNdiscounted difference Phi(s') - Phi(s) under gamma < 1: the
// mismatched-shaping mutant used to show invariance checks actually bite.
RewardFn make_gold_plus_naive_reward(const TabularMDP& mdp);

// Seeded random MDP for invariance sweeps: up to max_states/max_actions,
// state 0 is the start, the last state is the terminal gold goal.
TabularMDP make_random_mdp(std::uint64_t seed, int max_states = 20, int max_actions = 4);

struct Cell {
    int x = 0;
    int y = 0;
    auto operator<=>(const Cell&) const = default;
};

// Desk-scale manipulation stand-in: a gridworld whose subgoal cells play the
// role of keyframes, so the labeling pipeline runs end-to-end on simulated
// trajectories.
struct GridWorldSpec {
    int width = 10;
    int height = 10;
    std::set<Cell> walls;
    std::vector<Cell> subgoal_cells;
    Cell start_cell{0, 0};
    Cell goal_cell{9, 9};
    double slip_probability = 0.0;

    static std::string cell_key(int x, int y);

    // Construction checks goal reachability by graph search.
    TabularMDP to_mdp() const;

    // Phi(cell) = 1 - d(cell, goal) / d(start, goal) over BFS distances,
    // clamped to [0,1]; unreachable cells get 0.
    std::vector<double> potential_grid() const;

    // One shortest start->goal path (BFS, deterministic tie-breaking).
    std::vector<Cell> shortest_path() const;

    // The shortest path rendered as a single-view synthetic trajectory whose
    // keyframes are the subgoal cells it passes through (plus endpoints).
    Trajectory demo_trajectory(const std::string& id) const;
};

// The honeypot construction: a lure state with high potential, a risky
// completing path, and a self-loop. Under the raw progress-difference reward
// the optimal policy camps at the lure; under the shaped reward it advances.
struct TrapMDPSpec {
    double honeypot_potential = 0.9;  // Phi of the lure state, in [0,1)
    double path_risk = 0.3;           // failure probability when advancing
    int horizon = 200;

    void validate() const;
    TabularMDP to_mdp() const;

    // State ids in the generated MDP.
    static constexpr int kStart = 0;
    static constexpr int kHoneypot = 1;
    static constexpr int kGoal = 2;
    static constexpr int kFail = 3;
};

}  // namespace dopamine::testbed
