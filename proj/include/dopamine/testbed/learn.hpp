#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dopamine/estimators.hpp"
#include "dopamine/shaping.hpp"
#include "dopamine/testbed/mdp.hpp"
#include "dopamine/tracker.hpp"

namespace dopamine::testbed {

enum class RewardVariant { Gold, Grm, Naive };

RewardVariant reward_variant_from_name(const std::string& name);
std::string to_string(RewardVariant v);

// One estimator instance per seed keeps stateful (noisy) estimators
// reproducible and seed runs independent.
using EstimatorFactory =
    std::function<std::unique_ptr<estimators::HopEstimator>(std::uint64_t seed)>;

EstimatorFactory oracle_factory(const TabularMDP& mdp);
EstimatorFactory noisy_factory(const TabularMDP& mdp, estimators::NoiseModel noise);

struct LearnParams {
    double learning_rate = 0.2;
    double epsilon_explore = 0.1;
    int episode_cap = 1500;
    int max_steps = 300;
    int success_window = 20;      // moving-window size for the threshold rule
    double success_threshold = 0.8;
    shaping::ShapingConfig shaping = shaping::ShapingConfig::from_gamma(0.98);
    progress::TrackerMode tracker_mode = progress::TrackerMode::FusionAverage;
    progress::ConsistencyConfig consistency{};
};

struct SeedRun {
    std::uint64_t seed = 0;
    int episodes_to_threshold = 0;  // episode cap when the window never crossed
    double final_success_rate = 0.0;
    std::vector<double> curve;      // moving success rate, one entry per episode
    double max_telescoping_error = 0.0;  // live check of the shaping-sum identity
};

struct ExperimentReport {
    std::string algorithm;
    std::string reward_variant;
    std::string estimator_name;
    std::string tracker_mode;
    std::string note;  // caveats stamped into the output headers
    std::vector<SeedRun> runs;

    double median_episodes_to_threshold() const;
    double mean_final_success() const;
    double max_telescoping_error() const;

    void write_csv(const std::string& path) const;
    void write_curves_csv(const std::string& path) const;  // per-episode mean curve
    nlohmann::json summary_json() const;
};

// Tabular epsilon-greedy Q-learning. For the Grm and Naive variants the
// per-step reward is computed from a ProgressTracker fed by three estimator
// queries (incremental, forward-anchored, backward-anchored), i.e. the full
// online fusion/gating pipeline; Gold uses the environment's sparse reward.
// Entering a gold state ends the episode and the terminal update does not
// bootstrap. Seeds run independently (in parallel when jobs > 1) and are
// merged in seed order.
ExperimentReport run_q_learning(const TabularMDP& mdp, RewardVariant variant,
                                const EstimatorFactory& estimator, const LearnParams& params,
                                const std::vector<std::uint64_t>& seeds, int jobs = 1);

// REINFORCE with a softmax tabular policy and a per-state running baseline.
// Same reward plumbing and reporting as run_q_learning.
ExperimentReport run_reinforce(const TabularMDP& mdp, RewardVariant variant,
                               const EstimatorFactory& estimator, const LearnParams& params,
                               const std::vector<std::uint64_t>& seeds, int jobs = 1);

// --- exact policy-gradient machinery (the finite-difference oracle's target)

// J(theta) = V^pi(start) for the softmax policy given by logits theta[s*A+a],
// computed exactly via the linear policy-evaluation system.
double softmax_policy_value(const TabularMDP& mdp, const RewardFn& reward, double gamma,
                            std::span<const double> theta);

// Exact gradient dJ/dtheta from the policy-gradient theorem with discounted
// state occupancy: dJ/dtheta(s,b) = d(s) * pi(b|s) * (Q(s,b) - V(s)).
std::vector<double> softmax_policy_gradient(const TabularMDP& mdp, const RewardFn& reward,
                                            double gamma, std::span<const double> theta);

// One-sided sign test: probability of at least `wins` successes in
// wins+losses fair coin flips. Ties must be excluded by the caller.
double sign_test_p_value(int wins, int losses);

}  // namespace dopamine::testbed
