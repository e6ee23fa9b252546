#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dopamine/estimators.hpp"
#include "dopamine/trajectory.hpp"

// Reward-model quality metrics: rank correlation of predicted frame values
// against chronological order on shuffled frames, and the threshold cascade
// that classifies whole rollouts.
namespace dopamine::evaluation {

enum class SamplingDensity { Sparse, Medium, Dense };

SamplingDensity density_from_name(const std::string& name);
std::string to_string(SamplingDensity d);

struct VocConfig {
    SamplingDensity sampling = SamplingDensity::Sparse;
    std::uint64_t shuffle_seed = 0;
    int medium_points_per_segment = 3;  // interior samples between keyframes
    int dense_max_frames = 48;          // uniform cap for the dense sweep
};

struct VocScore {
    double value = 0.0;
    bool degenerate = false;  // constant predictions carry no order information
};

// Spearman rank correlation between predicted values and chronological rank;
// prediction ties get average ranks. Constant predictions return 0 with the
// degenerate flag set.
VocScore voc_score(const std::vector<double>& predicted, const std::vector<int>& true_order);

struct TrajectoryVoc {
    std::string trajectory_id;
    SamplingDensity density = SamplingDensity::Sparse;
    double voc = 0.0;
    bool skipped = false;  // more than 10% of frames failed to score
    int failed_frames = 0;
};

struct VocReport {
    std::vector<TrajectoryVoc> per_trajectory;
    double mean_voc = 0.0;  // over non-skipped trajectories

    void write_csv(const std::string& path) const;  // trajectory_id, density, voc
};

// Scores frames of each trajectory independently against the fixed init/goal
// anchors (forward-anchored prediction: the raw hop from the initial state,
// whose rank order is what the metric measures), shuffles them under the
// seed, and rank-correlates against true chronological order.
VocReport evaluate_estimator_voc(const estimators::HopEstimator& est,
                                 const std::vector<Trajectory>& trajectories,
                                 const VocConfig& cfg);

enum class OutcomeLabel { SE, PSE, FE };

OutcomeLabel outcome_from_name(const std::string& name);
std::string to_string(OutcomeLabel label);

struct ProgressCurve {
    std::vector<double> values;  // P_t per timestep, each in [0,1]
};

// Threshold cascade over a progress curve (1-based t over T steps):
//   SE  iff P_final > 0.8 and (3/T) * sum_{t=ceil(2T/3)}^{T} P_t > 0.6
//   PSE iff mean_t P_t >= xi
//   FE  otherwise.
// SE is checked first. Requires T >= 3.
OutcomeLabel judge_outcome(const ProgressCurve& curve, double xi = 0.4);

struct ClassificationReport {
    long confusion[3][3] = {};  // [truth][predicted], SE/PSE/FE order
    long total = 0;
    double overall_accuracy = 0.0;
    double per_class_accuracy[3] = {};

    void write_csv(const std::string& path) const;
};

ClassificationReport classification_report(const std::vector<OutcomeLabel>& predictions,
                                           const std::vector<OutcomeLabel>& truth);

}  // namespace dopamine::evaluation
