#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dopamine/labeling.hpp"
#include "dopamine/progress.hpp"
#include "dopamine/rng.hpp"
#include "dopamine/trajectory.hpp"

// Pluggable hop estimation behind one query interface: an exact oracle over a
// known potential, configurable noise / out-of-distribution corruption for
// stress-testing the consistency gate, and a lightweight estimator fitted
// from a single demonstration.
namespace dopamine::estimators {

// Canonical state key: any synchronized view's frame ref (fixtures use the
// first listed view). Resolvers are built alongside the environment/dataset.
using StateKey = std::string;

struct EstimatorQuery {
    StateKey init;
    StateKey goal;
    StateKey before;
    StateKey after;
    std::string task_text;
};

struct UnresolvableRef : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class HopEstimator {
  public:
    virtual ~HopEstimator() = default;
    // Predicted hop from q.before to q.after, conditioned on the anchors.
    virtual progress::Hop hop(const EstimatorQuery& q) const = 0;
    virtual std::string name() const = 0;
};

// Ground-truth progress lookup; nullopt means the reference is unknown.
using PotentialFn = std::function<std::optional<double>(const StateKey&)>;

// Exact hop labels computed from a known potential.
class OracleEstimator : public HopEstimator {
  public:
    explicit OracleEstimator(PotentialFn truth) : truth_(std::move(truth)) {}
    progress::Hop hop(const EstimatorQuery& q) const override;
    std::string name() const override { return "oracle"; }
    double potential(const StateKey& key) const;

  private:
    PotentialFn truth_;
};

// Oracle of the reversed potential 1 - Phi; rank-inverts every score.
class AntiOracleEstimator : public HopEstimator {
  public:
    explicit AntiOracleEstimator(PotentialFn truth) : truth_(std::move(truth)) {}
    progress::Hop hop(const EstimatorQuery& q) const override;
    std::string name() const override { return "anti-oracle"; }

  private:
    PotentialFn truth_;
};

// Uniform noise in [-1,1], uncorrelated with the query. Stateful; not for
// concurrent use.
class RandomEstimator : public HopEstimator {
  public:
    explicit RandomEstimator(std::uint64_t seed) : gen_(seed) {}
    progress::Hop hop(const EstimatorQuery&) const override {
        return progress::Hop(gen_.uniform(-1.0, 1.0));
    }
    std::string name() const override { return "random"; }

  private:
    mutable rng::Rng gen_;
};

// Gaussian noise everywhere plus an antisymmetric forward/backward shift
// inside a designated OOD region: forward-anchored queries (before == init)
// gain +ood_divergence/2, backward-anchored ones (before == goal) lose the
// same amount, so the forward/backward discrepancy grows by ood_divergence
// exactly where the region is entered. Outputs clamp to [-1,1] by default.
struct NoiseModel {
    double gaussian_sigma = 0.0;
    std::function<bool(const StateKey&)> ood_region;  // null: nowhere
    double ood_divergence = 0.0;
    bool clamp = true;
};

class NoisyEstimator : public HopEstimator {
  public:
    NoisyEstimator(PotentialFn truth, NoiseModel noise, std::uint64_t seed)
        : oracle_(std::move(truth)), noise_(std::move(noise)), gen_(seed) {}
    progress::Hop hop(const EstimatorQuery& q) const override;
    std::string name() const override { return "noisy"; }

  private:
    OracleEstimator oracle_;
    NoiseModel noise_;
    mutable rng::Rng gen_;
};

// Named state-feature extractor. Built-in maps round-trip through JSON via
// make_feature_map; ad-hoc lambdas do not.
struct NamedFeatureMap {
    std::string name;
    nlohmann::json params;
    std::function<std::vector<double>(const StateKey&)> fn;
};

// Registry of built-in maps:
//   "grid_coords"  params {width, height}: normalized (x, y) from "cell/x/y" keys
//   "grid_rbf"     params {width, height, centers_per_axis, bandwidth}
//   "true_phi"     params {} + caller-supplied potential: the realizable case
//   "hash_random"  params {dim}: deterministic pseudo-random features
NamedFeatureMap make_feature_map(const std::string& name, const nlohmann::json& params,
                                 PotentialFn truth = nullptr);

struct OneShotFitConfig {
    Trajectory demo;                    // exactly one demonstration
    NamedFeatureMap feature_map;
    double regularization = 1e-8;
    int pair_budget = 256;
    labeling::SamplingConfig sampling;  // drives pair generation from the demo
};

// Raised when the unregularized normal equations are rank-deficient.
struct SingularFitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Linear progress model phi_hat(s) = clamp01(w . f(s) + b); hops are the hop
// label of the two predicted progress values.
class FittedHopEstimator : public HopEstimator {
  public:
    FittedHopEstimator(NamedFeatureMap features, std::vector<double> weights, double bias,
                       bool rank_deficient, double regularization = 0.0, int pair_budget = 0);

    progress::Hop hop(const EstimatorQuery& q) const override;
    std::string name() const override { return "fitted:" + features_.name; }

    double predict_progress(const StateKey& key) const;
    bool rank_deficient() const { return rank_deficient_; }
    const std::vector<double>& weights() const { return weights_; }
    double bias() const { return bias_; }

    // Flat JSON: weights, bias, feature-map name/params, fit-config echo.
    nlohmann::json to_json() const;
    void save(const std::string& path) const;
    static FittedHopEstimator load(const std::string& path, PotentialFn truth = nullptr);

    // Seeded unfitted baseline over the same features.
    static FittedHopEstimator random_baseline(NamedFeatureMap features, std::uint64_t seed);

  private:
    NamedFeatureMap features_;
    std::vector<double> weights_;
    double bias_ = 0.0;
    bool rank_deficient_ = false;
    double regularization_ = 0.0;
    int pair_budget_ = 0;
};

// One-shot adaptation: draws hop samples from the single demo via the
// labeling pipeline (up to pair_budget of them, seeded), then solves the
// ridge system over the hop-consistency residuals
//   phi(q) - (1-H) phi(p) - H = 0   (H >= 0)
//   phi(q) - (1+H) phi(p)     = 0   (H <  0),
// which are the hop-MSE conditions linearized at the labels. Rank deficiency
// with zero regularization raises SingularFitError; with ridge it is solved
// but flagged on the returned estimator. Deterministic given (demo, config).
FittedHopEstimator fit_one_shot(const OneShotFitConfig& cfg);

// Mean squared error of predicted vs labeled hops over a sample set. The
// query key of a per-view ref set is its first view's ref.
double hop_mse(const HopEstimator& est, const std::vector<labeling::HopSample>& samples);

StateKey key_of(const labeling::RefSet& refs);

}  // namespace dopamine::estimators
