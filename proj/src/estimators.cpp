#include "dopamine/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace dopamine::estimators {

using progress::Hop;
using progress::Progress;

StateKey key_of(const labeling::RefSet& refs) {
    if (refs.empty()) throw UnresolvableRef("empty reference set");
    return refs.begin()->second;
}

double OracleEstimator::potential(const StateKey& key) const {
    const auto v = truth_(key);
    if (!v) throw UnresolvableRef("no ground-truth potential for '" + key + "'");
    return *v;
}

Hop OracleEstimator::hop(const EstimatorQuery& q) const {
    return progress::hop_label(Progress(potential(q.before)), Progress(potential(q.after)));
}

Hop AntiOracleEstimator::hop(const EstimatorQuery& q) const {
    const auto before = truth_(q.before);
    const auto after = truth_(q.after);
    if (!before || !after) throw UnresolvableRef("anti-oracle: unknown reference");
    return progress::hop_label(Progress(1.0 - *before), Progress(1.0 - *after));
}

Hop NoisyEstimator::hop(const EstimatorQuery& q) const {
    double value = oracle_.hop(q).value();
    if (noise_.gaussian_sigma > 0.0) value += gen_.normal(0.0, noise_.gaussian_sigma);
    if (noise_.ood_region && noise_.ood_divergence > 0.0 && noise_.ood_region(q.after)) {
        if (q.before == q.init) value += 0.5 * noise_.ood_divergence;
        if (q.before == q.goal) value -= 0.5 * noise_.ood_divergence;
    }
    if (noise_.clamp) value = std::clamp(value, -1.0, 1.0);
    return Hop::clamped(value);
}

namespace {

// Parses "cell/<x>/<y>" produced by the gridworld fixtures.
bool parse_cell_key(const StateKey& key, int& x, int& y) {
    if (key.rfind("cell/", 0) != 0) return false;
    const auto second = key.find('/', 5);
    if (second == std::string::npos) return false;
    try {
        x = std::stoi(key.substr(5, second - 5));
        y = std::stoi(key.substr(second + 1));
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

}  // namespace

NamedFeatureMap make_feature_map(const std::string& name, const nlohmann::json& params,
                                 PotentialFn truth) {
    NamedFeatureMap fm;
    fm.name = name;
    fm.params = params;
    if (name == "grid_coords") {
        const double w = params.at("width").get<double>();
        const double h = params.at("height").get<double>();
        fm.fn = [w, h](const StateKey& key) {
            int x = 0, y = 0;
            if (!parse_cell_key(key, x, y)) throw UnresolvableRef("not a cell key: " + key);
            return std::vector<double>{x / std::max(w - 1.0, 1.0), y / std::max(h - 1.0, 1.0)};
        };
    } else if (name == "grid_rbf") {
        const double w = params.at("width").get<double>();
        const double h = params.at("height").get<double>();
        const int per_axis = params.value("centers_per_axis", 4);
        const double bw = params.value("bandwidth", 3.0);
        std::vector<std::pair<double, double>> centers;
        for (int cy = 0; cy < per_axis; ++cy) {
            for (int cx = 0; cx < per_axis; ++cx) {
                centers.emplace_back((cx + 0.5) * w / per_axis, (cy + 0.5) * h / per_axis);
            }
        }
        fm.fn = [centers, bw](const StateKey& key) {
            int x = 0, y = 0;
            if (!parse_cell_key(key, x, y)) throw UnresolvableRef("not a cell key: " + key);
            std::vector<double> out;
            out.reserve(centers.size());
            for (const auto& [cx, cy] : centers) {
                const double dx = x - cx;
                const double dy = y - cy;
                out.push_back(std::exp(-(dx * dx + dy * dy) / (2.0 * bw * bw)));
            }
            return out;
        };
    } else if (name == "true_phi") {
        if (!truth) throw ConfigError("feature map 'true_phi' needs a potential function");
        fm.fn = [truth](const StateKey& key) {
            const auto v = truth(key);
            if (!v) throw UnresolvableRef("true_phi: unknown reference " + key);
            return std::vector<double>{*v};
        };
    } else if (name == "hash_random") {
        const int dim = params.value("dim", 8);
        fm.fn = [dim](const StateKey& key) {
            std::vector<double> out;
            out.reserve(static_cast<std::size_t>(dim));
            std::uint64_t s = rng::fnv1a64(key);
            for (int i = 0; i < dim; ++i) {
                out.push_back(2.0 * (static_cast<double>(rng::splitmix64(s) >> 11) * 0x1.0p-53) -
                              1.0);
            }
            return out;
        };
    } else {
        throw ConfigError("unknown feature map: " + name);
    }
    return fm;
}

namespace {

// In-place Cholesky solve of (A + lambda*I) x = rhs for SPD A. Returns false
// if a pivot collapses, i.e. the system is singular at this regularization.
bool cholesky_solve(std::vector<std::vector<double>> a, std::vector<double> rhs, double lambda,
                    std::vector<double>& out) {
    const std::size_t n = a.size();
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += a[i][i];
    const double pivot_floor = std::max(trace, 1.0) * 1e-12;
    for (std::size_t i = 0; i < n; ++i) a[i][i] += lambda;

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = a[i][j];
            for (std::size_t k = 0; k < j; ++k) sum -= a[i][k] * a[j][k];
            if (i == j) {
                if (sum <= pivot_floor) return false;
                a[i][i] = std::sqrt(sum);
            } else {
                a[i][j] = sum / a[j][j];
            }
        }
    }
    // forward then backward substitution
    for (std::size_t i = 0; i < n; ++i) {
        double sum = rhs[i];
        for (std::size_t k = 0; k < i; ++k) sum -= a[i][k] * rhs[k];
        rhs[i] = sum / a[i][i];
    }
    out.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double sum = rhs[ii];
        for (std::size_t k = ii + 1; k < n; ++k) sum -= a[k][ii] * out[k];
        out[ii] = sum / a[ii][ii];
    }
    return true;
}

}  // namespace

FittedHopEstimator::FittedHopEstimator(NamedFeatureMap features, std::vector<double> weights,
                                       double bias, bool rank_deficient, double regularization,
                                       int pair_budget)
    : features_(std::move(features)),
      weights_(std::move(weights)),
      bias_(bias),
      rank_deficient_(rank_deficient),
      regularization_(regularization),
      pair_budget_(pair_budget) {}

double FittedHopEstimator::predict_progress(const StateKey& key) const {
    const std::vector<double> f = features_.fn(key);
    if (f.size() != weights_.size()) {
        throw UnresolvableRef("feature dimension mismatch for '" + key + "'");
    }
    double v = bias_;
    for (std::size_t i = 0; i < f.size(); ++i) v += weights_[i] * f[i];
    return std::clamp(v, 0.0, 1.0);
}

Hop FittedHopEstimator::hop(const EstimatorQuery& q) const {
    return progress::hop_label(Progress(predict_progress(q.before)),
                               Progress(predict_progress(q.after)));
}

nlohmann::json FittedHopEstimator::to_json() const {
    return nlohmann::json{{"feature_map", features_.name},
                          {"feature_params", features_.params},
                          {"weights", weights_},
                          {"bias", bias_},
                          {"rank_deficient", rank_deficient_},
                          {"regularization", regularization_},
                          {"pair_budget", pair_budget_}};
}

void FittedHopEstimator::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write estimator: " + path);
    out << to_json().dump(2) << "\n";
}

FittedHopEstimator FittedHopEstimator::load(const std::string& path, PotentialFn truth) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open estimator: " + path);
    nlohmann::json j;
    try {
        in >> j;
        NamedFeatureMap fm = make_feature_map(j.at("feature_map").get<std::string>(),
                                              j.value("feature_params", nlohmann::json::object()),
                                              std::move(truth));
        return FittedHopEstimator(std::move(fm), j.at("weights").get<std::vector<double>>(),
                                  j.at("bias").get<double>(), j.value("rank_deficient", false),
                                  j.value("regularization", 0.0), j.value("pair_budget", 0));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("bad estimator file: ") + e.what());
    }
}

FittedHopEstimator FittedHopEstimator::random_baseline(NamedFeatureMap features,
                                                       std::uint64_t seed) {
    rng::Rng gen(rng::derive(seed, "random-baseline"));
    // Probe dimension lazily: callers must use keys compatible with the map,
    // so the weight count comes from the params where available.
    std::size_t dim = 0;
    if (features.name == "grid_coords") dim = 2;
    else if (features.name == "grid_rbf") {
        const int per_axis = features.params.value("centers_per_axis", 4);
        dim = static_cast<std::size_t>(per_axis) * per_axis;
    } else if (features.name == "true_phi") dim = 1;
    else if (features.name == "hash_random") dim = static_cast<std::size_t>(features.params.value("dim", 8));
    else throw ConfigError("random_baseline: unknown feature map " + features.name);
    std::vector<double> w(dim);
    for (auto& v : w) v = gen.uniform(-1.0, 1.0);
    return FittedHopEstimator(std::move(features), std::move(w), gen.uniform(), false);
}

FittedHopEstimator fit_one_shot(const OneShotFitConfig& cfg) {
    if (cfg.demo.keyframe_indices.size() < 2) {
        throw ConfigError("one-shot fit needs a demo with at least 2 keyframes");
    }
    if (cfg.pair_budget < 1) throw ConfigError("pair_budget must be >= 1");
    if (cfg.regularization < 0.0) throw ConfigError("regularization must be >= 0");

    std::vector<labeling::HopSample> samples =
        labeling::generate_hop_samples(cfg.demo, cfg.sampling);
    if (samples.empty()) throw ConfigError("demo produced no hop samples");
    rng::Rng gen(rng::derive(cfg.sampling.rng_seed, "one-shot-fit"));
    gen.shuffle(samples);
    if (static_cast<int>(samples.size()) > cfg.pair_budget) {
        samples.resize(static_cast<std::size_t>(cfg.pair_budget));
    }

    // Assemble the normal equations of the linearized hop-MSE system.
    const std::size_t feat_dim = cfg.feature_map.fn(key_of(samples.front().before_ref)).size();
    const std::size_t dim = feat_dim + 1;  // + bias
    std::vector<std::vector<double>> gram(dim, std::vector<double>(dim, 0.0));
    std::vector<double> rhs(dim, 0.0);
    std::vector<double> row(dim, 0.0);
    for (const auto& s : samples) {
        const std::vector<double> fp = cfg.feature_map.fn(key_of(s.before_ref));
        const std::vector<double> fq = cfg.feature_map.fn(key_of(s.after_ref));
        const double h = s.hop;
        const double p_coef = h >= 0.0 ? (1.0 - h) : (1.0 + h);
        for (std::size_t k = 0; k < feat_dim; ++k) row[k] = fq[k] - p_coef * fp[k];
        row[feat_dim] = h >= 0.0 ? h : -h;
        const double target = h >= 0.0 ? h : 0.0;
        for (std::size_t a = 0; a < dim; ++a) {
            for (std::size_t b = 0; b <= a; ++b) gram[a][b] += row[a] * row[b];
            rhs[a] += row[a] * target;
        }
    }
    for (std::size_t a = 0; a < dim; ++a) {
        for (std::size_t b = a + 1; b < dim; ++b) gram[a][b] = gram[b][a];
    }

    std::vector<double> theta;
    const bool full_rank = cholesky_solve(gram, rhs, 0.0, theta);
    if (!full_rank) {
        if (cfg.regularization <= 0.0) {
            throw SingularFitError(
                "one-shot fit is rank-deficient and regularization is 0; "
                "either enrich the features or set regularization > 0");
        }
        if (!cholesky_solve(gram, rhs, cfg.regularization, theta)) {
            throw SingularFitError("one-shot fit singular even under regularization");
        }
    } else if (cfg.regularization > 0.0) {
        // The caller asked for ridge explicitly; honor it.
        cholesky_solve(gram, rhs, cfg.regularization, theta);
    }

    std::vector<double> w(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(feat_dim));
    return FittedHopEstimator(cfg.feature_map, std::move(w), theta[feat_dim], !full_rank,
                              cfg.regularization, cfg.pair_budget);
}

double hop_mse(const HopEstimator& est, const std::vector<labeling::HopSample>& samples) {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : samples) {
        EstimatorQuery q;
        q.init = key_of(s.init_ref);
        q.goal = key_of(s.goal_ref);
        q.before = key_of(s.before_ref);
        q.after = key_of(s.after_ref);
        q.task_text = s.task_text;
        const double err = est.hop(q).value() - s.hop;
        acc += err * err;
    }
    return acc / static_cast<double>(samples.size());
}

}  // namespace dopamine::estimators
