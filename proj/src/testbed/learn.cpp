#include "dopamine/testbed/learn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include "dopamine/rng.hpp"

namespace dopamine::testbed {

using estimators::EstimatorQuery;
using progress::Progress;

RewardVariant reward_variant_from_name(const std::string& name) {
    if (name == "gold") return RewardVariant::Gold;
    if (name == "grm") return RewardVariant::Grm;
    if (name == "naive") return RewardVariant::Naive;
    throw ConfigError("unknown reward variant: " + name + " (expected gold|grm|naive)");
}

std::string to_string(RewardVariant v) {
    switch (v) {
        case RewardVariant::Gold: return "gold";
        case RewardVariant::Grm: return "grm";
        case RewardVariant::Naive: return "naive";
    }
    return "?";
}

EstimatorFactory oracle_factory(const TabularMDP& mdp) {
    auto truth = mdp.potential_fn();
    return [truth](std::uint64_t) {
        return std::make_unique<estimators::OracleEstimator>(truth);
    };
}

EstimatorFactory noisy_factory(const TabularMDP& mdp, estimators::NoiseModel noise) {
    auto truth = mdp.potential_fn();
    return [truth, noise](std::uint64_t seed) {
        return std::make_unique<estimators::NoisyEstimator>(truth, noise,
                                                            rng::derive(seed, "noisy-est"));
    };
}

namespace {

int first_gold_state(const TabularMDP& mdp) {
    for (int s = 0; s < mdp.n_states; ++s) {
        if (mdp.gold[static_cast<std::size_t>(s)]) return s;
    }
    throw ConfigError("MDP has no gold state");
}

// Per-episode reward plumbing. Gold reads the environment event; Grm/Naive
// run the estimator-driven tracker and shape from consecutive estimates.
class RewardPipeline {
  public:
    RewardPipeline(const TabularMDP& mdp, RewardVariant variant,
                   const estimators::HopEstimator* est, const LearnParams& params)
        : mdp_(mdp), variant_(variant), est_(est), params_(params),
          goal_key_(mdp.key(first_gold_state(mdp))) {}

    void reset_episode() {
        tracker_ = progress::make_tracker(params_.tracker_mode, Progress(0.0));
        tracker_.step_index = 0;
        prev_phi_ = 0.0;
        shaping_sum_ = 0.0;
        disc_ = 1.0;
        phi_start_ = 0.0;
        last_phi_ = 0.0;
    }

    double step(int s, int s2) {
        gold_fired_ = false;
        if (variant_ == RewardVariant::Gold) {
            return (!mdp_.terminal[static_cast<std::size_t>(s)] &&
                    mdp_.gold[static_cast<std::size_t>(s2)])
                       ? 1.0
                       : 0.0;
        }
        const std::string& init_key = mdp_.key(mdp_.start_state);
        const std::string& s_key = mdp_.key(s);
        const std::string& s2_key = mdp_.key(s2);
        const auto inc = est_->hop({init_key, goal_key_, s_key, s2_key, ""});
        const auto fwd = est_->hop({init_key, goal_key_, init_key, s2_key, ""});
        const auto bwd = est_->hop({init_key, goal_key_, goal_key_, s2_key, ""});
        tracker_ = progress::tracker_step(tracker_, inc, fwd, bwd, params_.consistency);
        const double phi_next = tracker_.current.value();

        const shaping::Transition t{Progress(prev_phi_), Progress(phi_next)};
        double r;
        if (variant_ == RewardVariant::Grm) {
            r = shaping::grm_reward(t, params_.shaping);
            // Estimated completion is terminal: a spurious threshold crossing
            // ends the episode instead of becoming a farmable reward loop.
            gold_fired_ = shaping::gold_reward(t, params_.shaping) > 0.0;
        } else {
            r = shaping::naive_reward(t);
        }
        // Live telescoping bookkeeping over the realized estimate path.
        shaping_sum_ += disc_ * shaping::shaping_term(t, params_.shaping);
        disc_ *= params_.shaping.gamma;
        last_phi_ = phi_next;
        prev_phi_ = phi_next;
        return r;
    }

    // Whether the automated completion signal fired on the latest step.
    bool gold_fired() const { return gold_fired_; }

    // |sum_t gamma^t (gamma phi_{t+1} - phi_t) - (gamma^T phi_T - phi_0)|
    double telescoping_error() const {
        if (variant_ == RewardVariant::Gold) return 0.0;
        return std::fabs(shaping_sum_ - (disc_ * last_phi_ - phi_start_));
    }

  private:
    const TabularMDP& mdp_;
    RewardVariant variant_;
    const estimators::HopEstimator* est_;
    const LearnParams& params_;
    std::string goal_key_;
    progress::TrackerState tracker_{};
    double prev_phi_ = 0.0;
    double shaping_sum_ = 0.0;
    double disc_ = 1.0;
    double phi_start_ = 0.0;
    double last_phi_ = 0.0;
    bool gold_fired_ = false;
};

// Moving-window success bookkeeping shared by both learners.
class SuccessWindow {
  public:
    SuccessWindow(int window, double threshold, int episode_cap)
        : window_(window), threshold_(threshold), episodes_to_threshold_(episode_cap) {}

    // Returns the current moving rate after recording this episode.
    double record(int episode_index, bool success) {
        buffer_.push_back(success ? 1 : 0);
        if (static_cast<int>(buffer_.size()) > window_) buffer_.erase(buffer_.begin());
        int sum = 0;
        for (int v : buffer_) sum += v;
        const double rate = static_cast<double>(sum) / window_;
        if (!crossed_ && static_cast<int>(buffer_.size()) == window_ && rate >= threshold_) {
            crossed_ = true;
            episodes_to_threshold_ = episode_index + 1;
        }
        return rate;
    }

    int episodes_to_threshold() const { return episodes_to_threshold_; }
    double last_rate() const {
        int sum = 0;
        for (int v : buffer_) sum += v;
        return buffer_.empty() ? 0.0 : static_cast<double>(sum) / static_cast<double>(buffer_.size());
    }

  private:
    int window_;
    double threshold_;
    int episodes_to_threshold_;
    bool crossed_ = false;
    std::vector<int> buffer_;
};

int sample_next_state(const TabularMDP& mdp, int s, int a, rng::Rng& gen) {
    const auto row = mdp.row(s, a);
    double u = gen.uniform();
    for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        u -= row[static_cast<std::size_t>(s2)];
        if (u <= 0.0) return s2;
    }
    return mdp.n_states - 1;
}

SeedRun q_learning_seed(const TabularMDP& mdp, RewardVariant variant,
                        const EstimatorFactory& estimator, const LearnParams& params,
                        std::uint64_t seed) {
    rng::Rng gen(rng::derive(seed, "q-learning"));
    std::unique_ptr<estimators::HopEstimator> est;
    if (variant != RewardVariant::Gold) est = estimator(seed);
    RewardPipeline pipeline(mdp, variant, est.get(), params);

    const int S = mdp.n_states;
    const int A = mdp.n_actions;
    std::vector<double> q(static_cast<std::size_t>(S) * A, 0.0);
    auto max_q = [&](int s) {
        double bv = q[static_cast<std::size_t>(s) * A];
        for (int a = 1; a < A; ++a) {
            bv = std::max(bv, q[static_cast<std::size_t>(s) * A + a]);
        }
        return bv;
    };
    // Exact ties (fresh Q-tables) break randomly so untried actions get a shot.
    auto greedy_action = [&](int s) {
        const double bv = max_q(s);
        int n_ties = 0;
        int pick = 0;
        for (int a = 0; a < A; ++a) {
            if (q[static_cast<std::size_t>(s) * A + a] == bv) {
                ++n_ties;
                if (gen.uniform() < 1.0 / n_ties) pick = a;
            }
        }
        return pick;
    };

    SeedRun run;
    run.seed = seed;
    SuccessWindow window(params.success_window, params.success_threshold, params.episode_cap);
    run.curve.reserve(static_cast<std::size_t>(params.episode_cap));

    for (int ep = 0; ep < params.episode_cap; ++ep) {
        pipeline.reset_episode();
        int s = mdp.start_state;
        bool success = false;
        for (int t = 0; t < params.max_steps; ++t) {
            const int a = gen.uniform() < params.epsilon_explore
                              ? static_cast<int>(gen.index(static_cast<std::size_t>(A)))
                              : greedy_action(s);
            const int s2 = sample_next_state(mdp, s, a, gen);
            const double r = pipeline.step(s, s2);
            const bool done =
                mdp.terminal[static_cast<std::size_t>(s2)] != 0 || pipeline.gold_fired();
            const double bootstrap = done ? 0.0 : max_q(s2);
            auto& cell = q[static_cast<std::size_t>(s) * A + a];
            cell += params.learning_rate * (r + params.shaping.gamma * bootstrap - cell);
            s = s2;
            if (done) {
                // success means the environment's goal, not the detector's say-so
                success = mdp.gold[static_cast<std::size_t>(s2)] != 0;
                break;
            }
        }
        run.max_telescoping_error =
            std::max(run.max_telescoping_error, pipeline.telescoping_error());
        run.curve.push_back(window.record(ep, success));
    }
    run.episodes_to_threshold = window.episodes_to_threshold();
    run.final_success_rate = window.last_rate();
    return run;
}

SeedRun reinforce_seed(const TabularMDP& mdp, RewardVariant variant,
                       const EstimatorFactory& estimator, const LearnParams& params,
                       std::uint64_t seed) {
    rng::Rng gen(rng::derive(seed, "reinforce"));
    std::unique_ptr<estimators::HopEstimator> est;
    if (variant != RewardVariant::Gold) est = estimator(seed);
    RewardPipeline pipeline(mdp, variant, est.get(), params);

    const int S = mdp.n_states;
    const int A = mdp.n_actions;
    std::vector<double> theta(static_cast<std::size_t>(S) * A, 0.0);
    std::vector<double> baseline(static_cast<std::size_t>(S), 0.0);
    std::vector<double> probs(static_cast<std::size_t>(A), 0.0);

    auto policy_at = [&](int s) {
        double mx = theta[static_cast<std::size_t>(s) * A];
        for (int a = 1; a < A; ++a) mx = std::max(mx, theta[static_cast<std::size_t>(s) * A + a]);
        double z = 0.0;
        for (int a = 0; a < A; ++a) {
            probs[static_cast<std::size_t>(a)] =
                std::exp(theta[static_cast<std::size_t>(s) * A + a] - mx);
            z += probs[static_cast<std::size_t>(a)];
        }
        for (int a = 0; a < A; ++a) probs[static_cast<std::size_t>(a)] /= z;
    };

    SeedRun run;
    run.seed = seed;
    SuccessWindow window(params.success_window, params.success_threshold, params.episode_cap);
    run.curve.reserve(static_cast<std::size_t>(params.episode_cap));

    std::vector<int> ep_states, ep_actions;
    std::vector<double> ep_rewards;
    for (int ep = 0; ep < params.episode_cap; ++ep) {
        pipeline.reset_episode();
        ep_states.clear();
        ep_actions.clear();
        ep_rewards.clear();
        int s = mdp.start_state;
        bool success = false;
        for (int t = 0; t < params.max_steps; ++t) {
            policy_at(s);
            double u = gen.uniform();
            int a = A - 1;
            for (int k = 0; k < A; ++k) {
                u -= probs[static_cast<std::size_t>(k)];
                if (u <= 0.0) {
                    a = k;
                    break;
                }
            }
            const int s2 = sample_next_state(mdp, s, a, gen);
            ep_states.push_back(s);
            ep_actions.push_back(a);
            ep_rewards.push_back(pipeline.step(s, s2));
            s = s2;
            if (mdp.terminal[static_cast<std::size_t>(s2)] || pipeline.gold_fired()) {
                success = mdp.gold[static_cast<std::size_t>(s2)] != 0;
                break;
            }
        }
        // Monte-Carlo returns, then the log-likelihood update with a running
        // per-state baseline.
        double g = 0.0;
        std::vector<double> returns(ep_rewards.size(), 0.0);
        for (std::size_t i = ep_rewards.size(); i-- > 0;) {
            g = ep_rewards[i] + params.shaping.gamma * g;
            returns[i] = g;
        }
        double disc = 1.0;
        for (std::size_t i = 0; i < ep_states.size(); ++i) {
            const int st = ep_states[i];
            const int at = ep_actions[i];
            baseline[static_cast<std::size_t>(st)] +=
                0.1 * (returns[i] - baseline[static_cast<std::size_t>(st)]);
            const double adv = returns[i] - baseline[static_cast<std::size_t>(st)];
            policy_at(st);
            for (int b = 0; b < A; ++b) {
                const double grad = (b == at ? 1.0 : 0.0) - probs[static_cast<std::size_t>(b)];
                theta[static_cast<std::size_t>(st) * A + b] +=
                    params.learning_rate * disc * adv * grad;
            }
            disc *= params.shaping.gamma;
        }
        run.max_telescoping_error =
            std::max(run.max_telescoping_error, pipeline.telescoping_error());
        run.curve.push_back(window.record(ep, success));
    }
    run.episodes_to_threshold = window.episodes_to_threshold();
    run.final_success_rate = window.last_rate();
    return run;
}

template <typename SeedFn>
std::vector<SeedRun> run_seeds(const std::vector<std::uint64_t>& seeds, int jobs, SeedFn fn) {
    std::vector<SeedRun> runs(seeds.size());
    if (jobs <= 1 || seeds.size() <= 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i) runs[i] = fn(seeds[i]);
        return runs;
    }
    const int n_threads = std::min<int>(jobs, static_cast<int>(seeds.size()));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
        pool.emplace_back([&, t]() {
            for (std::size_t i = static_cast<std::size_t>(t); i < seeds.size();
                 i += static_cast<std::size_t>(n_threads)) {
                runs[i] = fn(seeds[i]);
            }
        });
    }
    for (auto& th : pool) th.join();
    return runs;
}

ExperimentReport make_report(std::string algorithm, RewardVariant variant,
                             const LearnParams& params, std::vector<SeedRun> runs) {
    ExperimentReport rep;
    rep.algorithm = std::move(algorithm);
    rep.reward_variant = to_string(variant);
    rep.tracker_mode = params.tracker_mode == progress::TrackerMode::ConsistencyGated
                           ? "consistency-gated"
                           : "fusion-average";
    rep.note =
        "tabular desk-scale analog; compares direction of sample-efficiency effects, "
        "not absolute rollout counts";
    std::sort(runs.begin(), runs.end(),
              [](const SeedRun& a, const SeedRun& b) { return a.seed < b.seed; });
    rep.runs = std::move(runs);
    return rep;
}

}  // namespace

ExperimentReport run_q_learning(const TabularMDP& mdp, RewardVariant variant,
                                const EstimatorFactory& estimator, const LearnParams& params,
                                const std::vector<std::uint64_t>& seeds, int jobs) {
    mdp.validate();
    auto runs = run_seeds(seeds, jobs, [&](std::uint64_t seed) {
        return q_learning_seed(mdp, variant, estimator, params, seed);
    });
    ExperimentReport rep = make_report("q-learning", variant, params, std::move(runs));
    rep.estimator_name =
        (variant == RewardVariant::Gold || !estimator) ? "none" : estimator(0)->name();
    return rep;
}

ExperimentReport run_reinforce(const TabularMDP& mdp, RewardVariant variant,
                               const EstimatorFactory& estimator, const LearnParams& params,
                               const std::vector<std::uint64_t>& seeds, int jobs) {
    mdp.validate();
    auto runs = run_seeds(seeds, jobs, [&](std::uint64_t seed) {
        return reinforce_seed(mdp, variant, estimator, params, seed);
    });
    ExperimentReport rep = make_report("reinforce", variant, params, std::move(runs));
    rep.estimator_name =
        (variant == RewardVariant::Gold || !estimator) ? "none" : estimator(0)->name();
    return rep;
}

double ExperimentReport::median_episodes_to_threshold() const {
    if (runs.empty()) return 0.0;
    std::vector<int> vals;
    vals.reserve(runs.size());
    for (const auto& r : runs) vals.push_back(r.episodes_to_threshold);
    std::sort(vals.begin(), vals.end());
    const std::size_t n = vals.size();
    return n % 2 == 1 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
}

double ExperimentReport::mean_final_success() const {
    if (runs.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& r : runs) acc += r.final_success_rate;
    return acc / static_cast<double>(runs.size());
}

double ExperimentReport::max_telescoping_error() const {
    double m = 0.0;
    for (const auto& r : runs) m = std::max(m, r.max_telescoping_error);
    return m;
}

void ExperimentReport::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report csv: " + path);
    out << "# algorithm=" << algorithm << " reward=" << reward_variant
        << " estimator=" << estimator_name << " tracker=" << tracker_mode << "\n";
    out << "# " << note << "\n";
    out << "seed,episodes_to_threshold,final_success_rate\n";
    out.precision(6);
    for (const auto& r : runs) {
        out << r.seed << "," << r.episodes_to_threshold << "," << r.final_success_rate << "\n";
    }
}

void ExperimentReport::write_curves_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write curves csv: " + path);
    out << "episode,success_rate\n";
    out.precision(6);
    std::size_t longest = 0;
    for (const auto& r : runs) longest = std::max(longest, r.curve.size());
    for (std::size_t e = 0; e < longest; ++e) {
        double acc = 0.0;
        int n = 0;
        for (const auto& r : runs) {
            if (e < r.curve.size()) {
                acc += r.curve[e];
                ++n;
            }
        }
        out << e + 1 << "," << (n > 0 ? acc / n : 0.0) << "\n";
    }
}

nlohmann::json ExperimentReport::summary_json() const {
    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& r : runs) {
        seeds.push_back({{"seed", r.seed},
                         {"episodes_to_threshold", r.episodes_to_threshold},
                         {"final_success_rate", r.final_success_rate}});
    }
    return nlohmann::json{{"algorithm", algorithm},
                          {"reward_variant", reward_variant},
                          {"estimator", estimator_name},
                          {"tracker_mode", tracker_mode},
                          {"note", note},
                          {"median_episodes_to_threshold", median_episodes_to_threshold()},
                          {"mean_final_success_rate", mean_final_success()},
                          {"max_telescoping_error", max_telescoping_error()},
                          {"seeds", seeds}};
}

// ---------------------------------------------------------------------------
// Exact policy value / gradient for the finite-difference oracle.

namespace {

// Dense Ax = b by Gaussian elimination with partial pivoting; fine at n <= 400.
std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b, int n) {
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::fabs(a[static_cast<std::size_t>(r) * n + col]) >
                std::fabs(a[static_cast<std::size_t>(pivot) * n + col])) {
                pivot = r;
            }
        }
        if (std::fabs(a[static_cast<std::size_t>(pivot) * n + col]) < 1e-14) {
            throw std::runtime_error("singular policy-evaluation system");
        }
        if (pivot != col) {
            for (int c = 0; c < n; ++c) {
                std::swap(a[static_cast<std::size_t>(col) * n + c],
                          a[static_cast<std::size_t>(pivot) * n + c]);
            }
            std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(pivot)]);
        }
        const double d = a[static_cast<std::size_t>(col) * n + col];
        for (int r = col + 1; r < n; ++r) {
            const double f = a[static_cast<std::size_t>(r) * n + col] / d;
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) {
                a[static_cast<std::size_t>(r) * n + c] -=
                    f * a[static_cast<std::size_t>(col) * n + c];
            }
            b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
        }
    }
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[static_cast<std::size_t>(r)];
        for (int c = r + 1; c < n; ++c) {
            acc -= a[static_cast<std::size_t>(r) * n + c] * x[static_cast<std::size_t>(c)];
        }
        x[static_cast<std::size_t>(r)] = acc / a[static_cast<std::size_t>(r) * n + r];
    }
    return x;
}

struct PolicyEval {
    std::vector<double> pi;  // [s][a]
    std::vector<double> v;   // [s]
    std::vector<double> q;   // [s][a]
};

PolicyEval evaluate_softmax_policy(const TabularMDP& mdp, const RewardFn& reward, double gamma,
                                   std::span<const double> theta) {
    const int S = mdp.n_states;
    const int A = mdp.n_actions;
    PolicyEval ev;
    ev.pi.assign(static_cast<std::size_t>(S) * A, 0.0);
    for (int s = 0; s < S; ++s) {
        double mx = theta[static_cast<std::size_t>(s) * A];
        for (int a = 1; a < A; ++a) mx = std::max(mx, theta[static_cast<std::size_t>(s) * A + a]);
        double z = 0.0;
        for (int a = 0; a < A; ++a) {
            const double e = std::exp(theta[static_cast<std::size_t>(s) * A + a] - mx);
            ev.pi[static_cast<std::size_t>(s) * A + a] = e;
            z += e;
        }
        for (int a = 0; a < A; ++a) ev.pi[static_cast<std::size_t>(s) * A + a] /= z;
    }
    // (I - gamma P_pi) V = r_pi
    std::vector<double> lhs(static_cast<std::size_t>(S) * S, 0.0);
    std::vector<double> rhs(static_cast<std::size_t>(S), 0.0);
    for (int s = 0; s < S; ++s) {
        lhs[static_cast<std::size_t>(s) * S + s] = 1.0;
        for (int a = 0; a < A; ++a) {
            const double pa = ev.pi[static_cast<std::size_t>(s) * A + a];
            const auto row = mdp.row(s, a);
            for (int s2 = 0; s2 < S; ++s2) {
                const double p = row[static_cast<std::size_t>(s2)];
                if (p == 0.0) continue;
                lhs[static_cast<std::size_t>(s) * S + s2] -= gamma * pa * p;
                rhs[static_cast<std::size_t>(s)] += pa * p * reward(s, a, s2);
            }
        }
    }
    ev.v = solve_linear(std::move(lhs), std::move(rhs), S);
    ev.q.assign(static_cast<std::size_t>(S) * A, 0.0);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const auto row = mdp.row(s, a);
            double acc = 0.0;
            for (int s2 = 0; s2 < S; ++s2) {
                const double p = row[static_cast<std::size_t>(s2)];
                if (p == 0.0) continue;
                acc += p * (reward(s, a, s2) + gamma * ev.v[static_cast<std::size_t>(s2)]);
            }
            ev.q[static_cast<std::size_t>(s) * A + a] = acc;
        }
    }
    return ev;
}

}  // namespace

double softmax_policy_value(const TabularMDP& mdp, const RewardFn& reward, double gamma,
                            std::span<const double> theta) {
    return evaluate_softmax_policy(mdp, reward, gamma, theta)
        .v[static_cast<std::size_t>(mdp.start_state)];
}

std::vector<double> softmax_policy_gradient(const TabularMDP& mdp, const RewardFn& reward,
                                            double gamma, std::span<const double> theta) {
    const int S = mdp.n_states;
    const int A = mdp.n_actions;
    const PolicyEval ev = evaluate_softmax_policy(mdp, reward, gamma, theta);
    // Discounted occupancy d = (I - gamma P_pi^T)^{-1} e_start.
    std::vector<double> lhs(static_cast<std::size_t>(S) * S, 0.0);
    std::vector<double> rhs(static_cast<std::size_t>(S), 0.0);
    rhs[static_cast<std::size_t>(mdp.start_state)] = 1.0;
    for (int s = 0; s < S; ++s) lhs[static_cast<std::size_t>(s) * S + s] = 1.0;
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const double pa = ev.pi[static_cast<std::size_t>(s) * A + a];
            const auto row = mdp.row(s, a);
            for (int s2 = 0; s2 < S; ++s2) {
                const double p = row[static_cast<std::size_t>(s2)];
                if (p == 0.0) continue;
                lhs[static_cast<std::size_t>(s2) * S + s] -= gamma * pa * p;
            }
        }
    }
    const std::vector<double> occupancy = solve_linear(std::move(lhs), std::move(rhs), S);

    std::vector<double> grad(static_cast<std::size_t>(S) * A, 0.0);
    for (int s = 0; s < S; ++s) {
        for (int b = 0; b < A; ++b) {
            grad[static_cast<std::size_t>(s) * A + b] =
                occupancy[static_cast<std::size_t>(s)] *
                ev.pi[static_cast<std::size_t>(s) * A + b] *
                (ev.q[static_cast<std::size_t>(s) * A + b] - ev.v[static_cast<std::size_t>(s)]);
        }
    }
    return grad;
}

double sign_test_p_value(int wins, int losses) {
    const int n = wins + losses;
    if (n == 0) return 1.0;
    // P[X >= wins], X ~ Binomial(n, 1/2).
    double p = 0.0;
    double coef = 1.0;  // C(n, 0)
    for (int i = 0; i <= n; ++i) {
        if (i >= wins) p += coef;
        coef = coef * (n - i) / (i + 1);
    }
    return p * std::pow(0.5, n);
}

}  // namespace dopamine::testbed
