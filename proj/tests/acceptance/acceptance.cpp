// Acceptance suite: every claim the toolkit makes, executed end to end at its
// stated tolerance. One line per criterion; exit code is the failure count.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "dopamine/estimators.hpp"
#include "dopamine/evaluation.hpp"
#include "dopamine/labeling.hpp"
#include "dopamine/progress.hpp"
#include "dopamine/rng.hpp"
#include "dopamine/shaping.hpp"
#include "dopamine/testbed/learn.hpp"
#include "dopamine/testbed/solve.hpp"
#include "dopamine/tracker.hpp"

using namespace dopamine;
using progress::Hop;
using progress::Progress;

namespace {

struct Criterion {
    int number;
    std::string name;
    double time_budget_s;
    std::function<bool(std::string&)> run;
};

constexpr std::uint64_t kSeed = 20240601;

// --- 1. boundedness -------------------------------------------------------

bool crit_boundedness(std::string& detail) {
    rng::Rng gen(rng::derive(kSeed, "acc/bounded"));
    const int cases = 100000;
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        Progress phi(gen.uniform());
        const int len = static_cast<int>(gen.uniform_int(1, 64));
        for (int t = 0; t < len; ++t) {
            phi = progress::apply_hop(phi, Hop(gen.uniform(-1.0, 1.0)));
            worst = std::max({worst, -phi.value(), phi.value() - 1.0});
        }
    }
    std::ostringstream os;
    os << cases << " random chains, max excursion outside [0,1] = " << worst;
    detail = os.str();
    return worst <= 1e-12;
}

// --- 2. telescoping --------------------------------------------------------

bool crit_telescoping(std::string& detail) {
    rng::Rng gen(rng::derive(kSeed, "acc/tele"));
    double worst = 0.0;
    int n_checked = 0;
    for (double gamma : {0.9, 0.98, 0.999}) {
        const auto cfg = shaping::ShapingConfig::from_gamma(gamma);
        for (int i = 0; i < 10000 / 3 + 1; ++i) {
            const std::size_t n = static_cast<std::size_t>(gen.uniform_int(1, 200));
            std::vector<double> phis(n);
            for (auto& p : phis) p = gen.uniform();
            const double sum = shaping::discounted_shaping_sum(phis, cfg);
            const double boundary =
                std::pow(gamma, static_cast<double>(n - 1)) * phis.back() - phis.front();
            worst = std::max(worst, std::fabs(sum - boundary));
            ++n_checked;
        }
    }
    std::ostringstream os;
    os << n_checked << " sequences, max |sum - (gamma^T phi_T - phi_0)| = " << worst;
    detail = os.str();
    return worst <= 1e-9;
}

// --- 3. policy invariance ---------------------------------------------------

bool crit_invariance(std::string& detail) {
    const auto cfg = shaping::ShapingConfig::from_gamma(0.98);
    int violations = 0;
    double worst_shift = 0.0;
    for (int i = 0; i < 50; ++i) {
        const auto mdp = testbed::make_random_mdp(rng::derive(kSeed, i), 20, 4);
        const auto rep = testbed::verify_policy_invariance(mdp, cfg, 1e-6);
        if (!rep.invariant) ++violations;
        worst_shift = std::max(worst_shift, rep.q_shift_max_err);
    }
    std::ostringstream os;
    os << "50 random MDPs, " << violations << " violations, max Q-shift error " << worst_shift;
    detail = os.str();
    return violations == 0;
}

// --- 4. semantic trap --------------------------------------------------------

bool crit_trap(std::string& detail) {
    testbed::TrapMDPSpec spec;  // honeypot 0.9, risk 0.3, the canonical lure
    const auto rep = testbed::demonstrate_semantic_trap(spec, 0.98);
    detail = rep.describe();
    return rep.naive_self_loops && rep.grm_advances && rep.naive_goal_probability == 0.0 &&
           rep.grm_goal_probability > 0.0;
}

// --- 5. euler consistency ----------------------------------------------------

bool crit_euler(std::string& detail) {
    const double T = 4.0;
    const double pi = 3.14159265358979323846;
    shaping::PhiPath path{
        [T, pi](double t) {
            const double s = std::sin(pi * t / (2.0 * T));
            return s * s;
        },
        [T, pi](double t) { return (pi / (2.0 * T)) * std::sin(pi * t / T); }};
    double first = 0.0, last = 0.0;
    int halvings = 0;
    for (double h = 0.2; h >= 0.0125 * 0.999; h /= 2.0) {
        last = shaping::euler_consistency_error(0.5, path, h, T);
        if (first == 0.0) first = last;
        else ++halvings;
    }
    const double order = std::log2(first / last) / halvings;
    std::ostringstream os;
    os << "h: 0.2 -> 0.0125, boundary-term errors " << first << " -> " << last
       << ", observed order " << order;
    detail = os.str();
    return order >= 0.9;
}

// --- experiments shared setup ------------------------------------------------

testbed::TabularMDP canonical_gridworld() {
    testbed::GridWorldSpec grid;
    grid.slip_probability = 0.1;
    grid.subgoal_cells = {{4, 4}};
    return grid.to_mdp();
}

testbed::LearnParams canonical_params() {
    testbed::LearnParams p;
    p.learning_rate = 0.2;
    p.epsilon_explore = 0.1;
    p.episode_cap = 1500;
    p.max_steps = 60;
    p.shaping = shaping::ShapingConfig::from_gamma(0.98);
    return p;
}

std::vector<std::uint64_t> experiment_seeds(int n) {
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < n; ++i) seeds.push_back(rng::derive(kSeed, 1000 + i));
    return seeds;
}

// --- 6. sample-efficiency direction ------------------------------------------

bool crit_sample_efficiency(std::string& detail) {
    const auto mdp = canonical_gridworld();
    auto params = canonical_params();
    const auto seeds = experiment_seeds(20);

    const auto gold =
        testbed::run_q_learning(mdp, testbed::RewardVariant::Gold, nullptr, params, seeds);
    params.tracker_mode = progress::TrackerMode::FusionAverage;
    const auto grm = testbed::run_q_learning(mdp, testbed::RewardVariant::Grm,
                                             testbed::oracle_factory(mdp), params, seeds);

    int wins = 0, losses = 0;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const int a = grm.runs[i].episodes_to_threshold;
        const int b = gold.runs[i].episodes_to_threshold;
        if (a < b) ++wins;
        else if (a > b) ++losses;
    }
    const double p = testbed::sign_test_p_value(wins, losses);
    std::ostringstream os;
    os << "median episodes-to-threshold: shaped " << grm.median_episodes_to_threshold()
       << " vs sparse " << gold.median_episodes_to_threshold() << "; sign test " << wins << "/"
       << (wins + losses) << " wins, p = " << p;
    detail = os.str();
    return grm.median_episodes_to_threshold() < gold.median_episodes_to_threshold() && p < 0.05 &&
           grm.max_telescoping_error() <= 1e-9;
}

// --- 7. consistency gating ----------------------------------------------------

bool crit_gating(std::string& detail) {
    // Part A: the tracker weight bound under injected divergence 0.4.
    const auto mdp = canonical_gridworld();
    estimators::NoiseModel ood_only;
    ood_only.ood_divergence = 0.4;
    ood_only.ood_region = [](const estimators::StateKey&) { return true; };
    estimators::NoisyEstimator est(mdp.potential_fn(), ood_only, rng::derive(kSeed, "gate"));
    const progress::ConsistencyConfig cc{};  // alpha 20
    double worst_w = 0.0;
    // states whose potential keeps the +/-0.2 split clear of the hop clamps
    for (int s = 0; s < mdp.n_states; ++s) {
        const double phi = mdp.true_potential[static_cast<std::size_t>(s)];
        if (phi < 0.2 || phi > 0.8) continue;
        auto state = progress::make_tracker(progress::TrackerMode::ConsistencyGated,
                                            Progress(phi));
        const auto fwd = est.hop({mdp.key(mdp.start_state), mdp.key(99), mdp.key(mdp.start_state),
                                  mdp.key(s), ""});
        const auto bwd = est.hop({mdp.key(mdp.start_state), mdp.key(99), mdp.key(99),
                                  mdp.key(s), ""});
        worst_w = std::max(
            worst_w, progress::tracker_step(state, Hop(0.0), fwd, bwd, cc).last_weight);
    }
    const bool weight_ok = worst_w <= std::exp(-3.2) + 1e-6;

    // Part B: gated learning is no slower than ungated under the same noise.
    auto params = canonical_params();
    estimators::NoiseModel noise;
    noise.gaussian_sigma = 0.05;
    noise.ood_divergence = 0.4;
    noise.ood_region = [](const estimators::StateKey& key) {
        int x = 0, y = 0;
        if (std::sscanf(key.c_str(), "cell/%d/%d", &x, &y) != 2) return false;
        return x <= 2 && y >= 7;
    };
    const auto factory = testbed::noisy_factory(mdp, noise);
    const auto seeds = experiment_seeds(20);
    params.tracker_mode = progress::TrackerMode::FusionAverage;
    const auto ungated =
        testbed::run_q_learning(mdp, testbed::RewardVariant::Grm, factory, params, seeds);
    params.tracker_mode = progress::TrackerMode::ConsistencyGated;
    const auto gated =
        testbed::run_q_learning(mdp, testbed::RewardVariant::Grm, factory, params, seeds);

    std::ostringstream os;
    os << "max OOD tracker weight " << worst_w << " (bound " << std::exp(-3.2) + 1e-6
       << "); median episodes-to-threshold gated " << gated.median_episodes_to_threshold()
       << " vs ungated " << ungated.median_episodes_to_threshold();
    detail = os.str();
    return weight_ok &&
           gated.median_episodes_to_threshold() <= ungated.median_episodes_to_threshold();
}

// --- 8. labeling correctness ---------------------------------------------------

double oracle_hop(double phi_p, double phi_q) {
    if (phi_q >= phi_p) return phi_p >= 1.0 ? 0.0 : (phi_q - phi_p) / (1.0 - phi_p);
    return phi_p <= 0.0 ? 0.0 : (phi_q - phi_p) / phi_p;
}

bool crit_labeling(std::string& detail) {
    // brute-force agreement on small trajectories
    double worst = 0.0;
    for (int L : {5, 8, 12}) {
        auto t = Trajectory::synthetic("acc" + std::to_string(L), "task", L, {0, L - 1});
        labeling::SamplingConfig cfg;
        cfg.chunk_size = 1;
        cfg.rng_seed = kSeed;
        for (const auto& s : labeling::generate_hop_samples(t, cfg)) {
            if (s.zero_channel) {
                if (s.hop != 0.0) return false;
                continue;
            }
            worst = std::max(worst, std::fabs(s.hop - oracle_hop(s.phi_before, s.phi_after)));
        }
    }
    if (worst > 1e-12) {
        detail = "brute-force mismatch " + std::to_string(worst);
        return false;
    }

    // point-count golden case: L=100, C=5, N=4 segments -> 5 interior points each
    auto golden = Trajectory::synthetic("g", "task", 100, {0, 25, 50, 75, 99});
    labeling::SamplingConfig gcfg;
    gcfg.chunk_size = 5;
    if (labeling::sample_states(golden, gcfg).size() != 5 + 4 * 5) {
        detail = "golden point-count case failed";
        return false;
    }

    // zero-hop fraction over >= 10^4 samples
    long total = 0, zeros = 0;
    for (int k = 0; total < 10000 && k < 400; ++k) {
        auto t = Trajectory::synthetic("bulk" + std::to_string(k), "task", 64,
                                       {0, 15 + (k % 9), 40, 63});
        labeling::SamplingConfig cfg;
        cfg.chunk_size = 1;
        cfg.rng_seed = rng::derive(kSeed, k);
        for (const auto& s : labeling::generate_hop_samples(t, cfg)) {
            ++total;
            if (s.zero_channel) ++zeros;
        }
    }
    const double fraction = static_cast<double>(zeros) / static_cast<double>(total);
    const bool fraction_ok = total >= 10000 && std::fabs(fraction - 0.05) <= 0.01;

    // byte-identical rerun under a fixed seed
    auto t = Trajectory::synthetic("det", "task", 50, {0, 24, 49});
    labeling::SamplingConfig cfg;
    cfg.chunk_size = 2;
    cfg.rng_seed = kSeed;
    labeling::write_hop_samples_jsonl("acc_det_a.jsonl", labeling::generate_hop_samples(t, cfg));
    labeling::write_hop_samples_jsonl("acc_det_b.jsonl", labeling::generate_hop_samples(t, cfg));
    std::ifstream fa("acc_det_a.jsonl"), fb("acc_det_b.jsonl");
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    const bool deterministic = sa.str() == sb.str() && !sa.str().empty();

    std::ostringstream os;
    os << "labels match enumeration (worst " << worst << "); m=5 golden ok; zero-hop fraction "
       << fraction << " over " << total << " samples; rerun byte-identical: "
       << (deterministic ? "yes" : "NO");
    detail = os.str();
    return fraction_ok && deterministic;
}

// --- 9. VOC sanity ---------------------------------------------------------------

bool crit_voc(std::string& detail) {
    std::vector<Trajectory> trajs;
    trajs.push_back(Trajectory::synthetic("v0", "task", 60, {0, 19, 40, 59}));
    trajs.push_back(Trajectory::synthetic("v1", "task", 35, {0, 17, 34}));
    std::map<std::string, double> table;
    for (const auto& t : trajs) {
        const auto& refs = t.frames_per_view.at(t.views.front());
        for (int f = 0; f < t.num_frames; ++f) {
            table[refs[static_cast<std::size_t>(f)]] =
                static_cast<double>(f) / (t.num_frames - 1);
        }
    }
    estimators::PotentialFn truth = [&table](const estimators::StateKey& k)
        -> std::optional<double> {
        const auto it = table.find(k);
        if (it == table.end()) return std::nullopt;
        return it->second;
    };
    estimators::OracleEstimator oracle(truth);
    estimators::AntiOracleEstimator anti(truth);

    for (auto density : {evaluation::SamplingDensity::Sparse, evaluation::SamplingDensity::Medium,
                         evaluation::SamplingDensity::Dense}) {
        evaluation::VocConfig cfg;
        cfg.sampling = density;
        cfg.shuffle_seed = kSeed;
        if (std::fabs(evaluation::evaluate_estimator_voc(oracle, trajs, cfg).mean_voc - 1.0) >
            1e-12) {
            detail = "oracle VOC != 1 at density " + evaluation::to_string(density);
            return false;
        }
        if (std::fabs(evaluation::evaluate_estimator_voc(anti, trajs, cfg).mean_voc + 1.0) >
            1e-12) {
            detail = "anti-oracle VOC != -1 at density " + evaluation::to_string(density);
            return false;
        }
    }

    // random estimator: 1000 trajectories, mean near 0
    std::vector<Trajectory> many;
    for (int i = 0; i < 1000; ++i) {
        many.push_back(Trajectory::synthetic("r" + std::to_string(i), "task", 24, {0, 11, 23}));
    }
    estimators::RandomEstimator random(rng::derive(kSeed, "voc-rand"));
    evaluation::VocConfig cfg;
    cfg.sampling = evaluation::SamplingDensity::Medium;
    cfg.shuffle_seed = kSeed;
    const double mean = evaluation::evaluate_estimator_voc(random, many, cfg).mean_voc;
    std::ostringstream os;
    os << "oracle 1.0 / anti -1.0 at all densities; random estimator mean VOC " << mean
       << " over 1000 trajectories";
    detail = os.str();
    return std::fabs(mean) < 0.1;
}

// --- 10. judgment logic -----------------------------------------------------------

bool crit_judgment(std::string& detail) {
    using evaluation::OutcomeLabel;
    std::vector<evaluation::ProgressCurve> curves;
    std::vector<OutcomeLabel> truth;
    rng::Rng gen(rng::derive(kSeed, "judge"));

    // 20 clear successes: ramp high with a strong tail
    for (int i = 0; i < 20; ++i) {
        const std::size_t T = static_cast<std::size_t>(gen.uniform_int(6, 24));
        evaluation::ProgressCurve c;
        for (std::size_t t = 0; t < T; ++t) {
            const double frac = static_cast<double>(t + 1) / T;
            c.values.push_back(std::min(1.0, 0.15 + 0.85 * frac + 0.02 * gen.uniform()));
        }
        c.values.back() = 0.97;
        curves.push_back(c);
        truth.push_back(OutcomeLabel::SE);
    }
    // 20 partial: plateau around 0.55, final below 0.8
    for (int i = 0; i < 20; ++i) {
        const std::size_t T = static_cast<std::size_t>(gen.uniform_int(6, 24));
        evaluation::ProgressCurve c;
        for (std::size_t t = 0; t < T; ++t) c.values.push_back(0.5 + 0.1 * gen.uniform());
        curves.push_back(c);
        truth.push_back(OutcomeLabel::PSE);
    }
    // 20 failures: low everywhere
    for (int i = 0; i < 20; ++i) {
        const std::size_t T = static_cast<std::size_t>(gen.uniform_int(6, 24));
        evaluation::ProgressCurve c;
        for (std::size_t t = 0; t < T; ++t) c.values.push_back(0.2 * gen.uniform());
        curves.push_back(c);
        truth.push_back(OutcomeLabel::FE);
    }

    std::vector<OutcomeLabel> predicted;
    for (const auto& c : curves) predicted.push_back(evaluation::judge_outcome(c, 0.4));
    const auto rep = evaluation::classification_report(predicted, truth);

    // index-convention golden cases
    const bool goldens =
        evaluation::judge_outcome({{0.5, 0.9, 0.95}}) == OutcomeLabel::SE &&
        evaluation::judge_outcome({{0.0, 0.0, 0.1, 0.85}}) == OutcomeLabel::SE &&
        evaluation::judge_outcome({{0.0, 0.0, 0.0, 0.1, 0.1, 0.85}}) == OutcomeLabel::FE &&
        evaluation::judge_outcome({{0.0, 0.0, 0.0, 0.0, 0.2, 0.3, 0.9}}) == OutcomeLabel::FE &&
        evaluation::judge_outcome({{0.0, 0.0, 0.0, 0.0, 0.2, 0.31, 0.9}}) == OutcomeLabel::SE;

    std::ostringstream os;
    os << "classification accuracy " << rep.overall_accuracy << " on 60 synthetic curves; "
       << "T in {3,4,6,7} index goldens " << (goldens ? "ok" : "FAILED");
    detail = os.str();
    return rep.overall_accuracy == 1.0 && goldens;
}

// --- 11. one-shot adaptation --------------------------------------------------------

bool crit_one_shot(std::string& detail) {
    testbed::GridWorldSpec grid;
    grid.slip_probability = 0.1;
    grid.subgoal_cells = {{4, 4}};
    const auto mdp = grid.to_mdp();

    estimators::OneShotFitConfig fit_cfg;
    fit_cfg.demo = grid.demo_trajectory("acc-demo");
    fit_cfg.feature_map = estimators::make_feature_map(
        "grid_coords", {{"width", grid.width}, {"height", grid.height}});
    fit_cfg.sampling.chunk_size = 1;
    fit_cfg.sampling.rng_seed = kSeed;
    fit_cfg.regularization = 1e-9;
    fit_cfg.pair_budget = 256;
    const auto fitted = estimators::fit_one_shot(fit_cfg);
    const auto baseline =
        estimators::FittedHopEstimator::random_baseline(fit_cfg.feature_map, kSeed);

    auto held_cfg = fit_cfg.sampling;
    held_cfg.rng_seed = rng::derive(kSeed, "held-out");
    const auto held_out = labeling::generate_hop_samples(fit_cfg.demo, held_cfg);
    const double mse_fit = estimators::hop_mse(fitted, held_out);
    const double mse_base = estimators::hop_mse(baseline, held_out);
    const bool mse_ok = mse_fit * 5.0 <= mse_base;

    auto params = canonical_params();
    const auto seeds = experiment_seeds(20);
    const auto oracle = testbed::run_q_learning(mdp, testbed::RewardVariant::Grm,
                                                testbed::oracle_factory(mdp), params, seeds);
    auto fitted_copy = std::make_shared<estimators::FittedHopEstimator>(fitted);
    const auto with_fitted = testbed::run_q_learning(
        mdp, testbed::RewardVariant::Grm,
        [fitted_copy](std::uint64_t) {
            return std::make_unique<estimators::FittedHopEstimator>(*fitted_copy);
        },
        params, seeds);

    std::ostringstream os;
    os << "held-out hop MSE fitted " << mse_fit << " vs random baseline " << mse_base
       << " (need 5x); median episodes-to-threshold fitted "
       << with_fitted.median_episodes_to_threshold() << " vs oracle "
       << oracle.median_episodes_to_threshold() << " (need <= 2x)";
    detail = os.str();
    return mse_ok && with_fitted.median_episodes_to_threshold() <=
                         2.0 * oracle.median_episodes_to_threshold();
}

// --- 12. gradient check ----------------------------------------------------------------

bool crit_gradient(std::string& detail) {
    const auto mdp = testbed::make_random_mdp(rng::derive(kSeed, "grad"), 3, 3);
    const auto cfg = shaping::ShapingConfig::from_gamma(0.9);
    const testbed::RewardFn reward = testbed::make_grm_reward(mdp, cfg);
    const double gamma = 0.9;

    std::vector<double> theta(static_cast<std::size_t>(mdp.n_states * mdp.n_actions), 0.0);
    rng::Rng gen(rng::derive(kSeed, "grad-theta"));
    for (auto& t : theta) t = gen.uniform(-0.5, 0.5);

    const auto analytic = testbed::softmax_policy_gradient(mdp, reward, gamma, theta);
    double scale = 0.0;
    for (double g : analytic) scale = std::max(scale, std::fabs(g));
    if (scale < 1e-3) {
        detail = "degenerate gradient fixture";
        return false;
    }
    const double h = 1e-5;
    double max_rel = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        auto plus = theta, minus = theta;
        plus[i] += h;
        minus[i] -= h;
        const double fd = (testbed::softmax_policy_value(mdp, reward, gamma, plus) -
                           testbed::softmax_policy_value(mdp, reward, gamma, minus)) /
                          (2.0 * h);
        max_rel = std::max(max_rel, std::fabs(fd - analytic[i]) / scale);
    }
    std::ostringstream os;
    os << mdp.n_states << "-state MDP, max relative error vs central differences " << max_rel;
    detail = os.str();
    return max_rel < 1e-4;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "boundedness", 5.0, crit_boundedness},
        {2, "telescoping identity", 5.0, crit_telescoping},
        {3, "policy invariance", 30.0, crit_invariance},
        {4, "semantic trap", 5.0, crit_trap},
        {5, "euler consistency", 5.0, crit_euler},
        {6, "sample-efficiency direction", 600.0, crit_sample_efficiency},
        {7, "consistency gating", 600.0, crit_gating},
        {8, "labeling correctness", 10.0, crit_labeling},
        {9, "VOC sanity", 30.0, crit_voc},
        {10, "judgment logic", 2.0, crit_judgment},
        {11, "one-shot adaptation", 300.0, crit_one_shot},
        {12, "gradient check", 5.0, crit_gradient},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (elapsed > c.time_budget_s) {
            ok = false;
            detail += " [over time budget]";
        }
        std::printf("[%s] %2d %s: %s (%.2f s / %.0f s)\n", ok ? "PASS" : "FAIL", c.number,
                    c.name.c_str(), detail.c_str(), elapsed, c.time_budget_s);
        if (!ok) ++failures;
    }
    if (failures == 0) {
        std::printf("all %zu acceptance criteria passed\n", criteria.size());
    } else {
        std::printf("%d acceptance criteria FAILED\n", failures);
    }
    return failures;
}
