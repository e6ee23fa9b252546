// Command-line front end: reproducible, seeded runs of the labeling pipeline,
// the property-verification suites, the tabular experiments, and the
// reward-model evaluation metrics.
//
// Exit codes: 0 success, 1 property failure, 2 config error, 3 I/O error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "dopamine/common.hpp"
#include "dopamine/estimators.hpp"
#include "dopamine/evaluation.hpp"
#include "dopamine/kernels.hpp"
#include "dopamine/labeling.hpp"
#include "dopamine/rng.hpp"
#include "dopamine/shaping.hpp"
#include "dopamine/testbed/learn.hpp"
#include "dopamine/testbed/solve.hpp"
#include "dopamine/trajectory.hpp"

namespace fs = std::filesystem;
using namespace dopamine;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitIoError = 3;

struct CommonOpts {
    std::string output_dir = "out";
    std::uint64_t seed = 0;
    std::string config_path;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--output-dir,-o", opts.output_dir, "Directory for outputs");
    cmd->add_option("--seed", opts.seed, "Master seed; all module draws derive from it")
        ->envname("DOPAMINE_SEED");
    cmd->add_option("--config", opts.config_path,
                    "Flat key-value config file (key = value per line); "
                    "command-line flags win");
}

// Expands `--config <file>` into synthetic long flags appended after the
// original arguments are scanned. Keys already given on the command line are
// skipped, so explicit flags always win. Unknown keys are config errors.
std::vector<std::string> expand_config(const std::vector<std::string>& args, CLI::App& app) {
    std::string config_path;
    std::string subcommand;
    std::set<std::string> passed;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (subcommand.empty() && !a.empty() && a[0] != '-') {
            subcommand = a;
            continue;
        }
        if (a == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (a.rfind("--config=", 0) == 0) config_path = a.substr(9);
        if (a.rfind("--", 0) == 0) {
            const auto eq = a.find('=');
            passed.insert(eq == std::string::npos ? a : a.substr(0, eq));
        }
    }
    if (config_path.empty()) return args;
    if (subcommand.empty()) return args;

    CLI::App* sub = nullptr;
    try {
        sub = app.get_subcommand(subcommand);
    } catch (const CLI::OptionNotFound&) {
        return args;  // parse() will report the unknown subcommand itself
    }

    std::ifstream in(config_path);
    if (!in) throw IoError("cannot open config file: " + config_path);
    std::vector<std::string> out = args;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        const std::string flag = "--" + key;
        try {
            sub->get_option(flag);
        } catch (const CLI::OptionNotFound&) {
            throw ConfigError(config_path + ":" + std::to_string(lineno) +
                              ": unknown config key '" + key + "' for subcommand " + subcommand);
        }
        if (passed.count(flag)) continue;  // explicit flag wins
        out.push_back(flag);
        out.push_back(value);
    }
    return out;
}

void write_manifest(CLI::App* cmd, const CommonOpts& opts, const std::string& subcommand) {
    fs::create_directories(opts.output_dir);
    const std::string effective = cmd->config_to_str(true, false);
    nlohmann::json manifest{{"subcommand", subcommand},
                            {"config_file", opts.config_path},
                            {"seed", opts.seed},
                            {"output_dir", opts.output_dir},
                            {"tool_version", kVersion},
                            {"config_hash",
                             rng::fnv1a64(effective + "#" + std::to_string(opts.seed))}};
    std::ofstream out(fs::path(opts.output_dir) / "manifest.json");
    if (!out) throw IoError("cannot write manifest in " + opts.output_dir);
    out << manifest.dump(2) << "\n";
}

// Linear-by-frame ground truth for manifest trajectories: frame i carries
// progress i/(L-1). This is the potential the synthetic fixtures are built
// around; real progress labels would come from an adapted estimator instead.
estimators::PotentialFn linear_truth(const std::vector<Trajectory>& trajs) {
    auto table = std::make_shared<std::map<std::string, double>>();
    for (const auto& t : trajs) {
        for (const auto& view : t.views) {
            const auto& refs = t.frames_per_view.at(view);
            for (int f = 0; f < t.num_frames; ++f) {
                (*table)[refs[static_cast<std::size_t>(f)]] =
                    t.num_frames > 1 ? static_cast<double>(f) / (t.num_frames - 1) : 1.0;
            }
        }
    }
    return [table](const estimators::StateKey& key) -> std::optional<double> {
        const auto it = table->find(key);
        if (it == table->end()) return std::nullopt;
        return it->second;
    };
}

std::vector<std::vector<std::string>> parse_view_subsets(const std::string& spec) {
    std::vector<std::vector<std::string>> subsets;
    std::string group;
    std::istringstream groups(spec);
    while (std::getline(groups, group, ';')) {
        std::vector<std::string> views;
        std::string v;
        std::istringstream items(group);
        while (std::getline(items, v, ',')) {
            if (!v.empty()) views.push_back(v);
        }
        if (!views.empty()) subsets.push_back(std::move(views));
    }
    return subsets;
}

// ---------------------------------------------------------------- label ----

int cmd_label(CLI::App* cmd, const CommonOpts& opts, const std::string& input,
              labeling::SamplingConfig cfg, const std::string& expand_spec) {
    cfg.rng_seed = opts.seed;
    cfg.validate();
    const auto trajectories = read_trajectory_manifest(input);
    if (trajectories.empty()) throw ConfigError("trajectory manifest is empty: " + input);

    std::vector<labeling::HopSample> all;
    int empty_cells = 0;
    for (const auto& traj : trajectories) {
        labeling::GenerationDiagnostics diag;
        auto samples = labeling::generate_hop_samples(traj, cfg, &diag);
        if (!diag.empty_cells.empty()) {
            empty_cells += static_cast<int>(diag.empty_cells.size());
            std::cerr << "warning: trajectory '" << traj.id << "' left "
                      << diag.empty_cells.size() << " (hop,gap) cells unpopulated\n";
        }
        all.insert(all.end(), samples.begin(), samples.end());
    }
    if (!expand_spec.empty()) {
        all = labeling::expand_views(all, parse_view_subsets(expand_spec));
    }

    fs::create_directories(opts.output_dir);
    const auto samples_path = fs::path(opts.output_dir) / "hop_samples.jsonl";
    const auto occupancy_path = fs::path(opts.output_dir) / "bin_occupancy.csv";
    labeling::write_hop_samples_jsonl(samples_path.string(), all);
    labeling::write_occupancy_csv(occupancy_path.string(),
                                  labeling::bin_occupancy_report(all, cfg));
    write_manifest(cmd, opts, "label");
    std::cout << "wrote " << all.size() << " samples from " << trajectories.size()
              << " trajectories to " << samples_path.string() << " (" << empty_cells
              << " empty cells)\n";
    return kExitOk;
}

// --------------------------------------------------------------- verify ----

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

SuiteResult suite_boundedness(std::uint64_t seed, int cases) {
    rng::Rng gen(rng::derive(seed, "verify/boundedness"));
    const std::size_t lanes = static_cast<std::size_t>(cases);
    std::vector<double> phi(lanes), hops(lanes);
    for (auto& p : phi) p = gen.uniform();
    const int steps = 64;
    double worst = 0.0;
    for (int t = 0; t < steps; ++t) {
        for (auto& h : hops) h = gen.uniform(-1.0, 1.0);
        progress::reconstruct_step_batch(phi, hops);
        for (double p : phi) {
            worst = std::max({worst, -p, p - 1.0});
        }
    }
    SuiteResult r{"boundedness", worst <= 1e-12, ""};
    r.detail = std::to_string(cases) + " chains x " + std::to_string(steps) +
               " hops, max excursion " + std::to_string(worst);
    return r;
}

SuiteResult suite_telescoping(std::uint64_t seed, int cases) {
    rng::Rng gen(rng::derive(seed, "verify/telescoping"));
    double worst = 0.0;
    for (double gamma : {0.9, 0.98, 0.999}) {
        const auto cfg = shaping::ShapingConfig::from_gamma(gamma);
        for (int i = 0; i < cases / 3; ++i) {
            const std::size_t n = static_cast<std::size_t>(gen.uniform_int(1, 200));
            std::vector<double> phis(n);
            for (auto& p : phis) p = gen.uniform();
            const double sum = shaping::discounted_shaping_sum(phis, cfg);
            const double boundary =
                std::pow(gamma, static_cast<double>(n - 1)) * phis.back() - phis.front();
            worst = std::max(worst, std::fabs(sum - boundary));
        }
    }
    SuiteResult r{"telescoping", worst <= 1e-9, ""};
    r.detail = std::to_string(cases) + " sequences, max |sum - boundary| = " +
               std::to_string(worst);
    return r;
}

SuiteResult suite_invariance(std::uint64_t seed, int cases, bool mutate) {
    const auto cfg = shaping::ShapingConfig::from_gamma(0.98);
    int failures = 0;
    double worst_shift = 0.0;
    for (int i = 0; i < cases; ++i) {
        const auto mdp = testbed::make_random_mdp(rng::derive(seed, i));
        const auto rep =
            mutate ? testbed::verify_invariance_against(
                         mdp, testbed::make_gold_plus_naive_reward(mdp), cfg.gamma)
                   : testbed::verify_policy_invariance(mdp, cfg);
        if (!rep.invariant) ++failures;
        worst_shift = std::max(worst_shift, rep.q_shift_max_err);
    }
    // The mutated reward must also fail on the risky trap construction.
    if (mutate) {
        testbed::TrapMDPSpec trap;
        trap.path_risk = 0.6;
        const auto mdp = trap.to_mdp();
        const auto rep = testbed::verify_invariance_against(
            mdp, testbed::make_gold_plus_naive_reward(mdp), 0.98);
        if (!rep.invariant) ++failures;
    }
    SuiteResult r{"invariance", failures == 0, ""};
    r.detail = std::to_string(cases) + " random MDPs, " + std::to_string(failures) +
               " violations, max Q-shift error " + std::to_string(worst_shift) +
               (mutate ? " [naive-shaping mutation active]" : "");
    return r;
}

SuiteResult suite_trap() {
    testbed::TrapMDPSpec spec;  // canonical: honeypot 0.9, risk 0.3
    const auto rep = testbed::demonstrate_semantic_trap(spec, 0.98);
    const bool separated = rep.naive_self_loops && rep.grm_advances &&
                           rep.naive_goal_probability == 0.0 && rep.grm_goal_probability > 0.0;
    SuiteResult r{"trap", separated, rep.describe()};
    return r;
}

SuiteResult suite_euler() {
    const double T = 4.0;
    const double pi = 3.14159265358979323846;
    shaping::PhiPath path{
        [T, pi](double t) {
            const double s = std::sin(pi * t / (2.0 * T));
            return s * s;
        },
        [T, pi](double t) { return (pi / (2.0 * T)) * std::sin(pi * t / T); }};
    // Halve h from 0.2 to 0.0125; the observed order is the log-log slope
    // across the whole study.
    double first = 0.0, last = 0.0;
    int halvings = 0;
    std::string detail = "errors:";
    for (double h = 0.2; h >= 0.0125 * 0.999; h /= 2.0) {
        last = shaping::euler_consistency_error(0.5, path, h, T);
        detail += " " + std::to_string(last);
        if (first == 0.0) first = last;
        else ++halvings;
    }
    const double order = std::log2(first / last) / halvings;
    detail += "; observed order " + std::to_string(order);
    SuiteResult r{"euler", order >= 0.9, detail};
    return r;
}

SuiteResult suite_gating(std::uint64_t seed) {
    // Inject divergence 0.4 and check the tracker weight bound exp(-3.2).
    auto truth = [](const estimators::StateKey& k) -> std::optional<double> {
        if (k.rfind("x", 0) != 0) return std::nullopt;
        return std::stod(k.substr(1));
    };
    estimators::NoiseModel noise;
    noise.ood_divergence = 0.4;
    noise.ood_region = [](const estimators::StateKey&) { return true; };
    estimators::NoisyEstimator est(truth, noise, rng::derive(seed, "verify/gating"));
    const progress::ConsistencyConfig cc{};
    double worst_w = 0.0;
    // Sweep the band where the +/-0.2 split survives hop clamping, so the
    // forward/backward gap is the full 0.4 by construction.
    for (double phi = 0.2; phi <= 0.8001; phi += 0.05) {
        auto state = progress::make_tracker(progress::TrackerMode::ConsistencyGated,
                                            progress::Progress(phi));
        const std::string key = "x" + std::to_string(phi);
        const auto fwd = est.hop({"x0.0", "x1.0", "x0.0", key, ""});
        const auto bwd = est.hop({"x0.0", "x1.0", "x1.0", key, ""});
        const auto next = progress::tracker_step(state, progress::Hop(0.0), fwd, bwd, cc);
        worst_w = std::max(worst_w, next.last_weight);
    }
    SuiteResult r{"gating", worst_w <= std::exp(-3.2) + 1e-6, ""};
    r.detail = "max tracker weight inside OOD region = " + std::to_string(worst_w) +
               " (bound " + std::to_string(std::exp(-3.2)) + ")";
    return r;
}

int cmd_verify(CLI::App* cmd, const CommonOpts& opts, const std::string& suite, int cases,
               const std::string& mutate) {
    const bool mutate_shaping = mutate == "naive-shaping";
    if (!mutate.empty() && !mutate_shaping) {
        throw ConfigError("unknown mutation: " + mutate + " (expected naive-shaping)");
    }
    std::vector<SuiteResult> results;
    auto want = [&suite](const std::string& name) { return suite == "all" || suite == name; };
    if (want("boundedness")) results.push_back(suite_boundedness(opts.seed, std::max(cases, 1)));
    if (want("telescoping"))
        results.push_back(suite_telescoping(opts.seed, std::max(cases / 10, 3)));
    if (want("invariance")) results.push_back(suite_invariance(opts.seed, 50, mutate_shaping));
    if (want("trap")) results.push_back(suite_trap());
    if (want("euler")) results.push_back(suite_euler());
    if (want("gating")) results.push_back(suite_gating(opts.seed));
    if (results.empty()) throw ConfigError("unknown suite: " + suite);

    std::cout << "kernels backend: " << kernels::backend_name() << "\n";
    bool all_passed = true;
    for (const auto& r : results) {
        std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
        all_passed = all_passed && r.passed;
    }
    write_manifest(cmd, opts, "verify");
    return all_passed ? kExitOk : kExitPropertyFailure;
}

// ---------------------------------------------------------------- train ----

struct TrainOpts {
    std::string algorithm = "q";
    std::string reward = "grm";
    std::string estimator = "oracle";
    std::string tracker = "fused";
    int seeds = 20;
    int episodes = 1500;
    int max_steps = 300;
    double learning_rate = 0.2;
    double epsilon = 0.1;
    double gamma = 0.98;
    double delta = 0.05;
    double slip = 0.1;
    double noise_sigma = 0.05;
    double ood_divergence = 0.0;
    int jobs = 1;
};

int cmd_train(CLI::App* cmd, const CommonOpts& opts, const TrainOpts& t) {
    if (t.algorithm != "q" && t.algorithm != "reinforce") {
        throw ConfigError("unknown algorithm: " + t.algorithm + " (expected q|reinforce)");
    }
    const auto variant = testbed::reward_variant_from_name(t.reward);

    testbed::GridWorldSpec grid;
    grid.slip_probability = t.slip;
    grid.subgoal_cells = {{4, 4}};
    const testbed::TabularMDP mdp = grid.to_mdp();

    testbed::LearnParams params;
    params.learning_rate = t.learning_rate;
    params.epsilon_explore = t.epsilon;
    params.episode_cap = t.episodes;
    params.max_steps = t.max_steps;
    params.shaping = shaping::ShapingConfig::from_gamma(t.gamma, 1.0, t.delta);
    if (t.tracker == "gated") {
        params.tracker_mode = progress::TrackerMode::ConsistencyGated;
    } else if (t.tracker == "fused") {
        params.tracker_mode = progress::TrackerMode::FusionAverage;
    } else {
        throw ConfigError("unknown tracker mode: " + t.tracker + " (expected fused|gated)");
    }

    fs::create_directories(opts.output_dir);
    testbed::EstimatorFactory factory;
    if (t.estimator == "oracle") {
        factory = testbed::oracle_factory(mdp);
    } else if (t.estimator == "noisy") {
        estimators::NoiseModel noise;
        noise.gaussian_sigma = t.noise_sigma;
        noise.ood_divergence = t.ood_divergence;
        if (t.ood_divergence > 0.0) {
            noise.ood_region = [](const estimators::StateKey& key) {
                int x = 0, y = 0;
                if (std::sscanf(key.c_str(), "cell/%d/%d", &x, &y) != 2) return false;
                return x <= 2 && y >= 7;  // an off-path corner the policy only reaches by exploring
            };
        }
        factory = testbed::noisy_factory(mdp, noise);
    } else if (t.estimator == "fitted") {
        estimators::OneShotFitConfig fit_cfg;
        fit_cfg.demo = grid.demo_trajectory("train-demo");
        fit_cfg.feature_map = estimators::make_feature_map(
            "grid_coords", {{"width", grid.width}, {"height", grid.height}});
        fit_cfg.sampling.chunk_size = 1;
        fit_cfg.sampling.rng_seed = opts.seed;
        fit_cfg.regularization = 1e-9;
        auto fitted = std::make_shared<estimators::FittedHopEstimator>(
            estimators::fit_one_shot(fit_cfg));
        fitted->save((fs::path(opts.output_dir) / "fitted_estimator.json").string());
        factory = [fitted](std::uint64_t) {
            return std::make_unique<estimators::FittedHopEstimator>(*fitted);
        };
    } else if (t.estimator == "random") {
        factory = [](std::uint64_t seed) {
            return std::make_unique<estimators::RandomEstimator>(rng::derive(seed, "rand-est"));
        };
    } else {
        throw ConfigError("unknown estimator: " + t.estimator +
                          " (expected oracle|noisy|fitted|random)");
    }

    std::vector<std::uint64_t> seeds;
    seeds.reserve(static_cast<std::size_t>(t.seeds));
    for (int i = 0; i < t.seeds; ++i) seeds.push_back(rng::derive(opts.seed, i));

    const auto report =
        t.algorithm == "reinforce"
            ? testbed::run_reinforce(mdp, variant, factory, params, seeds, t.jobs)
            : testbed::run_q_learning(mdp, variant, factory, params, seeds, t.jobs);

    report.write_csv((fs::path(opts.output_dir) / "report.csv").string());
    report.write_curves_csv((fs::path(opts.output_dir) / "curves.csv").string());
    std::ofstream summary(fs::path(opts.output_dir) / "summary.json");
    summary << report.summary_json().dump(2) << "\n";
    write_manifest(cmd, opts, "train");
    std::cout << report.algorithm << "/" << report.reward_variant
              << ": median episodes to threshold = " << report.median_episodes_to_threshold()
              << ", mean final success = " << report.mean_final_success() << "\n";
    return kExitOk;
}

// ----------------------------------------------------------------- eval ----

int cmd_eval(CLI::App* cmd, const CommonOpts& opts, const std::string& input,
             const std::string& curves_path, const std::string& estimator_name,
             const std::string& densities, double xi) {
    fs::create_directories(opts.output_dir);
    bool did_anything = false;

    if (!input.empty()) {
        const auto trajectories = read_trajectory_manifest(input);
        const auto truth = linear_truth(trajectories);
        std::unique_ptr<estimators::HopEstimator> est;
        if (estimator_name == "oracle") {
            est = std::make_unique<estimators::OracleEstimator>(truth);
        } else if (estimator_name == "anti") {
            est = std::make_unique<estimators::AntiOracleEstimator>(truth);
        } else if (estimator_name == "random") {
            est = std::make_unique<estimators::RandomEstimator>(
                rng::derive(opts.seed, "eval/random"));
        } else {
            throw ConfigError("unknown estimator: " + estimator_name +
                              " (expected oracle|anti|random)");
        }

        std::string density;
        std::istringstream ds(densities);
        while (std::getline(ds, density, ',')) {
            evaluation::VocConfig cfg;
            cfg.sampling = evaluation::density_from_name(density);
            cfg.shuffle_seed = opts.seed;
            const auto report = evaluation::evaluate_estimator_voc(*est, trajectories, cfg);
            report.write_csv(
                (fs::path(opts.output_dir) / ("voc_" + density + ".csv")).string());
            std::cout << "voc " << density << ": mean = " << report.mean_voc << " over "
                      << report.per_trajectory.size() << " trajectories\n";
            did_anything = true;
        }
    }

    if (!curves_path.empty()) {
        std::ifstream in(curves_path);
        if (!in) throw IoError("cannot open curves file: " + curves_path);
        std::vector<evaluation::OutcomeLabel> predictions, truth_labels;
        std::string line;
        std::size_t lineno = 0;
        std::vector<std::pair<std::string, std::string>> rows;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            nlohmann::json j;
            evaluation::ProgressCurve curve;
            try {
                j = nlohmann::json::parse(line);
                curve.values = j.at("values").get<std::vector<double>>();
            } catch (const nlohmann::json::exception& e) {
                throw IoError(curves_path + ":" + std::to_string(lineno) + ": bad record: " +
                              e.what());
            }
            const auto predicted = evaluation::judge_outcome(curve, xi);
            predictions.push_back(predicted);
            rows.emplace_back(j.value("id", "?"), evaluation::to_string(predicted));
            if (j.contains("label")) {
                truth_labels.push_back(
                    evaluation::outcome_from_name(j.at("label").get<std::string>()));
            }
        }
        std::ofstream judged(fs::path(opts.output_dir) / "judgments.csv");
        judged << "id,label\n";
        for (const auto& [id, label] : rows) judged << id << "," << label << "\n";
        if (truth_labels.size() == predictions.size() && !truth_labels.empty()) {
            const auto rep = evaluation::classification_report(predictions, truth_labels);
            rep.write_csv((fs::path(opts.output_dir) / "confusion.csv").string());
            std::cout << "judgment accuracy: " << rep.overall_accuracy << " over " << rep.total
                      << " curves\n";
        }
        did_anything = true;
    }

    if (!did_anything) throw ConfigError("eval needs --input (VOC) and/or --curves (judgment)");
    write_manifest(cmd, opts, "eval");
    return kExitOk;
}

// ----------------------------------------------------------------- trap ----

int cmd_trap(CLI::App* cmd, const CommonOpts& opts, double honeypot, double risk, double gamma,
             int horizon) {
    testbed::TrapMDPSpec spec;
    spec.honeypot_potential = honeypot;
    spec.path_risk = risk;
    spec.horizon = horizon;
    const auto rep = testbed::demonstrate_semantic_trap(spec, gamma);
    std::cout << rep.describe() << "\n";
    fs::create_directories(opts.output_dir);
    std::ofstream out(fs::path(opts.output_dir) / "trap_report.json");
    out << nlohmann::json{{"honeypot_potential", honeypot},
                          {"path_risk", risk},
                          {"gamma", gamma},
                          {"horizon", horizon},
                          {"naive_self_loops", rep.naive_self_loops},
                          {"grm_advances", rep.grm_advances},
                          {"naive_goal_probability", rep.naive_goal_probability},
                          {"grm_goal_probability", rep.grm_goal_probability},
                          {"stagnation_objective", rep.stagnation_objective}}
               .dump(2)
        << "\n";
    write_manifest(cmd, opts, "trap");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hop-based progress rewards: labeling, shaping, verification, experiments"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    // label
    auto* label = app.add_subcommand("label", "Turn a trajectory manifest into hop samples");
    CommonOpts label_opts;
    add_common(label, label_opts);
    std::string label_input;
    std::string expand_spec;
    labeling::SamplingConfig sampling;
    label->add_option("--input,-i", label_input, "Trajectory manifest (JSONL)")->required();
    label->add_option("--chunk-size", sampling.chunk_size, "Chunk size C for per-segment points");
    label->add_option("--hop-bins", sampling.n_hop_bins, "Hop bins over [-1,1]");
    label->add_option("--gap-bins", sampling.n_distance_bins, "Temporal-gap bins per hop bin");
    label->add_option("--zero-fraction", sampling.zero_hop_fraction,
                      "Share of explicitly zero-hop samples");
    label->add_option("--zero-epsilon", sampling.zero_hop_epsilon,
                      "Progress threshold for the zero channel (0 = 0.5/M default)");
    label->add_option("--expand-views", expand_spec,
                      "View subsets, e.g. 'front;front,wrist' (semicolon-separated groups)");

    // verify
    auto* verify = app.add_subcommand("verify", "Run the property-verification suites");
    CommonOpts verify_opts;
    add_common(verify, verify_opts);
    std::string suite = "all";
    int cases = 100000;
    std::string mutate;
    verify->add_option("--suite", suite,
                       "all|boundedness|telescoping|invariance|trap|euler|gating");
    verify->add_option("--cases", cases, "Case count for the bulk suites");
    verify->add_option("--mutate", mutate,
                       "Inject a defect (naive-shaping) to confirm the suites catch it");

    // train
    auto* train = app.add_subcommand("train", "Gridworld experiments (tabular RL)");
    CommonOpts train_opts;
    add_common(train, train_opts);
    TrainOpts topts;
    train->add_option("--alg", topts.algorithm, "q|reinforce");
    train->add_option("--reward", topts.reward, "gold|grm|naive");
    train->add_option("--estimator", topts.estimator, "oracle|noisy|fitted|random");
    train->add_option("--tracker", topts.tracker, "fused|gated");
    train->add_option("--seeds", topts.seeds, "Number of seeds");
    train->add_option("--episodes", topts.episodes, "Episode cap per seed");
    train->add_option("--max-steps", topts.max_steps, "Step cap per episode");
    train->add_option("--lr", topts.learning_rate, "Learning rate");
    train->add_option("--epsilon", topts.epsilon, "Exploration rate");
    train->add_option("--gamma", topts.gamma, "Discount factor");
    train->add_option("--delta", topts.delta, "Completion margin for the automated gold reward");
    train->add_option("--slip", topts.slip, "Gridworld slip probability");
    train->add_option("--noise-sigma", topts.noise_sigma, "Estimator noise sigma");
    train->add_option("--ood-divergence", topts.ood_divergence,
                      "Forward/backward split injected in the OOD corner");
    train->add_option("--jobs", topts.jobs, "Parallel seed workers");

    // eval
    auto* eval = app.add_subcommand("eval", "Reward-model metrics: VOC and outcome judgment");
    CommonOpts eval_opts;
    add_common(eval, eval_opts);
    std::string eval_input, eval_curves, eval_estimator = "oracle";
    std::string densities = "sparse,medium,dense";
    double xi = 0.4;
    eval->add_option("--input,-i", eval_input, "Trajectory manifest (JSONL) for VOC");
    eval->add_option("--curves", eval_curves, "Progress-curve JSONL for outcome judgment");
    eval->add_option("--estimator", eval_estimator, "oracle|anti|random");
    eval->add_option("--density", densities, "Comma list of sparse,medium,dense");
    eval->add_option("--xi", xi, "Partial-progress threshold for the judgment cascade");

    // trap
    auto* trap = app.add_subcommand("trap", "Semantic-trap demonstration (exact solve)");
    CommonOpts trap_opts;
    add_common(trap, trap_opts);
    double honeypot = 0.9, risk = 0.3, trap_gamma = 0.98;
    int horizon = 200;
    trap->add_option("--honeypot", honeypot, "Potential of the lure state");
    trap->add_option("--risk", risk, "Failure probability of the completing path");
    trap->add_option("--gamma", trap_gamma, "Discount factor");
    trap->add_option("--horizon", horizon, "Steps for the goal-probability check");

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = expand_config(args, app);
        std::reverse(args.begin(), args.end());  // CLI11's vector overload wants reversed args
        app.parse(args);
        if (label->parsed())
            return cmd_label(label, label_opts, label_input, sampling, expand_spec);
        if (verify->parsed()) return cmd_verify(verify, verify_opts, suite, cases, mutate);
        if (train->parsed()) return cmd_train(train, train_opts, topts);
        if (eval->parsed())
            return cmd_eval(eval, eval_opts, eval_input, eval_curves, eval_estimator, densities,
                            xi);
        if (trap->parsed()) return cmd_trap(trap, trap_opts, honeypot, risk, trap_gamma, horizon);
        return kExitConfigError;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfigError;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIoError;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPropertyFailure;
    }
}
