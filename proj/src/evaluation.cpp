#include "dopamine/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "dopamine/rng.hpp"

namespace dopamine::evaluation {

SamplingDensity density_from_name(const std::string& name) {
    if (name == "sparse") return SamplingDensity::Sparse;
    if (name == "medium") return SamplingDensity::Medium;
    if (name == "dense") return SamplingDensity::Dense;
    throw ConfigError("unknown density: " + name + " (expected sparse|medium|dense)");
}

std::string to_string(SamplingDensity d) {
    switch (d) {
        case SamplingDensity::Sparse: return "sparse";
        case SamplingDensity::Medium: return "medium";
        case SamplingDensity::Dense: return "dense";
    }
    return "?";
}

OutcomeLabel outcome_from_name(const std::string& name) {
    if (name == "SE") return OutcomeLabel::SE;
    if (name == "PSE") return OutcomeLabel::PSE;
    if (name == "FE") return OutcomeLabel::FE;
    throw ConfigError("unknown outcome label: " + name);
}

std::string to_string(OutcomeLabel label) {
    switch (label) {
        case OutcomeLabel::SE: return "SE";
        case OutcomeLabel::PSE: return "PSE";
        case OutcomeLabel::FE: return "FE";
    }
    return "?";
}

namespace {

// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&values](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double shared = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

}  // namespace

VocScore voc_score(const std::vector<double>& predicted, const std::vector<int>& true_order) {
    if (predicted.size() != true_order.size() || predicted.size() < 2) {
        throw std::invalid_argument("voc_score needs two equal-length sequences of size >= 2");
    }
    {
        // true_order must be a permutation of 0..n-1
        std::vector<int> sorted(true_order);
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            if (sorted[i] != static_cast<int>(i)) {
                throw std::invalid_argument("true_order is not a permutation");
            }
        }
    }
    const bool constant =
        std::all_of(predicted.begin(), predicted.end(),
                    [&predicted](double v) { return v == predicted.front(); });
    if (constant) return {0.0, true};

    const std::vector<double> pred_ranks = average_ranks(predicted);
    std::vector<double> chrono_ranks(true_order.size());
    for (std::size_t i = 0; i < true_order.size(); ++i) {
        chrono_ranks[i] = static_cast<double>(true_order[i] + 1);
    }
    return {pearson(pred_ranks, chrono_ranks), false};
}

namespace {

std::vector<int> frames_for_density(const Trajectory& traj, const VocConfig& cfg) {
    std::vector<int> frames;
    switch (cfg.sampling) {
        case SamplingDensity::Sparse:
            frames = traj.keyframe_indices;
            break;
        case SamplingDensity::Medium: {
            frames = traj.keyframe_indices;
            for (std::size_t k = 0; k + 1 < traj.keyframe_indices.size(); ++k) {
                const int a = traj.keyframe_indices[k];
                const int b = traj.keyframe_indices[k + 1];
                for (int i = 1; i <= cfg.medium_points_per_segment; ++i) {
                    const int idx = a + static_cast<int>(std::lround(
                                            static_cast<double>(i) * (b - a) /
                                            (cfg.medium_points_per_segment + 1)));
                    if (idx > a && idx < b) frames.push_back(idx);
                }
            }
            std::sort(frames.begin(), frames.end());
            frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
            break;
        }
        case SamplingDensity::Dense: {
            const int L = traj.num_frames;
            const int n = std::min(L, cfg.dense_max_frames);
            for (int i = 0; i < n; ++i) {
                frames.push_back(static_cast<int>(std::lround(
                    static_cast<double>(i) * (L - 1) / std::max(n - 1, 1))));
            }
            frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
            break;
        }
    }
    return frames;
}

}  // namespace

VocReport evaluate_estimator_voc(const estimators::HopEstimator& est,
                                 const std::vector<Trajectory>& trajectories,
                                 const VocConfig& cfg) {
    VocReport report;
    double acc = 0.0;
    int counted = 0;
    for (const auto& traj : trajectories) {
        traj.validate();
        TrajectoryVoc row;
        row.trajectory_id = traj.id;
        row.density = cfg.sampling;

        std::vector<int> frames = frames_for_density(traj, cfg);
        rng::Rng gen(rng::derive(cfg.shuffle_seed, "voc/" + traj.id));
        gen.shuffle(frames);

        const std::string& view = traj.views.front();
        const auto& refs = traj.frames_per_view.at(view);
        const std::string init_key = refs.front();
        const std::string goal_key = refs.back();

        std::vector<double> scores;
        std::vector<int> surviving_frames;
        scores.reserve(frames.size());
        for (int f : frames) {
            estimators::EstimatorQuery q;
            q.init = init_key;
            q.goal = goal_key;
            q.before = init_key;  // forward-anchored: hop from the initial state
            q.after = refs[static_cast<std::size_t>(f)];
            q.task_text = traj.task_text;
            try {
                scores.push_back(est.hop(q).value());
                surviving_frames.push_back(f);
            } catch (const estimators::UnresolvableRef&) {
                ++row.failed_frames;
            }
        }
        if (row.failed_frames * 10 > static_cast<int>(frames.size()) ||
            surviving_frames.size() < 2) {
            row.skipped = true;
            report.per_trajectory.push_back(row);
            continue;
        }
        // Chronological rank of each surviving frame within the evaluated set.
        std::vector<int> sorted_frames(surviving_frames);
        std::sort(sorted_frames.begin(), sorted_frames.end());
        std::vector<int> true_order;
        true_order.reserve(surviving_frames.size());
        for (int f : surviving_frames) {
            true_order.push_back(static_cast<int>(
                std::lower_bound(sorted_frames.begin(), sorted_frames.end(), f) -
                sorted_frames.begin()));
        }
        row.voc = voc_score(scores, true_order).value;
        report.per_trajectory.push_back(row);
        acc += row.voc;
        ++counted;
    }
    report.mean_voc = counted > 0 ? acc / counted : 0.0;
    return report;
}

void VocReport::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write voc csv: " + path);
    out << "trajectory_id,density,voc\n";
    out.precision(6);
    for (const auto& row : per_trajectory) {
        out << row.trajectory_id << "," << to_string(row.density) << ",";
        if (row.skipped) out << "skipped";
        else out << row.voc;
        out << "\n";
    }
}

OutcomeLabel judge_outcome(const ProgressCurve& curve, double xi) {
    const std::size_t T = curve.values.size();
    if (T < 3) throw std::invalid_argument("judge_outcome needs a curve of length >= 3");
    for (double v : curve.values) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::domain_error("progress curve value outside [0,1]");
    }
    const double p_final = curve.values.back();
    // Tail window: 1-based indices ceil(2T/3)..T, normalized by 3/T.
    const std::size_t t_lo = (2 * T + 2) / 3;  // ceil(2T/3)
    double tail = 0.0;
    for (std::size_t t = t_lo; t <= T; ++t) tail += curve.values[t - 1];
    tail *= 3.0 / static_cast<double>(T);
    if (p_final > 0.8 && tail > 0.6) return OutcomeLabel::SE;

    double mean = 0.0;
    for (double v : curve.values) mean += v;
    mean /= static_cast<double>(T);
    if (mean >= xi) return OutcomeLabel::PSE;
    return OutcomeLabel::FE;
}

ClassificationReport classification_report(const std::vector<OutcomeLabel>& predictions,
                                           const std::vector<OutcomeLabel>& truth) {
    if (predictions.size() != truth.size()) {
        throw std::invalid_argument("classification_report: length mismatch");
    }
    ClassificationReport rep;
    long class_total[3] = {};
    long class_hit[3] = {};
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = static_cast<int>(truth[i]);
        const int p = static_cast<int>(predictions[i]);
        rep.confusion[t][p]++;
        class_total[t]++;
        if (t == p) class_hit[t]++;
        rep.total++;
    }
    long hits = 0;
    for (int c = 0; c < 3; ++c) {
        hits += class_hit[c];
        rep.per_class_accuracy[c] =
            class_total[c] > 0 ? static_cast<double>(class_hit[c]) / class_total[c] : 0.0;
    }
    rep.overall_accuracy = rep.total > 0 ? static_cast<double>(hits) / rep.total : 0.0;
    return rep;
}

void ClassificationReport::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write confusion csv: " + path);
    out << "truth,pred_SE,pred_PSE,pred_FE\n";
    const char* names[3] = {"SE", "PSE", "FE"};
    for (int t = 0; t < 3; ++t) {
        out << names[t];
        for (int p = 0; p < 3; ++p) out << "," << confusion[t][p];
        out << "\n";
    }
    out.precision(6);
    out << "accuracy,," << overall_accuracy << ",\n";
}

}  // namespace dopamine::evaluation
