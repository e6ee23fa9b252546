#include <doctest.h>

#include <cmath>
#include <map>

#include "dopamine/evaluation.hpp"

using namespace dopamine;
using evaluation::OutcomeLabel;
using evaluation::ProgressCurve;

namespace {

// Brute-force rank oracle: rank = 1 + #smaller + (#equal - 1)/2, independent
// of the library's sort-based ranking.
std::vector<double> oracle_ranks(const std::vector<double>& v) {
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        int smaller = 0, equal = 0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (v[j] < v[i]) ++smaller;
            if (v[j] == v[i]) ++equal;
        }
        ranks[i] = 1.0 + smaller + (equal - 1) / 2.0;
    }
    return ranks;
}

double oracle_spearman(const std::vector<double>& pred, const std::vector<int>& order) {
    const auto ra = oracle_ranks(pred);
    std::vector<double> rb(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) rb[i] = order[i] + 1.0;
    const std::size_t n = ra.size();
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    return cov / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("voc_score: golden cases") {
    CHECK(evaluation::voc_score({0.1, 0.2, 0.3, 0.4}, {0, 1, 2, 3}).value ==
          doctest::Approx(1.0));
    CHECK(evaluation::voc_score({0.4, 0.3, 0.2, 0.1}, {0, 1, 2, 3}).value ==
          doctest::Approx(-1.0));
    // ranks [1,3,2,4] vs [1,2,3,4]: 1 - 6*2/(4*15) = 0.8
    CHECK(evaluation::voc_score({0.1, 0.4, 0.2, 0.9}, {0, 1, 2, 3}).value ==
          doctest::Approx(0.8));

    const auto degenerate = evaluation::voc_score({0.5, 0.5, 0.5}, {0, 1, 2});
    CHECK(degenerate.degenerate);
    CHECK(degenerate.value == 0.0);

    CHECK_THROWS(evaluation::voc_score({0.1}, {0}));
    CHECK_THROWS(evaluation::voc_score({0.1, 0.2}, {0, 2}));  // not a permutation
}

TEST_CASE("voc_score agrees with the brute-force rank-pair oracle") {
    rng::Rng gen(31);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t n = static_cast<std::size_t>(gen.uniform_int(2, 12));
        std::vector<double> pred(n);
        for (auto& p : pred) p = gen.uniform_int(0, 5) / 5.0;  // force ties sometimes
        std::vector<int> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
        gen.shuffle(order);
        const auto score = evaluation::voc_score(pred, order);
        if (score.degenerate) continue;
        CHECK(score.value == doctest::Approx(oracle_spearman(pred, order)).epsilon(1e-12));
    }
}

TEST_CASE("voc_score is invariant under strictly monotone transforms") {
    rng::Rng gen(32);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 8;
        std::vector<double> pred(n), warped(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = gen.uniform(-0.9, 0.9);
            warped[i] = std::exp(2.0 * pred[i]) + 3.0;  // strictly increasing map
        }
        std::vector<int> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
        gen.shuffle(order);
        CHECK(evaluation::voc_score(pred, order).value ==
              doctest::Approx(evaluation::voc_score(warped, order).value).epsilon(1e-12));
    }
}

TEST_CASE("voc_score antisymmetry for tie-free predictions") {
    rng::Rng gen(33);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 9;
        std::vector<double> pred(n), neg(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = gen.uniform() + i * 1e-6;  // effectively tie-free
            neg[i] = -pred[i];
        }
        std::vector<int> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
        gen.shuffle(order);
        CHECK(evaluation::voc_score(pred, order).value ==
              doctest::Approx(-evaluation::voc_score(neg, order).value).epsilon(1e-12));
    }
}

namespace {

estimators::PotentialFn linear_truth_for(const Trajectory& t) {
    std::map<std::string, double> table;
    const auto& refs = t.frames_per_view.at(t.views.front());
    for (int f = 0; f < t.num_frames; ++f) {
        table[refs[static_cast<std::size_t>(f)]] =
            static_cast<double>(f) / (t.num_frames - 1);
    }
    return [table](const estimators::StateKey& k) -> std::optional<double> {
        const auto it = table.find(k);
        if (it == table.end()) return std::nullopt;
        return it->second;
    };
}

}  // namespace

TEST_CASE("estimator VOC: oracle 1.0, anti-oracle -1.0 at every density") {
    std::vector<Trajectory> trajs;
    trajs.push_back(Trajectory::synthetic("e1", "task", 40, {0, 9, 24, 39}));
    trajs.push_back(Trajectory::synthetic("e2", "task", 25, {0, 12, 24}));

    // union truth over both trajectories
    auto t1 = linear_truth_for(trajs[0]);
    auto t2 = linear_truth_for(trajs[1]);
    estimators::PotentialFn truth = [t1, t2](const estimators::StateKey& k) {
        auto v = t1(k);
        return v ? v : t2(k);
    };
    estimators::OracleEstimator oracle(truth);
    estimators::AntiOracleEstimator anti(truth);

    for (auto density : {evaluation::SamplingDensity::Sparse, evaluation::SamplingDensity::Medium,
                         evaluation::SamplingDensity::Dense}) {
        evaluation::VocConfig cfg;
        cfg.sampling = density;
        cfg.shuffle_seed = 17;
        CHECK(evaluation::evaluate_estimator_voc(oracle, trajs, cfg).mean_voc ==
              doctest::Approx(1.0));
        CHECK(evaluation::evaluate_estimator_voc(anti, trajs, cfg).mean_voc ==
              doctest::Approx(-1.0));
    }
}

TEST_CASE("estimator VOC: random estimator hovers near zero") {
    std::vector<Trajectory> trajs;
    for (int i = 0; i < 100; ++i) {
        trajs.push_back(
            Trajectory::synthetic("r" + std::to_string(i), "task", 30, {0, 14, 29}));
    }
    estimators::RandomEstimator random(2024);
    evaluation::VocConfig cfg;
    cfg.sampling = evaluation::SamplingDensity::Dense;
    cfg.shuffle_seed = 3;
    const auto rep = evaluation::evaluate_estimator_voc(random, trajs, cfg);
    CHECK(std::fabs(rep.mean_voc) < 0.15);  // null distribution, 100 trajectories
}

TEST_CASE("estimator VOC: failing frames are counted and trajectories skipped") {
    std::vector<Trajectory> trajs;
    trajs.push_back(Trajectory::synthetic("f1", "task", 20, {0, 19}));
    // truth resolves nothing: every frame fails, trajectory skipped
    estimators::OracleEstimator broken([](const estimators::StateKey&) {
        return std::optional<double>{};
    });
    evaluation::VocConfig cfg;
    const auto rep = evaluation::evaluate_estimator_voc(broken, trajs, cfg);
    REQUIRE(rep.per_trajectory.size() == 1);
    CHECK(rep.per_trajectory[0].skipped);
    CHECK(rep.per_trajectory[0].failed_frames == 2);  // both sparse keyframes
}

TEST_CASE("estimator VOC: a few failing frames do not skip the trajectory") {
    std::vector<Trajectory> trajs;
    trajs.push_back(Trajectory::synthetic("f2", "task", 40, {0, 39}));
    const auto truth = linear_truth_for(trajs[0]);
    // fail on exactly one dense frame (1/40 < 10%)
    estimators::OracleEstimator flaky(
        [truth](const estimators::StateKey& k) -> std::optional<double> {
            if (k == "f2/front/7") return std::nullopt;
            return truth(k);
        });
    evaluation::VocConfig cfg;
    cfg.sampling = evaluation::SamplingDensity::Dense;
    const auto rep = evaluation::evaluate_estimator_voc(flaky, trajs, cfg);
    REQUIRE(rep.per_trajectory.size() == 1);
    CHECK(!rep.per_trajectory[0].skipped);
    CHECK(rep.per_trajectory[0].failed_frames == 1);
    CHECK(rep.per_trajectory[0].voc == doctest::Approx(1.0));  // survivors still sort perfectly
}

TEST_CASE("judge_outcome: threshold cascade basics") {
    // ramp to success
    ProgressCurve ramp;
    for (int i = 0; i <= 20; ++i) ramp.values.push_back(i / 20.0 * 0.95);
    CHECK(evaluation::judge_outcome(ramp) == OutcomeLabel::SE);

    ProgressCurve flat_half{std::vector<double>(10, 0.5)};
    CHECK(evaluation::judge_outcome(flat_half) == OutcomeLabel::PSE);

    ProgressCurve flat_low{std::vector<double>(10, 0.1)};
    CHECK(evaluation::judge_outcome(flat_low) == OutcomeLabel::FE);

    CHECK_THROWS(evaluation::judge_outcome(ProgressCurve{{0.5, 0.5}}));
    CHECK_THROWS_AS(evaluation::judge_outcome(ProgressCurve{{0.5, 0.5, 1.5}}),
                    std::domain_error);
}

TEST_CASE("judge_outcome: index-convention golden cases at T in {3,4,6,7}") {
    // T=3: tail indices 2..3, factor 1. (0.9+0.95)*1 = 1.85 > 0.6, final > 0.8
    CHECK(evaluation::judge_outcome(ProgressCurve{{0.5, 0.9, 0.95}}) == OutcomeLabel::SE);

    // T=4: tail indices 3..4, factor 3/4. (0.1+0.85)*0.75 = 0.7125 > 0.6
    CHECK(evaluation::judge_outcome(ProgressCurve{{0.0, 0.0, 0.1, 0.85}}) == OutcomeLabel::SE);

    // T=6: tail indices 4..6, factor 1/2. (0.1+0.1+0.85)*0.5 = 0.525 <= 0.6
    // fails the tail check despite final 0.85; mean 0.175 < 0.4 -> FE
    CHECK(evaluation::judge_outcome(ProgressCurve{{0.0, 0.0, 0.0, 0.1, 0.1, 0.85}}) ==
          OutcomeLabel::FE);

    // T=7: tail indices 5..7, factor 3/7. (0.2+0.3+0.9)*3/7 = 0.6 exactly, not > 0.6
    // mean = 1.4/7 = 0.2 < 0.4 -> FE
    CHECK(evaluation::judge_outcome(
              ProgressCurve{{0.0, 0.0, 0.0, 0.0, 0.2, 0.3, 0.9}}) == OutcomeLabel::FE);
    // nudging the tail over the line flips it to SE
    CHECK(evaluation::judge_outcome(
              ProgressCurve{{0.0, 0.0, 0.0, 0.0, 0.2, 0.31, 0.9}}) == OutcomeLabel::SE);
}

TEST_CASE("judge_outcome is monotone under pointwise raising") {
    rng::Rng gen(34);
    auto rank = [](OutcomeLabel l) {
        return l == OutcomeLabel::SE ? 2 : (l == OutcomeLabel::PSE ? 1 : 0);
    };
    for (int rep = 0; rep < 500; ++rep) {
        const std::size_t T = static_cast<std::size_t>(gen.uniform_int(3, 15));
        ProgressCurve low, high;
        for (std::size_t t = 0; t < T; ++t) {
            const double v = gen.uniform();
            low.values.push_back(v);
            high.values.push_back(std::min(1.0, v + gen.uniform() * (1.0 - v)));
        }
        CHECK(rank(evaluation::judge_outcome(high)) >= rank(evaluation::judge_outcome(low)));
    }
}

TEST_CASE("judge_outcome honors the xi flag") {
    ProgressCurve flat{std::vector<double>(9, 0.45)};
    CHECK(evaluation::judge_outcome(flat, 0.4) == OutcomeLabel::PSE);
    CHECK(evaluation::judge_outcome(flat, 0.5) == OutcomeLabel::FE);
}

TEST_CASE("classification_report: identity, all-FE and 56/60") {
    using evaluation::classification_report;
    std::vector<OutcomeLabel> truth;
    for (int i = 0; i < 20; ++i) truth.push_back(OutcomeLabel::SE);
    for (int i = 0; i < 20; ++i) truth.push_back(OutcomeLabel::PSE);
    for (int i = 0; i < 20; ++i) truth.push_back(OutcomeLabel::FE);

    const auto perfect = classification_report(truth, truth);
    CHECK(perfect.overall_accuracy == doctest::Approx(1.0));
    CHECK(perfect.confusion[0][0] == 20);

    std::vector<OutcomeLabel> all_fe(60, OutcomeLabel::FE);
    const auto fe = classification_report(all_fe, truth);
    CHECK(fe.overall_accuracy == doctest::Approx(1.0 / 3.0));

    auto flipped = truth;
    flipped[0] = OutcomeLabel::FE;
    flipped[1] = OutcomeLabel::FE;
    flipped[20] = OutcomeLabel::SE;
    flipped[21] = OutcomeLabel::SE;
    const auto partial = classification_report(flipped, truth);
    CHECK(partial.overall_accuracy == doctest::Approx(56.0 / 60.0));

    CHECK_THROWS(classification_report({OutcomeLabel::SE}, truth));
}
