#include <doctest.h>

#include <cmath>
#include <vector>

#include "dopamine/progress.hpp"
#include "dopamine/rng.hpp"
#include "dopamine/tracker.hpp"

using namespace dopamine;
using progress::Hop;
using progress::Progress;

TEST_CASE("type invariants reject out-of-range values") {
    CHECK_THROWS_AS(Progress(-0.1), std::domain_error);
    CHECK_THROWS_AS(Progress(1.1), std::domain_error);
    CHECK_THROWS_AS(Hop(-1.5), std::domain_error);
    CHECK_THROWS_AS(Hop(1.5), std::domain_error);
    CHECK(Progress::clamped(1.7).value() == 1.0);
    CHECK(Hop::clamped(-3.0).value() == -1.0);
}

TEST_CASE("hop_label matches the branch formulas") {
    CHECK(progress::hop_label(Progress(0.5), Progress(0.75)).value() == doctest::Approx(0.5));
    CHECK(progress::hop_label(Progress(0.5), Progress(0.5)).value() == 0.0);
    CHECK(progress::hop_label(Progress(0.8), Progress(0.4)).value() == doctest::Approx(-0.5));
    // degenerate denominators return exactly 0
    CHECK(progress::hop_label(Progress(1.0), Progress(1.0)).value() == 0.0);
    CHECK(progress::hop_label(Progress(0.0), Progress(0.0)).value() == 0.0);
}

TEST_CASE("apply_hop matches the update rule") {
    CHECK(progress::apply_hop(Progress(0.5), Hop(0.5)).value() == doctest::Approx(0.75));
    CHECK(progress::apply_hop(Progress(0.8), Hop(-0.5)).value() == doctest::Approx(0.4));
    CHECK(progress::apply_hop(Progress(0.5), Hop(1.0)).value() == 1.0);
    for (double x : {0.0, 0.25, 0.5, 1.0}) {
        CHECK(progress::apply_hop(Progress(x), Hop(0.0)).value() == x);  // identity hop
    }
}

TEST_CASE("incremental_delta decomposes apply_hop exactly") {
    CHECK(progress::incremental_delta(Progress(0.5), Hop(0.5)) == doctest::Approx(0.25));
    CHECK(progress::incremental_delta(Progress(0.5), Hop(0.0)) == 0.0);
    CHECK(progress::incremental_delta(Progress(0.8), Hop(-0.5)) == doctest::Approx(-0.4));

    rng::Rng gen(7);
    for (int i = 0; i < 10000; ++i) {
        const Progress p(gen.uniform());
        const Hop h(gen.uniform(-1.0, 1.0));
        // same branch arithmetic, so the identity is exact
        CHECK(progress::apply_hop(p, h).value() == p.value() + progress::incremental_delta(p, h));
    }
}

TEST_CASE("round-trip: apply_hop(hop_label) recovers the target") {
    rng::Rng gen(8);
    for (int i = 0; i < 10000; ++i) {
        const Progress p(gen.uniform(0.001, 0.999));
        const Progress q(gen.uniform());
        const Hop h = progress::hop_label(p, q);
        CHECK(progress::apply_hop(p, h).value() == doctest::Approx(q.value()).epsilon(1e-12));
    }
}

TEST_CASE("anchored estimates clamp wrong-signed hops") {
    CHECK(progress::forward_anchored(Hop(0.3)).value() == doctest::Approx(0.3));
    CHECK(progress::forward_anchored(Hop(-0.2)).value() == 0.0);
    CHECK(progress::forward_anchored(Hop(1.0)).value() == 1.0);
    CHECK(progress::backward_anchored(Hop(-0.4)).value() == doctest::Approx(0.6));
    CHECK(progress::backward_anchored(Hop(0.0)).value() == 1.0);
    CHECK(progress::backward_anchored(Hop(-1.0)).value() == 0.0);
    CHECK(progress::backward_anchored(Hop(0.5)).value() == 1.0);  // wrong sign clamped
}

TEST_CASE("fuse_average is the mean, permutation-invariant and bounded") {
    using progress::fuse_average;
    CHECK(fuse_average({Progress(0.6), Progress(0.6), Progress(0.6)}).value() == 0.6);
    CHECK(fuse_average({Progress(0.3), Progress(0.6), Progress(0.9)}).value() ==
          doctest::Approx(0.6));
    CHECK(fuse_average({Progress(0.0), Progress(0.0), Progress(0.0)}).value() == 0.0);

    rng::Rng gen(9);
    for (int i = 0; i < 2000; ++i) {
        const double a = gen.uniform(), b = gen.uniform(), c = gen.uniform();
        const double f1 = fuse_average({Progress(a), Progress(b), Progress(c)}).value();
        const double f2 = fuse_average({Progress(c), Progress(a), Progress(b)}).value();
        CHECK(f1 == doctest::Approx(f2).epsilon(1e-15));
        CHECK(f1 >= std::min({a, b, c}) - 1e-15);
        CHECK(f1 <= std::max({a, b, c}) + 1e-15);
    }
}

TEST_CASE("consistency_weight: golden values and monotonicity") {
    const progress::ConsistencyConfig cfg{};  // alpha 20, eps 1e-6
    CHECK(progress::consistency_weight(Progress(0.5), Progress(0.5), cfg) == 1.0);
    CHECK(progress::consistency_weight(Progress(0.0), Progress(0.0), cfg) == 1.0);
    CHECK(progress::consistency_weight(Progress(0.4), Progress(0.6), cfg) ==
          doctest::Approx(std::exp(-3.2)).epsilon(1e-4));

    // strictly decreasing in |b - f| at fixed mean, equals 1 iff discrepancy 0
    const double mean = 0.5;
    double prev = 2.0;
    for (double d = 0.0; d <= 0.5; d += 0.01) {
        const double w = progress::consistency_weight(Progress(mean - d / 2),
                                                      Progress(mean + d / 2), cfg);
        if (d == 0.0) CHECK(w == 1.0);
        else CHECK(w < prev);
        prev = w;
    }
}

TEST_CASE("reconstruct_trajectory folds apply_hop") {
    const std::vector<Hop> hops{Hop(0.5), Hop(0.5), Hop(0.5)};
    const auto out = progress::reconstruct_trajectory(Progress(0.0), hops);
    REQUIRE(out.size() == 3);
    CHECK(out[0].value() == doctest::Approx(0.5));
    CHECK(out[1].value() == doctest::Approx(0.75));
    CHECK(out[2].value() == doctest::Approx(0.875));

    CHECK(progress::reconstruct_trajectory(Progress(0.0), {}).empty());

    const std::vector<Hop> boundary{Hop(1.0), Hop(-1.0)};
    const auto loop = progress::reconstruct_trajectory(Progress(0.0), boundary);
    CHECK(loop[0].value() == 1.0);
    CHECK(loop[1].value() == 0.0);
}

TEST_CASE("boundedness: random chains stay inside [0,1]") {
    rng::Rng gen(10);
    for (int i = 0; i < 10000; ++i) {
        Progress phi(gen.uniform());
        const int len = static_cast<int>(gen.uniform_int(1, 40));
        for (int t = 0; t < len; ++t) {
            phi = progress::apply_hop(phi, Hop(gen.uniform(-1.0, 1.0)));
            CHECK(phi.value() >= 0.0);
            CHECK(phi.value() <= 1.0);
        }
    }
}

TEST_CASE("boundedness at scale: 1e5 independent chains through the batch kernel") {
    rng::Rng gen(12);
    const std::size_t lanes = 100000;
    std::vector<double> phi(lanes), hops(lanes);
    for (auto& p : phi) p = gen.uniform();
    for (int step = 0; step < 20; ++step) {
        for (auto& h : hops) h = gen.uniform(-1.0, 1.0);
        progress::reconstruct_step_batch(phi, hops);
        for (double p : phi) {
            if (p < 0.0 || p > 1.0) {
                FAIL("progress escaped [0,1]: " << p);
            }
        }
    }
    CHECK(true);
}

TEST_CASE("batch reconstruction matches the typed fold") {
    rng::Rng gen(11);
    const std::size_t lanes = 257;
    std::vector<double> phi(lanes), phi_ref(lanes);
    for (std::size_t i = 0; i < lanes; ++i) phi[i] = phi_ref[i] = gen.uniform();
    for (int step = 0; step < 50; ++step) {
        std::vector<double> hops(lanes);
        for (auto& h : hops) h = gen.uniform(-1.0, 1.0);
        progress::reconstruct_step_batch(phi, hops);
        for (std::size_t i = 0; i < lanes; ++i) {
            phi_ref[i] = progress::apply_hop(Progress(phi_ref[i]), Hop(hops[i])).value();
            CHECK(phi[i] == phi_ref[i]);
        }
    }
}

TEST_CASE("tracker_step: consistency-gated update rule") {
    using progress::TrackerMode;
    const progress::ConsistencyConfig cfg{};
    auto state = progress::make_tracker(TrackerMode::ConsistencyGated, Progress(0.5));

    // Perfectly consistent forward/backward at 0.6, incremental delta 0.1.
    const auto next =
        progress::tracker_step(state, Hop(0.2), Hop(0.6), Hop(-0.4), cfg);
    CHECK(next.current.value() == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(next.last_weight == doctest::Approx(1.0));
    CHECK(next.step_index == 1);

    // Maximal divergence freezes the estimate.
    const auto frozen =
        progress::tracker_step(state, Hop(0.2), Hop(1.0), Hop(-1.0), cfg);
    CHECK(frozen.current.value() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(frozen.last_weight < 1e-9);
}

TEST_CASE("tracker_step: fusion-average mode") {
    const progress::ConsistencyConfig cfg{};
    auto state = progress::make_tracker(progress::TrackerMode::FusionAverage, Progress(0.3));
    // incremental stays 0.3 (zero hop), forward 0.6, backward 0.9
    const auto next = progress::tracker_step(state, Hop(0.0), Hop(0.6), Hop(-0.1), cfg);
    CHECK(next.current.value() == doctest::Approx(0.6));
    CHECK(next.last_weight == 1.0);
}

TEST_CASE("tracker freeze limit: tiny weight changes nothing measurable") {
    progress::ConsistencyConfig cfg{};
    cfg.sensitivity_alpha = 2000.0;  // drives w below 1e-9 at moderate divergence
    auto state = progress::make_tracker(progress::TrackerMode::ConsistencyGated, Progress(0.42));
    const auto next = progress::tracker_step(state, Hop(0.5), Hop(0.9), Hop(-0.5), cfg);
    CHECK(next.last_weight < 1e-9);
    CHECK(std::fabs(next.current.value() - 0.42) < 1e-9);
}

TEST_CASE("consistency config validation") {
    progress::ConsistencyConfig bad;
    bad.sensitivity_alpha = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::domain_error);
    bad.sensitivity_alpha = 20.0;
    bad.epsilon_stability = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::domain_error);
}
