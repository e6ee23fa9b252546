#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "dopamine/rng.hpp"
#include "dopamine/shaping.hpp"

using namespace dopamine;
using progress::Progress;
using shaping::ShapingConfig;
using shaping::Transition;

TEST_CASE("config ties gamma to exp(-lambda h) and validates ranges") {
    const auto cfg = ShapingConfig::from_rate(0.5, 0.1);
    CHECK(cfg.gamma == doctest::Approx(std::exp(-0.05)).epsilon(1e-14));

    const auto from_g = ShapingConfig::from_gamma(0.98);
    CHECK(from_g.lambda_rate == doctest::Approx(-std::log(0.98)).epsilon(1e-14));
    CHECK(from_g.step_h == 1.0);

    // memorylessness: rescaling (lambda, h) -> (lambda/k, k h) keeps gamma
    for (double k : {2.0, 5.0, 10.0}) {
        const auto scaled = ShapingConfig::from_rate(0.5 / k, 0.1 * k);
        CHECK(scaled.gamma == doctest::Approx(cfg.gamma).epsilon(1e-12));
    }

    CHECK_THROWS_AS(ShapingConfig::from_gamma(1.0), ConfigError);
    CHECK_THROWS_AS(ShapingConfig::from_gamma(0.0), ConfigError);
    CHECK_THROWS_AS(ShapingConfig::from_rate(-1.0, 0.1), ConfigError);
    CHECK_THROWS_AS(ShapingConfig::from_gamma(0.9, 1.0, 0.0), ConfigError);
}

TEST_CASE("config kv round-trip and parse rules") {
    const auto cfg = ShapingConfig::from_gamma(0.98, 1.0, 0.05);
    const auto back = ShapingConfig::from_kv_text(cfg.to_kv());
    CHECK(back.gamma == doctest::Approx(cfg.gamma).epsilon(1e-15));
    CHECK(back.lambda_rate == doctest::Approx(cfg.lambda_rate).epsilon(1e-15));
    CHECK(back.completion_margin_delta == cfg.completion_margin_delta);

    const auto parsed = ShapingConfig::from_kv_text("# comment\nlambda = 0.5\nstep_h = 0.2\n");
    CHECK(parsed.gamma == doctest::Approx(std::exp(-0.1)).epsilon(1e-14));

    CHECK_THROWS_AS(ShapingConfig::from_kv_text("delta = 0.05\n"), ConfigError);
    CHECK_THROWS_AS(ShapingConfig::from_kv_text("gamma = banana\n"), ConfigError);
    CHECK_THROWS_AS(
        ShapingConfig::from_kv_text("gamma = 0.9\nlambda = 0.5\nstep_h = 1.0\n"),
        ConfigError);

    // a consistent (gamma, lambda, step_h) triple is accepted
    std::ostringstream consistent;
    consistent.precision(17);
    consistent << "gamma = 0.98\nstep_h = 1.0\nlambda = " << -std::log(0.98) << "\n";
    CHECK(ShapingConfig::from_kv_text(consistent.str()).gamma == 0.98);
}

TEST_CASE("shaping_term golden values") {
    const auto cfg = ShapingConfig::from_gamma(0.98);
    CHECK(shaping::shaping_term({Progress(0.5), Progress(0.6)}, cfg) ==
          doctest::Approx(0.088).epsilon(1e-12));
    CHECK(shaping::shaping_term({Progress(1.0), Progress(1.0)}, cfg) ==
          doctest::Approx(-0.02).epsilon(1e-12));
    // gamma -> 1 limit: no-change transitions vanish
    const auto near_one = ShapingConfig::from_gamma(1.0 - 1e-12);
    CHECK(shaping::shaping_term({Progress(0.7), Progress(0.7)}, near_one) ==
          doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("gold_reward threshold rule") {
    const auto cfg = ShapingConfig::from_gamma(0.98);  // delta 0.05
    CHECK(shaping::gold_reward({Progress(0.5), Progress(0.96)}, cfg) == 1.0);
    CHECK(shaping::gold_reward({Progress(0.5), Progress(0.90)}, cfg) == 0.0);
    CHECK(shaping::gold_reward({Progress(0.5), Progress(1.0)}, cfg) == 1.0);
    CHECK(shaping::gold_reward({Progress(0.5), Progress(0.95)}, cfg) == 1.0);  // boundary >=

    // monotone non-decreasing in phi_s_next
    double prev = 0.0;
    for (double p = 0.0; p <= 1.0; p += 0.001) {
        const double g = shaping::gold_reward({Progress(0.0), Progress(p)}, cfg);
        CHECK(g >= prev);
        prev = g;
    }
}

TEST_CASE("grm_reward composes gold and shaping") {
    const auto cfg = ShapingConfig::from_gamma(0.98);
    CHECK(shaping::grm_reward({Progress(0.5), Progress(0.6)}, cfg) ==
          doctest::Approx(0.088).epsilon(1e-12));
    CHECK(shaping::grm_reward({Progress(0.9), Progress(0.97)}, cfg) ==
          doctest::Approx(1.0506).epsilon(1e-12));
    CHECK(shaping::grm_reward({Progress(0.0), Progress(0.0)}, cfg) == 0.0);
}

TEST_CASE("naive_reward is the raw difference") {
    CHECK(shaping::naive_reward({Progress(0.5), Progress(0.6)}) == doctest::Approx(0.1));
    CHECK(shaping::naive_reward({Progress(0.3), Progress(0.3)}) == 0.0);
    CHECK(shaping::naive_reward({Progress(0.8), Progress(0.4)}) == doctest::Approx(-0.4));
}

TEST_CASE("grm - naive identity: r_gold - (1-gamma) phi_next") {
    rng::Rng gen(21);
    const auto cfg = ShapingConfig::from_gamma(0.98);
    for (int i = 0; i < 5000; ++i) {
        const Transition t{Progress(gen.uniform()), Progress(gen.uniform())};
        const double lhs = shaping::grm_reward(t, cfg) - shaping::naive_reward(t);
        const double rhs =
            shaping::gold_reward(t, cfg) - (1.0 - cfg.gamma) * t.phi_s_next.value();
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("discounted_shaping_sum telescopes to the boundary term") {
    const auto cfg = ShapingConfig::from_gamma(0.98);
    const std::vector<double> ramp{0.0, 0.5, 1.0};
    CHECK(shaping::discounted_shaping_sum(ramp, cfg) ==
          doctest::Approx(0.9604).epsilon(1e-12));

    const std::vector<double> constant{0.4, 0.4};
    CHECK(shaping::discounted_shaping_sum(constant, cfg) ==
          doctest::Approx(0.98 * 0.4 - 0.4).epsilon(1e-12));

    // closed loop at gamma ~ 1 cancels
    const auto near_one = ShapingConfig::from_gamma(1.0 - 1e-13);
    const std::vector<double> loop{0.2, 0.9, 0.1, 0.2};
    CHECK(shaping::discounted_shaping_sum(loop, near_one) ==
          doctest::Approx(0.0).epsilon(1e-9));

    rng::Rng gen(22);
    for (double gamma : {0.9, 0.98, 0.999}) {
        const auto c = ShapingConfig::from_gamma(gamma);
        for (int rep = 0; rep < 1000; ++rep) {
            const std::size_t n = static_cast<std::size_t>(gen.uniform_int(1, 200));
            std::vector<double> phis(n);
            for (auto& p : phis) p = gen.uniform();
            const double sum = shaping::discounted_shaping_sum(phis, c);
            const double boundary =
                std::pow(gamma, static_cast<double>(n - 1)) * phis.back() - phis.front();
            CHECK(std::fabs(sum - boundary) <= 1e-9);
        }
    }
}

TEST_CASE("euler consistency: exact for linear path at lambda 0") {
    const double T = 2.0;
    shaping::PhiPath linear{[T](double t) { return t / T; }, [T](double) { return 1.0 / T; }};
    for (double h : {0.5, 0.2, 0.1, 0.01}) {
        CHECK(shaping::euler_consistency_error(0.0, linear, h, T) ==
              doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("euler consistency: first-order convergence on the smooth path") {
    const double T = 2.0;
    const double pi = 3.14159265358979323846;
    shaping::PhiPath path{
        [T, pi](double t) {
            const double s = std::sin(pi * t / (2.0 * T));
            return s * s;
        },
        [T, pi](double t) { return (pi / (2.0 * T)) * std::sin(pi * t / T); }};
    const double e1 = shaping::euler_consistency_error(0.5, path, 0.1, T);
    const double e2 = shaping::euler_consistency_error(0.5, path, 0.05, T);
    CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.15));  // ratio ~ 2 at first order

    // single-step truncation stays finite
    const double single = shaping::euler_consistency_error(0.5, path, T, T);
    CHECK(std::isfinite(single));
    CHECK(single > 0.0);

    CHECK_THROWS_AS(shaping::euler_consistency_error(0.5, path, 0.0, T), std::domain_error);
}
