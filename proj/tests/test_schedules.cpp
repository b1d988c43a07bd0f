#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "semaigc/rng.hpp"
#include "semaigc/schedules.hpp"
#include "support/oracles.hpp"

using namespace semaigc;

TEST_CASE("linear schedule rejects degenerate and out-of-range bounds") {
    CHECK_THROWS_AS(build_linear_schedule(1, 0.02, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(build_linear_schedule(10, 0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(build_linear_schedule(10, 0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_linear_schedule(10, 0.5, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(build_linear_schedule(0, 0.1, 0.2), std::invalid_argument);
}

TEST_CASE("two-step schedule matches hand arithmetic") {
    const auto s = build_linear_schedule(2, 0.02, 0.04);
    CHECK(s.beta_at(1) == 0.02);
    CHECK(s.beta_at(2) == 0.04);
    CHECK(s.alpha_bar_at(1) == Catch::Approx(0.98).margin(1e-15));
    CHECK(s.alpha_bar_at(2) == Catch::Approx(0.9408).margin(1e-15));
}

TEST_CASE("thousand-step cumulative product agrees with the naive loop oracle") {
    const auto s = build_linear_schedule(1000, 1e-4, 0.02);
    const auto oracle = oracles::naive_alpha_bar(s.beta);
    for (int t = 1; t <= s.T; ++t) {
        REQUIRE(s.alpha_bar_at(t) ==
                Catch::Approx(oracle[static_cast<std::size_t>(t - 1)]).epsilon(1e-12));
    }
    // Frozen endpoint from an independent run of the loop.
    CHECK(s.alpha_bar_at(1000) == Catch::Approx(4.035829765375676e-05).epsilon(1e-9));
}

TEST_CASE("noise schedule invariants hold") {
    const auto s = build_linear_schedule(50, 1e-3, 0.3);
    for (int t = 1; t <= s.T; ++t) {
        CHECK(s.beta_at(t) > 0.0);
        CHECK(s.beta_at(t) < 1.0);
        CHECK(s.alpha_at(t) == 1.0 - s.beta_at(t));
        CHECK(s.alpha_bar_at(t) < s.alpha_bar_at(t - 1));
        CHECK(s.alpha_bar_at(t) > 0.0);
        if (t > 1) {
            CHECK(s.beta_at(t) > s.beta_at(t - 1));
        }
    }
    // sigma_bar: zero at the final denoising step under the posterior rule.
    CHECK(s.sigma_bar_at(1) == 0.0);
    for (int t = 2; t <= s.T; ++t) {
        CHECK(s.sigma_bar_at(t) > 0.0);
    }
}

TEST_CASE("channel-aware schedule with zero noise reduces to the plain coefficient") {
    const auto base = build_linear_schedule(12, 0.02, 0.3);
    const auto cas = build_channel_aware_schedule(base, 0.0, 12);
    for (int t = 1; t <= 12; ++t) {
        const double plain = (1.0 - base.alpha_at(t)) / std::sqrt(1.0 - base.alpha_bar_at(t));
        CHECK(coefficient_C(cas, t) == plain);  // bitwise, not approximate
        CHECK(cas.sigma_t_at(t) == 0.0);
        CHECK(cas.sigma_tm1_at(t) == 0.0);
        CHECK(cas.sigma_t_tm1_at(t) == 0.0);
    }
}

TEST_CASE("single fine-tuning step solves the normalization exactly") {
    const auto base = build_linear_schedule(8, 0.05, 0.4);
    const auto cas = build_channel_aware_schedule(base, 0.7, 1);
    REQUIRE(cas.gamma.size() == 1);
    // One-term sum with an empty alpha product: sqrt(gamma_1) must be 1.
    CHECK(std::fabs(std::sqrt(cas.gamma_at(1)) - 1.0) <= 1e-9);
    CHECK(cas.sigma_t_at(1) == Catch::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("normalization residual stays within 1e-9 across a grid") {
    const auto base = build_linear_schedule(20, 0.02, 0.35);
    for (int t_bar : {1, 2, 3, 5, 10, 20}) {
        for (double sigma : {0.0, 0.1, 0.5, 1.0, 2.0}) {
            const auto cas = build_channel_aware_schedule(base, sigma, t_bar);
            double resid = 0.0;
            for (int t = 1; t <= t_bar; ++t) {
                double tail = 1.0;
                for (int j = t + 1; j <= t_bar; ++j) {
                    tail *= std::sqrt(base.alpha_at(j));
                }
                resid += std::sqrt(cas.gamma_at(t)) * tail;
            }
            CHECK(std::fabs(resid - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("gamma is strictly increasing and sigma sequences follow their recursions") {
    const auto base = build_linear_schedule(10, 0.03, 0.25);
    const double sigma = 0.5;
    const auto cas = build_channel_aware_schedule(base, sigma, 8);
    double acc_var = 0.0;
    for (int t = 1; t <= 8; ++t) {
        if (t > 1) {
            CHECK(cas.gamma_at(t) > cas.gamma_at(t - 1));
            CHECK(cas.sigma_tm1_at(t) == cas.sigma_t_at(t - 1));
        }
        CHECK(cas.gamma_at(t) < 1.0);
        CHECK(cas.sigma_t_tm1_at(t) == Catch::Approx(sigma * std::sqrt(cas.gamma_at(t))).epsilon(1e-14));
        acc_var = base.alpha_at(t) * acc_var + sigma * sigma * cas.gamma_at(t);
        CHECK(cas.sigma_t_at(t) == Catch::Approx(std::sqrt(acc_var)).epsilon(1e-12));
    }
}

TEST_CASE("coefficient value matches an independent arithmetic evaluation") {
    // alpha_t = 0.98, abar_t = 0.9408, all sigma terms 0.1; frozen from a
    // separate evaluation of (1-a+s^2) / sqrt(1-abar+s^2*a+s^2).
    const double c = channel_aware_coefficient(0.98, 0.9408, 0.1, 0.1);
    CHECK(c == Catch::Approx(0.10673521004472304).epsilon(1e-14));
}

TEST_CASE("coefficient reduces to the plain reverse coefficient with zero sigmas") {
    const double a = 0.98;
    const double abar = 0.9408;
    const double expect = (1.0 - a) / std::sqrt(1.0 - abar);
    CHECK(channel_aware_coefficient(a, abar, 0.0, 0.0) == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("coefficient is positive across constructed schedules") {
    const auto base = build_linear_schedule(20, 0.02, 0.35);
    for (int t_bar : {1, 3, 7, 14, 20}) {
        for (double sigma : {0.0, 0.2, 0.8, 1.5}) {
            const auto cas = build_channel_aware_schedule(base, sigma, t_bar);
            for (int t = 1; t <= t_bar; ++t) {
                CHECK(coefficient_C(cas, t) > 0.0);
            }
        }
    }
}

TEST_CASE("invalid channel-aware requests are rejected, never repaired") {
    const auto base = build_linear_schedule(6, 0.05, 0.3);
    CHECK_THROWS_AS(build_channel_aware_schedule(base, -0.1, 3), std::invalid_argument);
    CHECK_THROWS_AS(build_channel_aware_schedule(base, 0.5, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_channel_aware_schedule(base, 0.5, 7), std::invalid_argument);
    // A non-increasing gamma parameterization cannot satisfy monotonicity.
    CHECK_THROWS_AS(build_channel_aware_schedule(base, 0.5, 3, 1.0), normalization_infeasible);
    CHECK_THROWS_AS(build_channel_aware_schedule(base, 0.5, 3, 0.9), normalization_infeasible);
}

TEST_CASE("coefficient index range is enforced") {
    const auto base = build_linear_schedule(6, 0.05, 0.3);
    const auto cas = build_channel_aware_schedule(base, 0.5, 4);
    CHECK_THROWS_AS(coefficient_C(cas, 0), std::out_of_range);
    CHECK_THROWS_AS(coefficient_C(cas, 5), std::out_of_range);
}

TEST_CASE("schedule JSON document round-trips") {
    const auto base = build_linear_schedule(16, 0.01, 0.3);
    const auto cas = build_channel_aware_schedule(base, 0.4, 10);
    const auto doc = schedule_to_json(base, &cas);
    CHECK(doc.at("T").get<int>() == 16);
    CHECK(doc.at("sigma_c").get<double>() == 0.4);
    CHECK(doc.at("gamma").size() == 10);

    const auto restored = schedule_from_json(doc);
    REQUIRE(restored.T == base.T);
    for (int t = 1; t <= base.T; ++t) {
        CHECK(restored.beta_at(t) == base.beta_at(t));
        CHECK(restored.alpha_bar_at(t) == base.alpha_bar_at(t));
    }
    CHECK(restored.fingerprint() == base.fingerprint());
}

TEST_CASE("fingerprints distinguish different schedules") {
    const auto a = build_linear_schedule(10, 0.01, 0.2);
    const auto b = build_linear_schedule(10, 0.01, 0.21);
    const auto c = build_linear_schedule(11, 0.01, 0.2);
    CHECK(a.fingerprint() != b.fingerprint());
    CHECK(a.fingerprint() != c.fingerprint());
    CHECK(a.fingerprint() == build_linear_schedule(10, 0.01, 0.2).fingerprint());
}
