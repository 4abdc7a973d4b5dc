#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "pfdiff/schedule.hpp"

using namespace pfdiff;

TEST_CASE("vp_linear matches the stated beta recursion") {
    const auto sched = NoiseSchedule::vp_linear(1000, 1e-4, 0.02);
    CHECK(sched.steps() == 1000);
    CHECK(sched.beta(0) == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(sched.beta(999) == doctest::Approx(0.02).epsilon(1e-12));
    // Single-factor product at t = 0.
    CHECK(sched.alpha_bar(0) == doctest::Approx(0.9999).epsilon(1e-14));
}

TEST_CASE("alpha_bar tail agrees with an extended-precision product oracle") {
    const int steps = 1000;
    const double beta_min = 1e-4;
    const double beta_max = 0.02;
    const auto sched = NoiseSchedule::vp_linear(steps, beta_min, beta_max);

    long double cum = 1.0L;
    for (int i = 0; i < steps; ++i) {
        const long double beta =
            static_cast<long double>(beta_min) +
            static_cast<long double>(i) * (static_cast<long double>(beta_max) - beta_min) /
                (steps - 1);
        cum *= 1.0L - beta;
    }
    CHECK(sched.alpha_bar(999) ==
          doctest::Approx(static_cast<double>(cum)).epsilon(1e-10));
    CHECK(sched.alpha_bar(999) > 0.0);
}

TEST_CASE("variance preservation and monotone lambda hold at every index") {
    for (int steps : {100, 1000}) {
        const auto sched = NoiseSchedule::vp_linear(steps, 1e-4, 0.02);
        for (int t = 0; t < steps; ++t) {
            const double a = sched.alpha(t);
            const double s = sched.sigma(t);
            CHECK(std::abs(a * a + s * s - 1.0) < 1e-12);
            if (t > 0) {
                CHECK(sched.alpha_bar(t) < sched.alpha_bar(t - 1));
                CHECK(sched.lambda(t) < sched.lambda(t - 1));
            }
        }
    }
}

TEST_CASE("continuous lambda access is exact at knots and invertible") {
    const auto sched = NoiseSchedule::vp_linear(1000, 1e-4, 0.02);
    for (int t : {0, 1, 250, 500, 998, 999}) {
        CHECK(sched.lambda_at(t) == doctest::Approx(sched.lambda(t)).epsilon(1e-15));
        CHECK(sched.alpha_at(t) == doctest::Approx(sched.alpha(t)).epsilon(1e-12));
        CHECK(sched.sigma_at(t) == doctest::Approx(sched.sigma(t)).epsilon(1e-12));
    }
    for (double t : {0.5, 17.25, 333.9, 712.1, 998.5}) {
        const double lam = sched.lambda_at(t);
        CHECK(sched.time_of_lambda(lam) == doctest::Approx(t).epsilon(1e-9));
        // alpha^2 + sigma^2 stays 1 between knots as well.
        const double a = sched.alpha_at(t);
        const double s = sched.sigma_at(t);
        CHECK(std::abs(a * a + s * s - 1.0) < 1e-12);
    }
}

TEST_CASE("schedule preconditions are enforced") {
    CHECK_THROWS_AS(NoiseSchedule::vp_linear(1, 1e-4, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(NoiseSchedule::vp_linear(1000, 0.0, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(NoiseSchedule::vp_linear(1000, 0.03, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(NoiseSchedule::vp_linear(1000, 1e-4, 1.0), std::invalid_argument);
}

TEST_CASE("uniform grid evaluates the stated formula") {
    const auto g = TimeGrid::make(GridKind::Uniform, 4, 1000);
    CHECK(g.points == std::vector<int>{999, 749, 500, 250, 0});
}

TEST_CASE("quadratic grid evaluates the stated formula") {
    const auto g = TimeGrid::make(GridKind::Quadratic, 4, 1000);
    CHECK(g.points == std::vector<int>{999, 562, 250, 62, 0});
}

TEST_CASE("grids are strictly decreasing with pinned endpoints across the sweep") {
    for (int steps : {100, 1000}) {
        for (int m = 1; m <= std::min(100, steps - 1); ++m) {
            for (GridKind kind : {GridKind::Uniform, GridKind::Quadratic}) {
                const auto g = TimeGrid::make(kind, m, steps);
                REQUIRE(static_cast<int>(g.points.size()) == m + 1);
                CHECK(g.points.front() == steps - 1);
                CHECK(g.points.back() == 0);
                for (size_t i = 1; i < g.points.size(); ++i) {
                    CHECK(g.points[i] < g.points[i - 1]);
                    CHECK(g.points[i] >= 0);
                }
            }
        }
    }
}

TEST_CASE("grid preconditions are enforced") {
    CHECK_THROWS_AS(TimeGrid::make(GridKind::Uniform, 0, 1000), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid::make(GridKind::Uniform, 1000, 1000), std::invalid_argument);
}
