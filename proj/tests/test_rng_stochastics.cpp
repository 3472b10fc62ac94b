#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "cellflow/common.hpp"
#include "cellflow/rng.hpp"
#include "cellflow/stochastics.hpp"

using namespace cellflow;

TEST_CASE("mix64 matches the published splitmix64 vector") {
    // first output of splitmix64 from state 0
    CHECK(mix64(0) == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("stream_split golden values stay frozen") {
    CHECK(stream_split(0, 0) == 0x6E789E6AA1B965F4ULL);
    CHECK(stream_split(0, 1) == 0x06C45D188009454FULL);
    CHECK(stream_split(7, 3) == 0x73D33B666A1E21DAULL);
    // adjacent indices of the same seed must not collide
    CHECK(stream_split(42, 0) != stream_split(42, 1));
    CHECK(stream_split(42, 0) != stream_split(43, 0));
}

TEST_CASE("u01 lies in [0,1) with the right first two moments") {
    Rng rng(123);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        double u = rng.u01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        s += u;
        s2 += u * u;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
    CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("u01_open never returns zero") {
    Rng rng(9);
    for (int i = 0; i < 100000; ++i) {
        double u = rng.u01_open();
        CHECK(u > 0.0);
        CHECK(u <= 1.0);
    }
}

TEST_CASE("gauss has standard-normal moments") {
    Rng rng(7);
    const int n = 400000;
    double s = 0, s2 = 0, s4 = 0;
    for (int i = 0; i < n; ++i) {
        double g = rng.gauss();
        s += g;
        s2 += g * g;
        s4 += g * g * g * g;
    }
    CHECK(s / n == doctest::Approx(0.0).epsilon(1).scale(0.01));
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(s4 / n == doctest::Approx(3.0).epsilon(0.05));  // normal kurtosis
}

TEST_CASE("distinct streams decorrelate") {
    Rng a(stream_split(1000, 0)), b(stream_split(1000, 1));
    const int n = 100000;
    double sa = 0, sb = 0, sab = 0, sa2 = 0, sb2 = 0;
    for (int i = 0; i < n; ++i) {
        double x = a.gauss(), y = b.gauss();
        sa += x;
        sb += y;
        sab += x * y;
        sa2 += x * x;
        sb2 += y * y;
    }
    const double cov = sab / n - (sa / n) * (sb / n);
    const double corr = cov / std::sqrt((sa2 / n) * (sb2 / n));
    CHECK(std::fabs(corr) < 0.02);
}

TEST_CASE("brownian_path step counts follow ceil with slack") {
    CHECK(brownian_path(1, 1.0, 0.1).steps() == 10);
    CHECK(brownian_path(1, 1.0, 0.3).steps() == 4);  // ceil(3.33)
    // 0.1*3 is not exactly 0.3; the slack keeps this at 3 steps, not 4
    CHECK(brownian_path(1, 0.1 * 3, 0.1).steps() == 3);
    CHECK(brownian_path(1, 5.0, 1e-3).steps() == 5000);
}

TEST_CASE("brownian_path rejects bad arguments") {
    CHECK_THROWS_AS(brownian_path(1, 0.0, 0.1), param_error);
    CHECK_THROWS_AS(brownian_path(1, 1.0, 0.0), param_error);
    CHECK_THROWS_AS(brownian_path(1, 1.0, -0.1), param_error);
}

TEST_CASE("brownian increments are N(0, dt) and reproducible") {
    const double dt = 0.01;
    BrownianPath p = brownian_path(321, 200.0, dt);
    REQUIRE(p.steps() == 20000);
    CHECK(!p.derived);
    double s = 0, s2 = 0;
    for (double w : p.increments) {
        s += w;
        s2 += w * w;
    }
    const double mean = s / double(p.steps());
    const double var = s2 / double(p.steps()) - mean * mean;
    CHECK(std::fabs(mean) < 3.0 * std::sqrt(dt / double(p.steps())));
    CHECK(var == doctest::Approx(dt).epsilon(0.03));

    BrownianPath q = brownian_path(321, 200.0, dt);
    CHECK(q.increments == p.increments);  // same seed, same path
    BrownianPath r = brownian_path(322, 200.0, dt);
    CHECK(r.increments != p.increments);
}

TEST_CASE("coarsen sums adjacent increments and marks the path derived") {
    BrownianPath p = brownian_path(5, 1.0, 0.1);
    BrownianPath c = coarsen(p, 2);
    REQUIRE(c.steps() == 5);
    CHECK(c.dt == doctest::Approx(0.2));
    CHECK(c.derived);
    for (size_t k = 0; k < c.steps(); ++k)
        CHECK(c.increments[k] == doctest::Approx(p.increments[2 * k] + p.increments[2 * k + 1])
                                     .epsilon(1e-15));
    // the coarse path is the same Brownian motion: partial sums agree
    double fine = 0, coarse = 0;
    for (double w : p.increments) fine += w;
    for (double w : c.increments) coarse += w;
    CHECK(fine == doctest::Approx(coarse).epsilon(1e-12));
}

TEST_CASE("coarsen validates the group size") {
    BrownianPath p = brownian_path(5, 1.0, 0.1);  // 10 steps
    CHECK_THROWS_AS(coarsen(p, 3), param_error);  // 3 does not divide 10
    CHECK_THROWS_AS(coarsen(p, 0), param_error);
    CHECK_NOTHROW(coarsen(p, 5));
}

TEST_CASE("ou_path starts at zero and matches the stationary variance") {
    const double eps = 0.5, dt = 0.01, T = 400.0;
    BrownianPath src = brownian_path(2024, T, dt);
    OuPath z = ou_path(src, eps);
    REQUIRE(z.values.size() == src.steps() + 1);
    CHECK(z.values[0] == 0.0);
    CHECK(z.eps == eps);

    // skip the initial relaxation (~10 eps), then compare Var(z) to 1/(2 eps)
    const size_t burn = size_t(10.0 * eps / dt);
    double s = 0, s2 = 0;
    size_t n = 0;
    for (size_t k = burn; k < z.values.size(); ++k) {
        s += z.values[k];
        s2 += z.values[k] * z.values[k];
        ++n;
    }
    const double mean = s / double(n), var = s2 / double(n) - mean * mean;
    CHECK(var == doctest::Approx(1.0 / (2.0 * eps)).epsilon(0.10));
}

TEST_CASE("ou_path one-step recursion is exact") {
    const double eps = 0.2, dt = 0.05;
    BrownianPath src = brownian_path(11, 1.0, dt);
    OuPath z = ou_path(src, eps);
    const double decay = std::exp(-dt / eps);
    const double gain = std::sqrt((1.0 - std::exp(-2.0 * dt / eps)) / (2.0 * eps * dt));
    for (size_t k = 0; k < src.steps(); ++k) {
        const double expect = decay * z.values[k] + gain * src.increments[k];
        CHECK(z.values[k + 1] == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("ou_path rejects nonpositive correlation time") {
    BrownianPath src = brownian_path(1, 1.0, 0.1);
    CHECK_THROWS_AS(ou_path(src, 0.0), param_error);
    CHECK_THROWS_AS(ou_path(src, -1.0), param_error);
}
