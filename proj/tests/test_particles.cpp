#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cellflow/common.hpp"
#include "cellflow/fields.hpp"
#include "cellflow/particles.hpp"
#include "cellflow/stochastics.hpp"

using namespace cellflow;

namespace {

const FieldBundle& bundle() {
    static FieldBundle fb = make_field_bundle(
        build_geometry(make_trig_profile(1, 0.0), make_trig_profile(1, kPi / 2), 0.3),
        AlignedCoefficients::make(make_constant_coefficient(1.0), make_constant_coefficient(1.0)));
    return fb;
}

ParticleEnsemble make_uniform(int n, uint64_t seed, double r0, double delta) {
    const FieldBundle& fb = bundle();
    return init_ensemble(sampler_uniform(fb.geom), n, fb.geom, fb.geom.exclusion_r, seed, r0,
                         delta, 1.0);
}

}  // namespace

TEST_CASE("initialization rejects bad parameters and hopeless samplers") {
    const FieldBundle& fb = bundle();
    auto u = sampler_uniform(fb.geom);
    CHECK_THROWS_AS(init_ensemble(u, 1, fb.geom, 0.3, 1, 1, 0.1, 1.0), param_error);
    CHECK_THROWS_AS(init_ensemble(u, 100, fb.geom, -0.1, 1, 1, 0.1, 1.0), param_error);
    CHECK_THROWS_AS(init_ensemble(u, 100, fb.geom, 0.3, 1, -1, 0.1, 1.0), param_error);
    CHECK_THROWS_AS(init_ensemble(u, 100, fb.geom, 0.3, 1, 1, -0.1, 1.0), param_error);

    // a point sampler aimed at a cell center has no admissible support
    Vec2 center = fb.geom.cells.front().center;
    CHECK_THROWS_AS(init_ensemble(sampler_point(center), 10, fb.geom, 0.3, 1, 1, 0.1, 1.0),
                    input_error);
    // the same point is fine once the exclusion balls are turned off
    ParticleEnsemble ok = init_ensemble(sampler_point(center), 10, fb.geom, 0.0, 1, 1, 0.1, 1.0);
    CHECK(ok.alive_count == 10);
}

TEST_CASE("initial draws avoid the exclusion balls and wrap onto the torus") {
    const FieldBundle& fb = bundle();
    ParticleEnsemble e = make_uniform(500, 42, 1.0, 0.05);
    CHECK(e.n0 == 500);
    CHECK(e.alive_count == 500);
    CHECK(e.removed == 0);
    CHECK(e.mass() == 1.0);
    for (const Vec2& x : e.pos) {
        CHECK(x.x >= 0.0);
        CHECK(x.x < fb.geom.L1);
        CHECK(x.y >= 0.0);
        CHECK(x.y < fb.geom.L2);
        CHECK(!fb.geom.in_exclusion(x, fb.geom.exclusion_r));
    }
}

TEST_CASE("density sampler concentrates mass and validates its bound") {
    const FieldBundle& fb = bundle();
    // triangle-ish density peaked at x1 = pi, constant in x2
    auto f = [&](Vec2 x) { return (1.0 - std::cos(x.x)) / sqr(2.0 * kPi); };
    ParticleEnsemble e = init_ensemble(sampler_density(fb.geom, f, 2.0 / sqr(2.0 * kPi)), 4000,
                                       fb.geom, 0.0, 7, 0.0, 0.0, 1.0);
    int near_peak = 0;
    for (const Vec2& x : e.pos)
        if (std::fabs(wrap_diff(x.x, kPi, fb.geom.L1)) < kPi / 2) ++near_peak;
    // P(|x1 - pi| < pi/2) = 1/2 + 1/pi ~ 0.818 under the target density
    CHECK(double(near_peak) / double(e.n0) > 0.75);
    CHECK(double(near_peak) / double(e.n0) < 0.90);

    CHECK_THROWS_AS(sampler_density(fb.geom, f, 0.0), param_error);
    auto lying = sampler_density(fb.geom, [](Vec2) { return 1.0; }, 0.5);
    CHECK_THROWS_AS(init_ensemble(lying, 10, fb.geom, 0.0, 1, 0, 0, 1.0), input_error);
}

TEST_CASE("no coalescence happens when the intensity or radius is zero") {
    const FieldBundle& fb = bundle();
    for (auto [r0, delta] : {std::pair{0.0, 0.5}, std::pair{5.0, 0.0}}) {
        ParticleEnsemble e = make_uniform(300, 3, r0, delta);
        BrownianPath path = brownian_path(11, 1.0, 1e-2);
        MassSeries ms = run_ensemble(e, path, 1.0, fb);
        CHECK(e.alive_count == 300);
        CHECK(e.removed == 0);
        for (double m : ms.per_seed[0]) CHECK(m == 1.0);
    }
}

TEST_CASE("mass decays monotonically and tracks the removal count") {
    const FieldBundle& fb = bundle();
    ParticleEnsemble e = make_uniform(800, 21, 20.0, 0.08);
    BrownianPath path = brownian_path(22, 2.0, 1e-2);
    MassSeries ms = run_ensemble(e, path, 2.0, fb, 5);
    CHECK(e.removed == e.n0 - e.alive_count);
    CHECK(e.removed > 0);  // this configuration does coalesce
    const auto& m = ms.per_seed[0];
    for (size_t k = 1; k < m.size(); ++k) CHECK(m[k] <= m[k - 1]);
    CHECK(m.front() == 1.0);
    CHECK(m.back() == doctest::Approx(e.mass()).epsilon(1e-15));
    CHECK(ms.times.front() == 0.0);
    CHECK(ms.times.back() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(ms.mean.size() == ms.times.size());
}

TEST_CASE("runs are reproducible by seed and diverge across seeds") {
    const FieldBundle& fb = bundle();
    BrownianPath path = brownian_path(5, 1.0, 1e-2);
    ParticleEnsemble a = make_uniform(400, 9, 30.0, 0.1);
    ParticleEnsemble b = make_uniform(400, 9, 30.0, 0.1);
    run_ensemble(a, path, 1.0, fb);
    run_ensemble(b, path, 1.0, fb);
    CHECK(a.alive_count == b.alive_count);
    REQUIRE(a.pos.size() == b.pos.size());
    for (size_t i = 0; i < a.pos.size(); ++i) {
        CHECK(a.pos[i].x == b.pos[i].x);
        CHECK(a.alive[i] == b.alive[i]);
    }
    ParticleEnsemble c = make_uniform(400, 10, 30.0, 0.1);
    run_ensemble(c, path, 1.0, fb);
    CHECK(c.alive_count != a.alive_count);  // thinning stream differs by seed
}

TEST_CASE("an overwhelming capture radius collapses the ensemble to one survivor") {
    const FieldBundle& fb = bundle();
    // delta beyond the torus diameter puts every pair in range, and the sweep
    // then removes one particle per comparison until a single one remains
    ParticleEnsemble e = make_uniform(60, 31, 1e6, 4.5);
    BrownianPath path = brownian_path(32, 0.1, 1e-2);
    run_ensemble(e, path, 0.1, fb);
    CHECK(e.alive_count == 1);  // pairs always leave one of the two standing
    CHECK(e.removed == 59);
    CHECK(e.mass() == doctest::Approx(1.0 / 60.0));
}

TEST_CASE("the cell-list sweep matches a brute-force reference step for step") {
    const FieldBundle& fb = bundle();
    // delta = 0.35 gives an 17x17 cell grid, so the neighbor-block path runs
    ParticleEnsemble e = make_uniform(500, 77, 50.0, 0.35);
    Rng noise(123);
    const double dt = 1e-2;
    for (int step = 0; step < 25; ++step) {
        ParticleEnsemble ref = e;  // copies positions, alive flags, thinning stream
        const double dwi = noise.gauss() * std::sqrt(dt);

        step_ensemble(e, Vec2{dwi, 0.0}, dt, fb);

        // documented semantics, restated without the cell list
        for (size_t i = 0; i < ref.pos.size(); ++i)
            if (ref.alive[i]) ref.pos[i] = step_ito(ref.pos[i], dwi, dt, ref.alpha, fb);
        const double p = -std::expm1(-ref.r0 * dt);
        for (int i = 0; i < int(ref.pos.size()); ++i) {
            if (!ref.alive[size_t(i)]) continue;
            for (int j = i + 1; j < int(ref.pos.size()); ++j) {
                if (!ref.alive[size_t(i)]) break;
                if (!ref.alive[size_t(j)]) continue;
                const double dx = wrap_diff(ref.pos[size_t(i)].x, ref.pos[size_t(j)].x, fb.geom.L1);
                const double dy = wrap_diff(ref.pos[size_t(i)].y, ref.pos[size_t(j)].y, fb.geom.L2);
                if (dx * dx + dy * dy > sqr(ref.delta)) continue;
                if (ref.thin.u01() >= p) continue;
                const int victim = (ref.thin.u01() < 0.5) ? i : j;
                ref.alive[size_t(victim)] = 0;
                --ref.alive_count;
                ++ref.removed;
            }
        }

        REQUIRE(e.alive_count == ref.alive_count);
        for (size_t i = 0; i < e.pos.size(); ++i) {
            CHECK(e.alive[i] == ref.alive[i]);
            CHECK(e.pos[i].x == ref.pos[i].x);
            CHECK(e.pos[i].y == ref.pos[i].y);
        }
    }
    CHECK(e.removed > 0);
}

TEST_CASE("run_ensemble validates the horizon against the path") {
    const FieldBundle& fb = bundle();
    ParticleEnsemble e = make_uniform(10, 1, 1.0, 0.1);
    BrownianPath path = brownian_path(2, 1.0, 1e-2);
    CHECK_THROWS_AS(run_ensemble(e, path, 2.0, fb), param_error);  // path too short
    CHECK_THROWS_AS(run_ensemble(e, path, 0.0, fb), param_error);
    CHECK_THROWS_AS(run_ensemble(e, path, 1.0, fb, 0), param_error);
}
