#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cellflow/common.hpp"
#include "cellflow/fields.hpp"
#include "cellflow/flow.hpp"
#include "cellflow/hamiltonian.hpp"
#include "cellflow/stochastics.hpp"

using namespace cellflow;

namespace {

const FieldBundle& bundle() {
    static FieldBundle fb = make_field_bundle(
        build_geometry(make_trig_profile(1, 0.0), make_trig_profile(1, kPi / 2), 0.3),
        AlignedCoefficients::make(make_constant_coefficient(1.0), make_constant_coefficient(1.0)));
    return fb;
}

const Vec2 kStart{kPi / 4, kPi / 4};

}  // namespace

TEST_CASE("step_ito stays on the torus and validates its arguments") {
    const FieldBundle& fb = bundle();
    Vec2 x = kStart;
    for (int k = 0; k < 100; ++k) {
        x = step_ito(x, 0.03, 1e-3, 1.0, fb);
        CHECK(std::isfinite(x.x));
        CHECK(x.x >= 0.0);
        CHECK(x.x < fb.geom.L1);
        CHECK(x.y >= 0.0);
        CHECK(x.y < fb.geom.L2);
    }
    CHECK_THROWS_AS(step_ito(kStart, 0.0, 0.0, 1.0, fb), param_error);
    CHECK_THROWS_AS(step_ito(kStart, 0.0, 1e-3, -1.0, fb), param_error);
}

TEST_CASE("projected scheme keeps |H| nonincreasing with a frozen sign") {
    const FieldBundle& fb = bundle();
    for (uint64_t seed : {11u, 12u, 13u, 14u, 15u}) {
        BrownianPath path = brownian_path(seed, 3.0, 1e-3);
        FlowTrajectory tr = simulate_flow(kStart, path, 1.0, fb,
                                          {Scheme::contraction_projected, 1});
        CHECK(tr.newton_failures == 0);
        REQUIRE(!tr.H_values.empty());
        const double s0 = tr.H_values.front() >= 0 ? 1.0 : -1.0;
        double prev = std::fabs(tr.H_values.front());
        for (double h : tr.H_values) {
            CHECK(s0 * h >= 0.0);                    // sign never flips
            CHECK(std::fabs(h) <= prev + 1e-6 * tr.dt);  // |H| decays monotonically
            prev = std::fabs(h);
        }
        // the projection targets the per-step trapezoid of the realized rate, so
        // the residual is the O(dt^2)-per-step predictor gap, not a sqrt(dt) walk
        CHECK(check_H_identity(tr) < 5e-3);
    }
}

TEST_CASE("euler-maruyama satisfies the decay identity to O(sqrt dt) and refines") {
    const FieldBundle& fb = bundle();
    double coarse_err = 0, fine_err = 0;
    const int n_seeds = 8;
    for (uint64_t seed = 40; seed < 40 + n_seeds; ++seed) {
        BrownianPath fine = brownian_path(seed, 2.0, 5e-4);
        BrownianPath coarse = coarsen(fine, 2);  // same Brownian motion
        FlowTrajectory tc = simulate_flow(kStart, coarse, 1.0, fb, {Scheme::euler_maruyama, 1});
        FlowTrajectory tf = simulate_flow(kStart, fine, 1.0, fb, {Scheme::euler_maruyama, 1});
        coarse_err += check_H_identity(tc);
        fine_err += check_H_identity(tf);
    }
    coarse_err /= n_seeds;
    fine_err /= n_seeds;
    CHECK(coarse_err < 5e-2);       // already small at dt = 1e-3
    CHECK(coarse_err / fine_err > 1.1);  // halving dt shrinks the residual
}

TEST_CASE("trajectories are deterministic in the path and record on the requested grid") {
    const FieldBundle& fb = bundle();
    BrownianPath path = brownian_path(77, 1.0, 1e-3);
    FlowTrajectory a = simulate_flow(kStart, path, 1.0, fb, {Scheme::contraction_projected, 10});
    FlowTrajectory b = simulate_flow(kStart, path, 1.0, fb, {Scheme::contraction_projected, 10});
    REQUIRE(a.states.size() == b.states.size());
    for (size_t i = 0; i < a.states.size(); ++i) {
        CHECK(a.states[i].x == b.states[i].x);
        CHECK(a.states[i].y == b.states[i].y);
    }
    CHECK(a.times.size() == 101);  // 1000 steps recorded every 10, plus k = 0
    CHECK(a.times.front() == 0.0);
    CHECK(a.times.back() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.states.size() == a.times.size());
    CHECK(a.H_values.size() == a.times.size());
    CHECK(a.contraction_integral.size() == a.times.size());
    CHECK(a.divg_integral.size() == a.times.size());

    FlowTrajectory c =
        simulate_flow(kStart, brownian_path(78, 1.0, 1e-3), 1.0, fb,
                      {Scheme::contraction_projected, 10});
    CHECK(c.states.back().x != a.states.back().x);
}

TEST_CASE("measured flow constants match the analytic values for sin x cos y") {
    const FieldBundle& fb = bundle();
    FlowConstants fc = measure_flow_constants(fb);
    CHECK(fc.exclusion_r == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(fc.gamma_r == doctest::Approx(sqr(std::cos(0.3 / std::sqrt(2.0)))).epsilon(1e-9));
    CHECK(fc.lambda_star == doctest::Approx(sqr(std::sin(0.3))).epsilon(1e-9));
    CHECK(fc.m_star_sq == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fc.l_star == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fc.c_sigma == doctest::Approx(1.0).epsilon(1e-12));
    // both components of D(xi)xi are (sin 2u)/2 scaled by the other factor,
    // so the per-component drift bound is 1/2 * n^2 * 1/2
    CHECK(fc.c_b == doctest::Approx(0.25).epsilon(1e-9));

    // the entry bound is the frozen closed form of the measured constants
    for (double alpha : {0.5, 1.0, 4.0}) {
        const double expect = std::log(fc.gamma_r / 0.01) /
                              (fc.beta_star(alpha) * fc.m_star_sq * fc.lambda_star);
        CHECK(fc.entry_bound(0.01, alpha) == doctest::Approx(expect).epsilon(1e-14));
        CHECK(fc.beta_star(alpha) ==
              doctest::Approx(alpha / (2.0 * (fc.l_star + alpha))).epsilon(1e-14));
    }
    CHECK_THROWS_AS(fc.entry_bound(0.0, 1.0), param_error);
    CHECK_THROWS_AS(fc.entry_bound(fc.gamma_r * 1.1, 1.0), param_error);
}

TEST_CASE("paths enter the separatrix band well before the theoretical bound") {
    const FieldBundle& fb = bundle();
    FlowConstants fc = measure_flow_constants(fb);
    const double eta = 0.01;
    const double bound = fc.entry_bound(eta, 1.0);
    for (uint64_t seed : {101u, 102u, 103u, 104u, 105u}) {
        BrownianPath path = brownian_path(seed, 60.0, 1e-3);
        auto hit = measure_entry_time(kStart, path, 1.0, fb, eta, Scheme::contraction_projected);
        REQUIRE(hit.has_value());
        CHECK(*hit <= bound);
        CHECK(*hit > 0.0);
    }
}

TEST_CASE("entry time validates eta against gamma_r") {
    const FieldBundle& fb = bundle();
    BrownianPath path = brownian_path(1, 1.0, 1e-3);
    CHECK_THROWS_AS(measure_entry_time(kStart, path, 1.0, fb, 0.0, Scheme::euler_maruyama),
                    param_error);
    CHECK_THROWS_AS(measure_entry_time(kStart, path, 1.0, fb, 0.99, Scheme::euler_maruyama),
                    param_error);  // gamma_r ~ 0.956
    FlowTrajectory tr = simulate_flow(kStart, path, 1.0, fb);
    CHECK_THROWS_AS(entry_time(tr, -1.0), param_error);
}

TEST_CASE("occupation fractions scale roughly linearly in the band width") {
    const FieldBundle& fb = bundle();
    std::vector<FlowTrajectory> ens;
    for (uint64_t s = 300; s < 360; ++s)
        ens.push_back(simulate_flow(kStart, brownian_path(s, 7.0, 1e-3), 1.0, fb,
                                    {Scheme::contraction_projected, 1}));
    // sign conservation confines each path to the boundary of its starting
    // cell, so only the four midpoints around that cell are ever visited;
    // (pi/2, pi/2) sits on the top edge for a start in the first cell
    const Midpoint* mp = nullptr;
    for (const Midpoint& m : fb.geom.midpoints)
        if (m.type == MidpointType::crit_cross_zero && m.q.x < kPi && m.q.y < kPi) mp = &m;
    REQUIRE(mp != nullptr);

    std::vector<OccupationReport> reps;
    for (double theta : {0.1, 0.2})
        reps.push_back(occupation_report(ens, *mp, theta, 6.0, fb.geom));
    for (const auto& r : reps) {
        CHECK(r.mean > 0.0);
        CHECK(r.mean <= 1.0);
        for (double f : r.fractions) {
            CHECK(f >= 0.0);
            CHECK(f <= 1.0);
        }
        CHECK(r.ci_lo <= r.mean);
        CHECK(r.ci_hi >= r.mean);
    }
    CHECK(reps[1].mean > reps[0].mean);  // wider band, more time inside
    // near-linear scaling in theta: the half-width report sits near half
    CHECK(reps[0].mean / reps[1].mean > 0.25);
    CHECK(reps[0].mean / reps[1].mean < 0.80);

    const double k0 = occupation_slope(reps);
    CHECK(k0 > 0.0);
    CHECK(std::isfinite(k0));
    CHECK(reps[0].kappa0_hat == k0);
    CHECK(reps[1].kappa0_hat == k0);
}

TEST_CASE("occupation report validates the band width and the window") {
    const FieldBundle& fb = bundle();
    std::vector<FlowTrajectory> ens{simulate_flow(kStart, brownian_path(4, 3.0, 1e-3), 1.0, fb)};
    const Midpoint& mp = fb.geom.midpoints.front();
    CHECK_THROWS_AS(occupation_report(ens, mp, 2.0, 1.0, fb.geom), param_error);  // > reach pi/2
    CHECK_THROWS_AS(occupation_report(ens, mp, -0.1, 1.0, fb.geom), param_error);
    CHECK_THROWS_AS(occupation_report(ens, mp, 0.1, 2.5, fb.geom), param_error);  // window past T
    CHECK_THROWS_AS(occupation_report({}, mp, 0.1, 1.0, fb.geom), input_error);
    std::vector<OccupationReport> none;
    CHECK_THROWS_AS(occupation_slope(none), input_error);
}

TEST_CASE("the volume factor J drops below one once paths reach the band") {
    const FieldBundle& fb = bundle();
    std::vector<FlowTrajectory> ens;
    for (uint64_t s = 500; s < 540; ++s)
        ens.push_back(simulate_flow(kStart, brownian_path(s, 6.0, 1e-3), 1.0, fb,
                                    {Scheme::contraction_projected, 1}));
    JAlphaReport rep = j_alpha_report(ens, 5.0, 1.0, fb);
    REQUIRE(rep.J.size() == ens.size());
    for (double j : rep.J) {
        CHECK(j > 0.0);
        CHECK(std::isfinite(j));
    }
    CHECK(rep.mean < 1.0 - 1e-3);
    CHECK(rep.kappabar_hat > 0.0);
    const double chi = fb.chi_alpha(1.0);
    CHECK(rep.kappabar_hat == doctest::Approx(-std::log(rep.mean) / chi).epsilon(1e-12));

    CHECK_THROWS_AS(j_alpha_report(ens, 5.9, 1.0, fb), param_error);  // window past T
    CHECK_THROWS_AS(j_alpha_report({}, 5.0, 1.0, fb), input_error);
}

TEST_CASE("second-order system collapses to the first-order flow as eps shrinks") {
    const FieldBundle& fb = bundle();
    const double T = 1.0, dt = 8e-5;
    double rms_big = 0, rms_small = 0;
    const int n_seeds = 10;
    for (uint64_t s = 900; s < 900 + n_seeds; ++s) {
        BrownianPath path = brownian_path(s, T, dt);
        FlowTrajectory ref = simulate_flow(kStart, path, 1.0, fb, {Scheme::euler_maruyama, 1000});
        for (double eps : {0.1, 0.004}) {
            SecondOrderTrajectory so = simulate_second_order(kStart, {0, 0}, path, eps, eps, fb);
            const Vec2 xe = so.x.back(), xr = ref.states.back();
            const double dx = wrap_diff(xe.x, xr.x, fb.geom.L1);
            const double dy = wrap_diff(xe.y, xr.y, fb.geom.L2);
            (eps > 0.01 ? rms_big : rms_small) += dx * dx + dy * dy;
        }
    }
    rms_big = std::sqrt(rms_big / n_seeds);
    rms_small = std::sqrt(rms_small / n_seeds);
    CHECK(rms_small < rms_big);  // tighter coupling at shorter correlation time
    CHECK(rms_big < 1.5);        // and the coarse one is still in the right basin
}

TEST_CASE("second-order integrator rejects steps that cannot resolve the stiff scales") {
    const FieldBundle& fb = bundle();
    BrownianPath path = brownian_path(1, 1.0, 1e-3);
    CHECK_THROWS_AS(simulate_second_order(kStart, {0, 0}, path, 1e-3, 1e-3, fb), param_error);
    CHECK_THROWS_AS(simulate_second_order(kStart, {0, 0}, path, -1.0, 0.1, fb), param_error);
    CHECK_THROWS_AS(simulate_second_order(kStart, {0, 0}, path, 0.1, -1.0, fb), param_error);
}
