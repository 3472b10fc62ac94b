#include "cellflow/commands.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include "cellflow/density.hpp"
#include "cellflow/particles.hpp"
#include "cellflow/report.hpp"
#include "cellflow/svg.hpp"

namespace cellflow {

namespace {

std::string out_path(const RunOptions& ro, const std::string& name) {
    return ro.out_dir + "/" + name;
}

void prepare_out(const ExperimentConfig& ec, const RunOptions& ro) {
    ensure_dir(ro.out_dir);
    write_text(out_path(ro, "config.txt"), ec.file.raw);  // verbatim echo
}

int threads_of(const ExperimentConfig& ec, const RunOptions& ro) {
    return ro.threads > 0 ? ro.threads : ec.threads;
}

// Transport runs default to plain Euler-Maruyama: the mass formulas are exact
// along its discrete path and it costs one field evaluation per step. The
// projected scheme stays the flow-command default, where the decay identity
// diagnostics depend on it. An explicit run.scheme overrides both.
Scheme transport_scheme(const ExperimentConfig& ec) {
    return ec.scheme_explicit ? ec.scheme : Scheme::euler_maruyama;
}

std::vector<std::pair<std::string, std::string>> condition_items(const ConditionReport& cr,
                                                                 const std::string& desc) {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.push_back({"profile", desc});
    kv.push_back({"simple_zeros", cr.simple_zeros ? "pass" : "FAIL"});
    kv.push_back({"nondegenerate_critical_points", cr.nondegenerate_crits ? "pass" : "FAIL"});
    kv.push_back({"opposed_curvature", cr.opposed_curvature ? "pass" : "FAIL"});
    kv.push_back({"interlaced", cr.interlaced ? "pass" : "FAIL"});
    kv.push_back({"wave_number", std::to_string(cr.wave_number)});
    kv.push_back({"n_zeros", std::to_string(cr.n_zeros)});
    kv.push_back({"n_critical_points", std::to_string(cr.n_crits)});
    kv.push_back({"min_abs_d1_at_zeros", fmt17(cr.min_abs_d1_at_zeros)});
    kv.push_back({"worst_zero", fmt17(cr.worst_zero)});
    kv.push_back({"min_abs_d2_at_crits", fmt17(cr.min_abs_d2_at_crits)});
    kv.push_back({"worst_crit", fmt17(cr.worst_crit)});
    kv.push_back({"max_h_times_d2", fmt17(cr.max_h_times_d2)});
    for (const auto& f : cr.failures) kv.push_back({"failure", f});
    return kv;
}

const char* midpoint_kind(MidpointType t) {
    return t == MidpointType::zero_cross_crit ? "zero_cross_crit" : "crit_cross_zero";
}

// particle position sampler from the f0 spec: "uniform", "point cx=.. cy=..",
// or any initial-density spec via rejection against a scanned upper bound
ParticleSampler density_sampler_for(const ExperimentConfig& ec, const TorusGeometry& geom) {
    std::istringstream is(ec.f0_spec);
    std::string kind;
    is >> kind;
    if (kind == "uniform") return sampler_uniform(geom);
    if (kind == "point") {
        double cx = -1, cy = -1;
        std::string tok;
        while (is >> tok) {
            if (tok.rfind("cx=", 0) == 0) cx = parse_number(tok.substr(3));
            if (tok.rfind("cy=", 0) == 0) cy = parse_number(tok.substr(3));
        }
        if (cx < 0 || cy < 0) throw param_error("point spec needs cx=.. cy=..");
        return sampler_point({cx, cy});
    }
    InitialDensity d = density_from_spec(ec.f0_spec, geom);
    double sup = 0;
    for (int i = 0; i < 256; ++i)
        for (int j = 0; j < 256; ++j)
            sup = std::max(sup, d.f({(i + 0.5) * geom.L1 / 256, (j + 0.5) * geom.L2 / 256}));
    if (!(sup > 0)) throw input_error("initial density is identically zero on the scan grid");
    return sampler_density(geom, d.f, sup * 1.05);
}

}  // namespace

int cmd_verify(const ExperimentConfig& ec, const RunOptions& ro) {
    prepare_out(ec, ro);
    ProfilePtr h1 = profile_from_spec(ec.h1_spec);
    ProfilePtr h2 = profile_from_spec(ec.h2_spec);
    const ConditionReport c1 = verify_conditions(*h1);
    const ConditionReport c2 = verify_conditions(*h2);
    write_kv(out_path(ro, "conditions_h1.txt"), condition_items(c1, h1->description()));
    write_kv(out_path(ro, "conditions_h2.txt"), condition_items(c2, h2->description()));

    if (!c1.pass() || !c2.pass()) {
        for (const auto* cr : {&c1, &c2})
            for (const auto& f : cr->failures) std::cout << "condition failure: " << f << "\n";
        std::cout << "verification FAILED\n";
        return 1;
    }

    TorusGeometry geom = build_geometry(h1, h2, ec.exclusion_r);
    {
        CsvWriter cells(out_path(ro, "cells.csv"),
                        {"index", "x1_lo", "x1_hi", "x2_lo", "x2_hi", "center_x1", "center_x2",
                         "sign"});
        for (size_t i = 0; i < geom.cells.size(); ++i) {
            const Cell& c = geom.cells[i];
            cells.row(std::vector<std::string>{std::to_string(i), fmt17(c.x1_lo), fmt17(c.x1_hi),
                                               fmt17(c.x2_lo), fmt17(c.x2_hi), fmt17(c.center.x),
                                               fmt17(c.center.y), std::to_string(c.sign)});
        }
        CsvWriter pts(out_path(ro, "points.csv"), {"kind", "x1", "x2", "extra"});
        for (const Vec2& p : geom.centers)
            pts.row(std::vector<std::string>{"center", fmt17(p.x), fmt17(p.y), "0"});
        for (const Vec2& p : geom.corners)
            pts.row(std::vector<std::string>{"corner", fmt17(p.x), fmt17(p.y), "0"});
        for (const Midpoint& m : geom.midpoints)
            pts.row(std::vector<std::string>{midpoint_kind(m.type), fmt17(m.q.x), fmt17(m.q.y),
                                             fmt17(m.vq_radius)});
    }
    write_kv(out_path(ro, "geometry.txt"),
             {{"cells", std::to_string(geom.cells.size())},
              {"centers", std::to_string(geom.centers.size())},
              {"corners", std::to_string(geom.corners.size())},
              {"midpoints", std::to_string(geom.midpoints.size())},
              {"area", fmt17(geom.area)},
              {"exclusion_r", fmt17(geom.exclusion_r)},
              {"gamma_r", fmt17(geom.gamma_r)},
              {"dr_area", fmt17(geom.dr_area)},
              {"min_center_gap", fmt17(geom.min_center_gap)}});

    if (ro.figures) {
        ContourSpec cs;
        cs.title = "H level curves";
        cs.levels = {-0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8};
        for (const Vec2& c : geom.centers) cs.marks.push_back(c);
        write_contour_svg(out_path(ro, "h_levels.svg"),
                          [&](Vec2 x) { return geom.H(x); }, geom.L1, geom.L2, cs);
    }
    std::cout << "verification passed: " << geom.cells.size() << " cells, "
              << geom.centers.size() << " centers, " << geom.corners.size() << " corners, "
              << geom.midpoints.size() << " midpoints\n";
    return 0;
}

int cmd_fields(const ExperimentConfig& ec, const RunOptions& ro) {
    prepare_out(ec, ro);
    BuiltExperiment be = build_experiment(ec);
    const FieldBundle& fb = *be.bundle;
    const double alpha = ec.alphas.front();

    // stratified scan of the exact identities and the two drift forms
    const int n = 100;
    std::array<double, 3> worst{};
    std::array<Vec2, 3> where{};
    double worst_gap = 0, worst_fd = 0;
    Vec2 where_gap{}, where_fd{};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Vec2 x{(i + 0.5) * fb.geom.L1 / n, (j + 0.5) * fb.geom.L2 / n};
            const auto res = fb.identity_residuals(x);
            for (int k = 0; k < 3; ++k)
                if (std::fabs(res[size_t(k)]) > worst[size_t(k)]) {
                    worst[size_t(k)] = std::fabs(res[size_t(k)]);
                    where[size_t(k)] = x;
                }
            const Vec2 gr = fb.g_alpha_reduced(x, alpha), gg = fb.g_alpha_general(x, alpha);
            const double gap = std::max(std::fabs(gr.x - gg.x), std::fabs(gr.y - gg.y));
            if (gap > worst_gap) {
                worst_gap = gap;
                where_gap = x;
            }
        }
    // coarser finite-difference cross-check of the closed-form divergence
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) {
            const Vec2 x{(i + 0.37) * fb.geom.L1 / 20, (j + 0.61) * fb.geom.L2 / 20};
            const double d = std::fabs(fb.div_g_alpha_closed(x, alpha) -
                                       fb.div_g_alpha_fd(x, alpha, 1e-4));
            if (d > worst_fd) {
                worst_fd = d;
                where_fd = x;
            }
        }

    CsvWriter idcsv(out_path(ro, "identities.csv"), {"identity", "max_abs_residual", "x1", "x2"});
    const char* names[3] = {"gradH_dot_dxixi_minus_H_Lambda", "div_dxixi_minus_2DH",
                            "two_DH_decomposition"};
    for (int k = 0; k < 3; ++k)
        idcsv.row(std::vector<std::string>{names[k], fmt17(worst[size_t(k)]),
                                           fmt17(where[size_t(k)].x), fmt17(where[size_t(k)].y)});
    idcsv.row(std::vector<std::string>{"general_vs_reduced_drift", fmt17(worst_gap),
                                       fmt17(where_gap.x), fmt17(where_gap.y)});
    idcsv.row(std::vector<std::string>{"divergence_closed_vs_fd", fmt17(worst_fd),
                                       fmt17(where_fd.x), fmt17(where_fd.y)});

    if (ro.figures) {
        ContourSpec hs;
        hs.title = "H level curves";
        hs.levels = {-0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8};
        write_contour_svg(out_path(ro, "h_levels.svg"), [&](Vec2 x) { return fb.H(x); },
                          fb.geom.L1, fb.geom.L2, hs);

        ContourSpec ds;
        ds.title = "div g_alpha level curves, alpha = " + fmt17(alpha);
        write_contour_svg(out_path(ro, "divg_levels.svg"),
                          [&](Vec2 x) { return fb.div_g_alpha_closed(x, alpha); }, fb.geom.L1,
                          fb.geom.L2, ds);

        ContourSpec js;
        js.title = "H levels with {div g_alpha >= 0.3} shaded";
        js.levels = {-0.8, -0.4, 0.0, 0.4, 0.8};
        js.shade = true;
        js.shade_threshold = 0.3;
        for (const Midpoint& m : fb.geom.midpoints) js.marks.push_back(m.q);
        write_contour_svg(out_path(ro, "divg_region.svg"),
                          [&](Vec2 x) { return fb.div_g_alpha_closed(x, alpha); }, fb.geom.L1,
                          fb.geom.L2, js);
    }

    const double tol = 1e-8;
    const bool ok = worst[0] < tol && worst[1] < tol && worst[2] < tol && worst_gap < tol;
    std::cout << "identity residuals: " << fmt17(worst[0]) << ", " << fmt17(worst[1]) << ", "
              << fmt17(worst[2]) << "; drift forms gap " << fmt17(worst_gap)
              << "; fd divergence gap " << fmt17(worst_fd) << "\n";
    if (!ok) {
        std::cout << "identity check FAILED\n";
        return 1;
    }
    return 0;
}

int cmd_flow(const ExperimentConfig& ec, const RunOptions& ro) {
    prepare_out(ec, ro);
    BuiltExperiment be = build_experiment(ec);
    const FieldBundle& fb = *be.bundle;
    const FlowConstants fc = measure_flow_constants(fb);
    write_kv(out_path(ro, "flow_constants.txt"),
             {{"exclusion_r", fmt17(fc.exclusion_r)},
              {"gamma_r", fmt17(fc.gamma_r)},
              {"lambda_star", fmt17(fc.lambda_star)},
              {"m_star_sq", fmt17(fc.m_star_sq)},
              {"l_star", fmt17(fc.l_star)},
              {"c_sigma", fmt17(fc.c_sigma)},
              {"c_b", fmt17(fc.c_b)}});

    FlowOptions opt;
    opt.scheme = ec.scheme;
    CsvWriter traj_csv(out_path(ro, "trajectories.csv"), {"alpha", "seed", "t", "x1", "x2", "H"});
    CsvWriter ident_csv(out_path(ro, "h_identity.csv"),
                        {"alpha", "seed", "max_rel_identity_err", "monotone_violations",
                         "sign_flips", "newton_failures"});
    CsvWriter entry_csv(out_path(ro, "entry_times.csv"),
                        {"alpha", "seed", "measured", "bound_T_eta_alpha"});
    CsvWriter occ_csv(out_path(ro, "occupation.csv"),
                      {"alpha", "midpoint_kind", "q1", "q2", "theta", "mean", "ci_lo", "ci_hi",
                       "kappa0_hat"});
    CsvWriter j_csv(out_path(ro, "jalpha.csv"),
                    {"alpha", "s", "mean_J", "ci_lo", "ci_hi", "kappabar_hat"});

    const double t_need = std::max(ec.t_final, ec.window_start + 1.0);
    bool all_monotone = true, bound_ok = true;
    for (double alpha : ec.alphas) {
        std::vector<FlowTrajectory> ens;
        ens.reserve(size_t(ec.n_seeds));
        for (uint64_t seed : ec.seeds(ro.seed_offset))
            ens.push_back(simulate_flow(ec.x0, brownian_path(seed, t_need, ec.dt), alpha, fb, opt));

        for (size_t s = 0; s < ens.size(); ++s) {
            const FlowTrajectory& tr = ens[s];
            if (int(s) < ec.dump_paths)
                for (size_t k = 0; k < tr.times.size(); ++k)
                    traj_csv.row(std::vector<std::string>{
                        fmt17(alpha), std::to_string(tr.path_seed), fmt17(tr.times[k]),
                        fmt17(tr.states[k].x), fmt17(tr.states[k].y), fmt17(tr.H_values[k])});
            long mono = 0, flips = 0;
            for (size_t k = 1; k < tr.H_values.size(); ++k) {
                if (std::fabs(tr.H_values[k]) >
                    std::fabs(tr.H_values[k - 1]) + 1e-6 * tr.dt)
                    ++mono;
                if (tr.H_values[k] * tr.H_values[k - 1] < 0) ++flips;
            }
            if (mono || flips) all_monotone = false;
            ident_csv.row(std::vector<std::string>{
                fmt17(alpha), std::to_string(tr.path_seed), fmt17(check_H_identity(tr)),
                std::to_string(mono), std::to_string(flips), std::to_string(tr.newton_failures)});

            const double bound = fc.entry_bound(ec.eta, alpha);
            const auto hit = entry_time(tr, ec.eta);
            double measured = hit ? *hit : -1.0;
            if (!hit && tr.T < bound) {
                // simulated horizon too short for the claim: extend just this path
                const auto late = measure_entry_time(ec.x0, brownian_path(tr.path_seed, bound,
                                                                          ec.dt),
                                                     alpha, fb, ec.eta, ec.scheme);
                measured = late ? *late : -1.0;
            }
            if (measured < 0 || measured > bound) bound_ok = false;
            entry_csv.row(std::vector<std::string>{fmt17(alpha), std::to_string(tr.path_seed),
                                                   fmt17(measured), fmt17(bound)});
        }

        // occupation around one midpoint of each kind, across the band widths
        for (MidpointType want :
             {MidpointType::zero_cross_crit, MidpointType::crit_cross_zero}) {
            const Midpoint* mp = nullptr;
            for (const Midpoint& m : fb.geom.midpoints)
                if (m.type == want) {
                    mp = &m;
                    break;
                }
            if (!mp) continue;
            std::vector<OccupationReport> reps;
            for (double theta : ec.thetas)
                reps.push_back(occupation_report(ens, *mp, theta, ec.window_start, fb.geom));
            occupation_slope(reps);
            for (const OccupationReport& r : reps)
                occ_csv.row(std::vector<std::string>{
                    fmt17(alpha), midpoint_kind(r.type), fmt17(r.q.x), fmt17(r.q.y),
                    fmt17(r.theta), fmt17(r.mean), fmt17(r.ci_lo), fmt17(r.ci_hi),
                    fmt17(r.kappa0_hat)});
        }

        const JAlphaReport jr = j_alpha_report(ens, ec.window_start, alpha, fb);
        j_csv.row(std::vector<std::string>{fmt17(alpha), fmt17(jr.s), fmt17(jr.mean),
                                           fmt17(jr.ci_lo), fmt17(jr.ci_hi),
                                           fmt17(jr.kappabar_hat)});

        if (ro.figures && alpha == ec.alphas.front()) {
            std::vector<std::pair<std::string, std::vector<double>>> hs;
            for (size_t s = 0; s < std::min<size_t>(ens.size(), 5); ++s) {
                std::vector<double> habs(ens[s].H_values.size());
                for (size_t k = 0; k < habs.size(); ++k) habs[k] = std::fabs(ens[s].H_values[k]);
                hs.push_back({"seed " + std::to_string(ens[s].path_seed), std::move(habs)});
            }
            write_series_svg(out_path(ro, "h_decay.svg"), "|H| along the flow", ens[0].times, hs,
                             true);
        }
    }
    std::cout << (all_monotone ? "all paths |H| nonincreasing with constant sign\n"
                               : "WARNING: |H| monotonicity or sign constancy violated\n");
    std::cout << (bound_ok ? "all entry times within the theoretical bound\n"
                           : "WARNING: an entry time exceeded the theoretical bound\n");
    return 0;
}

int cmd_particles(const ExperimentConfig& ec, const RunOptions& ro) {
    prepare_out(ec, ro);
    BuiltExperiment be = build_experiment(ec);
    const FieldBundle& fb = *be.bundle;
    const double alpha = ec.alphas.front();

    // pair-event intensity calibrated so the thinning matches the quadratic
    // mass loss with coefficient r0: each close pair fires at rate
    // 2 r0 / (N pi delta^2); the calibration is reported below.
    double r0_pair = 0.0;
    if (ec.file.has("run.r0_particle"))
        r0_pair = ec.file.num("run.r0_particle");
    else if (ec.delta > 0 && ec.r0 > 0)
        r0_pair = 2.0 * ec.r0 / (double(ec.n_particles) * kPi * sqr(ec.delta));

    MassSeries ms;
    long long removed_total = 0;
    for (uint64_t seed : ec.seeds(ro.seed_offset)) {
        ParticleEnsemble e =
            init_ensemble(density_sampler_for(ec, fb.geom), ec.n_particles, fb.geom,
                          ec.exclusion_r, seed, r0_pair, ec.delta, alpha);
        MassSeries one = run_ensemble(e, brownian_path(seed, ec.t_final, ec.dt), ec.t_final, fb,
                                      std::max(1, ec.output_every));
        if (ms.times.empty()) ms.times = one.times;
        ms.per_seed.push_back(std::move(one.per_seed[0]));
        removed_total += e.removed;
    }
    ms.finalize_stats();

    CsvWriter mcsv(out_path(ro, "mass_particles.csv"), {"t", "mean", "ci_lo", "ci_hi"});
    for (size_t i = 0; i < ms.times.size(); ++i)
        mcsv.row(std::vector<double>{ms.times[i], ms.mean[i], ms.lo[i], ms.hi[i]});

    std::vector<std::pair<std::string, std::string>> kv{
        {"n_particles", std::to_string(ec.n_particles)},
        {"r0_quadratic", fmt17(ec.r0)},
        {"r0_pair_calibrated", fmt17(r0_pair)},
        {"calibration", "r0_pair = 2 r0 / (N pi delta^2)"},
        {"delta", fmt17(ec.delta)},
        {"alpha", fmt17(alpha)},
        {"seeds", std::to_string(ec.n_seeds)},
        {"events_total", std::to_string(removed_total)}};
    const double fit_b = std::min(ec.fit_b, ms.times.back());
    if (ms.mean.back() > 0 && fit_b > ec.fit_a) {
        const DecayFit fit = fit_decay(ms, ec.fit_a, fit_b);
        kv.push_back({"fit_rate", fmt17(fit.rate)});
        kv.push_back({"fit_ci", fmt17(fit.lo) + " .. " + fmt17(fit.hi)});
        kv.push_back({"fit_r2", fmt17(fit.r2)});
    }
    write_kv(out_path(ro, "summary.txt"), kv);

    if (ro.figures)
        write_series_svg(out_path(ro, "mass_particles.svg"), "surviving mass fraction", ms.times,
                         {{"mean", ms.mean}, {"ci_lo", ms.lo}, {"ci_hi", ms.hi}}, true);
    std::cout << "terminal mean mass " << fmt17(ms.mean.back()) << " after " << removed_total
              << " coalescence events\n";
    return 0;
}

int cmd_density(const ExperimentConfig& ec, const RunOptions& ro) {
    prepare_out(ec, ro);
    BuiltExperiment be = build_experiment(ec);
    const FieldBundle& fb = *be.bundle;
    const double alpha = ec.alphas.front();
    const InitialDensity f0 = density_from_spec(ec.f0_spec, fb.geom);

    const MassSeries ms =
        expected_mass(f0, alpha, ec.r0, ec.t_final, ec.seeds(ro.seed_offset), ec.grid_size, fb,
                      ec.dt, ec.output_every, transport_scheme(ec), threads_of(ec, ro));
    CsvWriter mcsv(out_path(ro, "mass_density.csv"), {"t", "mean", "ci_lo", "ci_hi"});
    for (size_t i = 0; i < ms.times.size(); ++i)
        mcsv.row(std::vector<double>{ms.times[i], ms.mean[i], ms.lo[i], ms.hi[i]});

    std::vector<std::pair<std::string, std::string>> kv{
        {"alpha", fmt17(alpha)},
        {"r0", fmt17(ec.r0)},
        {"grid", std::to_string(ec.grid_size)},
        {"seeds", std::to_string(ec.n_seeds)},
        {"initial_mass", fmt17(ms.mean.front())},
        {"final_mass", fmt17(ms.mean.back())}};

    if (ec.r0 == 0) {
        double dev = 0;
        for (double v : ms.mean) dev = std::max(dev, std::fabs(v - ms.mean.front()));
        kv.push_back({"conservation_max_rel_dev", fmt17(dev / ms.mean.front())});
    }
    if (ec.file.int_or("run.checks", 1) != 0) {
        const BrownianPath chk = brownian_path(ec.seed_base + ro.seed_offset,
                                               std::min(1.0, ec.t_final), ec.dt);
        const JacobianCheck jc = jacobian_fd_check(f0, ec.grid_size, chk, alpha,
                                                   std::min(1.0, ec.t_final), fb, 20);
        kv.push_back({"jacobian_fd_max_rel_err", fmt17(jc.max_rel_err)});
        const BrownianPath chk2 = brownian_path(ec.seed_base + ro.seed_offset + 1,
                                                std::min(2.0, ec.t_final), ec.dt);
        const double ric = riccati_crosscheck(f0, ec.grid_size, chk2, alpha, ec.r0,
                                              std::min(2.0, ec.t_final), fb, 5);
        kv.push_back({"pointwise_ode_max_rel_err", fmt17(ric)});
    }
    write_kv(out_path(ro, "summary.txt"), kv);

    if (ro.figures)
        write_series_svg(out_path(ro, "mass_density.svg"), "expected mass", ms.times,
                         {{"mean", ms.mean}, {"ci_lo", ms.lo}, {"ci_hi", ms.hi}}, true);
    std::cout << "mean mass " << fmt17(ms.mean.front()) << " -> " << fmt17(ms.mean.back())
              << " over T = " << fmt17(ms.times.back()) << "\n";
    return 0;
}

int cmd_rates(const ExperimentConfig& ec, const RunOptions& ro) {
    prepare_out(ec, ro);
    BuiltExperiment be = build_experiment(ec);
    const FieldBundle& fb = *be.bundle;
    const InitialDensity f0 = density_from_spec(ec.f0_spec, fb.geom);

    const RateCurve rc =
        rate_curve(f0, ec.alphas, ec.r0, ec.t_final, ec.seeds(ro.seed_offset), ec.grid_size, fb,
                   ec.dt, ec.fit_a, std::min(ec.fit_b, ec.t_final), ec.output_every,
                   transport_scheme(ec), threads_of(ec, ro));
    CsvWriter rcsv(out_path(ro, "rates.csv"),
                   {"alpha", "rate", "ci_lo", "ci_hi", "r2", "theory_factor", "kappabar"});
    for (const RatePoint& p : rc.points)
        rcsv.row(std::vector<double>{p.alpha, p.fit.rate, p.fit.lo, p.fit.hi, p.fit.r2, p.factor,
                                     p.kappabar});
    write_kv(out_path(ro, "summary.txt"),
             {{"nondecreasing", rc.nondecreasing ? "yes" : "NO"},
              {"rate_ratio_extremes", fmt17(rc.ratio_extremes)},
              {"kappabar_spread", fmt17(rc.kappabar_spread)}});

    if (ro.figures) {
        std::vector<double> xs, rates;
        for (const RatePoint& p : rc.points) {
            xs.push_back(p.alpha);
            rates.push_back(p.fit.rate);
        }
        write_series_svg(out_path(ro, "rates.svg"), "fitted decay rate vs alpha", xs,
                         {{"rate", rates}}, false);
    }
    std::cout << "rates " << (rc.nondecreasing ? "nondecreasing" : "NOT monotone")
              << ", extremes ratio " << fmt17(rc.ratio_extremes) << "\n";
    return 0;
}

}  // namespace cellflow
