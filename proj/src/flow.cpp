#include "cellflow/flow.hpp"

#include <algorithm>
#include <cmath>

namespace cellflow {

Vec2 step_ito(Vec2 x, double dW, double dt, double alpha, const FieldBundle& fb) {
    if (!(dt > 0.0)) throw param_error("step_ito: dt must be positive");
    if (!(alpha > 0.0)) throw param_error("step_ito: alpha must be positive");
    FieldLocal f = fb.local(x, alpha);
    Vec2 xn = detail::wrap_point(x + detail::sigma_of(f) * dW + detail::drift_of(f) * dt, fb.geom);
    if (!(std::isfinite(xn.x) && std::isfinite(xn.y)))
        throw numerical_error("step_ito: non-finite state");
    return xn;
}

FlowTrajectory simulate_flow(Vec2 x0, const BrownianPath& path, double alpha,
                             const FieldBundle& fb, FlowOptions opt) {
    if (opt.record_every < 1) throw param_error("simulate_flow: record_every must be >= 1");
    FlowTrajectory tr;
    tr.x0 = x0;
    tr.alpha = alpha;
    tr.dt = path.dt;
    tr.T = path.T;
    tr.path_seed = path.seed;
    tr.path_derived = path.derived;
    tr.record_every = opt.record_every;
    tr.gamma_r = fb.geom.gamma_r;
    tr.scheme = opt.scheme;
    size_t n = path.steps();
    size_t n_rec = n / opt.record_every + 1;
    tr.times.reserve(n_rec);
    tr.states.reserve(n_rec);
    tr.H_values.reserve(n_rec);
    tr.contraction_integral.reserve(n_rec);
    tr.divg_integral.reserve(n_rec);
    run_flow_core(x0, path.increments.data(), n, path.dt, alpha, fb, opt.scheme,
                  &tr.newton_failures,
                  [&](size_t k, double t, Vec2 x, const FieldLocal& f, double ic, double id) {
                      if (k % static_cast<size_t>(opt.record_every) == 0 || k == n) {
                          tr.times.push_back(t);
                          tr.states.push_back(x);
                          tr.H_values.push_back(f.H);
                          tr.contraction_integral.push_back(ic);
                          tr.divg_integral.push_back(id);
                      }
                      return true;
                  });
    return tr;
}

double check_H_identity(const FlowTrajectory& traj) {
    if (traj.H_values.empty()) throw input_error("check_H_identity: empty trajectory");
    double H0 = traj.H_values.front();
    double worst = 0.0;
    for (size_t k = 0; k < traj.H_values.size(); ++k) {
        double pred = H0 * std::exp(-traj.contraction_integral[k]);
        double err = std::fabs(traj.H_values[k] - pred) / std::max(std::fabs(pred), 1e-12);
        worst = std::max(worst, err);
    }
    return worst;
}

std::optional<double> entry_time(const FlowTrajectory& traj, double eta) {
    if (!(eta > 0.0) || !(eta < traj.gamma_r))
        throw param_error("entry_time: eta must lie in (0, gamma_r)");
    for (size_t k = 0; k < traj.H_values.size(); ++k)
        if (std::fabs(traj.H_values[k]) <= eta) return traj.times[k];
    return std::nullopt;
}

std::optional<double> measure_entry_time(Vec2 x0, const BrownianPath& path, double alpha,
                                         const FieldBundle& fb, double eta, Scheme scheme) {
    if (!(eta > 0.0) || !(eta < fb.geom.gamma_r))
        throw param_error("measure_entry_time: eta must lie in (0, gamma_r)");
    std::optional<double> hit;
    run_flow_core(x0, path.increments.data(), path.steps(), path.dt, alpha, fb, scheme, nullptr,
                  [&](size_t, double t, Vec2, const FieldLocal& f, double, double) {
                      if (std::fabs(f.H) <= eta) {
                          hit = t;
                          return false;
                      }
                      return true;
                  });
    return hit;
}

double FlowConstants::entry_bound(double eta, double alpha) const {
    if (!(eta > 0.0) || !(eta < gamma_r))
        throw param_error("entry_bound: eta must lie in (0, gamma_r)");
    if (!(alpha > 0.0)) throw param_error("entry_bound: alpha must be positive");
    return std::log(gamma_r / eta) / (beta_star(alpha) * m_star_sq * lambda_star);
}

FlowConstants measure_flow_constants(const FieldBundle& fb) {
    FlowConstants c;
    const TorusGeometry& g = fb.geom;
    c.exclusion_r = g.exclusion_r;
    c.gamma_r = g.gamma_r;
    c.l_star = fb.coef.l_max;

    c.m_star_sq = 1e300;
    const int nh = 8192;
    for (int i = 0; i <= nh; ++i) {
        double h = -1.0 + 2.0 * i / nh;
        c.m_star_sq = std::min(c.m_star_sq, sqr(fb.coef.n(h)));
    }

    // min of Lambda over D_r: grid scan plus descent polish with boundary
    // projection, mirroring the gamma_r maximization.
    const int ng = 512;
    double best = 1e300;
    Vec2 best_x{0, 0};
    double dxixi_inf = 0.0;
    for (int i = 0; i < ng; ++i)
        for (int j = 0; j < ng; ++j) {
            Vec2 x{i * g.L1 / ng, j * g.L2 / ng};
            FieldLocal f = fb.local(x, 1.0);
            dxixi_inf = std::max({dxixi_inf, std::fabs(f.dxixi.x), std::fabs(f.dxixi.y)});
            if (g.in_exclusion(x)) continue;
            if (f.lam < best) {
                best = f.lam;
                best_x = x;
            }
        }
    if (g.exclusion_r > 0.0) {
        for (const auto& ctr : g.centers) {
            for (int a = 0; a < 4096; ++a) {
                double th = a * kTwoPi / 4096;
                Vec2 x{wrap_coord(ctr.x + g.exclusion_r * std::cos(th), g.L1),
                       wrap_coord(ctr.y + g.exclusion_r * std::sin(th), g.L2)};
                double v = fb.lambda_big(x);
                if (v < best) {
                    best = v;
                    best_x = x;
                }
            }
        }
    }
    double step = g.L1 / ng;
    Vec2 cur = best_x;
    for (int round = 0; round < 60 && step > 1e-12; ++round) {
        bool moved = false;
        for (auto [dx, dy] : {std::pair{step, 0.0}, {-step, 0.0}, {0.0, step}, {0.0, -step}}) {
            Vec2 cand{wrap_coord(cur.x + dx, g.L1), wrap_coord(cur.y + dy, g.L2)};
            if (g.in_exclusion(cand)) {
                for (const auto& ctr : g.centers) {
                    double ddx = wrap_diff(cand.x, ctr.x, g.L1), ddy = wrap_diff(cand.y, ctr.y, g.L2);
                    double d = std::sqrt(ddx * ddx + ddy * ddy);
                    if (d < g.exclusion_r && d > 1e-12) {
                        cand = {wrap_coord(ctr.x + ddx * g.exclusion_r / d, g.L1),
                                wrap_coord(ctr.y + ddy * g.exclusion_r / d, g.L2)};
                        break;
                    }
                }
                if (g.in_exclusion(cand)) continue;
            }
            double v = fb.lambda_big(cand);
            if (v < best) {
                best = v;
                cur = cand;
                moved = true;
            }
        }
        if (!moved) step *= 0.5;
    }
    c.lambda_star = best;

    double h1d = g.h1->max_abs_d1(), h2d = g.h2->max_abs_d1();
    c.c_sigma = fb.coef.n_inf * std::max(h2d, h1d);  // |h1|inf = |h2|inf = 1 after normalization
    c.c_b = 0.5 * sqr(fb.coef.n_inf) * dxixi_inf;
    return c;
}

namespace {

void mean_ci(const std::vector<double>& v, double& mean, double& lo, double& hi) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += sqr(x - mean);
    var /= std::max<double>(1.0, static_cast<double>(v.size() - 1));
    double half = 1.96 * std::sqrt(var / static_cast<double>(v.size()));
    lo = mean - half;
    hi = mean + half;
}

// Linear interpolation of a running integral at time t.
double integral_at(const FlowTrajectory& tr, const std::vector<double>& integral, double t) {
    const auto& ts = tr.times;
    if (t <= ts.front()) return integral.front();
    if (t >= ts.back()) return integral.back();
    auto it = std::lower_bound(ts.begin(), ts.end(), t);
    size_t i = static_cast<size_t>(it - ts.begin());
    if (ts[i] == t) return integral[i];
    double w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
    return integral[i - 1] + w * (integral[i] - integral[i - 1]);
}

}  // namespace

OccupationReport occupation_report(const std::vector<FlowTrajectory>& ensemble, const Midpoint& mp,
                                   double theta, double s, const TorusGeometry& geom) {
    if (ensemble.empty()) throw input_error("occupation_report: empty ensemble");
    if (!(theta >= 0.0)) throw param_error("occupation_report: theta must be >= 0");
    if (theta >= mp.vq_radius)
        throw param_error("occupation_report: theta = " + fmt17(theta) +
                          " exceeds the midpoint reach " + fmt17(mp.vq_radius));
    OccupationReport rep;
    rep.q = mp.q;
    rep.type = mp.type;
    rep.theta = theta;
    rep.s = s;
    bool use_x2 = mp.type == MidpointType::zero_cross_crit;
    double qc = use_x2 ? mp.q.y : mp.q.x;
    double L = use_x2 ? geom.L2 : geom.L1;
    for (const auto& tr : ensemble) {
        if (s < 0.0 || s + 1.0 > tr.times.back() + 1e-12)
            throw param_error("occupation_report: window [s, s+1] exceeds the horizon");
        size_t in_band = 0, total = 0;
        for (size_t k = 0; k < tr.times.size(); ++k) {
            double t = tr.times[k];
            if (t < s || t > s + 1.0) continue;
            ++total;
            double coord = use_x2 ? tr.states[k].y : tr.states[k].x;
            if (std::fabs(wrap_diff(coord, qc, L)) <= theta) ++in_band;
        }
        if (total == 0) throw input_error("occupation_report: no samples in window");
        rep.fractions.push_back(static_cast<double>(in_band) / static_cast<double>(total));
    }
    mean_ci(rep.fractions, rep.mean, rep.ci_lo, rep.ci_hi);
    return rep;
}

double occupation_slope(std::vector<OccupationReport>& reports) {
    if (reports.empty()) throw input_error("occupation_slope: no reports");
    double num = 0.0, den = 0.0;
    for (const auto& r : reports) {
        num += r.mean * r.theta;
        den += r.theta * r.theta;
    }
    if (den == 0.0) throw input_error("occupation_slope: all theta zero");
    double k = num / den;
    for (auto& r : reports) r.kappa0_hat = k;
    return k;
}

JAlphaReport j_alpha_report(const std::vector<FlowTrajectory>& ensemble, double s, double alpha,
                            const FieldBundle& fb) {
    if (ensemble.empty()) throw input_error("j_alpha_report: empty ensemble");
    JAlphaReport rep;
    rep.s = s;
    rep.alpha = alpha;
    for (const auto& tr : ensemble) {
        if (s < 0.0 || s + 1.0 > tr.times.back() + 1e-12)
            throw param_error("j_alpha_report: window [s, s+1] exceeds the horizon");
        double di = integral_at(tr, tr.divg_integral, s + 1.0) -
                    integral_at(tr, tr.divg_integral, s);
        rep.J.push_back(std::exp(-di));
    }
    mean_ci(rep.J, rep.mean, rep.ci_lo, rep.ci_hi);
    rep.kappabar_hat = -std::log(rep.mean) / fb.chi_alpha(alpha);
    return rep;
}

SecondOrderTrajectory simulate_second_order(Vec2 x0, Vec2 v0, const BrownianPath& path, double mu,
                                            double eps, const FieldBundle& fb, int record_every) {
    if (!(mu > 0.0) || !(eps > 0.0))
        throw param_error("simulate_second_order: mu and eps must be positive");
    if (record_every < 1) throw param_error("simulate_second_order: record_every must be >= 1");
    double dt = path.dt;
    double limit = std::min(mu / fb.coef.l_max, eps) / 50.0;
    if (dt > limit)
        throw param_error("simulate_second_order: dt = " + fmt17(dt) +
                          " too coarse for the stiff scales; use dt <= " + fmt17(limit));
    OuPath z = ou_path(path, eps);
    SecondOrderTrajectory tr;
    tr.mu = mu;
    tr.eps = eps;
    tr.dt = dt;
    tr.T = path.T;
    tr.path_seed = path.seed;
    tr.record_every = record_every;
    size_t n = path.steps();
    Vec2 x = detail::wrap_point(x0, fb.geom);
    Vec2 v = v0;
    auto record = [&](size_t k) {
        tr.times.push_back(k * dt);
        tr.x.push_back(x);
        tr.v.push_back(v);
    };
    record(0);
    for (size_t k = 0; k < n; ++k) {
        double Hv = fb.H(x);
        double lv = fb.coef.lval(Hv);
        Vec2 sig = fb.coef.rval(Hv) * fb.xi(x);
        double zk = z.values[k];
        double denom = 1.0 + (dt / mu) * lv;
        v = (v + (dt / mu) * zk * sig) * (1.0 / denom);
        x = detail::wrap_point(x + dt * v, fb.geom);
        if (!(std::isfinite(x.x) && std::isfinite(x.y) && std::isfinite(v.x) && std::isfinite(v.y)))
            throw numerical_error("second-order integration diverged at step " + std::to_string(k));
        if ((k + 1) % static_cast<size_t>(record_every) == 0 || k + 1 == n) record(k + 1);
    }
    return tr;
}

}  // namespace cellflow
