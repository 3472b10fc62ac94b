#include "cellflow/density.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cellflow/parallel.hpp"
#include "cellflow/rng.hpp"

namespace cellflow {

namespace {

double wrapped_dist(Vec2 a, Vec2 b, double l1, double l2) {
    const double dx = wrap_diff(a.x, b.x, l1), dy = wrap_diff(a.y, b.y, l2);
    return std::sqrt(dx * dx + dy * dy);
}

// exp(y) for the tiny per-step divergence increments; cheaper than std::exp
// and accurate to ~|y|^4/24 relative, which stays below 3e-11 for |y| <= 5e-3
double texp(double y) {
    if (std::fabs(y) > 5e-3) return std::exp(y);
    return 1.0 + y * (1.0 + y * (0.5 + y * (1.0 / 6.0)));
}

// Euler-Maruyama transport sweep, step-outer over a block of nodes sharing one
// noise path. Per-node run_flow_core walks a single chain of dependent field
// evaluations, so every step waits on the previous one's sincos latency;
// sweeping all nodes per step hands the pipeline independent chains to
// overlap, which is worth about 3x on dense transport grids. The arithmetic
// (step, wrap, trapezoids, texp compounding) mirrors run_flow_core plus the
// observer in the per-node path below, term for term, so both paths produce
// identical output; the unit tests hold them to that.
// snap(k, xs, ys, C, E, A) fires after every step, k = 0..n.
template <class Snap>
void sweep_nodes_em(const Vec2* nodes, size_t nn, const double* dW, size_t n, double dt,
                    double alpha, const FieldBundle& fb, Snap&& snap) {
    const double l1 = fb.geom.L1, l2 = fb.geom.L2;
    std::vector<double> xs(nn), ys(nn), sgx(nn), sgy(nn), drx(nn), dry(nn), dvg(nn);
    std::vector<double> c_acc(nn, 0.0), e_acc(nn, 1.0), a_acc(nn, 0.0);
    for (size_t j = 0; j < nn; ++j) {
        const Vec2 x{wrap_coord(nodes[j].x, l1), wrap_coord(nodes[j].y, l2)};
        const FieldLocal f = fb.local(x, alpha);
        xs[j] = x.x;
        ys[j] = x.y;
        sgx[j] = f.nv * f.xi.x;
        sgy[j] = f.nv * f.xi.y;
        const double cb = (0.5 - f.beta) * f.nv * f.nv;
        drx[j] = cb * f.dxixi.x;
        dry[j] = cb * f.dxixi.y;
        dvg[j] = f.divg;
    }
    snap(size_t{0}, xs, ys, c_acc, e_acc, a_acc);
    for (size_t k = 0; k < n; ++k) {
        const double dw = dW[k];
        bool ok = true;
        for (size_t j = 0; j < nn; ++j) {
            const Vec2 xn{wrap_coord(xs[j] + sgx[j] * dw + drx[j] * dt, l1),
                          wrap_coord(ys[j] + sgy[j] * dw + dry[j] * dt, l2)};
            ok = ok && std::isfinite(xn.x) && std::isfinite(xn.y);
            const FieldLocal f = fb.local(xn, alpha);
            const double cn = c_acc[j] + 0.5 * dt * (dvg[j] + f.divg);
            const double en = e_acc[j] * texp(cn - c_acc[j]);
            a_acc[j] += 0.5 * dt * (e_acc[j] + en);
            e_acc[j] = en;
            c_acc[j] = cn;
            xs[j] = xn.x;
            ys[j] = xn.y;
            sgx[j] = f.nv * f.xi.x;
            sgy[j] = f.nv * f.xi.y;
            const double cb = (0.5 - f.beta) * f.nv * f.nv;
            drx[j] = cb * f.dxixi.x;
            dry[j] = cb * f.dxixi.y;
            dvg[j] = f.divg;
        }
        if (!ok) throw numerical_error("transport sweep diverged at step " + std::to_string(k));
        snap(k + 1, xs, ys, c_acc, e_acc, a_acc);
    }
}

void check_vanishes_on_balls(const InitialDensity& f0, const TorusGeometry& g) {
    if (g.exclusion_r <= 0) return;
    for (const Vec2& c : g.centers) {
        for (double frac : {0.0, 0.35, 0.7, 0.95}) {
            const double rho = frac * g.exclusion_r;
            for (int a = 0; a < 12; ++a) {
                const double th = kTwoPi * a / 12.0;
                Vec2 p{wrap_coord(c.x + rho * std::cos(th), g.L1),
                       wrap_coord(c.y + rho * std::sin(th), g.L2)};
                if (f0.f(p) > 1e-12)
                    throw input_error("initial density is positive inside the exclusion ball at (" +
                                      fmt17(c.x) + ", " + fmt17(c.y) + ")");
                if (frac == 0.0) break;
            }
        }
    }
}

struct NodeGrid {
    std::vector<Vec2> nodes;
    std::vector<double> vals;
    bool all_active = true;
    double cell_area = 0;
};

NodeGrid build_nodes(const InitialDensity& f0, int grid_size, const TorusGeometry& g) {
    if (grid_size < 32) throw param_error("transport grid needs at least 32 cells per axis");
    check_vanishes_on_balls(f0, g);
    NodeGrid out;
    out.cell_area = (g.L1 / grid_size) * (g.L2 / grid_size);
    out.nodes.reserve(size_t(grid_size) * size_t(grid_size));
    for (int i = 0; i < grid_size; ++i)
        for (int j = 0; j < grid_size; ++j) {
            Vec2 x{(i + 0.5) * g.L1 / grid_size, (j + 0.5) * g.L2 / grid_size};
            double v = f0.f(x);
            if (!(v >= 0)) throw input_error("initial density is negative at (" + fmt17(x.x) +
                                             ", " + fmt17(x.y) + ")");
            if (g.exclusion_r > 0 && g.in_exclusion(x)) v = 0.0;  // quadrature sees 0 in the balls
            if (v > 0) {
                out.nodes.push_back(x);
                out.vals.push_back(v);
            } else {
                out.all_active = false;
            }
        }
    if (out.nodes.empty()) throw input_error("initial density vanishes at every quadrature node");
    return out;
}

size_t count_steps(const BrownianPath& path, double t_final) {
    if (!(t_final > 0)) throw param_error("final time must be positive");
    const size_t n = size_t(std::ceil(t_final / path.dt - 1e-9));
    if (n > path.steps())
        throw param_error("path covers " + fmt17(path.T) + " time units but " + fmt17(t_final) +
                          " were requested");
    return n;
}

int auto_output_every(size_t n, int requested) {
    if (requested > 0) return requested;
    return int(std::max<size_t>(1, n / 200));
}

}  // namespace

InitialDensity density_uniform(const TorusGeometry& geom) {
    const double v = 1.0 / (geom.exclusion_r > 0 ? geom.dr_area : geom.area);
    const TorusGeometry* g = &geom;
    InitialDensity d;
    d.description = "uniform";
    d.f = [g, v](Vec2 x) -> double {
        if (g->exclusion_r > 0 && g->in_exclusion(x)) return 0.0;
        return v;
    };
    return d;
}

InitialDensity density_bump(const TorusGeometry& geom, Vec2 center, double radius) {
    if (!(radius > 0)) throw param_error("bump radius must be positive");
    center = {wrap_coord(center.x, geom.L1), wrap_coord(center.y, geom.L2)};
    if (geom.exclusion_r > 0) {
        const double gap = geom.dist_to_nearest_center(center);
        if (gap < radius + geom.exclusion_r)
            throw input_error("bump at (" + fmt17(center.x) + ", " + fmt17(center.y) +
                              ") reaches into an exclusion ball; nearest center is " +
                              fmt17(gap) + " away");
    }
    const double l1 = geom.L1, l2 = geom.L2;
    const double amp = 4.0 / (kPi * radius * radius);  // unit total mass
    InitialDensity d;
    d.description = "bump";
    d.f = [center, radius, amp, l1, l2](Vec2 x) -> double {
        const double r = wrapped_dist(x, center, l1, l2);
        if (r >= radius) return 0.0;
        const double u = 1.0 - sqr(r / radius);
        return amp * u * u * u;
    };
    return d;
}

InitialDensity density_bumps(const TorusGeometry& geom,
                             const std::vector<std::pair<Vec2, double>>& spots) {
    if (spots.empty()) throw param_error("bump mixture needs at least one bump");
    std::vector<InitialDensity> parts;
    parts.reserve(spots.size());
    for (const auto& s : spots) parts.push_back(density_bump(geom, s.first, s.second));
    const double w = 1.0 / double(parts.size());
    InitialDensity d;
    d.description = "bumps";
    d.f = [parts = std::move(parts), w](Vec2 x) -> double {
        double s = 0;
        for (const auto& p : parts) s += p.f(x);
        return w * s;
    };
    return d;
}

CharacteristicSolution solve_characteristics(const InitialDensity& f0, int grid_size,
                                             const BrownianPath& path, double alpha, double r0,
                                             double t_final, const FieldBundle& fb,
                                             int output_every, Scheme scheme, int threads) {
    if (r0 < 0) throw param_error("interaction strength must be >= 0");
    NodeGrid ng = build_nodes(f0, grid_size, fb.geom);
    const size_t n = count_steps(path, t_final);
    const int oe = auto_output_every(n, output_every);

    CharacteristicSolution sol;
    sol.grid_n = grid_size;
    sol.dt = path.dt;
    sol.t_final = double(n) * path.dt;
    sol.alpha = alpha;
    sol.r0 = r0;
    sol.path_seed = path.seed;
    sol.scheme = scheme;
    sol.cell_area = ng.cell_area;
    sol.area = fb.geom.area;
    sol.nodes = std::move(ng.nodes);
    sol.f0 = std::move(ng.vals);
    sol.all_nodes_active = ng.all_active;

    for (size_t k = 0; k <= n; ++k)
        if (k % size_t(oe) == 0 || k == n) sol.times.push_back(double(k) * path.dt);
    const size_t nt = sol.times.size(), nn = sol.nodes.size();
    sol.C.assign(nt, std::vector<double>(nn, 0.0));
    sol.E.assign(nt, std::vector<double>(nn, 1.0));
    sol.A.assign(nt, std::vector<double>(nn, 0.0));
    sol.final_states.assign(nn, Vec2{});

    const double* dW = path.increments.data();
    const double dt = path.dt;
    if (scheme == Scheme::euler_maruyama) {
        const size_t chunks = std::min(nn, size_t(std::max(1, threads)));
        parallel_for(chunks, threads, [&](size_t c) {
            const size_t lo = nn * c / chunks, hi = nn * (c + 1) / chunks;
            if (lo == hi) return;
            size_t slot = 0;
            sweep_nodes_em(
                sol.nodes.data() + lo, hi - lo, dW, n, dt, alpha, fb,
                [&](size_t k, const std::vector<double>& bx, const std::vector<double>& by,
                    const std::vector<double>& bc, const std::vector<double>& be,
                    const std::vector<double>& ba) {
                    if (k % size_t(oe) == 0 || k == n) {
                        for (size_t j = lo; j < hi; ++j) {
                            sol.C[slot][j] = bc[j - lo];
                            sol.E[slot][j] = be[j - lo];
                            sol.A[slot][j] = ba[j - lo];
                        }
                        ++slot;
                    }
                    if (k == n)
                        for (size_t j = lo; j < hi; ++j)
                            sol.final_states[j] = {bx[j - lo], by[j - lo]};
                });
        });
        return sol;
    }
    parallel_for(nn, threads, [&](size_t j) {
        double prev_id = 0, e_acc = 1, a_acc = 0;
        size_t slot = 0;
        run_flow_core(sol.nodes[j], dW, n, dt, alpha, fb, scheme, nullptr,
                      [&](size_t k, double, Vec2 x, const FieldLocal&, double, double id) {
                          if (k > 0) {
                              const double en = e_acc * texp(id - prev_id);
                              a_acc += 0.5 * dt * (e_acc + en);
                              e_acc = en;
                              prev_id = id;
                          }
                          if (k % size_t(oe) == 0 || k == n) {
                              sol.C[slot][j] = id;
                              sol.E[slot][j] = e_acc;
                              sol.A[slot][j] = a_acc;
                              ++slot;
                          }
                          if (k == n) sol.final_states[j] = x;
                          return true;
                      });
    });
    return sol;
}

MassSeries mass_timeseries(const CharacteristicSolution& sol) {
    MassSeries out;
    out.times = sol.times;
    std::vector<double> vals(sol.times.size(), 0.0);
    for (size_t t = 0; t < sol.times.size(); ++t) {
        double s = 0;
        for (size_t j = 0; j < sol.nodes.size(); ++j) s += sol.mass_node(t, j);
        vals[t] = sol.cell_area * s;
    }
    out.per_seed.push_back(std::move(vals));
    out.finalize_stats();
    return out;
}

std::vector<double> volume_series(const CharacteristicSolution& sol) {
    std::vector<double> out(sol.times.size(), 0.0);
    for (size_t t = 0; t < sol.times.size(); ++t) {
        double s = 0;
        // det = exp(-C); summing exp(+C) would Jensen-drift above the area
        for (size_t j = 0; j < sol.nodes.size(); ++j) s += 1.0 / sol.E[t][j];
        out[t] = sol.cell_area * s;
    }
    return out;
}

MassSeries expected_mass(const InitialDensity& f0, double alpha, double r0, double t_final,
                         const std::vector<uint64_t>& seeds, int grid_size,
                         const FieldBundle& fb, double dt, int output_every, Scheme scheme,
                         int threads) {
    if (seeds.size() < 30)
        throw param_error("mean-mass estimate needs at least 30 seeds, got " +
                          std::to_string(seeds.size()));
    if (!(dt > 0)) throw param_error("dt must be positive");
    if (r0 < 0) throw param_error("interaction strength must be >= 0");
    NodeGrid ng = build_nodes(f0, grid_size, fb.geom);
    const size_t n = size_t(std::ceil(t_final / dt - 1e-9));
    if (n == 0) throw param_error("final time must exceed one step");
    const int oe = auto_output_every(n, output_every);

    MassSeries out;
    for (size_t k = 0; k <= n; ++k)
        if (k % size_t(oe) == 0 || k == n) out.times.push_back(double(k) * dt);
    out.per_seed.assign(seeds.size(), std::vector<double>(out.times.size(), 0.0));

    parallel_for(seeds.size(), threads, [&](size_t s) {
        const BrownianPath path = brownian_path(seeds[s], t_final, dt);
        const double* dW = path.increments.data();
        std::vector<double>& row = out.per_seed[s];
        if (scheme == Scheme::euler_maruyama) {
            size_t slot = 0;
            sweep_nodes_em(ng.nodes.data(), ng.nodes.size(), dW, n, dt, alpha, fb,
                           [&](size_t k, const std::vector<double>&, const std::vector<double>&,
                               const std::vector<double>&, const std::vector<double>&,
                               const std::vector<double>& ba) {
                               if (k % size_t(oe) == 0 || k == n) {
                                   for (size_t j = 0; j < ng.nodes.size(); ++j)
                                       row[slot] += ng.vals[j] / (1.0 + r0 * ng.vals[j] * ba[j]);
                                   ++slot;
                               }
                           });
        } else {
            for (size_t j = 0; j < ng.nodes.size(); ++j) {
                const double f0j = ng.vals[j];
                double prev_id = 0, e_acc = 1, a_acc = 0;
                size_t slot = 0;
                run_flow_core(ng.nodes[j], dW, n, dt, alpha, fb, scheme, nullptr,
                              [&](size_t k, double, Vec2, const FieldLocal&, double, double id) {
                                  if (k > 0) {
                                      const double en = e_acc * texp(id - prev_id);
                                      a_acc += 0.5 * dt * (e_acc + en);
                                      e_acc = en;
                                      prev_id = id;
                                  }
                                  if (k % size_t(oe) == 0 || k == n) {
                                      row[slot] += f0j / (1.0 + r0 * f0j * a_acc);
                                      ++slot;
                                  }
                                  return true;
                              });
            }
        }
        for (double& v : row) v *= ng.cell_area;
    });
    out.finalize_stats();
    return out;
}

double theoretical_rate_factor(double alpha, const AlignedCoefficients& coef) {
    if (!(alpha > 0)) throw param_error("alpha must be positive");
    const double l0 = coef.lval(0.0), r0 = coef.rval(0.0);
    return alpha * r0 * r0 / (l0 * l0 * (l0 + alpha));
}

RateCurve rate_curve(const InitialDensity& f0, const std::vector<double>& alphas, double r0,
                     double t_final, const std::vector<uint64_t>& seeds, int grid_size,
                     const FieldBundle& fb, double dt, double fit_a, double fit_b,
                     int output_every, Scheme scheme, int threads) {
    if (alphas.size() < 2) throw param_error("rate curve needs at least two alpha values");
    RateCurve rc;
    for (double a : alphas) {
        MassSeries ms =
            expected_mass(f0, a, r0, t_final, seeds, grid_size, fb, dt, output_every, scheme,
                          threads);
        RatePoint pt;
        pt.alpha = a;
        pt.fit = fit_decay(ms, fit_a, fit_b);
        pt.factor = theoretical_rate_factor(a, fb.coef);
        pt.kappabar = pt.fit.rate / pt.factor;
        rc.points.push_back(pt);
    }
    std::sort(rc.points.begin(), rc.points.end(),
              [](const RatePoint& a, const RatePoint& b) { return a.alpha < b.alpha; });
    rc.nondecreasing = true;
    for (size_t i = 0; i + 1 < rc.points.size(); ++i) {
        const auto& a = rc.points[i];
        const auto& b = rc.points[i + 1];
        const double slack = 0.5 * ((a.fit.hi - a.fit.lo) + (b.fit.hi - b.fit.lo));
        if (b.fit.rate < a.fit.rate - slack) rc.nondecreasing = false;
    }
    rc.ratio_extremes = rc.points.back().fit.rate / rc.points.front().fit.rate;
    double kmin = rc.points[0].kappabar, kmax = kmin;
    for (const auto& p : rc.points) {
        kmin = std::min(kmin, p.kappabar);
        kmax = std::max(kmax, p.kappabar);
    }
    rc.kappabar_spread = kmax / kmin;
    return rc;
}

JacobianCheck jacobian_fd_check(const InitialDensity& f0, int grid_size,
                                const BrownianPath& path, double alpha, double t_check,
                                const FieldBundle& fb, size_t n_nodes, double fd_step,
                                uint64_t pick_seed, Scheme scheme) {
    if (!(fd_step >= 1e-6 && fd_step <= 1e-2))
        throw param_error("difference step must lie in [1e-6, 1e-2]");
    NodeGrid ng = build_nodes(f0, grid_size, fb.geom);
    const size_t n = count_steps(path, t_check);
    const double* dW = path.increments.data();
    const double dt = path.dt;

    Rng rng(stream_split(pick_seed, 0));
    n_nodes = std::min(n_nodes, ng.nodes.size());
    JacobianCheck jc;
    jc.n_nodes = n_nodes;
    jc.fd_step = fd_step;
    jc.t_check = double(n) * dt;

    const auto endpoint = [&](Vec2 x0) {
        Vec2 last{};
        run_flow_core(x0, dW, n, dt, alpha, fb, scheme, nullptr,
                      [&](size_t k, double, Vec2 x, const FieldLocal&, double, double) {
                          if (k == n) last = x;
                          return true;
                      });
        return last;
    };

    double sum = 0;
    for (size_t t = 0; t < n_nodes; ++t) {
        const size_t j = size_t(rng.u01() * double(ng.nodes.size())) % ng.nodes.size();
        const Vec2 x0 = ng.nodes[j];
        double c_final = 0;
        run_flow_core(x0, dW, n, dt, alpha, fb, scheme, nullptr,
                      [&](size_t k, double, Vec2, const FieldLocal&, double, double id) {
                          if (k == n) c_final = id;
                          return true;
                      });
        const Vec2 xp1 = endpoint({x0.x + fd_step, x0.y}), xm1 = endpoint({x0.x - fd_step, x0.y});
        const Vec2 xp2 = endpoint({x0.x, x0.y + fd_step}), xm2 = endpoint({x0.x, x0.y - fd_step});
        const double l1 = fb.geom.L1, l2 = fb.geom.L2;
        const double j11 = wrap_diff(xp1.x, xm1.x, l1) / (2 * fd_step);
        const double j21 = wrap_diff(xp1.y, xm1.y, l2) / (2 * fd_step);
        const double j12 = wrap_diff(xp2.x, xm2.x, l1) / (2 * fd_step);
        const double j22 = wrap_diff(xp2.y, xm2.y, l2) / (2 * fd_step);
        const double det_fd = std::fabs(j11 * j22 - j12 * j21);
        const double det_cf = std::exp(-c_final);
        const double rel = std::fabs(det_fd - det_cf) / det_cf;
        jc.max_rel_err = std::max(jc.max_rel_err, rel);
        sum += rel;
    }
    jc.mean_rel_err = n_nodes > 0 ? sum / double(n_nodes) : 0.0;
    return jc;
}

double riccati_crosscheck(const InitialDensity& f0, int grid_size, const BrownianPath& path,
                          double alpha, double r0, double t_final, const FieldBundle& fb,
                          size_t n_nodes, uint64_t pick_seed, Scheme scheme) {
    NodeGrid ng = build_nodes(f0, grid_size, fb.geom);
    const size_t n = count_steps(path, t_final);
    const double* dW = path.increments.data();
    const double dt = path.dt;
    const int oe = auto_output_every(n, 0);

    Rng rng(stream_split(pick_seed, 0));
    n_nodes = std::min(n_nodes, ng.nodes.size());
    double worst = 0;
    for (size_t t = 0; t < n_nodes; ++t) {
        const size_t j = size_t(rng.u01() * double(ng.nodes.size())) % ng.nodes.size();
        const double f0j = ng.vals[j];
        double prev_id = 0, e_acc = 1, a_acc = 0;
        double h_ode = f0j, prev_divg = 0;
        run_flow_core(ng.nodes[j], dW, n, dt, alpha, fb, scheme, nullptr,
                      [&](size_t k, double, Vec2, const FieldLocal& f, double, double id) {
                          if (k == 0) {
                              prev_divg = f.divg;
                              return true;
                          }
                          const double en = e_acc * texp(id - prev_id);
                          a_acc += 0.5 * dt * (e_acc + en);
                          e_acc = en;
                          prev_id = id;
                          const double r1 = prev_divg * h_ode - r0 * h_ode * h_ode;
                          const double hp = h_ode + dt * r1;
                          const double r2 = f.divg * hp - r0 * hp * hp;
                          h_ode += 0.5 * dt * (r1 + r2);
                          prev_divg = f.divg;
                          if (k % size_t(oe) == 0 || k == n) {
                              const double h_cf = f0j * e_acc / (1.0 + r0 * f0j * a_acc);
                              worst = std::max(worst, std::fabs(h_ode - h_cf) / h_cf);
                          }
                          return true;
                      });
    }
    return worst;
}

LossCheck pde_loss_check(const MassSeries& single, double r0, double area, double slack) {
    if (single.mean.empty()) throw input_error("loss check needs a finalized mass series");
    LossCheck lc;
    lc.ok = true;
    lc.worst_margin = -1e300;
    for (size_t i = 0; i + 1 < single.times.size(); ++i) {
        const double dtm = single.times[i + 1] - single.times[i];
        if (!(dtm > 0)) continue;
        const double lhs = (single.mean[i + 1] - single.mean[i]) / dtm;
        const double mid = 0.5 * (single.mean[i] + single.mean[i + 1]);
        const double rhs = -(r0 / area) * mid * mid * (1.0 - slack);
        const double margin = lhs - rhs;
        lc.worst_margin = std::max(lc.worst_margin, margin);
        if (margin > 1e-9 + 1e-6 * std::fabs(rhs)) lc.ok = false;
    }
    return lc;
}

}  // namespace cellflow
