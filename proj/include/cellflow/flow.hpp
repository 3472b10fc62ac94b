#pragma once
// Characteristic-flow integration. Two schemes share one driving path:
//  - euler_maruyama: plain Ito-form Euler step, cheapest per step; the level
//    H(x) then fluctuates at O(dt) per step around its contracting mean.
//  - contraction_projected: a Heun predictor fixes the new point, the level
//    is updated multiplicatively by the exact contraction factor
//    exp(-avg(beta nu^2 Lambda) dt), and the point is projected onto that
//    level set along grad H. |H| is then nonincreasing and sign-constant by
//    construction, matching the pathwise structure of the continuous flow.

#include <cstdint>
#include <optional>
#include <vector>

#include "cellflow/fields.hpp"
#include "cellflow/stochastics.hpp"

namespace cellflow {

enum class Scheme { euler_maruyama, contraction_projected };

struct FlowOptions {
    Scheme scheme = Scheme::contraction_projected;
    int record_every = 1;
};

struct FlowTrajectory {
    Vec2 x0;
    double alpha = 0, dt = 0, T = 0;
    uint64_t path_seed = 0;  // identity of the driving Brownian path
    bool path_derived = false;
    int record_every = 1;
    double gamma_r = 0;  // carried over from the bundle's geometry
    Scheme scheme = Scheme::contraction_projected;
    long newton_failures = 0;
    std::vector<double> times;
    std::vector<Vec2> states;
    std::vector<double> H_values;
    std::vector<double> contraction_integral;  // running integral of beta nu^2 Lambda
    std::vector<double> divg_integral;         // running integral of div g_alpha
};

// One plain Euler-Maruyama step of dx = sigma_alpha dW + b_alpha dt with
// sigma_alpha = nu xi and b_alpha = (1/2 - beta_alpha) nu^2 D(xi)xi.
Vec2 step_ito(Vec2 x, double dW, double dt, double alpha, const FieldBundle& fb);

namespace detail {

inline Vec2 wrap_point(Vec2 x, const TorusGeometry& g) {
    return {wrap_coord(x.x, g.L1), wrap_coord(x.y, g.L2)};
}

inline Vec2 sigma_of(const FieldLocal& f) { return f.nv * f.xi; }

inline Vec2 drift_of(const FieldLocal& f) {
    return ((0.5 - f.beta) * f.nv * f.nv) * f.dxixi;
}

inline double contraction_rate(const FieldLocal& f) { return f.beta * f.nv * f.nv * f.lam; }

}  // namespace detail

// Drives the flow through all increments, invoking obs(k, t_k, x_k, local_k,
// contraction_integral_k, divg_integral_k) at k = 0..n; both integrals use the
// trapezoid rule on the step grid. obs returns false to stop early.
// newton_failures (nullable) counts steps where the level projection did not
// reach its tolerance.
template <class Obs>
void run_flow_core(Vec2 x0, const double* dW, size_t n, double dt, double alpha,
                   const FieldBundle& fb, Scheme scheme, long* newton_failures, Obs&& obs) {
    if (!(dt > 0.0)) throw param_error("flow: dt must be positive");
    if (!(alpha > 0.0)) throw param_error("flow: alpha must be positive");
    Vec2 x = detail::wrap_point(x0, fb.geom);
    FieldLocal f = fb.local(x, alpha);
    double ic = 0.0, id = 0.0;
    if (!obs(size_t{0}, 0.0, x, f, ic, id)) return;
    for (size_t k = 0; k < n; ++k) {
        FieldLocal fn;
        Vec2 xn;
        if (scheme == Scheme::euler_maruyama) {
            xn = detail::wrap_point(x + detail::sigma_of(f) * dW[k] + detail::drift_of(f) * dt,
                                    fb.geom);
            fn = fb.local(xn, alpha);
        } else {
            Vec2 s0 = detail::sigma_of(f), b0 = detail::drift_of(f);
            Vec2 xs = detail::wrap_point(x + s0 * dW[k] + b0 * dt, fb.geom);
            FieldLocal fs = fb.local(xs, alpha);
            Vec2 xh = detail::wrap_point(
                x + 0.5 * dW[k] * (s0 + detail::sigma_of(fs)) + 0.5 * dt * (b0 + detail::drift_of(fs)),
                fb.geom);
            fn = fb.local(xh, alpha);
            double h_target =
                f.H * std::exp(-0.5 * dt * (detail::contraction_rate(f) + detail::contraction_rate(fn)));
            xn = xh;
            for (int it = 0; it < 4; ++it) {
                double defect = fn.H - h_target;
                if (std::fabs(defect) <= 1e-13) break;
                double g2 = fn.grad.norm2();
                if (g2 < 1e-14) break;  // flat spot: fields vanish, defect is tiny
                xn = detail::wrap_point(xn - (defect / g2) * fn.grad, fb.geom);
                fn = fb.local(xn, alpha);
            }
            if (newton_failures && std::fabs(fn.H - h_target) > 1e-10) ++*newton_failures;
        }
        if (!(std::isfinite(xn.x) && std::isfinite(xn.y)))
            throw numerical_error("flow integration diverged at step " + std::to_string(k));
        ic += 0.5 * dt * (detail::contraction_rate(f) + detail::contraction_rate(fn));
        id += 0.5 * dt * (f.divg + fn.divg);
        x = xn;
        f = fn;
        if (!obs(k + 1, (k + 1) * dt, x, f, ic, id)) return;
    }
}

FlowTrajectory simulate_flow(Vec2 x0, const BrownianPath& path, double alpha,
                             const FieldBundle& fb, FlowOptions opt = {});

// Max over the grid of |H_k - H_0 exp(-I_k)| / max(|H_0| exp(-I_k), 1e-12).
double check_H_identity(const FlowTrajectory& traj);

// First recorded time with |H| <= eta; eta must lie in (0, gamma_r).
std::optional<double> entry_time(const FlowTrajectory& traj, double eta);

// Streaming variant that stops integrating at the entry event.
std::optional<double> measure_entry_time(Vec2 x0, const BrownianPath& path, double alpha,
                                         const FieldBundle& fb, double eta, Scheme scheme);

struct FlowConstants {
    double exclusion_r = 0;
    double gamma_r = 0;      // max |H| outside the exclusion balls
    double lambda_star = 0;  // min Lambda outside the exclusion balls
    double m_star_sq = 0;    // min over levels of n(h)^2
    double l_star = 0;       // max friction
    double c_sigma = 0;      // per-component bound on the noise coefficient
    double c_b = 0;          // per-component bound on the drift

    double beta_star(double alpha) const { return alpha / (2.0 * (l_star + alpha)); }
    // Time after which every start outside the balls has |H| <= eta.
    double entry_bound(double eta, double alpha) const;
};

FlowConstants measure_flow_constants(const FieldBundle& fb);

struct OccupationReport {
    Vec2 q;
    MidpointType type = MidpointType::zero_cross_crit;
    double theta = 0, s = 0;
    std::vector<double> fractions;  // one per trajectory, each in [0, 1]
    double mean = 0, ci_lo = 0, ci_hi = 0;
    double kappa0_hat = 0;  // filled by occupation_slope across theta values
};

// Fraction of the window [s, s+1] each trajectory spends with the midpoint's
// transverse coordinate (x2 for zero-cross-crit, x1 for crit-cross-zero)
// within theta of the midpoint, wrapped.
OccupationReport occupation_report(const std::vector<FlowTrajectory>& ensemble,
                                   const Midpoint& mp, double theta, double s,
                                   const TorusGeometry& geom);

// Least-squares slope through the origin of mean occupation versus theta;
// also stamped into each report's kappa0_hat.
double occupation_slope(std::vector<OccupationReport>& reports);

struct JAlphaReport {
    double s = 0, alpha = 0;
    std::vector<double> J;  // exp(-integral of div g over [s, s+1]) per path
    double mean = 0, ci_lo = 0, ci_hi = 0;
    double kappabar_hat = 0;  // -log(mean) / chi_alpha
};

JAlphaReport j_alpha_report(const std::vector<FlowTrajectory>& ensemble, double s, double alpha,
                            const FieldBundle& fb);

struct SecondOrderTrajectory {
    double mu = 0, eps = 0, dt = 0, T = 0;
    uint64_t path_seed = 0;
    int record_every = 1;
    std::vector<double> times;
    std::vector<Vec2> x, v;
};

// Pre-limit inertial system: dx = v dt, mu dv = -l(H(x)) v dt + r(H(x)) xi(x) z dt,
// with z the colored noise built from `path` at correlation time eps. The v
// update treats the friction term implicitly (mu/l can be tiny).
SecondOrderTrajectory simulate_second_order(Vec2 x0, Vec2 v0, const BrownianPath& path, double mu,
                                            double eps, const FieldBundle& fb,
                                            int record_every = 1);

}  // namespace cellflow
