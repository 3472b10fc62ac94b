#include "cellflow/fields.hpp"

#include <algorithm>
#include <cmath>

#include "cellflow/rng.hpp"

namespace cellflow {

namespace {

class ConstantCoefficient final : public CoefficientProfile {
  public:
    explicit ConstantCoefficient(double c)
        : CoefficientProfile("const " + fmt17(c)), c_(c) {}
    double value(double) const override { return c_; }
    double d1(double) const override { return 0.0; }

  private:
    double c_;
};

class AffineCoefficient final : public CoefficientProfile {
  public:
    AffineCoefficient(double a, double b)
        : CoefficientProfile("affine " + fmt17(a) + " + " + fmt17(b) + "*h"), a_(a), b_(b) {}
    double value(double h) const override { return a_ + b_ * h; }
    double d1(double) const override { return b_; }

  private:
    double a_, b_;
};

class QuadraticCoefficient final : public CoefficientProfile {
  public:
    QuadraticCoefficient(double a, double b)
        : CoefficientProfile("quadratic " + fmt17(a) + " + " + fmt17(b) + "*h^2"), a_(a), b_(b) {}
    double value(double h) const override { return a_ + b_ * h * h; }
    double d1(double h) const override { return 2.0 * b_ * h; }

  private:
    double a_, b_;
};

class CallableCoefficient final : public CoefficientProfile {
  public:
    CallableCoefficient(std::function<double(double)> f, std::function<double(double)> df,
                        std::string desc)
        : CoefficientProfile(std::move(desc)), f_(std::move(f)), df_(std::move(df)) {
        if (!f_ || !df_)
            throw param_error("callable coefficient requires value and derivative evaluators");
    }
    double value(double h) const override { return f_(h); }
    double d1(double h) const override { return df_(h); }

  private:
    std::function<double(double)> f_, df_;
};

}  // namespace

CoefficientPtr make_constant_coefficient(double c) {
    return std::make_shared<ConstantCoefficient>(c);
}
CoefficientPtr make_affine_coefficient(double a, double b) {
    return std::make_shared<AffineCoefficient>(a, b);
}
CoefficientPtr make_quadratic_coefficient(double a, double b) {
    return std::make_shared<QuadraticCoefficient>(a, b);
}
CoefficientPtr make_callable_coefficient(std::function<double(double)> f,
                                         std::function<double(double)> df, std::string desc) {
    return std::make_shared<CallableCoefficient>(std::move(f), std::move(df), std::move(desc));
}

AlignedCoefficients AlignedCoefficients::make(CoefficientPtr l, CoefficientPtr r) {
    if (!l || !r) throw param_error("aligned coefficients: missing profile");
    AlignedCoefficients c;
    c.l = std::move(l);
    c.r = std::move(r);
    const int n = 8192;
    c.l_min = 1e300;
    c.l_max = -1e300;
    c.r2_min = 1e300;
    c.n_inf = 0.0;
    for (int i = 0; i <= n; ++i) {
        double h = -1.0 + 2.0 * i / n;
        double lv = c.l->value(h), rv = c.r->value(h);
        require_finite(lv, "friction coefficient");
        require_finite(rv, "noise coefficient");
        c.l_min = std::min(c.l_min, lv);
        c.l_max = std::max(c.l_max, lv);
        c.r2_min = std::min(c.r2_min, rv * rv);
        c.n_inf = std::max(c.n_inf, std::fabs(rv / lv));
    }
    if (!(c.l_min > 0.0))
        throw input_error("aligned coefficients: friction l must stay positive on [-1,1], min = " +
                          fmt17(c.l_min));
    if (!(c.r2_min > 0.0))
        throw input_error("aligned coefficients: noise r^2 must stay positive on [-1,1]");
    c.both_constant = c.l->d1(0.3) == 0.0 && c.l->d1(-0.7) == 0.0 && c.r->d1(0.3) == 0.0 &&
                      c.r->d1(-0.7) == 0.0 && c.l_min == c.l_max;
    if (c.both_constant) {
        c.l0 = c.l->value(0.0);
        c.n0 = c.r->value(0.0) / c.l0;
    }
    return c;
}


Vec2 FieldBundle::grad_H(Vec2 x) const {
    ProfileSample s1 = geom.h1->sample(x.x);
    ProfileSample s2 = geom.h2->sample(x.y);
    return {s1.d1 * s2.v, s1.v * s2.d1};
}

std::array<double, 3> FieldBundle::hess_H(Vec2 x) const {
    ProfileSample s1 = geom.h1->sample(x.x);
    ProfileSample s2 = geom.h2->sample(x.y);
    return {s1.d2 * s2.v, s1.d1 * s2.d1, s1.v * s2.d2};
}

Vec2 FieldBundle::xi(Vec2 x) const {
    ProfileSample s1 = geom.h1->sample(x.x);
    ProfileSample s2 = geom.h2->sample(x.y);
    return {-s1.v * s2.d1, s1.d1 * s2.v};
}

std::array<double, 4> FieldBundle::dxi(Vec2 x) const {
    ProfileSample s1 = geom.h1->sample(x.x);
    ProfileSample s2 = geom.h2->sample(x.y);
    return {-s1.d1 * s2.d1, -s1.v * s2.d2, s1.d2 * s2.v, s1.d1 * s2.d1};
}

Vec2 FieldBundle::dxi_xi(Vec2 x) const { return local(x, 1.0).dxixi; }

double FieldBundle::lambda_big(Vec2 x) const { return local(x, 1.0).lam; }

double FieldBundle::d_h(Vec2 x) const { return local(x, 1.0).dh; }

double FieldBundle::d_h_from_hess(Vec2 x) const {
    auto h = hess_H(x);
    return -(h[0] * h[2] - h[1] * h[1]);
}

double FieldBundle::beta_alpha(Vec2 x, double alpha) const {
    if (!(alpha > 0.0)) throw param_error("beta_alpha: alpha must be positive");
    return alpha / (2.0 * (coef.lval(H(x)) + alpha));
}


Vec2 FieldBundle::g_alpha_reduced(Vec2 x, double alpha) const {
    if (!(alpha > 0.0)) throw param_error("g_alpha: alpha must be positive");
    FieldLocal f = local(x, alpha);
    return f.beta * f.nv * f.nv * f.dxixi;
}

Vec2 FieldBundle::g_alpha_general(Vec2 x, double alpha) const {
    if (!(alpha > 0.0)) throw param_error("g_alpha: alpha must be positive");
    // Literal evaluation of g = alpha/(2(lambda+alpha)) * Gamma with
    // Gamma = D(lambda^{-1} sigma)(lambda^{-1} sigma) + (sigma sigma^t) grad(lambda)/lambda^3,
    // sigma = rho xi, all x-derivatives via the chain rule through H.
    ProfileSample s1 = geom.h1->sample(x.x);
    ProfileSample s2 = geom.h2->sample(x.y);
    double Hv = s1.v * s2.v;
    Vec2 grad{s1.d1 * s2.v, s1.v * s2.d1};
    Vec2 xiv{-s1.v * s2.d1, s1.d1 * s2.v};
    double dxi_m[4] = {-s1.d1 * s2.d1, -s1.v * s2.d2, s1.d2 * s2.v, s1.d1 * s2.d1};
    double lv = coef.lval(Hv);
    double nv = coef.rval(Hv) / lv;
    double npr = coef.n_prime(Hv);
    // u = lambda^{-1} sigma = n(H) xi;  Du_ij = n'(H) dH_j xi_i + n(H) dxi_ij
    double du[4] = {npr * grad.x * xiv.x + nv * dxi_m[0], npr * grad.y * xiv.x + nv * dxi_m[1],
                    npr * grad.x * xiv.y + nv * dxi_m[2], npr * grad.y * xiv.y + nv * dxi_m[3]};
    Vec2 u = nv * xiv;
    Vec2 term1{du[0] * u.x + du[1] * u.y, du[2] * u.x + du[3] * u.y};
    double rho = coef.rval(Hv);
    Vec2 grad_lambda = coef.l->d1(Hv) * grad;
    double xi_dot = xiv.dot(grad_lambda);
    Vec2 term2 = (rho * rho * xi_dot / (lv * lv * lv)) * xiv;
    Vec2 gamma = term1 + term2;
    return (alpha / (2.0 * (lv + alpha))) * gamma;
}

double FieldBundle::div_g_alpha_closed(Vec2 x, double alpha) const {
    if (!(alpha > 0.0)) throw param_error("div_g_alpha: alpha must be positive");
    return local(x, alpha).divg;
}

double FieldBundle::div_g_alpha_fd(Vec2 x, double alpha, double step) const {
    if (!(step >= 1e-6 && step <= 1e-3))
        throw param_error("div_g_alpha_fd: step must lie in [1e-6, 1e-3]");
    Vec2 gx1 = g_alpha_reduced({x.x + step, x.y}, alpha);
    Vec2 gx0 = g_alpha_reduced({x.x - step, x.y}, alpha);
    Vec2 gy1 = g_alpha_reduced({x.x, x.y + step}, alpha);
    Vec2 gy0 = g_alpha_reduced({x.x, x.y - step}, alpha);
    return (gx1.x - gx0.x + gy1.y - gy0.y) / (2.0 * step);
}

std::array<double, 3> FieldBundle::identity_residuals(Vec2 x) const {
    ProfileSample s1 = geom.h1->sample(x.x);
    ProfileSample s2 = geom.h2->sample(x.y);
    double Hv = s1.v * s2.v;
    double a1 = s1.v * s1.d2, a2 = s2.v * s2.d2;
    double q1 = s1.d1 * s1.d1, q2 = s2.d1 * s2.d1;
    Vec2 grad{s1.d1 * s2.v, s1.v * s2.d1};
    Vec2 dxixi{s1.v * s1.d1 * (q2 - a2), s2.v * s2.d1 * (q1 - a1)};
    double lam = 2.0 * q1 * q2 - q1 * a2 - a1 * q2;
    double dh = q1 * q2 - a1 * a2;
    double r1 = grad.dot(dxixi) - Hv * lam;
    // div(Dxi xi) componentwise: d/dx1 of h1 h1'[(h2')^2 - h2 h2''] plus mirror.
    double div_dxixi = (q1 + a1) * (q2 - a2) + (q2 + a2) * (q1 - a1);
    double r2 = div_dxixi - 2.0 * dh;
    double r3 = 2.0 * dh - lam - (q1 - a1) * a2 - (q2 - a2) * a1;
    return {r1, r2, r3};
}

double FieldBundle::chi_alpha(double alpha) const {
    if (!(alpha > 0.0)) throw param_error("chi_alpha: alpha must be positive");
    double n0 = coef.n(0.0);
    return alpha * n0 * n0 / (coef.lval(0.0) + alpha);
}

FieldBundle make_field_bundle(TorusGeometry geom, AlignedCoefficients coef) {
    FieldBundle fb{std::move(geom), std::move(coef)};
    return fb;
}

DichotomyReport sign_survey(const FieldBundle& fb, double alpha, double eta, double theta,
                            size_t samples, uint64_t grid_seed, double eta_ratio) {
    if (!(alpha > 0.0)) throw param_error("sign_survey: alpha must be positive");
    if (!(eta > 0.0) || !(theta > 0.0)) throw param_error("sign_survey: eta, theta must be positive");
    if (eta > eta_ratio * theta * theta)
        throw param_error("sign_survey: requires eta <= " + fmt17(eta_ratio) +
                          " * theta^2; got eta = " + fmt17(eta));
    double min_reach = 1e300;
    for (const auto& mp : fb.geom.midpoints) min_reach = std::min(min_reach, mp.vq_radius);
    if (theta >= min_reach)
        throw param_error("sign_survey: theta = " + fmt17(theta) +
                          " reaches past a midpoint neighborhood (limit " + fmt17(min_reach) + ")");

    DichotomyReport rep;
    rep.alpha = alpha;
    rep.eta = eta;
    rep.theta = theta;
    rep.grid_seed = grid_seed;
    rep.chi = fb.chi_alpha(alpha);

    auto dist_to_midpoint = [&fb](Vec2 x) {
        double best = 1e300;
        for (const auto& mp : fb.geom.midpoints) {
            double dx = wrap_diff(x.x, mp.q.x, fb.geom.L1);
            double dy = wrap_diff(x.y, mp.q.y, fb.geom.L2);
            best = std::min(best, dx * dx + dy * dy);
        }
        return std::sqrt(best);
    };

    size_t n = static_cast<size_t>(std::ceil(std::sqrt(static_cast<double>(samples))));
    if (n < 8) n = 8;
    Rng rng(stream_split(grid_seed, 0));
    rep.max_absdiv_near = 0.0;
    rep.min_div_far = 1e300;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            Vec2 x{(i + rng.u01()) * fb.geom.L1 / n, (j + rng.u01()) * fb.geom.L2 / n};
            if (std::fabs(fb.H(x)) > eta) continue;
            ++rep.n_band;
            double dg = fb.div_g_alpha_closed(x, alpha);
            if (dist_to_midpoint(x) <= theta) {
                ++rep.n_near;
                rep.max_absdiv_near = std::max(rep.max_absdiv_near, std::fabs(dg));
            } else {
                ++rep.n_far;
                rep.min_div_far = std::min(rep.min_div_far, dg);
            }
        }
    }
    if (rep.n_far == 0)
        throw numerical_error("sign_survey: no band samples beyond theta of midpoints; "
                              "theta too large or sampling too coarse");
    rep.positive_far = rep.min_div_far > 0.0;
    rep.c1_hat = rep.max_absdiv_near / (rep.chi * theta);
    rep.c2_hat = rep.min_div_far / (rep.chi * theta * theta);

    // Quadratic growth of D_H away from each midpoint along its branch.
    for (const auto& mp : fb.geom.midpoints) {
        MidpointFit fit;
        fit.q = mp.q;
        fit.type = mp.type;
        bool along_x2 = mp.type == MidpointType::zero_cross_crit;
        double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;  // least squares on basis {t^2, 1}
        const int m = 41;
        for (int k = 0; k < m; ++k) {
            double t = (2.0 * k / (m - 1) - 1.0) * theta;
            Vec2 x = along_x2 ? Vec2{mp.q.x, mp.q.y + t} : Vec2{mp.q.x + t, mp.q.y};
            double v = fb.d_h(x);
            double t2 = t * t;
            s11 += t2 * t2;
            s12 += t2;
            s22 += 1.0;
            b1 += t2 * v;
            b2 += v;
        }
        double det = s11 * s22 - s12 * s12;
        fit.fitted = (b1 * s22 - b2 * s12) / det;
        double d1z = along_x2 ? fb.geom.h1->d1(mp.q.x) : fb.geom.h2->d1(mp.q.y);
        double d2c = along_x2 ? fb.geom.h2->d2(mp.q.y) : fb.geom.h1->d2(mp.q.x);
        fit.analytic = sqr(d1z * d2c);
        fit.rel_err = std::fabs(fit.fitted - fit.analytic) / std::fabs(fit.analytic);
        rep.midpoint_fits.push_back(fit);
    }
    return rep;
}

}  // namespace cellflow
