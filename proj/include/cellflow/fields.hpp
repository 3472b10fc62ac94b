#pragma once
// Derived fields of the factorized stream function: the rotated gradient xi,
// its self-advection D(xi)xi, the nonnegative contraction profile Lambda, the
// saddle indicator D_H, level-set friction/noise coefficients, and the
// inertial drift g_alpha with its closed-form divergence.

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cellflow/common.hpp"
#include "cellflow/hamiltonian.hpp"

namespace cellflow {

// Scalar coefficient as a function of the level h in [-1, 1].
class CoefficientProfile {
  public:
    virtual ~CoefficientProfile() = default;
    virtual double value(double h) const = 0;
    virtual double d1(double h) const = 0;
    const std::string& description() const { return desc_; }

  protected:
    explicit CoefficientProfile(std::string desc) : desc_(std::move(desc)) {}

  private:
    std::string desc_;
};

using CoefficientPtr = std::shared_ptr<const CoefficientProfile>;

CoefficientPtr make_constant_coefficient(double c);
CoefficientPtr make_affine_coefficient(double a, double b);     // a + b h
CoefficientPtr make_quadratic_coefficient(double a, double b);  // a + b h^2
CoefficientPtr make_callable_coefficient(std::function<double(double)> f,
                                         std::function<double(double)> df, std::string desc);

// Friction l and noise amplitude r, both functions of the level only, with
// the derived ratio n = r/l. Construction validates positivity on [-1, 1].
struct AlignedCoefficients {
    CoefficientPtr l, r;
    double l_min = 0, l_max = 0;  // range of l over [-1, 1]
    double r2_min = 0;            // min of r^2
    double n_inf = 0;             // max |n|
    bool both_constant = false;
    double l0 = 0, n0 = 0;  // cached l and r/l when both are constant

    double lval(double h) const { return l->value(h); }
    double rval(double h) const { return r->value(h); }
    double n(double h) const { return r->value(h) / l->value(h); }
    double n_prime(double h) const {
        double lv = l->value(h);
        return (r->d1(h) * lv - r->value(h) * l->d1(h)) / (lv * lv);
    }

    static AlignedCoefficients make(CoefficientPtr l, CoefficientPtr r);
};

// Everything the integrators and surveys evaluate pointwise, precomputed from
// one sample of each factor profile.
struct FieldLocal {
    double H = 0;
    Vec2 grad;                     // (h1' h2, h1 h2')
    Vec2 xi;                       // (-h1 h2', h1' h2)
    Vec2 dxixi;                    // D(xi) xi
    std::array<double, 4> dxi{};   // row-major Jacobian of xi
    std::array<double, 3> hess{};  // H_11, H_12, H_22
    double lam = 0;                // Lambda >= 0
    double dh = 0;                 // D_H
    double lv = 0, nv = 0;         // l(H), n(H)
    double beta = 0;               // alpha / (2 (l(H) + alpha))
    double divg = 0;               // closed-form div g_alpha
};

struct FieldBundle {
    TorusGeometry geom;
    AlignedCoefficients coef;

    double H(Vec2 x) const { return geom.H(x); }
    Vec2 grad_H(Vec2 x) const;
    std::array<double, 3> hess_H(Vec2 x) const;
    Vec2 xi(Vec2 x) const;
    std::array<double, 4> dxi(Vec2 x) const;
    Vec2 dxi_xi(Vec2 x) const;
    double lambda_big(Vec2 x) const;
    double d_h(Vec2 x) const;              // factorized formula
    double d_h_from_hess(Vec2 x) const;    // -det Hess H
    double nu(Vec2 x) const { return coef.n(H(x)); }
    double beta_alpha(Vec2 x, double alpha) const;
    double theta_alpha(double h, double alpha) const;
    Vec2 g_alpha_reduced(Vec2 x, double alpha) const;
    Vec2 g_alpha_general(Vec2 x, double alpha) const;
    double div_g_alpha_closed(Vec2 x, double alpha) const;
    double div_g_alpha_fd(Vec2 x, double alpha, double step) const;

    // Residuals of the three exact identities:
    //   (i) grad(H) . D(xi)xi - H Lambda,
    //  (ii) div(D(xi)xi) - 2 D_H,
    // (iii) 2 D_H - Lambda - [(h1')^2 - h1 h1''] h2 h2'' - [(h2')^2 - h2 h2''] h1 h1''.
    std::array<double, 3> identity_residuals(Vec2 x) const;

    // alpha n(0)^2 / (l(0) + alpha): the decay-rate scale on the separatrix.
    double chi_alpha(double alpha) const;

    FieldLocal local(Vec2 x, double alpha) const;
};

// Defined here so the integrator loops inline them; one field evaluation per
// step is the whole cost profile of the transport solvers.
inline double FieldBundle::theta_alpha(double h, double alpha) const {
    double lv = coef.lval(h);
    double nv = coef.rval(h) / lv;
    double la = lv + alpha;
    return alpha * coef.l->d1(h) * nv * nv / (2.0 * la * la) - alpha * nv * coef.n_prime(h) / la;
}

inline FieldLocal FieldBundle::local(Vec2 x, double alpha) const {
    ProfileSample s1 = geom.h1->sample(x.x);
    ProfileSample s2 = geom.h2->sample(x.y);
    FieldLocal f;
    f.H = s1.v * s2.v;
    f.grad = {s1.d1 * s2.v, s1.v * s2.d1};
    f.xi = {-s1.v * s2.d1, s1.d1 * s2.v};
    double a1 = s1.v * s1.d2;  // h1 h1''
    double a2 = s2.v * s2.d2;  // h2 h2''
    double q1 = s1.d1 * s1.d1, q2 = s2.d1 * s2.d1;
    f.dxixi = {s1.v * s1.d1 * (q2 - a2), s2.v * s2.d1 * (q1 - a1)};
    f.dxi = {-s1.d1 * s2.d1, -s1.v * s2.d2, s1.d2 * s2.v, s1.d1 * s2.d1};
    f.hess = {s1.d2 * s2.v, s1.d1 * s2.d1, s1.v * s2.d2};
    f.lam = 2.0 * q1 * q2 - q1 * a2 - a1 * q2;
    f.dh = q1 * q2 - a1 * a2;
    if (coef.both_constant) {
        // constant l, r: Theta vanishes and alpha/(l+alpha) = 2 beta, so the
        // level coefficients cost one division in the integrator hot loop
        f.lv = coef.l0;
        f.nv = coef.n0;
        f.beta = alpha / (2.0 * (f.lv + alpha));
        f.divg = 2.0 * f.beta * f.nv * f.nv * f.dh;
    } else {
        f.lv = coef.lval(f.H);
        f.nv = coef.rval(f.H) / f.lv;
        f.beta = alpha / (2.0 * (f.lv + alpha));
        f.divg =
            (alpha / (f.lv + alpha)) * f.nv * f.nv * f.dh - f.H * f.lam * theta_alpha(f.H, alpha);
    }
    return f;
}

FieldBundle make_field_bundle(TorusGeometry geom, AlignedCoefficients coef);

struct MidpointFit {
    Vec2 q;
    MidpointType type;
    double fitted = 0;    // least-squares quadratic coefficient of D_H along the branch
    double analytic = 0;  // (h1'(q1) h2''(q2))^2 or mirror
    double rel_err = 0;
};

// Sign dichotomy of div g_alpha on the separatrix band {|H| <= eta}: within
// theta of a midpoint the divergence is small (size ~ theta), elsewhere on the
// band it is positive (size ~ theta^2).
struct DichotomyReport {
    double alpha = 0, eta = 0, theta = 0;
    uint64_t grid_seed = 0;
    size_t n_band = 0, n_near = 0, n_far = 0;  // samples in E_eta, F, G
    double max_absdiv_near = 0;                // max |div g_alpha| over F
    double min_div_far = 0;                    // min div g_alpha over G
    double c1_hat = 0;                         // max_F |div| / (chi * theta)
    double c2_hat = 0;                         // min_G div / (chi * theta^2)
    double chi = 0;                            // alpha n(0)^2/(l(0)+alpha)
    bool positive_far = false;                 // the dichotomy's sign claim
    std::vector<MidpointFit> midpoint_fits;
};

// Stratified-jittered sampling survey; `samples` is the approximate number of
// grid cells scanned. Requires eta <= eta_ratio * theta^2 and theta below the
// smallest midpoint reach.
DichotomyReport sign_survey(const FieldBundle& fb, double alpha, double eta, double theta,
                            size_t samples, uint64_t grid_seed, double eta_ratio = 0.25);

}  // namespace cellflow
