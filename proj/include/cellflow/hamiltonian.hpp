#pragma once
// Factorized stream functions on the torus: H(x) = h1(x1) h2(x2) with each
// factor a smooth periodic profile. This header carries the profile type, its
// structural verification (simple zeros, nondegenerate critical points,
// sign-opposed curvature, interlacing), and the derived cell geometry.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cellflow/common.hpp"

namespace cellflow {

struct ProfileSample {
    double v = 0.0, d1 = 0.0, d2 = 0.0;
};

// One periodic factor h, normalized after finalize() so max |h| = 1.
class FactorProfile {
  public:
    virtual ~FactorProfile() = default;

    double period() const { return L_; }
    double value(double x) const { return scale_ * raw_value(x); }
    double d1(double x) const { return scale_ * raw_d1(x); }
    double d2(double x) const { return scale_ * raw_d2(x); }
    double d3(double x) const { return scale_ * raw_d3(x); }
    ProfileSample sample(double x) const {
        ProfileSample s = raw_sample(x);
        return {scale_ * s.v, scale_ * s.d1, scale_ * s.d2};
    }

    const std::vector<double>& zeros() const { return zeros_; }
    const std::vector<double>& critical_points() const { return crits_; }
    // Critical points where h itself vanishes: touching zeros, fatal for the
    // simple-zero condition.
    const std::vector<double>& degenerate_zeros() const { return degen_zeros_; }

    double normalization() const { return scale_; }
    double max_abs_d1() const { return max_abs_d1_; }
    const std::string& description() const { return desc_; }
    bool finalized() const { return finalized_; }

    // Locates zeros and critical points, then rescales so max |h| = 1.
    // Factories call this; hand-constructed profiles must, too.
    void finalize();

  protected:
    FactorProfile(double L, std::string desc);
    virtual double raw_value(double x) const = 0;
    virtual double raw_d1(double x) const = 0;
    virtual double raw_d2(double x) const = 0;
    virtual double raw_d3(double x) const = 0;
    virtual ProfileSample raw_sample(double x) const {
        return {raw_value(x), raw_d1(x), raw_d2(x)};
    }

  private:
    double L_;
    std::string desc_;
    double scale_ = 1.0;
    double max_abs_d1_ = 0.0;
    bool finalized_ = false;
    std::vector<double> zeros_, crits_, degen_zeros_;
};

using ProfilePtr = std::shared_ptr<const FactorProfile>;

// Finite cosine/sine series; all factory-made profiles reduce to this form,
// so derivatives are exact.
class FourierProfile : public FactorProfile {
  public:
    // ca[k-1], sa[k-1] multiply cos/sin of mode k; a0 adds a0/2.
    FourierProfile(double a0, std::vector<double> ca, std::vector<double> sa, double L,
                   std::string desc);

    double raw_value(double x) const override;
    double raw_d1(double x) const override;
    double raw_d2(double x) const override;
    double raw_d3(double x) const override;
    ProfileSample raw_sample(double x) const override;

  private:
    double a0_;
    std::vector<double> ca_, sa_;
    double omega_;
};

// Profile defined by user-supplied callables; missing derivatives fall back
// to central differences. Used mostly to feed the verifier deliberately
// broken inputs.
class CallableProfile : public FactorProfile {
  public:
    CallableProfile(std::function<double(double)> f, std::function<double(double)> df,
                    std::function<double(double)> d2f, double L, std::string desc);

    double raw_value(double x) const override { return f_(x); }
    double raw_d1(double x) const override;
    double raw_d2(double x) const override;
    double raw_d3(double x) const override;

  private:
    std::function<double(double)> f_, df_, d2f_;
};

// h(x) = sin(k x + phase), period 2 pi; k a nonzero integer.
ProfilePtr make_trig_profile(int k, double phase);

// h(x) = (1 + a cos x) sin x on [0, 2 pi); the reference amplitude is 1/4.
// Always returns the profile; condition failures show up in verify_conditions.
ProfilePtr make_perturbed_trig_profile(double a);

// Normalized eigenfunction number `mode_index` (eigenvalues sorted ascending,
// index 0 the constant mode) of -u'' + V u = lambda u with period L,
// discretized by periodic spectral collocation on `grid_size` points
// (a power of two, at least 256). Rejects modes with lambda <= max V, since
// W = lambda - V > 0 is what makes the curvature condition possible.
ProfilePtr make_sturm_liouville_profile(const std::function<double(double)>& V, int mode_index,
                                        int grid_size = 256, double L = kTwoPi);

// Roots of f on one period: scan `scan_points` intervals for sign changes,
// bisect, polish with Newton using df to tolerance tol.
std::vector<double> find_roots_periodic(const std::function<double(double)>& f,
                                        const std::function<double(double)>& df, double L,
                                        double tol = 1e-12, int scan_points = 4096);

std::vector<double> find_zeros(const FactorProfile& p, double tol = 1e-12);
std::vector<double> find_critical_points(const FactorProfile& p, double tol = 1e-12);

struct ConditionReport {
    bool simple_zeros = false;         // |h'| bounded away from zero at every zero
    bool nondegenerate_crits = false;  // |h''| bounded away from zero at every crit
    bool opposed_curvature = false;    // h h'' <= 0 everywhere (sampled), strict at crits
    bool interlaced = false;           // zeros and crits alternate, equal even counts
    int wave_number = 0;               // N with |Z| = |M| = 2N (0 if counts broken)
    double min_abs_d1_at_zeros = 0.0;
    double worst_zero = 0.0;  // location achieving it
    double min_abs_d2_at_crits = 0.0;
    double worst_crit = 0.0;
    double max_h_times_d2 = 0.0;  // over the sample grid; > tolerance = violation
    double worst_h3_x = 0.0;
    size_t n_zeros = 0, n_crits = 0;
    std::vector<std::string> failures;
    bool pass() const {
        return simple_zeros && nondegenerate_crits && opposed_curvature && interlaced;
    }
};

ConditionReport verify_conditions(const FactorProfile& p);

enum class MidpointType { zero_cross_crit, crit_cross_zero };  // (z1, m2) vs (m1, z2)

struct Midpoint {
    Vec2 q;
    MidpointType type;
    // Half-reach of the tangential neighborhood: distance from q to the
    // nearest corner along its separatrix branch.
    double vq_radius = 0.0;
};

struct Cell {
    double x1_lo = 0, x1_hi = 0, x2_lo = 0, x2_hi = 0;  // hi may exceed L (wrap)
    Vec2 center;
    int sign = 0;  // sign of H at the center
};

struct TorusGeometry {
    ProfilePtr h1, h2;
    double L1 = 0, L2 = 0, area = 0;
    double exclusion_r = 0;   // radius of the removed balls around centers
    double gamma_r = 0;       // max |H| outside those balls
    double dr_area = 0;       // area of the torus minus the balls
    double min_center_gap = 0;  // smallest distance from a center to the zero set
    std::vector<Cell> cells;
    std::vector<Vec2> centers;   // nondegenerate extrema of H
    std::vector<Vec2> corners;   // saddle points (zero x zero)
    std::vector<Midpoint> midpoints;

    double H(Vec2 x) const { return h1->value(x.x) * h2->value(x.y); }
    double dist_to_nearest_center(Vec2 x) const;
    bool in_exclusion(Vec2 x, double r) const { return dist_to_nearest_center(x) < r; }
    bool in_exclusion(Vec2 x) const { return in_exclusion(x, exclusion_r); }
    const Cell& cell_containing(Vec2 x) const;
};

// Assembles the cell structure of H = h1 h2 and measures gamma_r. Both
// profiles must pass verify_conditions; the exclusion balls must be pairwise
// disjoint and must not swallow any midpoint.
TorusGeometry build_geometry(ProfilePtr h1, ProfilePtr h2, double exclusion_r);

}  // namespace cellflow
