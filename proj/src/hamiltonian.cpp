#include "cellflow/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cellflow/fastmath.hpp"

namespace cellflow {

namespace {

std::string fmt_pt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

std::string fmt_pt(Vec2 p) { return "(" + fmt_pt(p.x) + ", " + fmt_pt(p.y) + ")"; }

// Golden-section maximization of f on [a, b]; f unimodal near the max.
double golden_max(const std::function<double(double)>& f, double a, double b, int iters = 60) {
    const double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters; ++i) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    return f1 > f2 ? x1 : x2;
}

// Max of |g| over one period: dense scan plus golden polish around the best
// few samples.
double scan_max_abs(const std::function<double(double)>& g, double L, int n = 16384) {
    double best = 0.0;
    int best_i = 0;
    for (int i = 0; i < n; ++i) {
        double v = std::fabs(g(i * L / n));
        if (v > best) {
            best = v;
            best_i = i;
        }
    }
    auto af = [&](double x) { return std::fabs(g(x)); };
    double lo = (best_i - 1) * L / n, hi = (best_i + 1) * L / n;
    double xm = golden_max(af, lo, hi);
    return std::max(best, af(xm));
}

}  // namespace

FactorProfile::FactorProfile(double L, std::string desc) : L_(L), desc_(std::move(desc)) {
    if (!(L > 0.0)) throw param_error("profile period must be positive");
}

void FactorProfile::finalize() {
    auto rv = [this](double x) { return raw_value(x); };
    auto rd1 = [this](double x) { return raw_d1(x); };
    auto rd2 = [this](double x) { return raw_d2(x); };
    double raw_max = scan_max_abs(rv, L_);
    if (!(raw_max > 0.0)) throw input_error("profile is identically zero: " + desc_);
    scale_ = 1.0 / raw_max;
    zeros_ = find_roots_periodic(rv, rd1, L_);
    crits_ = find_roots_periodic(rd1, rd2, L_);
    degen_zeros_.clear();
    for (double m : crits_)
        if (std::fabs(scale_ * raw_value(m)) <= 1e-9) degen_zeros_.push_back(m);
    max_abs_d1_ = scale_ * scan_max_abs(rd1, L_);
    finalized_ = true;
}

std::vector<double> find_roots_periodic(const std::function<double(double)>& f,
                                        const std::function<double(double)>& df, double L,
                                        double tol, int scan_points) {
    if (!(L > 0.0)) throw param_error("root scan needs a positive period");
    if (!(tol > 0.0) || tol > 1e-6) throw param_error("root tolerance must be in (0, 1e-6]");
    if (scan_points < 16) throw param_error("root scan needs at least 16 points");
    std::vector<double> roots;
    std::vector<double> vals(scan_points + 1);
    for (int i = 0; i <= scan_points; ++i) vals[i] = f(i * L / scan_points);
    for (int i = 0; i < scan_points; ++i) {
        double a = i * L / scan_points, b = (i + 1) * L / scan_points;
        double fa = vals[i], fb = vals[i + 1];
        if (fa == 0.0) {
            roots.push_back(a);
            continue;
        }
        if (fa * fb >= 0.0) continue;
        for (int it = 0; it < 40; ++it) {
            double m = 0.5 * (a + b);
            double fm = f(m);
            if (fm == 0.0) {
                a = b = m;
                break;
            }
            if (fa * fm < 0.0) {
                b = m;
                fb = fm;
            } else {
                a = m;
                fa = fm;
            }
        }
        double x = 0.5 * (a + b);
        for (int it = 0; it < 8; ++it) {
            double d = df(x);
            if (std::fabs(d) < 1e-14) break;
            double step = f(x) / d;
            if (!std::isfinite(step) || std::fabs(step) > (b - a) + tol) break;
            x -= step;
            if (std::fabs(step) <= tol) break;
        }
        roots.push_back(x);
    }
    for (auto& r : roots) r = wrap_coord(r, L);
    std::sort(roots.begin(), roots.end());
    std::vector<double> out;
    for (double r : roots) {
        if (!out.empty() && r - out.back() < 1e-9) continue;
        out.push_back(r);
    }
    while (out.size() > 1 && out.front() + L - out.back() < 1e-9) out.pop_back();
    return out;
}

std::vector<double> find_zeros(const FactorProfile& p, double tol) {
    return find_roots_periodic([&p](double x) { return p.value(x); },
                               [&p](double x) { return p.d1(x); }, p.period(), tol);
}

std::vector<double> find_critical_points(const FactorProfile& p, double tol) {
    return find_roots_periodic([&p](double x) { return p.d1(x); },
                               [&p](double x) { return p.d2(x); }, p.period(), tol);
}

FourierProfile::FourierProfile(double a0, std::vector<double> ca, std::vector<double> sa, double L,
                               std::string desc)
    : FactorProfile(L, std::move(desc)), a0_(a0), ca_(std::move(ca)), sa_(std::move(sa)),
      omega_(kTwoPi / L) {
    if (ca_.size() != sa_.size()) throw param_error("fourier profile: coefficient lists differ");
    if (ca_.empty()) throw param_error("fourier profile: needs at least one mode");
}

ProfileSample FourierProfile::raw_sample(double x) const {
    auto [s1, c1] = fastmath::sincos(omega_ * x);
    double sk = s1, ck = c1;
    double v = 0.5 * a0_, d1 = 0.0, d2 = 0.0;
    for (size_t k = 0; k < ca_.size(); ++k) {
        double w = (k + 1) * omega_;
        v += ca_[k] * ck + sa_[k] * sk;
        d1 += w * (sa_[k] * ck - ca_[k] * sk);
        d2 -= w * w * (ca_[k] * ck + sa_[k] * sk);
        double cn = ck * c1 - sk * s1;
        sk = sk * c1 + ck * s1;
        ck = cn;
    }
    return {v, d1, d2};
}

double FourierProfile::raw_value(double x) const { return raw_sample(x).v; }
double FourierProfile::raw_d1(double x) const { return raw_sample(x).d1; }
double FourierProfile::raw_d2(double x) const { return raw_sample(x).d2; }

double FourierProfile::raw_d3(double x) const {
    auto [s1, c1] = fastmath::sincos(omega_ * x);
    double sk = s1, ck = c1, d3 = 0.0;
    for (size_t k = 0; k < ca_.size(); ++k) {
        double w = (k + 1) * omega_;
        d3 += w * w * w * (ca_[k] * sk - sa_[k] * ck);
        double cn = ck * c1 - sk * s1;
        sk = sk * c1 + ck * s1;
        ck = cn;
    }
    return d3;
}

CallableProfile::CallableProfile(std::function<double(double)> f, std::function<double(double)> df,
                                 std::function<double(double)> d2f, double L, std::string desc)
    : FactorProfile(L, std::move(desc)), f_(std::move(f)), df_(std::move(df)),
      d2f_(std::move(d2f)) {
    if (!f_) throw param_error("callable profile: value function required");
}

double CallableProfile::raw_d1(double x) const {
    if (df_) return df_(x);
    const double h = 1e-5;
    return (f_(x + h) - f_(x - h)) / (2 * h);
}

double CallableProfile::raw_d2(double x) const {
    if (d2f_) return d2f_(x);
    if (df_) {
        const double h = 1e-5;
        return (df_(x + h) - df_(x - h)) / (2 * h);
    }
    const double h = 1e-4;
    return (f_(x + h) - 2 * f_(x) + f_(x - h)) / (h * h);
}

double CallableProfile::raw_d3(double x) const {
    const double h = 1e-3;
    return (raw_d2(x + h) - raw_d2(x - h)) / (2 * h);
}

ProfilePtr make_trig_profile(int k, double phase) {
    if (k == 0) throw param_error("trig profile: wave number must be nonzero");
    int ak = std::abs(k);
    std::vector<double> ca(ak, 0.0), sa(ak, 0.0);
    // sin(kx + p) = cos(p) sin(kx) + sin(p) cos(kx); negative k flips the sine.
    double sgn = k > 0 ? 1.0 : -1.0;
    ca[ak - 1] = std::sin(phase);
    sa[ak - 1] = sgn * std::cos(phase);
    char desc[64];
    std::snprintf(desc, sizeof desc, "sin(%dx%+.6g)", k, phase);
    auto p = std::make_shared<FourierProfile>(0.0, std::move(ca), std::move(sa), kTwoPi, desc);
    p->finalize();
    return p;
}

ProfilePtr make_perturbed_trig_profile(double a) {
    if (!std::isfinite(a)) throw param_error("perturbed trig profile: amplitude must be finite");
    // (1 + a cos x) sin x = sin x + (a/2) sin 2x
    char desc[64];
    std::snprintf(desc, sizeof desc, "(1%+.6g*cos x)*sin x", a);
    auto p = std::make_shared<FourierProfile>(0.0, std::vector<double>{0.0, 0.0},
                                              std::vector<double>{1.0, 0.5 * a}, kTwoPi, desc);
    p->finalize();
    return p;
}

namespace {

// Cyclic Jacobi diagonalization of a dense symmetric matrix. A is row-major
// n*n and is destroyed; V receives orthonormal eigenvectors in its columns.
void jacobi_eigen(std::vector<double>& A, int n, std::vector<double>& w, std::vector<double>& V) {
    V.assign(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) V[static_cast<size_t>(i) * n + i] = 1.0;
    auto at = [&A, n](int i, int j) -> double& { return A[static_cast<size_t>(i) * n + j]; };
    double norm = 0.0;
    for (double v : A) norm += v * v;
    norm = std::sqrt(norm);
    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += 2 * at(p, q) * at(p, q);
        if (std::sqrt(off) < 1e-13 * norm) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = at(p, q);
                if (std::fabs(apq) < 1e-300) continue;
                double theta = (at(q, q) - at(p, p)) / (2 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1));
                double c = 1.0 / std::sqrt(t * t + 1), s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    size_t kp = static_cast<size_t>(k) * n + p, kq = static_cast<size_t>(k) * n + q;
                    double vkp = V[kp], vkq = V[kq];
                    V[kp] = c * vkp - s * vkq;
                    V[kq] = s * vkp + c * vkq;
                }
            }
        }
    }
    w.resize(n);
    for (int i = 0; i < n; ++i) w[i] = at(i, i);
}

}  // namespace

ProfilePtr make_sturm_liouville_profile(const std::function<double(double)>& V, int mode_index,
                                        int grid_size, double L) {
    if (mode_index < 1) throw param_error("sturm-liouville profile: mode index must be >= 1");
    if (grid_size < 256 || (grid_size & (grid_size - 1)) != 0)
        throw param_error("sturm-liouville profile: grid size must be a power of 2, at least 256");
    if (!(L > 0.0)) throw param_error("sturm-liouville profile: period must be positive");
    const int n = grid_size;
    const double h = kTwoPi / n;          // reference-grid spacing
    const double map2 = sqr(kTwoPi / L);  // d2/dx2 = map2 * d2/dtheta2
    std::vector<double> A(static_cast<size_t>(n) * n);
    double vmax = -1e300;
    for (int i = 0; i < n; ++i) {
        double vi = V(i * L / n);
        require_finite(vi, "sturm-liouville potential");
        vmax = std::max(vmax, vi);
        for (int j = 0; j < n; ++j) {
            double d2;
            if (i == j) {
                d2 = -kPi * kPi / (3 * h * h) - 1.0 / 6.0;
            } else {
                int d = i - j;
                double sgn = (d & 1) ? 1.0 : -1.0;
                d2 = sgn / (2 * sqr(std::sin(0.5 * h * d)));
            }
            A[static_cast<size_t>(i) * n + j] = -map2 * d2;
        }
        A[static_cast<size_t>(i) * n + i] += vi;
    }
    std::vector<double> w, evec;
    jacobi_eigen(A, n, w, evec);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&w](int a, int b) { return w[a] < w[b]; });
    if (mode_index >= n) throw param_error("sturm-liouville profile: mode index beyond grid");
    int col = order[mode_index];
    double lambda = w[col];
    if (!(lambda > vmax))
        throw param_error("sturm-liouville profile: eigenvalue " + fmt_pt(lambda) +
                          " does not exceed max V = " + fmt_pt(vmax) +
                          "; W = lambda - V must stay positive for the curvature condition");
    std::vector<double> u(n);
    double umax = 0.0;
    for (int i = 0; i < n; ++i) {
        u[i] = evec[static_cast<size_t>(i) * n + col];
        umax = std::max(umax, std::fabs(u[i]));
    }
    // Project onto a truncated Fourier series; the eigenfunction is smooth, so
    // coefficients decay fast and the cutoff loses nothing measurable.
    int kmax = n / 3;
    std::vector<double> ca, sa;
    double a0 = 0.0;
    for (int i = 0; i < n; ++i) a0 += u[i];
    a0 *= 2.0 / n;
    int keep = 0;
    for (int k = 1; k <= kmax; ++k) {
        double ak = 0.0, bk = 0.0;
        for (int j = 0; j < n; ++j) {
            double th = kTwoPi * k * j / n;
            ak += u[j] * std::cos(th);
            bk += u[j] * std::sin(th);
        }
        ca.push_back(ak * 2.0 / n);
        sa.push_back(bk * 2.0 / n);
        if (std::max(std::fabs(ca.back()), std::fabs(sa.back())) > 1e-12 * umax) keep = k;
    }
    if (keep == 0) throw numerical_error("sturm-liouville profile: eigenvector has no ac modes");
    ca.resize(keep);
    sa.resize(keep);
    char desc[96];
    std::snprintf(desc, sizeof desc, "sturm-liouville mode %d, lambda=%.10g", mode_index, lambda);
    auto p = std::make_shared<FourierProfile>(a0, std::move(ca), std::move(sa), L, desc);
    p->finalize();
    return p;
}

ConditionReport verify_conditions(const FactorProfile& p) {
    if (!p.finalized()) throw input_error("verify_conditions: profile not finalized");
    ConditionReport rep;
    const auto& Z = p.zeros();
    const auto& M = p.critical_points();
    rep.n_zeros = Z.size();
    rep.n_crits = M.size();
    const double c_lower = 1e-6;   // nondegeneracy floor for |h'| and |h''|
    const double tol_h3 = 1e-10;

    rep.min_abs_d1_at_zeros = 1e300;
    for (double z : Z) {
        double d = std::fabs(p.d1(z));
        if (d < rep.min_abs_d1_at_zeros) {
            rep.min_abs_d1_at_zeros = d;
            rep.worst_zero = z;
        }
    }
    rep.simple_zeros = !Z.empty() && rep.min_abs_d1_at_zeros >= c_lower;
    for (double x : p.degenerate_zeros()) {
        rep.simple_zeros = false;
        rep.failures.push_back("touching zero (h = h' = 0) at x = " + fmt_pt(x));
    }
    if (!Z.empty() && rep.min_abs_d1_at_zeros < c_lower)
        rep.failures.push_back("zero at x = " + fmt_pt(rep.worst_zero) + " has |h'| = " +
                               fmt_pt(rep.min_abs_d1_at_zeros));
    if (Z.empty()) rep.failures.push_back("profile has no zeros");

    rep.min_abs_d2_at_crits = 1e300;
    bool crit_sign_ok = true;
    for (double m : M) {
        double d2 = p.d2(m);
        if (std::fabs(d2) < rep.min_abs_d2_at_crits) {
            rep.min_abs_d2_at_crits = std::fabs(d2);
            rep.worst_crit = m;
        }
        if (!(p.value(m) * d2 < 0.0)) {
            crit_sign_ok = false;
            rep.failures.push_back("critical point at x = " + fmt_pt(m) +
                                   " lacks opposing curvature");
        }
    }
    rep.nondegenerate_crits = !M.empty() && rep.min_abs_d2_at_crits >= c_lower;
    if (!M.empty() && rep.min_abs_d2_at_crits < c_lower)
        rep.failures.push_back("critical point at x = " + fmt_pt(rep.worst_crit) +
                               " has |h''| = " + fmt_pt(rep.min_abs_d2_at_crits));
    if (M.empty()) rep.failures.push_back("profile has no critical points");

    const int n_samp = 8192;
    rep.max_h_times_d2 = -1e300;
    for (int i = 0; i < n_samp; ++i) {
        double x = i * p.period() / n_samp;
        double v = p.value(x) * p.d2(x);
        if (v > rep.max_h_times_d2) {
            rep.max_h_times_d2 = v;
            rep.worst_h3_x = x;
        }
    }
    rep.opposed_curvature = rep.max_h_times_d2 <= tol_h3 && crit_sign_ok;
    if (rep.max_h_times_d2 > tol_h3)
        rep.failures.push_back("h*h'' = " + fmt_pt(rep.max_h_times_d2) + " > 0 near x = " +
                               fmt_pt(rep.worst_h3_x));

    bool counts_ok = !Z.empty() && Z.size() == M.size() && Z.size() % 2 == 0;
    bool alternate = counts_ok;
    if (counts_ok) {
        struct Ev {
            double x;
            int kind;
        };
        std::vector<Ev> ev;
        for (double z : Z) ev.push_back({z, 0});
        for (double m : M) ev.push_back({m, 1});
        std::sort(ev.begin(), ev.end(), [](const Ev& a, const Ev& b) { return a.x < b.x; });
        for (size_t i = 0; i < ev.size(); ++i)
            if (ev[i].kind == ev[(i + 1) % ev.size()].kind) alternate = false;
    }
    rep.interlaced = counts_ok && alternate;
    if (!counts_ok)
        rep.failures.push_back("zero/critical point counts are not matching even numbers (" +
                               std::to_string(Z.size()) + " vs " + std::to_string(M.size()) + ")");
    else if (!alternate)
        rep.failures.push_back("zeros and critical points do not interlace");
    rep.wave_number = counts_ok ? static_cast<int>(Z.size() / 2) : 0;
    return rep;
}

double TorusGeometry::dist_to_nearest_center(Vec2 x) const {
    double best = 1e300;
    for (const auto& c : centers) {
        double dx = wrap_diff(x.x, c.x, L1), dy = wrap_diff(x.y, c.y, L2);
        best = std::min(best, dx * dx + dy * dy);
    }
    return std::sqrt(best);
}

namespace {

// Index of the half-open interval [pts[i], pts[i+1]) containing x, cyclically.
size_t interval_index(const std::vector<double>& pts, double x, double L) {
    x = wrap_coord(x, L);
    auto it = std::upper_bound(pts.begin(), pts.end(), x);
    if (it == pts.begin() || it == pts.end()) return pts.size() - 1;  // wrap interval
    return static_cast<size_t>(it - pts.begin()) - 1;
}

}  // namespace

const Cell& TorusGeometry::cell_containing(Vec2 x) const {
    const auto& z1 = h1->zeros();
    const auto& z2 = h2->zeros();
    size_t i1 = interval_index(z1, x.x, L1);
    size_t i2 = interval_index(z2, x.y, L2);
    return cells[i1 * z2.size() + i2];
}

TorusGeometry build_geometry(ProfilePtr h1, ProfilePtr h2, double exclusion_r) {
    if (!h1 || !h2) throw param_error("build_geometry: missing profile");
    if (!(exclusion_r >= 0.0)) throw param_error("build_geometry: exclusion radius must be >= 0");
    for (const auto* p : {h1.get(), h2.get()}) {
        ConditionReport rep = verify_conditions(*p);
        if (!rep.pass()) {
            std::string msg = "build_geometry: profile '" + p->description() + "' fails conditions:";
            for (const auto& f : rep.failures) msg += " " + f + ";";
            throw input_error(msg);
        }
    }
    TorusGeometry g;
    g.h1 = h1;
    g.h2 = h2;
    g.L1 = h1->period();
    g.L2 = h2->period();
    g.area = g.L1 * g.L2;
    g.exclusion_r = exclusion_r;

    const auto& z1 = h1->zeros();
    const auto& z2 = h2->zeros();
    const auto& m1 = h1->critical_points();
    const auto& m2 = h2->critical_points();
    size_t n1 = z1.size(), n2 = z2.size();

    // The crit sitting inside interval [z[i], z[i+1]) of its factor, cyclically.
    auto crit_in = [](const std::vector<double>& zs, const std::vector<double>& ms, size_t i,
                      double L) {
        double lo = zs[i];
        double hi = (i + 1 < zs.size()) ? zs[i + 1] : zs[0] + L;
        for (double m : ms) {
            if (m > lo && m < hi) return m;
            if (m + L > lo && m + L < hi) return m + L;
        }
        throw numerical_error("build_geometry: no critical point between consecutive zeros");
    };

    for (size_t i = 0; i < n1; ++i) {
        double lo1 = z1[i], hi1 = (i + 1 < n1) ? z1[i + 1] : z1[0] + g.L1;
        double c1 = crit_in(z1, m1, i, g.L1);
        for (size_t j = 0; j < n2; ++j) {
            double lo2 = z2[j], hi2 = (j + 1 < n2) ? z2[j + 1] : z2[0] + g.L2;
            double c2 = crit_in(z2, m2, j, g.L2);
            Cell cell;
            cell.x1_lo = lo1;
            cell.x1_hi = hi1;
            cell.x2_lo = lo2;
            cell.x2_hi = hi2;
            cell.center = {wrap_coord(c1, g.L1), wrap_coord(c2, g.L2)};
            double Hc = g.H(cell.center);
            cell.sign = Hc > 0 ? 1 : -1;
            g.cells.push_back(cell);
            g.centers.push_back(cell.center);
        }
    }
    for (double a : z1)
        for (double b : z2) g.corners.push_back({a, b});

    // Distance from a crit to the nearest zero of the same factor.
    auto reach = [](double m, const std::vector<double>& zs, double L) {
        double best = 1e300;
        for (double z : zs) best = std::min(best, std::fabs(wrap_diff(m, z, L)));
        return best;
    };
    for (double a : z1)
        for (double b : m2)
            g.midpoints.push_back({{a, wrap_coord(b, g.L2)}, MidpointType::zero_cross_crit,
                                   reach(b, z2, g.L2)});
    for (double a : m1)
        for (double b : z2)
            g.midpoints.push_back({{wrap_coord(a, g.L1), b}, MidpointType::crit_cross_zero,
                                   reach(a, z1, g.L1)});

    for (size_t i = 0; i < g.centers.size(); ++i)
        for (size_t j = i + 1; j < g.centers.size(); ++j) {
            double dx = wrap_diff(g.centers[i].x, g.centers[j].x, g.L1);
            double dy = wrap_diff(g.centers[i].y, g.centers[j].y, g.L2);
            if (std::sqrt(dx * dx + dy * dy) <= 2 * exclusion_r)
                throw param_error("build_geometry: exclusion balls at centers " +
                                  fmt_pt(g.centers[i]) + " and " + fmt_pt(g.centers[j]) +
                                  " overlap");
        }
    for (const auto& mp : g.midpoints)
        if (g.in_exclusion(mp.q, exclusion_r))
            throw param_error("build_geometry: exclusion ball swallows midpoint " + fmt_pt(mp.q));

    g.min_center_gap = 1e300;
    for (const auto& c : g.centers) {
        g.min_center_gap = std::min(g.min_center_gap, reach(c.x, z1, g.L1));
        g.min_center_gap = std::min(g.min_center_gap, reach(c.y, z2, g.L2));
    }
    g.dr_area = g.area - kPi * sqr(exclusion_r) * static_cast<double>(g.centers.size());

    if (exclusion_r == 0.0) {
        g.gamma_r = 1.0;
        return g;
    }

    // gamma_r: grid scan over D_r, plus the exclusion circles themselves (the
    // max lives on a ball boundary), plus a local pattern-search polish.
    double best = 0.0;
    Vec2 best_x{0, 0};
    const int ng = 512;
    for (int i = 0; i < ng; ++i)
        for (int j = 0; j < ng; ++j) {
            Vec2 x{i * g.L1 / ng, j * g.L2 / ng};
            if (g.in_exclusion(x, exclusion_r)) continue;
            double v = std::fabs(g.H(x));
            if (v > best) {
                best = v;
                best_x = x;
            }
        }
    for (const auto& c : g.centers) {
        for (int a = 0; a < 4096; ++a) {
            double th = a * kTwoPi / 4096;
            Vec2 x{wrap_coord(c.x + exclusion_r * std::cos(th), g.L1),
                   wrap_coord(c.y + exclusion_r * std::sin(th), g.L2)};
            double v = std::fabs(g.H(x));
            if (v > best) {
                best = v;
                best_x = x;
            }
        }
    }
    double step = g.L1 / ng;
    Vec2 cur = best_x;
    for (int round = 0; round < 60; ++round) {
        bool moved = false;
        for (auto [dx, dy] : {std::pair{step, 0.0}, {-step, 0.0}, {0.0, step}, {0.0, -step}}) {
            Vec2 cand{wrap_coord(cur.x + dx, g.L1), wrap_coord(cur.y + dy, g.L2)};
            if (g.in_exclusion(cand, exclusion_r)) {
                // Project onto the nearest ball boundary instead of rejecting.
                for (const auto& c : g.centers) {
                    double ddx = wrap_diff(cand.x, c.x, g.L1), ddy = wrap_diff(cand.y, c.y, g.L2);
                    double d = std::sqrt(ddx * ddx + ddy * ddy);
                    if (d < exclusion_r && d > 1e-12) {
                        cand = {wrap_coord(c.x + ddx * exclusion_r / d, g.L1),
                                wrap_coord(c.y + ddy * exclusion_r / d, g.L2)};
                        break;
                    }
                }
                if (g.in_exclusion(cand, exclusion_r)) continue;
            }
            double v = std::fabs(g.H(cand));
            if (v > best) {
                best = v;
                cur = cand;
                moved = true;
            }
        }
        if (!moved) step *= 0.5;
        if (step < 1e-12) break;
    }
    g.gamma_r = best;
    return g;
}

}  // namespace cellflow
