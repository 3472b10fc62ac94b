#pragma once
// Branch-light sin/cos pair evaluation for the integrator hot loops.
//
// Arguments stay in a few periods of the torus (wrapped coordinates, small
// phases, low Fourier modes), so a two-term Cody-Waite reduction by pi/2
// followed by the classic fdlibm minimax kernels on [-pi/4, pi/4] is exact to
// ~1.5 ulp while costing a fraction of a libm sincos call. Inputs far outside
// the expected range fall back to the standard library.

#include <cmath>
#include <cstdint>

namespace cellflow::fastmath {

struct SinCos {
    double s, c;
};

namespace detail {
constexpr double kInvPio2 = 6.36619772367581382433e-01;  // 2/pi
constexpr double kPio2Hi = 1.57079632673412561417e+00;   // first 33 bits of pi/2
constexpr double kPio2Lo = 6.07710050650619224932e-11;   // pi/2 - kPio2Hi

constexpr double S1 = -1.66666666666666324348e-01;
constexpr double S2 = 8.33333333332248946124e-03;
constexpr double S3 = -1.98412698298579493134e-04;
constexpr double S4 = 2.75573137070700676789e-06;
constexpr double S5 = -2.50507602534068634195e-08;
constexpr double S6 = 1.58969099521155010221e-10;

constexpr double C1 = 4.16666666666666019037e-02;
constexpr double C2 = -1.38888888888741095749e-03;
constexpr double C3 = 2.48015872894767294178e-05;
constexpr double C4 = -2.75573143513906633035e-07;
constexpr double C5 = 2.08757232129817482790e-09;
constexpr double C6 = -1.13596475577881948265e-11;

inline double kernel_sin(double r, double z) {
    double p = S2 + z * (S3 + z * (S4 + z * (S5 + z * S6)));
    return r + r * z * (S1 + z * p);
}

inline double kernel_cos(double z) {
    double p = C1 + z * (C2 + z * (C3 + z * (C4 + z * (C5 + z * C6))));
    return 1.0 - 0.5 * z + z * z * p;
}
}  // namespace detail

inline SinCos sincos(double x) {
    using namespace detail;
    if (!(x > -1.0e5 && x < 1.0e5)) return {std::sin(x), std::cos(x)};
    double fn = std::nearbyint(x * kInvPio2);
    auto n = static_cast<long long>(fn);
    // fn has at most ~17 significant bits here, kPio2Hi has 33: product exact.
    double r = (x - fn * kPio2Hi) - fn * kPio2Lo;
    double z = r * r;
    double s = kernel_sin(r, z);
    double c = kernel_cos(z);
    switch (n & 3) {
        case 0: return {s, c};
        case 1: return {c, -s};
        case 2: return {-s, -c};
        default: return {-c, s};
    }
}

}  // namespace cellflow::fastmath
