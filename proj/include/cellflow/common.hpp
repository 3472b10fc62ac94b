#pragma once
// Shared basics: 2-vectors on the torus, error taxonomy, small formatting helpers.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace cellflow {

struct param_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Vec2 {
    double x = 0.0, y = 0.0;
    Vec2() = default;
    Vec2(double a, double b) : x(a), y(b) {}
    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(Vec2 o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
};

inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }

// Wrap a scalar into [0, L). Increments in the integrators are small, so the
// loop form beats fmod and keeps exact values when no wrap happens.
inline double wrap_coord(double x, double L) {
    while (x >= L) x -= L;
    while (x < 0.0) x += L;
    return x;
}

// Signed difference a-b wrapped into [-L/2, L/2).
inline double wrap_diff(double a, double b, double L) {
    double d = a - b;
    while (d >= 0.5 * L) d -= L;
    while (d < -0.5 * L) d += L;
    return d;
}

inline double sqr(double v) { return v * v; }

// All floating-point table output goes through this: 17 significant digits
// round-trips IEEE doubles exactly.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw numerical_error(std::string("non-finite value in ") + what);
}

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kTwoPi = 2.0 * kPi;

}  // namespace cellflow
