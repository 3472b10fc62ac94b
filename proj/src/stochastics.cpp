#include "cellflow/stochastics.hpp"

#include <cmath>
#include <string>

#include "cellflow/common.hpp"

namespace cellflow {

double Rng::gauss() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    double u1 = u01_open();
    double u2 = u01();
    double mag = std::sqrt(-2.0 * std::log(u1));
    double ang = kTwoPi * u2;
    cached_ = mag * std::sin(ang);
    has_cached_ = true;
    return mag * std::cos(ang);
}

BrownianPath brownian_path(uint64_t seed, double T, double dt) {
    if (!(T > 0.0)) throw param_error("brownian_path: T must be positive");
    if (!(dt > 0.0) || dt > T) throw param_error("brownian_path: need 0 < dt <= T");
    auto n = static_cast<size_t>(std::ceil(T / dt - 1e-9));
    BrownianPath path;
    path.seed = seed;
    path.T = T;
    path.dt = dt;
    path.increments.resize(n);
    Rng rng(seed);
    double sq = std::sqrt(dt);
    for (auto& w : path.increments) w = sq * rng.gauss();
    return path;
}

BrownianPath coarsen(const BrownianPath& path, int m) {
    if (m < 2) throw param_error("coarsen: factor must be at least 2");
    size_t n = path.increments.size();
    if (n == 0 || n % static_cast<size_t>(m) != 0)
        throw param_error("coarsen: factor " + std::to_string(m) + " does not divide step count " +
                          std::to_string(n));
    BrownianPath out;
    out.seed = path.seed;
    out.T = path.T;
    out.dt = path.dt * m;
    out.derived = true;
    out.increments.resize(n / m);
    for (size_t k = 0; k < out.increments.size(); ++k) {
        double acc = 0.0;
        for (int j = 0; j < m; ++j) acc += path.increments[k * m + j];
        out.increments[k] = acc;
    }
    return out;
}

OuPath ou_path(const BrownianPath& source, double eps) {
    if (!(eps > 0.0)) throw param_error("ou_path: correlation time must be positive");
    size_t n = source.increments.size();
    if (n == 0) throw param_error("ou_path: source path has no increments");
    double dt = source.dt;
    double a = std::exp(-dt / eps);
    double xi_scale = std::sqrt((1.0 - a * a) / (2.0 * eps * dt));
    OuPath z;
    z.eps = eps;
    z.dt = dt;
    z.T = source.T;
    z.values.resize(n + 1);
    z.values[0] = 0.0;
    for (size_t k = 0; k < n; ++k)
        z.values[k + 1] = a * z.values[k] + xi_scale * source.increments[k];
    return z;
}

}  // namespace cellflow
