#pragma once
// Driving noise: scalar Brownian increment paths and the exponentially
// correlated (Ornstein-Uhlenbeck) process built on top of them.

#include <cstdint>
#include <vector>

#include "cellflow/rng.hpp"

namespace cellflow {

struct BrownianPath {
    uint64_t seed = 0;
    double T = 0.0;
    double dt = 0.0;
    std::vector<double> increments;  // increments[k] ~ N(0, dt)
    // True for paths produced by coarsen(): such a path is a deterministic
    // function of its source, not regenerable from (seed, T, dt) alone.
    bool derived = false;

    size_t steps() const { return increments.size(); }
};

// Sample a scalar Brownian path on [0, T] with step dt. The step count is
// ceil(T/dt) computed with a small slack so T/dt within one part in 1e9 of an
// integer does not gain a spurious step.
BrownianPath brownian_path(uint64_t seed, double T, double dt);

// Merge groups of m consecutive increments; requires m to divide the step
// count. Same underlying Brownian motion observed on the coarser grid.
BrownianPath coarsen(const BrownianPath& path, int m);

struct OuPath {
    double eps = 0.0;
    double dt = 0.0;
    double T = 0.0;
    std::vector<double> values;  // values[k] = z(k*dt), values[0] = 0
};

// Colored noise z with correlation time eps, z(0) = 0, driven by the source
// increments via the exact one-step recursion
//   z_{k+1} = e^{-dt/eps} z_k + xi_k,   xi_k = dW_k * sqrt((1-e^{-2dt/eps})/(2 eps dt)).
// Scaling the raw increments gives every xi_k its exact stationary-transition
// variance for all dt, and the coupling to the source path becomes the exact
// integrated kernel in the limit dt << eps, which is the regime the
// second-order integrator enforces.
OuPath ou_path(const BrownianPath& source, double eps);

}  // namespace cellflow
