#pragma once
// Interacting particle ensemble: shared-noise advection plus pairwise
// coalescence thinning within a capture radius.

#include <cstdint>
#include <functional>
#include <vector>

#include "cellflow/common.hpp"
#include "cellflow/fields.hpp"
#include "cellflow/flow.hpp"
#include "cellflow/hamiltonian.hpp"
#include "cellflow/rng.hpp"
#include "cellflow/series.hpp"
#include "cellflow/stochastics.hpp"

namespace cellflow {

using ParticleSampler = std::function<Vec2(Rng&)>;

// Draw uniformly on the torus; init_ensemble's rejection loop trims it to D_r.
ParticleSampler sampler_uniform(const TorusGeometry& geom);
// Always the same point (init rejects it if it sits inside an exclusion ball).
ParticleSampler sampler_point(Vec2 x0);
// Rejection sampling against a density with a known upper bound on the torus.
ParticleSampler sampler_density(const TorusGeometry& geom, std::function<double(Vec2)> f,
                                double sup_bound);

struct ParticleEnsemble {
    int n0 = 0;  // initial count
    double r0 = 0, delta = 0, alpha = 0;
    uint64_t seed = 0;
    std::vector<Vec2> pos;
    std::vector<uint8_t> alive;
    int alive_count = 0;
    long long removed = 0;  // accepted coalescence events so far
    Rng thin;               // thinning stream, separate from the driving noise

    ParticleEnsemble() : thin(0) {}
    double mass() const { return double(alive_count) / double(n0); }
};

// Rejection-samples N positions outside the exclusion balls of radius
// exclusion_r. Gives up (input_error) after 100*N draws.
ParticleEnsemble init_ensemble(const ParticleSampler& sampler, int n, const TorusGeometry& geom,
                               double exclusion_r, uint64_t seed, double r0, double delta,
                               double alpha);

// One step: advance every live particle with the SAME Brownian increment,
// then sweep pairs closer than delta (index order) and coalesce each with
// probability 1 - exp(-r0*dt); a fair coin picks the survivor.
void step_ensemble(ParticleEnsemble& e, Vec2 dw, double dt, const FieldBundle& fb);

// Drive the ensemble along one Brownian path up to time T and record the
// normalized mass |alive|/N.
MassSeries run_ensemble(ParticleEnsemble& e, const BrownianPath& path, double t_final,
                        const FieldBundle& fb, int record_every = 1);

}  // namespace cellflow
