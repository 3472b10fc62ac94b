#pragma once
// Mass transport along stochastic characteristics: closed-form density along
// node trajectories, quadrature mass, decay-rate extraction, and the
// consistency checks (Jacobian, pointwise ODE, dissipation inequality).

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cellflow/common.hpp"
#include "cellflow/fields.hpp"
#include "cellflow/flow.hpp"
#include "cellflow/hamiltonian.hpp"
#include "cellflow/series.hpp"
#include "cellflow/stochastics.hpp"

namespace cellflow {

struct InitialDensity {
    std::function<double(Vec2)> f;
    std::string description;
};

// 1/|D_r| on the torus minus the exclusion balls (radius geom.exclusion_r),
// zero inside the balls. With exclusion_r = 0 this is plain uniform.
InitialDensity density_uniform(const TorusGeometry& geom);
// C^2 bump c (1 - (d/radius)^2)^3 of unit mass centered at a point; rejects
// centers whose support would touch an exclusion ball.
InitialDensity density_bump(const TorusGeometry& geom, Vec2 center, double radius);
// Equal-weight mixture of unit-mass bumps.
InitialDensity density_bumps(const TorusGeometry& geom,
                             const std::vector<std::pair<Vec2, double>>& spots);

struct CharacteristicSolution {
    int grid_n = 0;
    double dt = 0, t_final = 0, alpha = 0, r0 = 0;
    uint64_t path_seed = 0;
    Scheme scheme = Scheme::euler_maruyama;
    double cell_area = 0, area = 0;

    // quadrature nodes carrying positive initial density
    std::vector<Vec2> nodes;
    std::vector<double> f0;
    bool all_nodes_active = false;  // no node was dropped for f0 = 0

    std::vector<double> times;            // snapshot times
    std::vector<std::vector<double>> C;   // [time][node] integral of div g along the path
    std::vector<std::vector<double>> E;   // [time][node] exp(C), accumulated multiplicatively
    std::vector<std::vector<double>> A;   // [time][node] integral of exp(C) ds
    std::vector<Vec2> final_states;

    // density along the trajectory times the flow-map Jacobian: the quantity
    // whose quadrature sum is the total mass
    double mass_node(size_t ti, size_t j) const {
        return f0[j] / (1.0 + r0 * f0[j] * A[ti][j]);
    }
    double det_psi(size_t ti, size_t j) const { return 1.0 / E[ti][j]; }
    double h_node(size_t ti, size_t j) const { return mass_node(ti, j) * E[ti][j]; }
};

// Transport the initial density along one shared Brownian path, integrating
// per-node the divergence integral C, its exponential, and A = int exp(C).
// Grid nodes are midpoints of an n-by-n cell grid, n >= 32; nodes where the
// initial density vanishes are dropped from the computation. The density must
// vanish on the exclusion balls (input_error otherwise). output_every = 0
// picks roughly 200 snapshots.
CharacteristicSolution solve_characteristics(const InitialDensity& f0, int grid_size,
                                             const BrownianPath& path, double alpha, double r0,
                                             double t_final, const FieldBundle& fb,
                                             int output_every = 0,
                                             Scheme scheme = Scheme::euler_maruyama,
                                             int threads = 1);

// Midpoint-quadrature mass at each snapshot time (single realization).
MassSeries mass_timeseries(const CharacteristicSolution& sol);

// cell_area * sum of the flow-map determinants exp(-C) per snapshot: the
// measure of the torus pushed through the flow map. Equals the torus area up
// to quadrature and scheme error when every node is active.
std::vector<double> volume_series(const CharacteristicSolution& sol);

// Monte Carlo mean mass over >= 30 independent paths (95% band per time).
MassSeries expected_mass(const InitialDensity& f0, double alpha, double r0, double t_final,
                         const std::vector<uint64_t>& seeds, int grid_size,
                         const FieldBundle& fb, double dt, int output_every = 0,
                         Scheme scheme = Scheme::euler_maruyama, int threads = 1);

// alpha r(0)^2 / (l(0)^2 (l(0) + alpha)): the coefficient-level prediction for
// the mass-decay rate per unit interaction strength.
double theoretical_rate_factor(double alpha, const AlignedCoefficients& coef);

struct RatePoint {
    double alpha = 0;
    DecayFit fit;
    double factor = 0;    // theoretical_rate_factor at this alpha
    double kappabar = 0;  // fit.rate / factor
};

struct RateCurve {
    std::vector<RatePoint> points;  // sorted by alpha
    bool nondecreasing = false;     // rates nondecreasing in alpha (CI slack)
    double ratio_extremes = 0;      // rate(max alpha) / rate(min alpha)
    double kappabar_spread = 0;     // max/min of kappabar across alphas
};

RateCurve rate_curve(const InitialDensity& f0, const std::vector<double>& alphas, double r0,
                     double t_final, const std::vector<uint64_t>& seeds, int grid_size,
                     const FieldBundle& fb, double dt, double fit_a, double fit_b,
                     int output_every = 0, Scheme scheme = Scheme::euler_maruyama,
                     int threads = 1);

struct JacobianCheck {
    size_t n_nodes = 0;
    double max_rel_err = 0, mean_rel_err = 0;
    double fd_step = 0, t_check = 0;
};

// Central-difference flow-map Jacobian (four shifted starts per node, shared
// noise) against exp(-C) at time t_check, on randomly chosen active nodes.
JacobianCheck jacobian_fd_check(const InitialDensity& f0, int grid_size,
                                const BrownianPath& path, double alpha, double t_check,
                                const FieldBundle& fb, size_t n_nodes = 100,
                                double fd_step = 1e-4, uint64_t pick_seed = 7,
                                Scheme scheme = Scheme::euler_maruyama);

// Integrates the pointwise balance dh/dt = div g * h - r0 h^2 along node
// trajectories with a trapezoidal predictor-corrector and returns the largest
// relative gap to the closed form, over snapshot times and chosen nodes.
double riccati_crosscheck(const InitialDensity& f0, int grid_size, const BrownianPath& path,
                          double alpha, double r0, double t_final, const FieldBundle& fb,
                          size_t n_nodes = 10, uint64_t pick_seed = 11,
                          Scheme scheme = Scheme::euler_maruyama);

struct LossCheck {
    bool ok = false;
    double worst_margin = 0;  // most positive violation of the dissipation bound
};

// Discrete dissipation inequality along one realization:
//   dM/dt <= -(r0/area) M^2, tested midpoint-wise with the given slack.
LossCheck pde_loss_check(const MassSeries& single, double r0, double area, double slack = 0.05);

}  // namespace cellflow
