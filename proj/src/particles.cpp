#include "cellflow/particles.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cellflow {

ParticleSampler sampler_uniform(const TorusGeometry& geom) {
    const double l1 = geom.L1, l2 = geom.L2;
    return [l1, l2](Rng& rng) -> Vec2 { return {rng.u01() * l1, rng.u01() * l2}; };
}

ParticleSampler sampler_point(Vec2 x0) {
    return [x0](Rng&) -> Vec2 { return x0; };
}

ParticleSampler sampler_density(const TorusGeometry& geom, std::function<double(Vec2)> f,
                                double sup_bound) {
    if (!(sup_bound > 0)) throw param_error("density sampler needs a positive upper bound");
    const double l1 = geom.L1, l2 = geom.L2;
    return [l1, l2, f = std::move(f), sup_bound](Rng& rng) -> Vec2 {
        for (;;) {
            Vec2 x{rng.u01() * l1, rng.u01() * l2};
            const double v = f(x);
            if (v > sup_bound * (1 + 1e-12))
                throw input_error("density sampler: value " + fmt17(v) +
                                  " exceeds the declared bound " + fmt17(sup_bound));
            if (rng.u01() * sup_bound <= v) return x;
        }
    };
}

ParticleEnsemble init_ensemble(const ParticleSampler& sampler, int n, const TorusGeometry& geom,
                               double exclusion_r, uint64_t seed, double r0, double delta,
                               double alpha) {
    if (n < 2) throw param_error("ensemble needs at least 2 particles");
    if (exclusion_r < 0) throw param_error("exclusion radius must be >= 0");
    if (r0 < 0) throw param_error("coalescence intensity must be >= 0");
    if (delta < 0) throw param_error("capture radius must be >= 0");

    ParticleEnsemble e;
    e.n0 = n;
    e.r0 = r0;
    e.delta = delta;
    e.alpha = alpha;
    e.seed = seed;
    e.thin = Rng(stream_split(seed, 1));
    e.pos.reserve(size_t(n));

    Rng draw(stream_split(seed, 0));
    const long budget = 100L * n;
    long tried = 0;
    while (int(e.pos.size()) < n) {
        if (tried++ >= budget)
            throw input_error("sampler support appears disjoint from the admissible region: " +
                              std::to_string(budget) + " draws all landed inside exclusion balls");
        Vec2 raw = sampler(draw);
        Vec2 x{wrap_coord(raw.x, geom.L1), wrap_coord(raw.y, geom.L2)};
        if (exclusion_r > 0 && geom.in_exclusion(x, exclusion_r)) continue;
        e.pos.push_back(x);
    }
    e.alive.assign(size_t(n), 1);
    e.alive_count = n;
    return e;
}

namespace {

// flat cell list over the torus; bin width >= delta so neighbors live in the
// surrounding 3x3 block
struct CellList {
    int nb1 = 0, nb2 = 0;
    double w1 = 0, w2 = 0;
    std::vector<int> head, next;

    void build(const std::vector<Vec2>& pos, const std::vector<uint8_t>& alive, double delta,
               double l1, double l2) {
        nb1 = std::max(1, int(std::floor(l1 / delta)));
        nb2 = std::max(1, int(std::floor(l2 / delta)));
        w1 = l1 / nb1;
        w2 = l2 / nb2;
        head.assign(size_t(nb1) * size_t(nb2), -1);
        next.assign(pos.size(), -1);
        for (int i = 0; i < int(pos.size()); ++i) {
            if (!alive[size_t(i)]) continue;
            const int c = cell_of(pos[size_t(i)]);
            next[size_t(i)] = head[size_t(c)];
            head[size_t(c)] = i;
        }
    }

    int cell_of(Vec2 x) const {
        int i = int(x.x / w1), j = int(x.y / w2);
        if (i >= nb1) i = nb1 - 1;
        if (j >= nb2) j = nb2 - 1;
        return i * nb2 + j;
    }
};

}  // namespace

void step_ensemble(ParticleEnsemble& e, Vec2 dw, double dt, const FieldBundle& fb) {
    // dw carries (scalar increment, unused); keep the vector signature so the
    // caller can later switch to two-component noise without an API break.
    const double dwi = dw.x;
    for (size_t i = 0; i < e.pos.size(); ++i) {
        if (!e.alive[i]) continue;
        e.pos[i] = step_ito(e.pos[i], dwi, dt, e.alpha, fb);
    }
    if (e.r0 <= 0 || e.delta <= 0 || e.alive_count < 2) return;

    const double l1 = fb.geom.L1, l2 = fb.geom.L2;
    const double p = -std::expm1(-e.r0 * dt);
    const double d2 = sqr(e.delta);

    const bool small = (l1 / e.delta < 3.0) || (l2 / e.delta < 3.0);
    std::vector<int> cand;
    CellList cl;
    if (!small) cl.build(e.pos, e.alive, e.delta, l1, l2);

    for (int i = 0; i < int(e.pos.size()); ++i) {
        if (!e.alive[size_t(i)]) continue;
        cand.clear();
        if (small) {
            for (int j = i + 1; j < int(e.pos.size()); ++j)
                if (e.alive[size_t(j)]) cand.push_back(j);
        } else {
            const int ci = int(e.pos[size_t(i)].x / cl.w1) % cl.nb1;
            const int cj = int(e.pos[size_t(i)].y / cl.w2) % cl.nb2;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    const int a = (ci + di + cl.nb1) % cl.nb1;
                    const int b = (cj + dj + cl.nb2) % cl.nb2;
                    for (int j = cl.head[size_t(a) * size_t(cl.nb2) + size_t(b)]; j >= 0;
                         j = cl.next[size_t(j)])
                        if (j > i) cand.push_back(j);
                }
            std::sort(cand.begin(), cand.end());
        }
        for (int j : cand) {
            if (!e.alive[size_t(i)]) break;
            if (!e.alive[size_t(j)]) continue;
            const double dx = wrap_diff(e.pos[size_t(i)].x, e.pos[size_t(j)].x, l1);
            const double dy = wrap_diff(e.pos[size_t(i)].y, e.pos[size_t(j)].y, l2);
            if (dx * dx + dy * dy > d2) continue;
            if (e.thin.u01() >= p) continue;
            const int victim = (e.thin.u01() < 0.5) ? i : j;
            e.alive[size_t(victim)] = 0;
            --e.alive_count;
            ++e.removed;
        }
    }
}

MassSeries run_ensemble(ParticleEnsemble& e, const BrownianPath& path, double t_final,
                        const FieldBundle& fb, int record_every) {
    if (!(t_final > 0)) throw param_error("final time must be positive");
    if (record_every < 1) throw param_error("record_every must be >= 1");
    const double dt = path.dt;
    const size_t n = size_t(std::ceil(t_final / dt - 1e-9));
    if (n > path.steps())
        throw param_error("path covers " + fmt17(path.T) + " time units but " + fmt17(t_final) +
                          " were requested");
    MassSeries out;
    std::vector<double> vals;
    out.times.push_back(0.0);
    vals.push_back(e.mass());
    for (size_t k = 0; k < n; ++k) {
        step_ensemble(e, Vec2{path.increments[k], 0.0}, dt, fb);
        if ((k + 1) % size_t(record_every) == 0 || k + 1 == n) {
            out.times.push_back(double(k + 1) * dt);
            vals.push_back(e.mass());
        }
    }
    out.per_seed.push_back(std::move(vals));
    out.finalize_stats();
    return out;
}

}  // namespace cellflow
