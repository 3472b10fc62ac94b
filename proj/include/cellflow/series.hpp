#pragma once
// Mass time series over shared-noise realizations, and exponential-rate
// fitting with bootstrap confidence intervals.

#include <cstdint>
#include <vector>

namespace cellflow {

struct MassSeries {
    std::vector<double> times;
    std::vector<std::vector<double>> per_seed;  // [seed][time index]
    std::vector<double> mean, lo, hi;           // filled by finalize_stats

    // Ensemble mean and a 95% normal band per time point.
    void finalize_stats();
    size_t n_seeds() const { return per_seed.size(); }
};

struct DecayFit {
    double rate = 0;          // minus the least-squares slope of log(mean mass)
    double lo = 0, hi = 0;    // bootstrap 95% interval over seed resamples
    double r2 = 0;            // linearity diagnostic of the log fit
    size_t n_points = 0;      // time samples inside the window
};

// Least-squares slope of log(ensemble-mean mass) on [ta, tb]. All mean values
// in the window must be positive. Bootstrap resamples seeds with replacement.
DecayFit fit_decay(const MassSeries& series, double ta, double tb, int bootstrap = 400,
                   uint64_t boot_seed = 1234);

}  // namespace cellflow
