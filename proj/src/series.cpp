#include "cellflow/series.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cellflow/common.hpp"
#include "cellflow/rng.hpp"

namespace cellflow {

void MassSeries::finalize_stats() {
    const size_t nt = times.size(), ns = per_seed.size();
    mean.assign(nt, 0.0);
    lo.assign(nt, 0.0);
    hi.assign(nt, 0.0);
    if (ns == 0) return;
    for (const auto& row : per_seed)
        if (row.size() != nt)
            throw input_error("mass series row length " + std::to_string(row.size()) +
                              " does not match time grid " + std::to_string(nt));
    for (size_t t = 0; t < nt; ++t) {
        double s = 0;
        for (size_t k = 0; k < ns; ++k) s += per_seed[k][t];
        mean[t] = s / double(ns);
    }
    if (ns == 1) {
        lo = mean;
        hi = mean;
        return;
    }
    for (size_t t = 0; t < nt; ++t) {
        double v = 0;
        for (size_t k = 0; k < ns; ++k) v += sqr(per_seed[k][t] - mean[t]);
        const double half = 1.96 * std::sqrt(v / double(ns - 1)) / std::sqrt(double(ns));
        lo[t] = mean[t] - half;
        hi[t] = mean[t] + half;
    }
}

namespace {

// slope/intercept/R^2 of y against t by ordinary least squares
struct LineFit {
    double slope = 0, r2 = 0;
};

LineFit fit_line(const std::vector<double>& t, const std::vector<double>& y) {
    const size_t n = t.size();
    double mt = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mt += t[i];
        my += y[i];
    }
    mt /= double(n);
    my /= double(n);
    double stt = 0, sty = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        stt += sqr(t[i] - mt);
        sty += (t[i] - mt) * (y[i] - my);
        syy += sqr(y[i] - my);
    }
    LineFit f;
    if (stt <= 0) throw input_error("decay fit needs at least two distinct times in the window");
    f.slope = sty / stt;
    f.r2 = syy > 0 ? sqr(sty) / (stt * syy) : 1.0;
    return f;
}

double rate_of_mean(const std::vector<double>& tw, const std::vector<double>& mw) {
    std::vector<double> logs(mw.size());
    for (size_t i = 0; i < mw.size(); ++i) logs[i] = std::log(mw[i]);
    return -fit_line(tw, logs).slope;
}

}  // namespace

DecayFit fit_decay(const MassSeries& series, double ta, double tb, int bootstrap,
                   uint64_t boot_seed) {
    if (!(tb > ta)) throw param_error("decay window needs tb > ta");
    if (series.per_seed.empty()) throw input_error("decay fit on an empty series");

    std::vector<size_t> idx;
    for (size_t i = 0; i < series.times.size(); ++i)
        if (series.times[i] >= ta - 1e-12 && series.times[i] <= tb + 1e-12) idx.push_back(i);
    if (idx.size() < 2)
        throw param_error("decay window [" + std::to_string(ta) + ", " + std::to_string(tb) +
                          "] covers fewer than two time samples");

    const size_t ns = series.per_seed.size();
    std::vector<double> tw(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) tw[i] = series.times[idx[i]];

    // mean over seeds restricted to the window
    std::vector<double> mw(idx.size(), 0.0);
    for (size_t k = 0; k < ns; ++k)
        for (size_t i = 0; i < idx.size(); ++i) mw[i] += series.per_seed[k][idx[i]];
    for (auto& v : mw) v /= double(ns);
    for (size_t i = 0; i < idx.size(); ++i)
        if (!(mw[i] > 0))
            throw input_error("mean mass is not positive at t = " + fmt17(tw[i]) +
                              "; shrink the fit window");

    DecayFit out;
    out.n_points = idx.size();
    std::vector<double> logs(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) logs[i] = std::log(mw[i]);
    const LineFit lf = fit_line(tw, logs);
    out.rate = -lf.slope;
    out.r2 = lf.r2;

    if (ns < 2 || bootstrap < 2) {
        out.lo = out.hi = out.rate;
        return out;
    }

    Rng rng(stream_split(boot_seed, 0));
    std::vector<double> rates;
    rates.reserve(size_t(bootstrap));
    std::vector<double> bm(idx.size());
    for (int b = 0; b < bootstrap; ++b) {
        std::fill(bm.begin(), bm.end(), 0.0);
        for (size_t k = 0; k < ns; ++k) {
            const size_t pick = size_t(rng.u01() * double(ns)) % ns;
            for (size_t i = 0; i < idx.size(); ++i) bm[i] += series.per_seed[pick][idx[i]];
        }
        bool ok = true;
        for (auto& v : bm) {
            v /= double(ns);
            if (!(v > 0)) ok = false;
        }
        if (!ok) continue;  // degenerate resample; skip rather than poisoning the interval
        rates.push_back(rate_of_mean(tw, bm));
    }
    if (rates.size() < 8) {
        out.lo = out.hi = out.rate;
        return out;
    }
    std::sort(rates.begin(), rates.end());
    const auto pick_q = [&](double q) {
        const double pos = q * double(rates.size() - 1);
        const size_t i0 = size_t(pos);
        const size_t i1 = std::min(i0 + 1, rates.size() - 1);
        const double w = pos - double(i0);
        return rates[i0] * (1 - w) + rates[i1] * w;
    };
    out.lo = pick_q(0.025);
    out.hi = pick_q(0.975);
    return out;
}

}  // namespace cellflow
