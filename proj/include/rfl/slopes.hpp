/// @file slopes.hpp
/// Log-log slope fitting for decay-rate checks, plus the report type shared
/// by every N-sweep.
#pragma once

#include "rfl/common.hpp"

#include <cmath>

namespace rfl {

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int used = 0;            // pairs that survived the noise filter
    bool below_noise = false;  // every sample was under the floor
};

/// Least-squares fit of log(y) against log(x).  Samples with y at or below
/// `noise_floor` are excluded; if fewer than two remain the series is flagged
/// as below noise (the caller decides whether that counts as exact).
inline SlopeFit fit_slope(const std::vector<double>& xs,
                          const std::vector<double>& ys,
                          double noise_floor = 1e-13) {
    if (xs.size() != ys.size()) throw ConfigError("fit_slope: length mismatch");
    std::vector<double> lx, ly;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0)) throw ConfigError("fit_slope: x values must be positive");
        if (ys[i] > noise_floor) {
            lx.push_back(std::log(xs[i]));
            ly.push_back(std::log(ys[i]));
        }
    }
    SlopeFit fit;
    fit.used = static_cast<int>(lx.size());
    if (fit.used < 2) {
        fit.below_noise = true;
        return fit;
    }
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < fit.used; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= fit.used;
    my /= fit.used;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < fit.used; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = (syy == 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

/// Result of sweeping a residual over the auxiliary-dimension sizes N.
struct ResidualReport {
    std::vector<double> n_values;
    std::vector<double> sup_norms;  // max over sampled points, per N
    SlopeFit fit;
};

inline ResidualReport sweep_report(const std::vector<double>& n_values,
                                   const std::vector<double>& sup_norms,
                                   double noise_floor = 1e-13) {
    ResidualReport r;
    r.n_values = n_values;
    r.sup_norms = sup_norms;
    r.fit = fit_slope(n_values, sup_norms, noise_floor);
    return r;
}

}  // namespace rfl
