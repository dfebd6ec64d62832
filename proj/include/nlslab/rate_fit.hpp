#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace nlslab {

/// Least-squares fit of log(y) = slope * log(x) + intercept over positive
/// samples, with the coefficient of determination r2 in [0, 1]. Verdicts
/// built on these use slope windows, never equality: the theory leaves
/// every prefactor unspecified.
struct RateFit {
    std::vector<double> xs, ys;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline RateFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("fit_loglog: need >= 2 paired samples");
    RateFit f;
    f.xs = xs;
    f.ys = ys;
    const std::size_t n = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0) || !(ys[i] > 0))
            throw std::invalid_argument("fit_loglog: samples must be positive");
        double lx = std::log(xs[i]), ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        syy += ly * ly;
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0) throw std::invalid_argument("fit_loglog: degenerate abscissae");
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_tot = syy - sy * sy / n;
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = std::log(ys[i]) - (f.slope * std::log(xs[i]) + f.intercept);
        ss_res += r * r;
    }
    f.r2 = ss_tot > 0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
    return f;
}

} // namespace nlslab
