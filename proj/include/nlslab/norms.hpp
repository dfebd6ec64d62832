#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlslab/fft.hpp"
#include "nlslab/field.hpp"
#include "nlslab/grid.hpp"

namespace nlslab {

/// L^p norm with the rectangle rule, (sum |u_j|^p dx^dim)^{1/p};
/// p = infinity gives the max modulus.
inline double lp_norm(const Grid& g, const std::vector<cdouble>& values, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be in [1, inf]");
    if (std::isinf(p)) {
        double m = 0.0;
        for (const auto& v : values) m = std::max(m, std::abs(v));
        return m;
    }
    long double acc = 0.0L;
    if (p == 2.0) {
        for (const auto& v : values) acc += std::norm(v);
    } else {
        for (const auto& v : values) acc += std::pow(std::abs(v), static_cast<long double>(p));
    }
    return static_cast<double>(std::pow(acc * g.cell_volume(), 1.0L / p));
}

inline double lp_norm(const ComplexField& u, double p) { return lp_norm(u.grid, u.values, p); }

inline double lp_norm(const Density& d, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be in [1, inf]");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : d.values) m = std::max(m, std::abs(v));
        return m;
    }
    long double acc = 0.0L;
    for (double v : d.values) acc += std::pow(std::abs(v), static_cast<long double>(p));
    return static_cast<double>(std::pow(acc * d.grid.cell_volume(), 1.0 / p));
}

/// H^s norm (s of either sign) via the DFT scaled so that Parseval holds
/// exactly against the dx-weighted L^2 norm:
///   uhat_k = dx^d (2 pi)^{-d/2} sum_j u_j e^{-i xi_k x_j},
///   ||u||_{H^s}^2 = sum_k (1+|xi_k|^2)^s |uhat_k|^2 dxi^d,  dxi = pi/L.
inline double sobolev_norm(const Grid& g, const std::vector<cdouble>& values, double s) {
    std::vector<cdouble> coef = values;
    fft_forward(g, coef);
    const double dxi = M_PI / g.half_width;
    // |uhat|^2 = (dx/(2pi)^{1/2})^{2 dim} |DFT|^2; the e^{i xi L} phase has unit modulus.
    double amp2 = std::pow(g.dx * g.dx / (2.0 * M_PI), g.dim);
    long double acc = 0.0L;
    if (g.dim == 1) {
        for (int j = 0; j < g.n; ++j) {
            double xi = g.xi(j);
            acc += std::pow(1.0 + xi * xi, s) * std::norm(coef[j]);
        }
    } else {
        for (int jx = 0; jx < g.n; ++jx) {
            double xix = g.xi(jx);
            for (int jy = 0; jy < g.n; ++jy) {
                double xiy = g.xi(jy);
                acc += std::pow(1.0 + xix * xix + xiy * xiy, s) *
                       std::norm(coef[g.index2(jx, jy)]);
            }
        }
    }
    return std::sqrt(static_cast<double>(acc * amp2 * std::pow(dxi, g.dim)));
}

inline double sobolev_norm(const ComplexField& u, double s) {
    return sobolev_norm(u.grid, u.values, s);
}

/// H^s norm of a real grid function (e.g. a density difference).
inline double sobolev_norm(const Grid& g, const std::vector<double>& values, double s) {
    std::vector<cdouble> tmp(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) tmp[i] = values[i];
    return sobolev_norm(g, tmp, s);
}

/// Moment integral sum |y_j|^order rho_j dx^dim, order in {0, 1, 2}.
inline double moment(const Density& d, int order) {
    if (order < 0 || order > 2) throw std::invalid_argument("moment: order must be 0, 1 or 2");
    const Grid& g = d.grid;
    long double acc = 0.0L;
    if (g.dim == 1) {
        for (int j = 0; j < g.n; ++j) {
            double y = g.coord(j);
            double w = order == 0 ? 1.0 : (order == 1 ? std::abs(y) : y * y);
            acc += w * d.values[j];
        }
    } else {
        for (int jx = 0; jx < g.n; ++jx) {
            double x = g.coord(jx);
            for (int jy = 0; jy < g.n; ++jy) {
                double y = g.coord(jy);
                double r2 = x * x + y * y;
                double w = order == 0 ? 1.0 : (order == 1 ? std::sqrt(r2) : r2);
                acc += w * d.values[g.index2(jx, jy)];
            }
        }
    }
    return static_cast<double>(acc) * g.cell_volume();
}

/// First raw moment along one axis (signed), used for Gaussian moment fits.
inline double mean_coordinate(const Density& d, int axis = 0) {
    const Grid& g = d.grid;
    long double acc = 0.0L;
    if (g.dim == 1) {
        for (int j = 0; j < g.n; ++j) acc += g.coord(j) * d.values[j];
    } else {
        for (int jx = 0; jx < g.n; ++jx)
            for (int jy = 0; jy < g.n; ++jy)
                acc += g.coord(axis == 0 ? jx : jy) * d.values[g.index2(jx, jy)];
    }
    return static_cast<double>(acc) * g.cell_volume() / d.mass();
}

/// Per-axis central variance.
inline double variance(const Density& d, int axis = 0) {
    const Grid& g = d.grid;
    double m = mean_coordinate(d, axis);
    long double acc = 0.0L;
    if (g.dim == 1) {
        for (int j = 0; j < g.n; ++j) {
            double y = g.coord(j) - m;
            acc += y * y * d.values[j];
        }
    } else {
        for (int jx = 0; jx < g.n; ++jx)
            for (int jy = 0; jy < g.n; ++jy) {
                double y = g.coord(axis == 0 ? jx : jy) - m;
                acc += y * y * d.values[g.index2(jx, jy)];
            }
    }
    return static_cast<double>(acc) * g.cell_volume() / d.mass();
}

/// Mass fraction in the outer 5% shell (per axis). The domain-truncation
/// monitor: dispersive runs must keep this below 1e-8 of the total.
inline double boundary_mass_fraction(const Grid& g, const std::vector<double>& density) {
    int shell = std::max(1, g.n / 20);
    long double outer = 0.0L, total = 0.0L;
    auto in_shell = [&](int j) { return j < shell || j >= g.n - shell; };
    if (g.dim == 1) {
        for (int j = 0; j < g.n; ++j) {
            total += density[j];
            if (in_shell(j)) outer += density[j];
        }
    } else {
        for (int jx = 0; jx < g.n; ++jx)
            for (int jy = 0; jy < g.n; ++jy) {
                double v = density[g.index2(jx, jy)];
                total += v;
                if (in_shell(jx) || in_shell(jy)) outer += v;
            }
    }
    if (total <= 0.0L) return 0.0;
    return static_cast<double>(outer / total);
}

inline double boundary_mass_fraction(const ComplexField& u) {
    std::vector<double> rho(u.values.size());
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = std::norm(u.values[i]);
    return boundary_mass_fraction(u.grid, rho);
}

inline double boundary_mass_fraction(const Density& d) {
    return boundary_mass_fraction(d.grid, d.values);
}

/// ||grad u||_{L^2} via spectral differentiation.
inline double gradient_norm(const ComplexField& u) {
    long double acc = 0.0L;
    for (int axis = 0; axis < u.grid.dim; ++axis) {
        auto du = spectral_derivative(u.grid, u.values, axis);
        for (const auto& v : du) acc += std::norm(v);
    }
    return std::sqrt(static_cast<double>(acc) * u.grid.cell_volume());
}

/// ||x u||_{L^2}.
inline double weighted_x_norm(const ComplexField& u) {
    const Grid& g = u.grid;
    long double acc = 0.0L;
    if (g.dim == 1) {
        for (int j = 0; j < g.n; ++j) {
            double x = g.coord(j);
            acc += x * x * std::norm(u.values[j]);
        }
    } else {
        for (int jx = 0; jx < g.n; ++jx)
            for (int jy = 0; jy < g.n; ++jy) {
                double x = g.coord(jx), y = g.coord(jy);
                acc += (x * x + y * y) * std::norm(u.values[g.index2(jx, jy)]);
            }
    }
    return std::sqrt(static_cast<double>(acc) * g.cell_volume());
}

/// Sigma norm ||u|| + ||grad u|| + ||x u||.
inline double sigma_norm(const ComplexField& u) {
    return lp_norm(u, 2.0) + gradient_norm(u) + weighted_x_norm(u);
}

inline double l2_distance(const ComplexField& a, const ComplexField& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("l2_distance: grid mismatch");
    long double acc = 0.0L;
    for (std::size_t i = 0; i < a.values.size(); ++i) acc += std::norm(a.values[i] - b.values[i]);
    return std::sqrt(static_cast<double>(acc) * a.grid.cell_volume());
}

inline double h1_distance(const ComplexField& a, const ComplexField& b) {
    ComplexField diff = a;
    for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] -= b.values[i];
    double l2 = lp_norm(diff, 2.0), g = gradient_norm(diff);
    return std::sqrt(l2 * l2 + g * g);
}

inline double l1_distance(const Density& a, const Density& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("l1_distance: grid mismatch");
    long double acc = 0.0L;
    for (std::size_t i = 0; i < a.values.size(); ++i) acc += std::abs(a.values[i] - b.values[i]);
    return static_cast<double>(acc) * a.grid.cell_volume();
}

} // namespace nlslab
