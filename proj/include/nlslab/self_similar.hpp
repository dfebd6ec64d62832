#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "nlslab/dispersion.hpp"
#include "nlslab/fft.hpp"
#include "nlslab/field.hpp"
#include "nlslab/norms.hpp"

namespace nlslab {

/// Model in the self-similar frame driven by a DispersionCurve tau(t):
///   sigma > 0:  i v_t + (1/(2 tau^2)) Lap v
///                 = (|y|^2 / (4 tau^{d sigma})) v
///                 + ((|v|^{2 sigma} - 1) / (sigma tau^{d sigma})) v
///   log limit:  i v_t + (1/(2 tau^2)) Lap v = (|y|^2/4) v + v ln|v|^2,
/// where the log equation's d v ln(tau) term has been absorbed into the
/// gauge phase d * integral of ln tau (see gauge_phase_log); the sigma
/// equation likewise absorbs (-t/sigma + integral tau^{-d sigma}/sigma).
struct SelfSimilarModel {
    bool is_log = false;
    double sigma = 0.0;

    static SelfSimilarModel rescaled(double sigma) {
        if (!(sigma > 0)) throw std::invalid_argument("SelfSimilarModel: sigma must be positive");
        return {false, sigma};
    }
    static SelfSimilarModel log() { return {true, 0.0}; }
};

namespace detail {

/// Phase rotation by dt * [pot_coef |y|^2 + nl(rho)], diagonal in space.
template <typename NlRate>
void self_similar_phase(ComplexField& v, double dt, double pot_coef, NlRate&& nl) {
    const Grid& g = v.grid;
    if (g.dim == 1) {
        for (int j = 0; j < g.n; ++j) {
            double y = g.coord(j);
            double rho = std::norm(v.values[j]);
            double phase = dt * (pot_coef * y * y + nl(rho));
            v.values[j] *= cdouble(std::cos(phase), -std::sin(phase));
        }
    } else {
        for (int jx = 0; jx < g.n; ++jx)
            for (int jy = 0; jy < g.n; ++jy) {
                auto idx = g.index2(jx, jy);
                double x = g.coord(jx), y = g.coord(jy);
                double rho = std::norm(v.values[idx]);
                double phase = dt * (pot_coef * (x * x + y * y) + nl(rho));
                v.values[idx] *= cdouble(std::cos(phase), -std::sin(phase));
            }
    }
}

} // namespace detail

/// One Strang step of the self-similar evolution. The kinetic multiplier
/// uses the exactly integrated coefficient int_t^{t+dt} ds / (2 tau^2);
/// the potential / nonlinear phase is diagonal and modulus-preserving,
/// with coefficients frozen at the midpoint of each half substep.
inline void step_self_similar(ComplexField& v, double dt, const SelfSimilarModel& m,
                              const DispersionCurve& curve, double log_floor = 1e-30) {
    if (v.frame != Frame::SelfSimilar)
        throw std::invalid_argument("step_self_similar: field must be in the self-similar frame");
    double t = v.time;
    if (t + dt > curve.t_end() * (1 + 1e-12))
        throw SolverError("step_self_similar: dispersion curve does not cover the step",
                          curve.t_end());

    int d = v.grid.dim;
    auto half_phase = [&](double t_mid, double h) {
        if (m.is_log) {
            detail::self_similar_phase(v, h, 0.25, [log_floor](double rho) {
                return std::log(std::max(rho, log_floor));
            });
        } else {
            double ta = std::pow(curve.tau_at(t_mid), -d * m.sigma);
            double sigma = m.sigma;
            detail::self_similar_phase(v, h, 0.25 * ta, [ta, sigma, log_floor](double rho) {
                double lr = std::log(std::max(rho, log_floor));
                return ta * std::expm1(sigma * lr) / sigma;
            });
        }
    };

    half_phase(t + 0.25 * dt, 0.5 * dt);
    double kcoef = curve.kinetic_coefficient(t, t + dt);
    apply_multiplier(v.grid, v.values, [kcoef](double xix, double xiy) {
        double phase = kcoef * (xix * xix + xiy * xiy);
        return cdouble(std::cos(phase), -std::sin(phase));
    });
    half_phase(t + 0.75 * dt, 0.5 * dt);
    v.time = t + dt;
    if (!std::isfinite(v.values[0].real()))
        throw std::runtime_error("step_self_similar: NaN at t = " + std::to_string(v.time));
}

/// Gauge phase removed from the sigma-model self-similar field:
/// alpha(t) = -t/sigma + (1/sigma) int_0^t tau^{-d sigma}.
/// The evolved field v satisfies v = v_pre * e^{i alpha(t)}, so lab-frame
/// reconstruction multiplies by e^{-i alpha(t)}.
inline double gauge_phase_rescaled(const DispersionCurve& curve, double sigma, int dim,
                                   double t) {
    return -t / sigma + curve.integral_tau_power(0.0, t, dim * sigma) / sigma;
}

/// Gauge phase removed from the log-model field: theta(t) = -d int_0^t ln tau.
/// The evolved field w satisfies w = v0 e^{i theta(t)}.
inline double gauge_phase_log(const DispersionCurve& curve, int dim, double t) {
    return -dim * curve.integral_log_tau(0.0, t);
}

/// Pseudo-energy of the sigma flow and its three components:
///   (1/(2 tau^2)) ||grad v||^2 + (1/(4 tau^{d s})) ||y v||^2
///   + (1/((s+1) tau^{d s})) int ((rho^s - 1)/s) rho;
/// sigma = 0 gives the log analogue with potential coefficient 1/4 and
/// entropy integrand rho ln rho.
struct PseudoEnergy {
    double total;
    double kinetic;
    double potential;
    double nonlinear;
};

inline PseudoEnergy pseudo_energy(const ComplexField& v, double sigma, double tau_value) {
    const Grid& g = v.grid;
    int d = g.dim;
    double gn = gradient_norm(v);
    double yn = weighted_x_norm(v);
    long double nl = 0.0L;
    for (const auto& z : v.values) {
        double rho = std::norm(z);
        if (rho <= 0.0) continue;
        if (sigma > 0)
            nl += rho * std::expm1(sigma * std::log(rho)) / sigma;
        else
            nl += rho * std::log(rho);
    }
    double nl_int = static_cast<double>(nl) * g.cell_volume();
    double ta = sigma > 0 ? std::pow(tau_value, -d * sigma) : 1.0;
    PseudoEnergy e;
    e.kinetic = 0.5 * gn * gn / (tau_value * tau_value);
    e.potential = 0.25 * ta * yn * yn;
    e.nonlinear = sigma > 0 ? ta * nl_int / (sigma + 1.0) : nl_int;
    e.total = e.kinetic + e.potential + e.nonlinear;
    return e;
}

/// Madelung current Im(conj(v) grad v), one array per axis; optionally
/// normalized by the squared L^2 mass (the continuity-equation current).
inline std::vector<std::vector<double>> current_density(const ComplexField& v,
                                                        bool mass_normalized = false) {
    const Grid& g = v.grid;
    double inv_mass = 1.0;
    if (mass_normalized) {
        double l2 = lp_norm(v, 2.0);
        if (!(l2 > 0)) throw std::invalid_argument("current_density: zero field");
        inv_mass = 1.0 / (l2 * l2);
    }
    std::vector<std::vector<double>> j(g.dim);
    for (int axis = 0; axis < g.dim; ++axis) {
        auto dv = spectral_derivative(g, v.values, axis);
        j[axis].resize(v.values.size());
        for (std::size_t i = 0; i < v.values.size(); ++i)
            j[axis][i] = std::imag(std::conj(v.values[i]) * dv[i]) * inv_mass;
    }
    return j;
}

/// S_sigma = (1/sigma)(|u|^{2 sigma} - 1) u - u ln|u|^2, the defect of the
/// rescaled power nonlinearity against its log limit. `taylor_mode`
/// evaluates the integral form sigma u (ln|u|^2)^2 int_0^1 (1-theta)
/// |u|^{2 theta sigma} dtheta by 64-point Gauss-Legendre instead.
inline std::vector<cdouble> source_term_sigma(const ComplexField& u, double sigma,
                                              double log_floor = 1e-30,
                                              bool taylor_mode = false) {
    if (!(sigma > 0)) throw std::invalid_argument("source_term_sigma: sigma must be positive");
    std::vector<cdouble> out(u.values.size());
    if (!taylor_mode) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            double rho = std::norm(u.values[i]);
            if (rho == 0.0) { out[i] = 0.0; continue; }
            double lr = std::log(std::max(rho, log_floor));
            out[i] = u.values[i] * (std::expm1(sigma * lr) / sigma - lr);
        }
        return out;
    }
    // 64-point Gauss-Legendre nodes/weights on [0, 1]
    static const int NQ = 64;
    static std::vector<double> node, weight;
    if (node.empty()) {
        node.resize(NQ);
        weight.resize(NQ);
        // Newton iteration on Legendre polynomials over [-1, 1]
        for (int i = 0; i < NQ; ++i) {
            double x = std::cos(M_PI * (i + 0.75) / (NQ + 0.5));
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= NQ; ++k) {
                    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                double dp = NQ * (x * p1 - p0) / (x * x - 1.0);
                double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= NQ; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = NQ * (x * p1 - p0) / (x * x - 1.0);
            node[i] = 0.5 * (x + 1.0);
            weight[i] = 1.0 / ((1.0 - x * x) * dp * dp);
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        double rho = std::norm(u.values[i]);
        if (rho == 0.0) { out[i] = 0.0; continue; }
        double lr = std::log(std::max(rho, log_floor));
        long double integral = 0.0L;
        for (int q = 0; q < NQ; ++q)
            integral += weight[q] * (1.0 - node[q]) * std::exp(node[q] * sigma * lr);
        out[i] = u.values[i] * (sigma * lr * lr * static_cast<double>(integral));
    }
    return out;
}

/// Pointwise Cauchy-Haraux inequality
/// |Im((z2 ln|z2|^2 - z1 ln|z1|^2)(conj z2 - conj z1))| <= 2 |z2 - z1|^2,
/// with z ln|z|^2 -> 0 at z = 0. Checked with 1e-12 slack.
inline bool ch_inequality_check(cdouble z1, cdouble z2) {
    auto f = [](cdouble z) {
        double rho = std::norm(z);
        return rho == 0.0 ? cdouble(0.0) : z * std::log(rho);
    };
    double lhs = std::abs(std::imag((f(z2) - f(z1)) * std::conj(z2 - z1)));
    double r2 = std::norm(z2 - z1);
    return lhs <= 2.0 * r2 + 1e-12;
}

// ---------------------------------------------------------------------------
// Frame maps (diagnostics; spectral off-grid evaluation, 1D only)
// ---------------------------------------------------------------------------

/// Maps a lab-frame field u(t, .) to the self-similar frame on v_grid:
/// v(y) = tau^{d/2} u(y tau) e^{-i (tau_dot/tau) |y tau|^2 / 2} e^{i gauge}.
inline ComplexField to_self_similar(const ComplexField& u, double tau, double tau_dot,
                                    const Grid& v_grid, double gauge_phase = 0.0) {
    if (u.grid.dim != 1 || v_grid.dim != 1)
        throw std::invalid_argument("to_self_similar: 1D only");
    std::vector<double> pts(v_grid.n);
    for (int j = 0; j < v_grid.n; ++j) pts[j] = v_grid.coord(j) * tau;
    auto samples = trig_interpolate_1d(u.grid, u.values, pts);
    ComplexField v(v_grid, Frame::SelfSimilar, u.time);
    double amp = std::sqrt(tau);
    for (int j = 0; j < v_grid.n; ++j) {
        double x = pts[j];
        double phase = -0.5 * (tau_dot / tau) * x * x + gauge_phase;
        v.values[j] = amp * samples[j] * cdouble(std::cos(phase), std::sin(phase));
    }
    return v;
}

/// Inverse map: u(x) = tau^{-d/2} v(x/tau) e^{i (tau_dot/tau) |x|^2/2} e^{-i gauge}.
inline ComplexField to_lab_frame(const ComplexField& v, double tau, double tau_dot,
                                 const Grid& u_grid, double gauge_phase = 0.0) {
    if (v.grid.dim != 1 || u_grid.dim != 1)
        throw std::invalid_argument("to_lab_frame: 1D only");
    std::vector<double> pts(u_grid.n);
    for (int j = 0; j < u_grid.n; ++j) pts[j] = u_grid.coord(j) / tau;
    auto samples = trig_interpolate_1d(v.grid, v.values, pts);
    ComplexField u(u_grid, Frame::Lab, v.time);
    double amp = 1.0 / std::sqrt(tau);
    for (int j = 0; j < u_grid.n; ++j) {
        double x = u_grid.coord(j);
        double phase = 0.5 * (tau_dot / tau) * x * x - gauge_phase;
        u.values[j] = amp * samples[j] * cdouble(std::cos(phase), std::sin(phase));
    }
    return u;
}

} // namespace nlslab
