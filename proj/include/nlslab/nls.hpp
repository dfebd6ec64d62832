#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "nlslab/fft.hpp"
#include "nlslab/field.hpp"
#include "nlslab/norms.hpp"

namespace nlslab {

/// Defocusing model on the lab frame:
///   Power:          i u_t + (1/2) Lap u = |u|^{2 sigma} u
///   RescaledPower:  i u_t + (1/2) Lap u = (|u|^{2 sigma} - 1) u / sigma
///   Log:            i u_t + (1/2) Lap u = u ln |u|^2
struct Model {
    enum class Kind { Power, RescaledPower, Log };
    Kind kind = Kind::Power;
    double sigma = 1.0;

    static Model power(double sigma) { return make(Kind::Power, sigma); }
    static Model rescaled_power(double sigma) { return make(Kind::RescaledPower, sigma); }
    static Model log() { return Model{Kind::Log, 0.0}; }

    void validate(int dim) const {
        if (kind == Kind::Log) return;
        double cap = dim <= 2 ? std::numeric_limits<double>::infinity() : 2.0 / (dim - 2);
        if (!(sigma > 0 && sigma < cap))
            throw std::invalid_argument("Model: sigma outside the energy-subcritical range");
    }

  private:
    static Model make(Kind k, double sigma) {
        if (!(sigma > 0)) throw std::invalid_argument("Model: sigma must be positive");
        return Model{k, sigma};
    }
};

/// Pointwise phase rate g(rho) of the nonlinear substep, rho = |u|^2.
/// The substep is the exact flow of i u_t = g(rho) u, a modulus-preserving
/// rotation u -> u e^{-i dt g(rho)}. The log floor regularizes ln alone;
/// energies use rho ln rho which needs no floor.
inline double phase_rate(const Model& m, double rho, double log_floor) {
    switch (m.kind) {
        case Model::Kind::Power: return std::pow(rho, m.sigma);
        case Model::Kind::RescaledPower: {
            double lr = std::log(std::max(rho, log_floor));
            return std::expm1(m.sigma * lr) / m.sigma;
        }
        case Model::Kind::Log: return std::log(std::max(rho, log_floor));
    }
    return 0.0;
}

struct EvolutionConfig {
    double dt = 2e-3;
    double t_end = 1.0;
    std::vector<double> probe_times; // sorted, within [0, t_end]
    double log_floor = 1e-30;
    double boundary_tol = 1e-8; // max boundary mass fraction per probe
    bool check_boundary = true;

    void validate() const {
        if (!(dt > 0)) throw std::invalid_argument("EvolutionConfig: dt must be positive");
        if (!(log_floor >= 1e-300 && log_floor <= 1e-12))
            throw std::invalid_argument("EvolutionConfig: log_floor outside [1e-300, 1e-12]");
        for (std::size_t i = 0; i < probe_times.size(); ++i) {
            if (probe_times[i] < 0 || probe_times[i] > t_end ||
                (i > 0 && probe_times[i] < probe_times[i - 1]))
                throw std::invalid_argument("EvolutionConfig: probe_times must be sorted in [0, t_end]");
        }
    }
};

namespace detail {

inline void nonlinear_phase(ComplexField& u, const Model& m, double dt, double log_floor) {
    for (auto& v : u.values) {
        double rho = std::norm(v);
        if (rho == 0.0 && m.kind == Model::Kind::Power) continue;
        double phase = dt * phase_rate(m, rho, log_floor);
        v *= cdouble(std::cos(phase), -std::sin(phase));
    }
}

inline void kinetic_step(ComplexField& u, double dt) {
    apply_multiplier(u.grid, u.values, [dt](double xix, double xiy) {
        double k2 = xix * xix + xiy * xiy;
        double phase = 0.5 * dt * k2;
        return cdouble(std::cos(phase), -std::sin(phase));
    });
}

} // namespace detail

/// One Strang step: half nonlinear phase, full kinetic multiplier
/// e^{-i dt |xi|^2 / 2}, half nonlinear phase. |u| is preserved pointwise
/// by the phase substeps; the kinetic substep preserves the discrete L^2
/// norm up to rounding.
inline void step_strang(ComplexField& u, double dt, const Model& m,
                        double log_floor = 1e-30) {
    if (u.frame != Frame::Lab) throw std::invalid_argument("step_strang: lab frame only");
    detail::nonlinear_phase(u, m, 0.5 * dt, log_floor);
    detail::kinetic_step(u, dt);
    detail::nonlinear_phase(u, m, 0.5 * dt, log_floor);
    u.time += dt;
}

/// Conserved energy of the model. Gradient via spectral differentiation;
/// the log integrand uses rho ln rho with 0 ln 0 = 0.
inline double energy(const ComplexField& u, const Model& m) {
    double kin = gradient_norm(u);
    long double pot = 0.0L;
    switch (m.kind) {
        case Model::Kind::Power:
            for (const auto& v : u.values) pot += std::pow(std::norm(v), m.sigma + 1.0);
            pot /= (m.sigma + 1.0);
            break;
        case Model::Kind::RescaledPower:
            // (rho^{1+sigma} - rho) / (sigma (1+sigma)); -> rho ln rho as sigma -> 0
            for (const auto& v : u.values) {
                double rho = std::norm(v);
                if (rho > 0.0)
                    pot += rho * std::expm1(m.sigma * std::log(rho)) / (m.sigma * (m.sigma + 1.0));
            }
            break;
        case Model::Kind::Log:
            for (const auto& v : u.values) {
                double rho = std::norm(v);
                if (rho > 0.0) pot += rho * std::log(rho);
            }
            break;
    }
    return 0.5 * kin * kin + static_cast<double>(pot) * u.grid.cell_volume();
}

/// Potential part of the energy alone (same integrands as energy()).
inline double potential_energy(const ComplexField& u, const Model& m) {
    double kin = gradient_norm(u);
    return energy(u, m) - 0.5 * kin * kin;
}

/// || (x + i t grad) u ||_{L^2}. The factorized path evaluates
/// i t e^{i|x|^2/2t} grad(e^{-i|x|^2/2t} u) and is available for t != 0
/// as an independent cross-check of the direct formula.
inline double j_norm(const ComplexField& u, double t, bool via_factorization = false) {
    const Grid& g = u.grid;
    if (via_factorization) {
        if (t == 0.0) throw std::invalid_argument("j_norm: factorized path needs t != 0");
        std::vector<cdouble> w(u.values.size());
        auto chirp = [&](std::size_t idx, double r2) {
            double phase = r2 / (2.0 * t);
            return cdouble(std::cos(phase), -std::sin(phase)) * u.values[idx];
        };
        if (g.dim == 1) {
            for (int j = 0; j < g.n; ++j) {
                double x = g.coord(j);
                w[j] = chirp(j, x * x);
            }
        } else {
            for (int jx = 0; jx < g.n; ++jx)
                for (int jy = 0; jy < g.n; ++jy) {
                    double x = g.coord(jx), y = g.coord(jy);
                    w[g.index2(jx, jy)] = chirp(g.index2(jx, jy), x * x + y * y);
                }
        }
        long double acc = 0.0L;
        for (int axis = 0; axis < g.dim; ++axis) {
            auto dw = spectral_derivative(g, w, axis);
            // |i t e^{i...} dw| = |t| |dw|
            for (const auto& v : dw) acc += t * t * std::norm(v);
        }
        return std::sqrt(static_cast<double>(acc) * g.cell_volume());
    }
    long double acc = 0.0L;
    for (int axis = 0; axis < g.dim; ++axis) {
        auto du = spectral_derivative(g, u.values, axis);
        if (g.dim == 1) {
            for (int j = 0; j < g.n; ++j) {
                cdouble w = g.coord(j) * u.values[j] + cdouble(0.0, t) * du[j];
                acc += std::norm(w);
            }
        } else {
            for (int jx = 0; jx < g.n; ++jx)
                for (int jy = 0; jy < g.n; ++jy) {
                    auto idx = g.index2(jx, jy);
                    double x = axis == 0 ? g.coord(jx) : g.coord(jy);
                    cdouble w = x * u.values[idx] + cdouble(0.0, t) * du[idx];
                    acc += std::norm(w);
                }
        }
    }
    return std::sqrt(static_cast<double>(acc) * g.cell_volume());
}

/// Pseudoconformal pair: Q(t) = (1/2)||J u||^2 + (t^2/(sigma+1)) ||u||^{2s+2}
/// and R(t) = (t/(sigma+1)) (2 - d sigma) ||u||^{2s+2}; the law states
/// dQ/dt = R along the Power flow.
struct PseudoconformalProbe {
    double quantity;
    double rhs;
};

inline PseudoconformalProbe pseudoconformal_probe(const ComplexField& u, double t,
                                                  double sigma) {
    double jn = j_norm(u, t);
    double p = 2.0 * sigma + 2.0;
    double up = std::pow(lp_norm(u, p), p);
    int d = u.grid.dim;
    double q = 0.5 * jn * jn + t * t / (sigma + 1.0) * up;
    double r = t / (sigma + 1.0) * (2.0 - d * sigma) * up;
    return {q, r};
}

/// e^{-i (t/2) Lap} u: pulls a state back along the free group.
inline ComplexField free_pullback(const ComplexField& u, double t) {
    if (u.frame != Frame::Lab) throw std::invalid_argument("free_pullback: lab frame only");
    ComplexField out = u;
    apply_multiplier(out.grid, out.values, [t](double xix, double xiy) {
        double phase = 0.5 * t * (xix * xix + xiy * xiy);
        return cdouble(std::cos(phase), std::sin(phase));
    });
    return out;
}

/// Free propagator e^{+i (t/2) Lap} (test helper and scattering probe).
inline ComplexField free_evolve(const ComplexField& u, double t) {
    return free_pullback(u, -t);
}

struct ProbeRecord {
    double t = 0;
    double mass = 0;
    double energy = 0;
    double j_norm = 0;
    double pc_quantity = 0;
    double pc_rhs = 0;
    double kinetic = 0;
    double potential_term = 0;
    double boundary_mass = 0;
};

inline ProbeRecord probe_record(const ComplexField& u, const Model& m) {
    ProbeRecord r;
    r.t = u.time;
    double l2 = lp_norm(u, 2.0);
    r.mass = l2 * l2;
    double gn = gradient_norm(u);
    r.kinetic = 0.5 * gn * gn;
    r.energy = energy(u, m);
    r.potential_term = r.energy - r.kinetic;
    r.j_norm = j_norm(u, u.time);
    if (m.kind == Model::Kind::Power) {
        auto pc = pseudoconformal_probe(u, u.time, m.sigma);
        r.pc_quantity = pc.quantity;
        r.pc_rhs = pc.rhs;
    }
    r.boundary_mass = boundary_mass_fraction(u);
    return r;
}

struct EvolutionResult {
    std::vector<ProbeRecord> records;
    ComplexField final_field;
};

/// Fixed-dt Strang driver with probe records. Steps land exactly on each
/// probe time (dt is shrunk per interval to divide it evenly, never
/// enlarged). Deterministic given inputs. Aborts on NaN with the last
/// good time; a boundary-mass violation at a probe fails the run.
inline EvolutionResult evolve(const ComplexField& field, const Model& m,
                              const EvolutionConfig& config) {
    config.validate();
    m.validate(field.grid.dim);
    EvolutionResult out;
    out.final_field = field;
    ComplexField& u = out.final_field;

    std::vector<double> stops = config.probe_times;
    if (stops.empty() || stops.back() < config.t_end) stops.push_back(config.t_end);

    auto emit = [&](double t_label) {
        u.time = t_label;
        ProbeRecord r = probe_record(u, m);
        if (config.check_boundary && r.boundary_mass > config.boundary_tol)
            throw std::runtime_error("evolve: boundary mass " + std::to_string(r.boundary_mass) +
                                     " exceeds tolerance at t = " + std::to_string(t_label));
        out.records.push_back(r);
    };

    double t = 0.0;
    u.time = 0.0;
    std::size_t next = 0;
    if (!config.probe_times.empty() && config.probe_times[0] == 0.0) {
        emit(0.0);
        ++next;
    }
    for (; next < stops.size(); ++next) {
        double target = stops[next];
        double span = target - t;
        if (span > 0) {
            long nsteps = static_cast<long>(std::ceil(span / config.dt - 1e-12));
            double h = span / nsteps;
            for (long i = 0; i < nsteps; ++i) {
                step_strang(u, h, m, config.log_floor);
                if ((i & 63) == 0 && !u.finite())
                    throw std::runtime_error("evolve: NaN detected near t = " +
                                             std::to_string(t + i * h));
            }
            if (!u.finite())
                throw std::runtime_error("evolve: NaN detected at t = " + std::to_string(target));
            t = target;
        }
        bool is_probe = false;
        for (double p : config.probe_times)
            if (p == target) is_probe = true;
        if (is_probe) emit(target);
    }
    u.time = config.t_end;
    return out;
}

/// Gaussian datum A e^{-a |x|^2 / 2 + i b |x|^2 / 2 + i k . x}.
/// Closed-form Sigma quantities for d = 1, k = 0, A real:
///   mass = A^2 sqrt(pi/a), ||x phi||^2 = mass / (2a),
///   ||phi'||^2 = mass (a^2 + b^2) / (2a).
inline ComplexField gaussian_field(const Grid& g, double amplitude, double a, double b = 0.0,
                                   double kx = 0.0, double ky = 0.0) {
    if (!(a > 0)) throw std::invalid_argument("gaussian_field: a must be positive");
    ComplexField u(g, Frame::Lab, 0.0);
    if (g.dim == 1) {
        for (int j = 0; j < g.n; ++j) {
            double x = g.coord(j);
            double phase = 0.5 * b * x * x + kx * x;
            u.values[j] = amplitude * std::exp(-0.5 * a * x * x) *
                          cdouble(std::cos(phase), std::sin(phase));
        }
    } else {
        for (int jx = 0; jx < g.n; ++jx)
            for (int jy = 0; jy < g.n; ++jy) {
                double x = g.coord(jx), y = g.coord(jy);
                double r2 = x * x + y * y;
                double phase = 0.5 * b * r2 + kx * x + ky * y;
                u.values[g.index2(jx, jy)] = amplitude * std::exp(-0.5 * a * r2) *
                                             cdouble(std::cos(phase), std::sin(phase));
            }
    }
    return u;
}

} // namespace nlslab
