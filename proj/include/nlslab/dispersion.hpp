#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlslab {

/// Member of the dispersion ODE family:
///   GenericPower:  r'' = alpha / (2 r^{alpha+1})
///   SigmaPower:    tau'' = 1 / (2 tau^{d sigma + 1})
///   Logarithmic:   tau'' = 1 / (2 tau)
/// all with r(0) = 1, r'(0) = 0.
struct OdeKind {
    enum class Family { GenericPower, SigmaPower, Logarithmic };
    Family family = Family::Logarithmic;
    double alpha = 0.0; // GenericPower exponent
    double sigma = 0.0; // SigmaPower parameter
    int dim = 1;        // SigmaPower spatial dimension

    static OdeKind generic_power(double alpha) {
        if (!(alpha > 0)) throw std::invalid_argument("OdeKind: alpha must be positive");
        return {Family::GenericPower, alpha, 0.0, 1};
    }
    static OdeKind sigma_power(double sigma, int dim) {
        if (dim != 1 && dim != 2) throw std::invalid_argument("OdeKind: dim must be 1 or 2");
        if (!(sigma > 0)) throw std::invalid_argument("OdeKind: sigma must be positive");
        return {Family::SigmaPower, 0.0, sigma, dim};
    }
    static OdeKind logarithmic() { return {Family::Logarithmic, 0.0, 0.0, 1}; }

    /// Right-hand side tau'' as a function of tau.
    double accel(double tau) const {
        switch (family) {
            case Family::GenericPower: return 0.5 * alpha * std::pow(tau, -(alpha + 1.0));
            case Family::SigmaPower: {
                double a = dim * sigma;
                return 0.5 * std::pow(tau, -(a + 1.0));
            }
            case Family::Logarithmic: return 0.5 / tau;
        }
        return 0.0;
    }

    /// First-integral defect at a sample. GenericPower: r'^2 - (1 - r^{-alpha}).
    /// SigmaPower is checked in the rescaled variables (alpha = d sigma),
    /// where the integral reads d*sigma*tau'^2 = 1 - tau^{-d sigma}; this keeps
    /// the residual O(1)-scaled for small sigma. Logarithmic: tau'^2 - ln tau.
    double first_integral_defect(double tau, double tau_dot) const {
        switch (family) {
            case Family::GenericPower:
                return tau_dot * tau_dot - (1.0 - std::pow(tau, -alpha));
            case Family::SigmaPower: {
                double a = dim * sigma;
                return a * tau_dot * tau_dot - (1.0 - std::pow(tau, -a));
            }
            case Family::Logarithmic:
                return tau_dot * tau_dot - std::log(tau);
        }
        return 0.0;
    }
};

struct SolverError : std::runtime_error {
    double last_good_time;
    SolverError(const std::string& what, double t)
        : std::runtime_error(what + " (last good time " + std::to_string(t) + ")"),
          last_good_time(t) {}
};

namespace detail {

/// Monotone cubic (Fritsch-Carlson) interpolant over a strictly
/// increasing knot sequence. Preserves monotonicity of the data.
class MonotoneCubic {
  public:
    MonotoneCubic() = default;
    MonotoneCubic(std::vector<double> xs, std::vector<double> ys)
        : x_(std::move(xs)), y_(std::move(ys)) {
        const std::size_t n = x_.size();
        if (n < 2) throw std::invalid_argument("MonotoneCubic: need >= 2 knots");
        std::vector<double> d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
        m_.assign(n, 0.0);
        m_[0] = d[0];
        m_[n - 1] = d[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (d[i - 1] * d[i] <= 0.0) {
                m_[i] = 0.0;
            } else {
                double w1 = 2.0 * (x_[i + 1] - x_[i]) + (x_[i] - x_[i - 1]);
                double w2 = (x_[i + 1] - x_[i]) + 2.0 * (x_[i] - x_[i - 1]);
                m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
            }
        }
        // Fritsch-Carlson limiter
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (d[i] == 0.0) {
                m_[i] = m_[i + 1] = 0.0;
            } else {
                double a = m_[i] / d[i], b = m_[i + 1] / d[i];
                double s = a * a + b * b;
                if (s > 9.0) {
                    double t = 3.0 / std::sqrt(s);
                    m_[i] = t * a * d[i];
                    m_[i + 1] = t * b * d[i];
                }
            }
        }
    }

    double operator()(double x) const {
        const std::size_t i = segment(x);
        double h = x_[i + 1] - x_[i];
        double t = (x - x_[i]) / h;
        double t2 = t * t, t3 = t2 * t;
        double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
    }

    double front() const { return x_.front(); }
    double back() const { return x_.back(); }

  private:
    std::size_t segment(double x) const {
        if (x < x_.front() || x > x_.back() * (1.0 + 1e-12) + 1e-300)
            throw std::out_of_range("MonotoneCubic: query outside knot range");
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = static_cast<std::size_t>(it - x_.begin());
        if (i == 0) return 0;
        if (i >= x_.size()) return x_.size() - 2;
        return i - 1;
    }

    std::vector<double> x_, y_, m_;
};

} // namespace detail

/// Solution samples of one dispersion ODE, at every accepted integrator
/// step (plus any requested sample times, which the integrator lands on
/// exactly). Immutable after construction.
struct DispersionCurve {
    OdeKind kind;
    double tol = 0.0; // requested tolerance
    std::vector<double> times;
    std::vector<double> tau;
    std::vector<double> tau_dot;

    double t_end() const { return times.back(); }

    double tau_at(double t) const { return tau_interp_(t); }
    double tau_dot_at(double t) const { return tau_dot_interp_(t); }

    /// Integral of 1/(2 tau^2) over [a, b], the exact kinetic phase
    /// coefficient of one self-similar substep. Composite Simpson over
    /// the monotone cubic interpolant, subdivided on curve knots.
    double kinetic_coefficient(double a, double b) const {
        return integrate_(a, b, [this](double t) {
            double ta = tau_at(t);
            return 0.5 / (ta * ta);
        });
    }

    /// Integral of tau^{-p} over [a, b] (gauge phase bookkeeping).
    double integral_tau_power(double a, double b, double p) const {
        return integrate_(a, b, [this, p](double t) { return std::pow(tau_at(t), -p); });
    }

    /// Integral of ln tau over [a, b] (logarithmic gauge phase).
    double integral_log_tau(double a, double b) const {
        return integrate_(a, b, [this](double t) { return std::log(tau_at(t)); });
    }

    void build_interpolants() {
        tau_interp_ = detail::MonotoneCubic(times, tau);
        tau_dot_interp_ = detail::MonotoneCubic(times, tau_dot);
    }

  private:
    template <typename F>
    double integrate_(double a, double b, F&& f) const {
        if (!(a <= b)) throw std::invalid_argument("DispersionCurve: bad integration range");
        if (b > t_end() * (1 + 1e-12))
            throw SolverError("DispersionCurve: range not covered by curve", t_end());
        // knots within (a, b) as Simpson panel boundaries
        long double acc = 0.0L;
        auto lo = std::upper_bound(times.begin(), times.end(), a);
        double left = a;
        auto panel = [&](double x0, double x1) {
            double mid = 0.5 * (x0 + x1);
            acc += (x1 - x0) / 6.0L *
                   (static_cast<long double>(f(x0)) + 4.0L * f(mid) + f(x1));
        };
        for (auto it = lo; it != times.end() && *it < b; ++it) {
            panel(left, *it);
            left = *it;
        }
        if (left < b) panel(left, b);
        return static_cast<double>(acc);
    }

    detail::MonotoneCubic tau_interp_, tau_dot_interp_;
};

/// Per-sample first-integral residual |defect| of a curve.
inline std::vector<double> first_integral_residual(const DispersionCurve& c) {
    std::vector<double> r(c.times.size());
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = std::abs(c.kind.first_integral_defect(c.tau[i], c.tau_dot[i]));
    return r;
}

namespace detail {

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
    static constexpr std::array<double, 7> c = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static constexpr std::array<std::array<double, 6>, 7> a = {{
        {},
        {1.0 / 5},
        {3.0 / 40, 9.0 / 40},
        {44.0 / 45, -56.0 / 15, 32.0 / 9},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
        {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
    }};
    static constexpr std::array<double, 7> b5 = {35.0 / 384,      0.0,  500.0 / 1113, 125.0 / 192,
                                                 -2187.0 / 6784, 11.0 / 84, 0.0};
    static constexpr std::array<double, 7> b4 = {5179.0 / 57600,    0.0,        7571.0 / 16695,
                                                 393.0 / 640,       -92097.0 / 339200,
                                                 187.0 / 2100,      1.0 / 40};
};

} // namespace detail

/// Integrates the second-order dispersion ODE with an embedded adaptive
/// Dormand-Prince 5(4) pair on (tau, tau_dot). The first integral is
/// never enforced; it stays available as an a posteriori residual.
///
/// `sample_times` (strictly increasing, within (0, t_end]) are landed on
/// exactly by step clamping. The internal local tolerance runs two
/// orders below `tol` so the accumulated drift stays below the 10*tol
/// residual contract.
inline DispersionCurve solve_dispersion(const OdeKind& kind, double t_end, double tol,
                                        const std::vector<double>& sample_times = {}) {
    if (!(t_end > 0)) throw std::invalid_argument("solve_dispersion: t_end must be positive");
    if (!(tol > 1e-14 && tol < 1e-4))
        throw std::invalid_argument("solve_dispersion: tol must lie in (1e-14, 1e-4)");
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
        if (sample_times[i] <= 0 || sample_times[i] > t_end * (1 + 1e-12) ||
            (i > 0 && sample_times[i] <= sample_times[i - 1]))
            throw std::invalid_argument("solve_dispersion: sample_times must be increasing in (0, t_end]");
    }

    const double rtol = tol * 1e-2;
    const double atol = tol * 1e-2;
    using detail::Dopri5;

    DispersionCurve curve;
    curve.kind = kind;
    curve.tol = tol;

    double t = 0.0;
    std::array<double, 2> y = {1.0, 0.0};
    auto f = [&kind](double, const std::array<double, 2>& s) {
        return std::array<double, 2>{s[1], kind.accel(s[0])};
    };

    curve.times.push_back(0.0);
    curve.tau.push_back(1.0);
    curve.tau_dot.push_back(0.0);

    double h = 1e-6; // small launch step: tau_dot ~ t near 0
    std::size_t next_sample = 0;
    const double hmin_rel = 1e-15;
    long max_steps = 20'000'000;
    double err_prev = 1.0;

    while (t < t_end) {
        if (--max_steps < 0) throw SolverError("solve_dispersion: step budget exhausted", t);
        double target = t_end;
        if (next_sample < sample_times.size()) target = std::min(target, sample_times[next_sample]);
        bool clamped = false;
        const double h_free = h;
        if (t + h >= target) {
            h = target - t;
            clamped = true;
        }
        if (h < hmin_rel * std::max(1.0, std::abs(t)))
            throw SolverError("solve_dispersion: step size underflow", t);

        std::array<std::array<double, 2>, 7> k;
        k[0] = f(t, y);
        bool rejected_nan = false;
        for (int i = 1; i < 7; ++i) {
            std::array<double, 2> yi = y;
            for (int j = 0; j < i; ++j) {
                yi[0] += h * Dopri5::a[i][j] * k[j][0];
                yi[1] += h * Dopri5::a[i][j] * k[j][1];
            }
            if (!(yi[0] > 0)) { rejected_nan = true; break; } // tau must stay positive
            k[i] = f(t + Dopri5::c[i] * h, yi);
        }
        if (rejected_nan) {
            h *= 0.2;
            continue;
        }
        std::array<double, 2> y5 = y, y4 = y;
        for (int i = 0; i < 7; ++i) {
            y5[0] += h * Dopri5::b5[i] * k[i][0];
            y5[1] += h * Dopri5::b5[i] * k[i][1];
            y4[0] += h * Dopri5::b4[i] * k[i][0];
            y4[1] += h * Dopri5::b4[i] * k[i][1];
        }
        double err = 0.0;
        for (int i = 0; i < 2; ++i) {
            double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
            double e = (y5[i] - y4[i]) / sc;
            err += e * e;
        }
        err = std::sqrt(0.5 * err);

        if (err <= 1.0 && y5[0] > 0) {
            t += h;
            if (clamped) t = target; // land exactly, error is sub-ulp
            y = y5;
            curve.times.push_back(t);
            curve.tau.push_back(y[0]);
            curve.tau_dot.push_back(y[1]);
            if (clamped && next_sample < sample_times.size() &&
                target == sample_times[next_sample])
                ++next_sample;
            if (clamped) {
                h = h_free; // clamped step says nothing about the error scale
            } else {
                // PI step controller (order 5)
                double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.7 / 5.0) *
                             std::pow(err_prev, 0.4 / 5.0);
                err_prev = std::max(err, 1e-10);
                h *= std::clamp(fac, 0.2, 5.0);
            }
        } else {
            h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
        }
    }

    curve.build_interpolants();

    // residual contract: <= 10*tol at every sample
    auto res = first_integral_residual(curve);
    double worst = *std::max_element(res.begin(), res.end());
    if (worst > 10.0 * tol)
        throw SolverError("solve_dispersion: tolerance unachievable, residual " +
                              std::to_string(worst),
                          t_end);
    return curve;
}

/// Gap w = tau_0 - tau_sigma and wdot, evaluated on t_grid by landing
/// both integrations exactly on the grid points.
struct TauGap {
    std::vector<double> t;
    std::vector<double> w;
    std::vector<double> w_dot;
};

inline TauGap tau_gap(double sigma, int dim, const std::vector<double>& t_grid,
                      double tol = 1e-12) {
    if (!(sigma > 0 && sigma < 1.0 / (2 * dim)))
        throw std::invalid_argument("tau_gap: sigma must lie in (0, 1/(2d))");
    if (t_grid.empty()) throw std::invalid_argument("tau_gap: empty grid");
    double t_end = t_grid.back();
    auto log_curve = solve_dispersion(OdeKind::logarithmic(), t_end, tol, t_grid);
    auto sig_curve = solve_dispersion(OdeKind::sigma_power(sigma, dim), t_end, tol, t_grid);
    TauGap gap;
    gap.t = t_grid;
    gap.w.reserve(t_grid.size());
    gap.w_dot.reserve(t_grid.size());
    std::size_t i0 = 0, i1 = 0;
    for (double t : t_grid) {
        while (i0 < log_curve.times.size() && log_curve.times[i0] < t * (1 - 1e-14)) ++i0;
        while (i1 < sig_curve.times.size() && sig_curve.times[i1] < t * (1 - 1e-14)) ++i1;
        gap.w.push_back(log_curve.tau[i0] - sig_curve.tau[i1]);
        gap.w_dot.push_back(log_curve.tau_dot[i0] - sig_curve.tau_dot[i1]);
    }
    return gap;
}

/// Compactified time s_sigma(t); monotone increasing with limit s_max.
inline double s_max(double sigma, int dim) {
    double a = dim * sigma;
    // the closed forms need d*sigma < 1; the sigma -> 0 experiments use
    // the tighter standing range sigma < 1/(2d)
    if (!(a > 0 && a < 1.0)) throw std::invalid_argument("s_max: need d*sigma in (0, 1)");
    return -std::log(a) / (4.0 * (1.0 - a));
}

inline double s_of_t(double sigma, int dim, const DispersionCurve& curve, double t) {
    double a = dim * sigma;
    if (!(a > 0 && a < 1.0)) throw std::invalid_argument("s_of_t: need d*sigma in (0, 1)");
    if (!(t > 0)) throw std::domain_error("s_of_t: t must be positive (s(0) = -inf)");
    double tau = curve.tau_at(t);
    return std::log((1.0 - std::pow(tau, -a)) / a) / (4.0 * (1.0 - a));
}

/// Closed form tau as a function of s; diverges as s -> s_max.
inline double tau_tilde(double sigma, int dim, double s) {
    double a = dim * sigma;
    if (!(a > 0 && a < 1.0)) throw std::invalid_argument("tau_tilde: need d*sigma in (0, 1)");
    if (!(s < s_max(sigma, dim))) throw std::domain_error("tau_tilde: s must be below s_max");
    double inner = 1.0 - a * std::exp(4.0 * s * (1.0 - a));
    return std::pow(inner, -1.0 / a);
}

/// Scattering threshold sigma_0(d) = (2 - d + sqrt(d^2 + 12 d + 4)) / (4 d).
inline double sigma0(int dim) {
    if (dim < 1) throw std::invalid_argument("sigma0: dim must be >= 1");
    double d = dim;
    return (2.0 - d + std::sqrt(d * d + 12.0 * d + 4.0)) / (4.0 * d);
}

/// H^1 continuity rate: inf over |nu - sigma| <= eta of
/// min(1, nu (2 - (d-2) nu) / (nu + 1 - d nu^2)).
inline double theta_rate(double sigma, int dim, double eta) {
    double lo = sigma - eta, hi = sigma + eta;
    double cap = dim <= 2 ? std::numeric_limits<double>::infinity() : 2.0 / (dim - 2);
    if (!(lo > 0 && hi < cap))
        throw std::invalid_argument("theta_rate: interval leaves the admissible range");
    auto value = [dim](double nu) {
        double denom = nu + 1.0 - dim * nu * nu;
        if (!(denom > 0)) throw std::invalid_argument("theta_rate: denominator not positive");
        return std::min(1.0, nu * (2.0 - (dim - 2.0) * nu) / denom);
    };
    // dense sampling; the expression is smooth so endpoint/minimum
    // refinement at this resolution is well below 1e-10
    const int samples = 20001;
    double best = value(lo);
    for (int i = 1; i < samples; ++i) {
        double nu = lo + (hi - lo) * i / (samples - 1);
        best = std::min(best, value(nu));
    }
    return best;
}

} // namespace nlslab
