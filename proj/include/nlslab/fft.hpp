#pragma once

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include <fftw3.h>

#include "nlslab/grid.hpp"

namespace nlslab {

using cdouble = std::complex<double>;

namespace detail {

/// Process-wide FFTW plan cache. Plans are created once per (dim, n,
/// direction) with FFTW_ESTIMATE|FFTW_UNALIGNED so they can be executed
/// on any caller array via fftw_execute_dft. Creation is serialized
/// (FFTW planning is not thread safe); execution is.
class PlanCache {
  public:
    static PlanCache& instance() {
        static PlanCache c;
        return c;
    }

    fftw_plan get(int dim, int n, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_tuple(dim, n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::size_t total = dim == 1 ? static_cast<std::size_t>(n)
                                     : static_cast<std::size_t>(n) * n;
        std::vector<cdouble> scratch(total);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan p = dim == 1 ? fftw_plan_dft_1d(n, buf, buf, sign, flags)
                               : fftw_plan_dft_2d(n, n, buf, buf, sign, flags);
        plans_.emplace(key, p);
        return p;
    }

    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

  private:
    PlanCache() = default;
    ~PlanCache() {
        for (auto& [k, p] : plans_) fftw_destroy_plan(p);
    }
    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

} // namespace detail

/// In-place unnormalized forward DFT (sum_j u_j e^{-2*pi*i*k*j/n}).
inline void fft_forward(const Grid& g, std::vector<cdouble>& values) {
    auto* buf = reinterpret_cast<fftw_complex*>(values.data());
    fftw_execute_dft(detail::PlanCache::instance().get(g.dim, g.n, FFTW_FORWARD),
                     buf, buf);
}

/// In-place unnormalized backward DFT. forward-then-inverse scales by n^dim.
inline void fft_inverse(const Grid& g, std::vector<cdouble>& values) {
    auto* buf = reinterpret_cast<fftw_complex*>(values.data());
    fftw_execute_dft(detail::PlanCache::instance().get(g.dim, g.n, FFTW_BACKWARD),
                     buf, buf);
}

/// Applies the Fourier multiplier m(xi) in place:
/// u <- F^{-1}[ m(xi) F[u] ] with the 1/n^dim normalization folded in.
/// The callable receives the per-axis wavenumbers (xi_x[, xi_y]).
template <typename Multiplier>
void apply_multiplier(const Grid& g, std::vector<cdouble>& values, Multiplier&& m) {
    fft_forward(g, values);
    const double scale = 1.0 / static_cast<double>(g.size());
    if (g.dim == 1) {
        for (int j = 0; j < g.n; ++j) values[j] *= m(g.xi(j), 0.0) * scale;
    } else {
        for (int jx = 0; jx < g.n; ++jx) {
            const double xix = g.xi(jx);
            for (int jy = 0; jy < g.n; ++jy)
                values[g.index2(jx, jy)] *= m(xix, g.xi(jy)) * scale;
        }
    }
    fft_inverse(g, values);
}

/// Spectral partial derivative along `axis`. The Nyquist mode is zeroed
/// (odd multiplier has no symmetric partner there).
inline std::vector<cdouble> spectral_derivative(const Grid& g,
                                                const std::vector<cdouble>& values,
                                                int axis = 0) {
    std::vector<cdouble> out = values;
    const int nyq = -g.n / 2;
    apply_multiplier(g, out, [&](double xix, double xiy) {
        double xi = axis == 0 ? xix : xiy;
        double cap = M_PI * nyq / g.half_width;
        if (xi == cap) return cdouble(0.0, 0.0);
        return cdouble(0.0, xi);
    });
    return out;
}

/// Evaluates the trigonometric interpolant of `values` at arbitrary
/// points (1D). Points outside [-L, L) evaluate to zero rather than
/// wrapping; callers rely on boundary decay. O(n * n_points).
inline std::vector<cdouble> trig_interpolate_1d(const Grid& g,
                                                const std::vector<cdouble>& values,
                                                const std::vector<double>& points) {
    std::vector<cdouble> coef = values;
    fft_forward(g, coef);
    const double scale = 1.0 / g.n;
    std::vector<cdouble> out(points.size(), cdouble(0.0));
    for (std::size_t p = 0; p < points.size(); ++p) {
        const double x = points[p];
        if (x < -g.half_width || x >= g.half_width) continue;
        cdouble acc(0.0);
        for (int j = 0; j < g.n; ++j) {
            int k = g.mode_index(j);
            if (k == -g.n / 2) {
                // split the unpaired Nyquist mode into cos form
                acc += coef[j] * std::cos(g.xi(j) * (x + g.half_width));
            } else {
                double phase = g.xi(j) * (x + g.half_width);
                acc += coef[j] * cdouble(std::cos(phase), std::sin(phase));
            }
        }
        out[p] = acc * scale;
    }
    return out;
}

} // namespace nlslab
