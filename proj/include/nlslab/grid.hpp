#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlslab {

/// Uniform periodic lattice on [-L, L)^dim with its Fourier mode table.
///
/// Conventions: n points per axis (power of two), spacing dx = 2L/n,
/// grid points x_j = -L + j*dx, wavenumbers xi_k = pi*k/L for
/// k in {-n/2, ..., n/2-1}. The mode table is antisymmetric up to the
/// (unpaired) Nyquist mode k = -n/2.
struct Grid {
    int dim = 1;           // 1 or 2
    int n = 0;             // points per axis
    double half_width = 0; // L
    double dx = 0;         // 2L/n

    std::size_t size() const {
        std::size_t s = static_cast<std::size_t>(n);
        return dim == 1 ? s : s * s;
    }

    double coord(int idx) const { return -half_width + idx * dx; }

    /// Signed wavenumber index for storage index j (FFT layout).
    int mode_index(int j) const { return j < n / 2 ? j : j - n; }

    /// xi_k = pi*k/L at storage index j.
    double xi(int j) const {
        return M_PI * static_cast<double>(mode_index(j)) / half_width;
    }

    /// Largest resolvable |xi| (Nyquist).
    double xi_max() const { return M_PI * (n / 2) / half_width; }

    /// Row-major flattening for dim == 2.
    std::size_t index2(int ix, int iy) const {
        return static_cast<std::size_t>(ix) * n + iy;
    }

    double cell_volume() const { return dim == 1 ? dx : dx * dx; }

    bool operator==(const Grid& o) const {
        return dim == o.dim && n == o.n && half_width == o.half_width;
    }
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline Grid make_grid(int dim, int n, double half_width) {
    if (dim != 1 && dim != 2)
        throw std::invalid_argument("make_grid: dim must be 1 or 2");
    if (n < 8 || !is_power_of_two(n))
        throw std::invalid_argument("make_grid: n must be a power of two >= 8, got " +
                                    std::to_string(n));
    if (!(half_width > 0))
        throw std::invalid_argument("make_grid: half_width must be positive");
    Grid g;
    g.dim = dim;
    g.n = n;
    g.half_width = half_width;
    g.dx = 2.0 * half_width / n;
    return g;
}

/// Per-axis mode table xi_k, k = -n/2..n/2-1, in FFT storage order.
inline std::vector<double> mode_table(const Grid& g) {
    std::vector<double> m(g.n);
    for (int j = 0; j < g.n; ++j) m[j] = g.xi(j);
    return m;
}

} // namespace nlslab
