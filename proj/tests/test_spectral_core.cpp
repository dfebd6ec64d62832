#include <catch2/catch_amalgamated.hpp>

#include "nlslab/fft.hpp"
#include "nlslab/field.hpp"
#include "nlslab/grid.hpp"
#include "nlslab/nls.hpp"
#include "nlslab/norms.hpp"
#include "test_util.hpp"

#include <cstdio>
#include <filesystem>

using namespace nlslab;
using Catch::Approx;

TEST_CASE("make_grid basics and preconditions", "[spectral]") {
    Grid g = make_grid(1, 8, 4.0);
    CHECK(g.dx == Approx(1.0));
    // modes xi = pi k / 4 for k = -4..3
    CHECK(g.xi(1) == Approx(M_PI / 4.0));
    CHECK(g.xi(7) == Approx(-M_PI / 4.0));
    CHECK(g.xi(4) == Approx(-M_PI)); // Nyquist

    Grid gp = make_grid(1, 8, M_PI);
    CHECK(gp.dx == Approx(M_PI / 4.0));
    CHECK(gp.xi(1) == Approx(1.0)); // lowest positive mode

    CHECK_THROWS_AS(make_grid(1, 1000, 4.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1, 4, 4.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1, 256, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(3, 256, 4.0), std::invalid_argument);

    // mode table antisymmetric up to the Nyquist mode
    auto modes = mode_table(g);
    for (int k = 1; k < g.n / 2; ++k) CHECK(modes[k] == Approx(-modes[g.n - k]));
}

TEST_CASE("lp_norm on closed forms", "[spectral]") {
    Grid g = make_grid(1, 256, 4.0);
    ComplexField ones(g);
    for (auto& v : ones.values) v = 1.0;
    CHECK(lp_norm(ones, 2.0) == Approx(std::sqrt(8.0)).epsilon(1e-12));
    CHECK(lp_norm(ones, std::numeric_limits<double>::infinity()) == Approx(1.0));

    ComplexField zero(g);
    CHECK(lp_norm(zero, 1.0) == 0.0);
    CHECK(lp_norm(zero, 2.0) == 0.0);

    // Gaussian e^{-x^2/2}: ||u||_2 = pi^{1/4} (frozen from the integral
    // of e^{-x^2}; quadrature oracle cross-checks the truncation)
    Grid g2 = make_grid(1, 1024, 16.0);
    ComplexField u = gaussian_field(g2, 1.0, 1.0);
    const double pi_quarter = 1.3313353638003897;
    CHECK(lp_norm(u, 2.0) == Approx(pi_quarter).margin(1e-8));
    double oracle = std::sqrt(
        test::simpson_oracle([](double x) { return std::exp(-x * x); }, -16.0, 16.0));
    CHECK(lp_norm(u, 2.0) == Approx(oracle).margin(1e-10));

    CHECK_THROWS_AS(lp_norm(u, 0.5), std::invalid_argument);
}

TEST_CASE("sobolev_norm: Parseval, single mode, zero", "[spectral]") {
    Grid g = make_grid(1, 512, 16.0);
    ComplexField zero(g);
    CHECK(sobolev_norm(zero, 1.3) == 0.0);

    auto u = test::random_band_limited(g, 42);
    CHECK(sobolev_norm(u, 0.0) == Approx(lp_norm(u, 2.0)).epsilon(1e-12));

    // single Fourier mode e^{i xi0 x}, xi0 = 1 needs L = pi * integer
    Grid gm = make_grid(1, 256, 4.0 * M_PI);
    ComplexField mode(gm);
    for (int j = 0; j < gm.n; ++j) {
        double x = gm.coord(j);
        mode.values[j] = cdouble(std::cos(x), std::sin(x));
    }
    double l2 = lp_norm(mode, 2.0);
    CHECK(sobolev_norm(mode, -1.0) == Approx(l2 / std::sqrt(2.0)).epsilon(1e-10));

    // direct-summation oracle for a general field at s = -1
    double direct = 0.0;
    {
        std::vector<cdouble> coef = u.values;
        fft_forward(g, coef);
        double amp2 = std::pow(g.dx * g.dx / (2.0 * M_PI), 1);
        double dxi = M_PI / g.half_width;
        for (int j = 0; j < g.n; ++j) {
            double xi = g.xi(j);
            direct += std::pow(1.0 + xi * xi, -1.0) * std::norm(coef[j]) * amp2 * dxi;
        }
        direct = std::sqrt(direct);
    }
    CHECK(sobolev_norm(u, -1.0) == Approx(direct).epsilon(1e-13));
}

TEST_CASE("2D Parseval and transform roundtrip", "[spectral]") {
    Grid g = make_grid(2, 64, 8.0);
    auto u = test::random_band_limited(g, 7);
    CHECK(sobolev_norm(u, 0.0) == Approx(lp_norm(u, 2.0)).epsilon(1e-12));

    auto v = u.values;
    fft_forward(g, v);
    fft_inverse(g, v);
    double scale = 1.0 / g.size();
    double err = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        err = std::max(err, std::abs(v[i] * scale - u.values[i]));
    CHECK(err < 1e-12 * lp_norm(u, std::numeric_limits<double>::infinity()));
}

TEST_CASE("moment: gaussian second moment, mass, parallel axis", "[spectral]") {
    Grid g = make_grid(1, 1024, 16.0);
    // Gamma-like density pi^{-1/2} e^{-y^2}: second moment 1/2
    Density d(g);
    for (int j = 0; j < g.n; ++j) {
        double y = g.coord(j);
        d.values[j] = std::exp(-y * y) / std::sqrt(M_PI);
    }
    d.recompute_mass();
    CHECK(moment(d, 2) == Approx(0.5).margin(1e-8));
    CHECK(moment(d, 0) == Approx(d.mass()).epsilon(1e-14));

    // parallel axis: shifting by a adds a^2 * mass for centered input
    double a = 2.0;
    Density shifted(g);
    for (int j = 0; j < g.n; ++j) {
        double y = g.coord(j) - a;
        shifted.values[j] = std::exp(-y * y) / std::sqrt(M_PI);
    }
    shifted.recompute_mass();
    double direct = 0.0;
    for (int j = 0; j < g.n; ++j) {
        double y = g.coord(j);
        direct += y * y * shifted.values[j] * g.dx;
    }
    CHECK(moment(shifted, 2) == Approx(direct).epsilon(1e-13));
    CHECK(moment(shifted, 2) - moment(d, 2) == Approx(a * a * d.mass()).margin(1e-7));
}

TEST_CASE("norms invariant under cyclic relabeling fixing coordinates", "[spectral]") {
    Grid g = make_grid(1, 128, 6.0);
    auto u = test::random_band_limited(g, 99);
    Density d = density_from_field(u);
    // relabel: rotate storage by k while rotating the coordinate map is
    // the same multiset of (x_j, value) pairs; sums must agree
    double base_l2 = lp_norm(u, 2.0);
    double base_m2 = moment(d, 2);
    for (int shift : {1, 17, 64}) {
        long double acc = 0.0L, accm = 0.0L;
        for (int j = 0; j < g.n; ++j) {
            int src = (j + shift) % g.n;
            acc += std::norm(u.values[src]);
            double y = g.coord(src);
            accm += y * y * d.values[src];
        }
        CHECK(std::sqrt(static_cast<double>(acc) * g.dx) == Approx(base_l2).epsilon(1e-12));
        CHECK(static_cast<double>(accm) * g.dx == Approx(base_m2).epsilon(1e-11));
    }
}

TEST_CASE("boundary mass monitor", "[spectral]") {
    Grid g = make_grid(1, 256, 8.0);
    ComplexField centered = gaussian_field(g, 1.0, 2.0);
    CHECK(boundary_mass_fraction(centered) < 1e-12);
    ComplexField edge(g);
    for (int j = 0; j < 4; ++j) edge.values[j] = 1.0;
    CHECK(boundary_mass_fraction(edge) == Approx(1.0));
}

TEST_CASE("checkpoint roundtrip: field and density", "[spectral]") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "nlslab_test_ckpt";
    fs::create_directories(dir);
    Grid g = make_grid(1, 64, 4.0);
    auto u = test::random_band_limited(g, 5);
    u.frame = Frame::SelfSimilar;
    u.time = 1.25;
    auto fpath = (dir / "f.nlsf").string();
    save_checkpoint(fpath, u);
    auto loaded = load_checkpoint(fpath);
    REQUIRE(std::holds_alternative<ComplexField>(loaded));
    const auto& lu = std::get<ComplexField>(loaded);
    CHECK(lu.frame == Frame::SelfSimilar);
    CHECK(lu.time == u.time);
    CHECK(lu.grid == g);
    CHECK(lu.values == u.values); // bit-exact

    Density d = density_from_field(u);
    auto dpath = (dir / "d.nlsf").string();
    save_checkpoint(dpath, d, 2.5);
    auto dload = load_checkpoint(dpath);
    REQUIRE(std::holds_alternative<Density>(dload));
    CHECK(std::get<Density>(dload).values == d.values);

    // header layout is pinned: 4 + 4 + 4 + 4 + 8 + 1 + 8 = 33 bytes
    CHECK(fs::file_size(fpath) == 33 + g.size() * 16);
    CHECK(fs::file_size(dpath) == 33 + g.size() * 8);
    fs::remove_all(dir);
}

TEST_CASE("spectral derivative of a plane wave", "[spectral]") {
    Grid g = make_grid(1, 256, 4.0 * M_PI);
    ComplexField mode(g);
    double xi0 = 1.5; // pi * 6 / (4 pi)
    for (int j = 0; j < g.n; ++j) {
        double x = g.coord(j);
        mode.values[j] = cdouble(std::cos(xi0 * x), std::sin(xi0 * x));
    }
    auto dm = spectral_derivative(g, mode.values, 0);
    double err = 0.0;
    for (int j = 0; j < g.n; ++j)
        err = std::max(err, std::abs(dm[j] - cdouble(0.0, xi0) * mode.values[j]));
    CHECK(err < 1e-11);
}
