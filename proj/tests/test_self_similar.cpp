#include <catch2/catch_amalgamated.hpp>

#include "nlslab/nls.hpp"
#include "nlslab/self_similar.hpp"
#include "test_util.hpp"

#include <cmath>
#include <random>

using namespace nlslab;
using Catch::Approx;

TEST_CASE("potential/nonlinear substep preserves the modulus", "[selfsim]") {
    Grid g = make_grid(1, 512, 12.0);
    auto curve = solve_dispersion(OdeKind::sigma_power(0.2, 1), 1.0, 1e-10);
    ComplexField v = gaussian_field(g, 1.0, 1.0);
    v.frame = Frame::SelfSimilar;
    auto before = v;
    // a full Strang step changes |v| only through the kinetic multiplier;
    // with the kinetic coefficient removed (dt -> 0 limit of tau large)
    // the phase substeps alone are exercised directly:
    detail::self_similar_phase(v, 0.3, 0.25, [](double rho) {
        return rho > 0 ? std::log(rho) : 0.0;
    });
    for (std::size_t i = 0; i < v.values.size(); ++i)
        CHECK(std::abs(v.values[i]) == Approx(std::abs(before.values[i])).margin(1e-15));
}

TEST_CASE("mass is conserved by the self-similar stepper", "[selfsim]") {
    Grid g = make_grid(1, 1024, 12.0);
    auto curve = solve_dispersion(OdeKind::sigma_power(0.2, 1), 3.0, 1e-10);
    ComplexField v = gaussian_field(g, 1.0, 2.0);
    v.frame = Frame::SelfSimilar;
    double m0 = lp_norm(v, 2.0);
    for (int i = 0; i < 1000; ++i) step_self_similar(v, 2e-3, SelfSimilarModel::rescaled(0.2), curve);
    CHECK(lp_norm(v, 2.0) == Approx(m0).epsilon(1e-12));
}

TEST_CASE("frame consistency: lab evolution matches self-similar evolution", "[selfsim]") {
    // evolve u under the rescaled power equation in the lab frame, map via
    // the tau change of unknown (plus gauge), and compare with the direct
    // self-similar evolution; the discrepancy measures splitting error only
    double sigma = 0.2;
    int d = 1;
    double t_end = 2.0;
    Grid gu = make_grid(1, 2048, 24.0);
    Grid gv = make_grid(1, 1024, 12.0);
    ComplexField phi_u = gaussian_field(gu, 1.0, 1.0);
    ComplexField phi_v(gv, Frame::SelfSimilar, 0.0);
    for (int j = 0; j < gv.n; ++j) {
        double y = gv.coord(j);
        phi_v.values[j] = std::exp(-0.5 * y * y);
    }

    auto curve = solve_dispersion(OdeKind::sigma_power(sigma, d), t_end + 0.1, 1e-11);

    ComplexField u = phi_u;
    double dt = 5e-4;
    long steps = std::lround(t_end / dt);
    for (long i = 0; i < steps; ++i) step_strang(u, dt, Model::rescaled_power(sigma));

    ComplexField v = phi_v;
    for (long i = 0; i < steps; ++i)
        step_self_similar(v, dt, SelfSimilarModel::rescaled(sigma), curve);

    double tau = curve.tau_at(t_end), tau_dot = curve.tau_dot_at(t_end);
    double gauge = gauge_phase_rescaled(curve, sigma, d, t_end);
    // v_evolved = v_pre * e^{i alpha}; build the same object from u
    ComplexField v_from_u = to_self_similar(u, tau, tau_dot, gv, gauge);
    CHECK(l2_distance(v_from_u, v) < 1e-4);

    // mass equality across frames (the rescaling is an L2 isometry)
    CHECK(lp_norm(v, 2.0) == Approx(lp_norm(u, 2.0)).epsilon(1e-10));
}

TEST_CASE("log-model frame consistency with the ln tau gauge", "[selfsim]") {
    double t_end = 1.5;
    Grid gu = make_grid(1, 2048, 24.0);
    Grid gv = make_grid(1, 1024, 12.0);
    ComplexField phi_u = gaussian_field(gu, 1.0, 1.0);
    ComplexField phi_v(gv, Frame::SelfSimilar, 0.0);
    for (int j = 0; j < gv.n; ++j) {
        double y = gv.coord(j);
        phi_v.values[j] = std::exp(-0.5 * y * y);
    }
    auto curve = solve_dispersion(OdeKind::logarithmic(), t_end + 0.1, 1e-11);

    ComplexField u = phi_u;
    double dt = 5e-4;
    long steps = std::lround(t_end / dt);
    for (long i = 0; i < steps; ++i) step_strang(u, dt, Model::log());
    ComplexField w = phi_v;
    for (long i = 0; i < steps; ++i) step_self_similar(w, dt, SelfSimilarModel::log(), curve);

    double tau = curve.tau_at(t_end), tau_dot = curve.tau_dot_at(t_end);
    double gauge = gauge_phase_log(curve, 1, t_end);
    ComplexField w_from_u = to_self_similar(u, tau, tau_dot, gv, gauge);
    CHECK(l2_distance(w_from_u, w) < 1e-4);
}

TEST_CASE("pseudo-energy: zero field, scalar Taylor limit, components", "[selfsim]") {
    Grid g = make_grid(1, 512, 12.0);
    ComplexField zero(g);
    auto e = pseudo_energy(zero, 0.3, 2.0);
    CHECK(e.total == 0.0);

    // (rho^sigma - 1) rho / sigma -> rho ln rho: rho = 2, sigma = 1e-6
    double rho = 2.0, sigma = 1e-6;
    double val = rho * std::expm1(sigma * std::log(rho)) / sigma;
    CHECK(val == Approx(2.0 * std::log(2.0)).margin(1e-5));

    ComplexField v = gaussian_field(g, 1.0, 1.0);
    v.frame = Frame::SelfSimilar;
    auto es = pseudo_energy(v, 0.2, 1.7);
    CHECK(es.total == Approx(es.kinetic + es.potential + es.nonlinear).epsilon(1e-14));
    CHECK(es.kinetic > 0);
    CHECK(es.potential > 0);
}

TEST_CASE("tau^{d sigma} pseudo-energy is nonincreasing along the flow", "[selfsim]") {
    double sigma = 0.2;
    Grid g = make_grid(1, 1024, 12.0);
    auto curve = solve_dispersion(OdeKind::sigma_power(sigma, 1), 5.1, 1e-10);
    ComplexField v = gaussian_field(g, 1.0, 1.5);
    v.frame = Frame::SelfSimilar;
    double dt = 1e-3;
    double prev = std::numeric_limits<double>::infinity();
    for (int probe = 0; probe < 5; ++probe) {
        for (int i = 0; i < 1000; ++i) step_self_similar(v, dt, SelfSimilarModel::rescaled(sigma), curve);
        double tau = curve.tau_at(v.time);
        double val = std::pow(tau, sigma) * pseudo_energy(v, sigma, tau).total;
        CHECK(val <= prev + 1e-6);
        prev = val;
    }
}

TEST_CASE("current density: real field, plane wave, continuity refinement", "[selfsim]") {
    Grid g = make_grid(1, 512, 12.0);
    ComplexField real_field = gaussian_field(g, 1.0, 1.0);
    auto j0 = current_density(real_field);
    for (double v : j0[0]) CHECK(std::abs(v) < 1e-12);

    // v = e^{iky} envelope: j = k |envelope|^2 (k on the mode lattice)
    double k = M_PI * 8 / g.half_width;
    ComplexField wave(g);
    for (int j = 0; j < g.n; ++j) {
        double y = g.coord(j);
        double env = std::exp(-0.5 * y * y);
        wave.values[j] = env * cdouble(std::cos(k * y), std::sin(k * y));
    }
    auto jw = current_density(wave);
    for (int j = 0; j < g.n; ++j) {
        double y = g.coord(j);
        double expect = k * std::exp(-y * y);
        CHECK(jw[0][j] == Approx(expect).margin(1e-8));
    }

    // continuity residual d_t rho + <t>^{-2} div j = 0 under refinement:
    // finite-difference d_t of |v|^2 for the <t>-frame flow vs -div j/<t>^2
    auto residual = [&](double dt_fd, int n) {
        Grid gg = make_grid(1, n, 16.0);
        ComplexField phi = gaussian_field(gg, 1.0, 1.0);
        double t0 = 0.5;
        auto r2curve = solve_dispersion(OdeKind::generic_power(2.0), 1.0, 1e-11);
        ComplexField va = phi, vb = phi;
        va.frame = vb.frame = Frame::SelfSimilar;
        long na = std::lround((t0 - dt_fd) / 1e-4);
        long nb = std::lround((t0 + dt_fd) / 1e-4);
        // the <t> frame is the r_2 dispersion curve with sigma exponent 0:
        // i v_t + (1/2<t>^2) Lap v = (|y|^2/2<t>^2) v + <t>^{-d s}|v|^{2s} v;
        // here we check the kinematic identity only, via the cubic flow
        SelfSimilarModel model = SelfSimilarModel::rescaled(0.2);
        for (long i = 0; i < na; ++i) step_self_similar(va, 1e-4, model, r2curve);
        for (long i = 0; i < nb; ++i) step_self_similar(vb, 1e-4, model, r2curve);
        ComplexField vm = va;
        long nm = std::lround(dt_fd / 1e-4);
        for (long i = 0; i < nm; ++i) step_self_similar(vm, 1e-4, model, r2curve);
        auto jm = current_density(vm);
        std::vector<cdouble> jc(jm[0].size());
        for (std::size_t i = 0; i < jc.size(); ++i) jc[i] = jm[0][i];
        auto divj = spectral_derivative(gg, jc, 0);
        double tau_m = r2curve.tau_at(t0);
        double worst = 0.0;
        for (std::size_t i = 0; i < jc.size(); ++i) {
            double drho = (std::norm(vb.values[i]) - std::norm(va.values[i])) / (2.0 * dt_fd);
            double rhs = -divj[i].real() / (tau_m * tau_m);
            worst = std::max(worst, std::abs(drho - rhs));
        }
        return worst;
    };
    double coarse = residual(0.02, 256);
    double fine = residual(0.005, 256);
    CHECK(fine < coarse);
    CHECK(fine < 0.05 * 1.0);
}

TEST_CASE("source term: both formulas agree; unit modulus; O(sigma) decay", "[selfsim]") {
    Grid g = make_grid(1, 256, 8.0);

    // |u| = 1 pointwise: S vanishes
    ComplexField ones(g);
    for (auto& v : ones.values) v = cdouble(std::cos(0.3), std::sin(0.3));
    auto s_ones = source_term_sigma(ones, 0.1);
    for (const auto& v : s_ones) CHECK(std::abs(v) < 1e-15);

    // scalar z with |z|^2 = 4, sigma = 0.1: direct vs 64-point quadrature
    ComplexField z(g);
    for (auto& v : z.values) v = cdouble(2.0, 0.0);
    auto direct = source_term_sigma(z, 0.1);
    auto taylor = source_term_sigma(z, 0.1, 1e-30, true);
    for (std::size_t i = 0; i < direct.size(); ++i)
        CHECK(std::abs(direct[i] - taylor[i]) < 1e-10);

    // pointwise agreement on generic smooth data too
    ComplexField u = gaussian_field(g, 1.3, 0.8, 0.2, 0.5);
    auto d2 = source_term_sigma(u, 0.05);
    auto t2 = source_term_sigma(u, 0.05, 1e-30, true);
    double worst = 0.0;
    for (std::size_t i = 0; i < d2.size(); ++i) worst = std::max(worst, std::abs(d2[i] - t2[i]));
    CHECK(worst < 1e-10);

    // || S_sigma ||_L2 = O(sigma): ratio test within 10%. The linear
    // regime needs sigma |ln rho| << 1 pointwise, so the probe datum has
    // modulus bounded away from zero.
    ComplexField probe(g);
    for (int j = 0; j < g.n; ++j) {
        double x = g.coord(j);
        probe.values[j] = cdouble(1.0 + 0.5 * std::exp(-x * x), 0.2 * std::sin(0.5 * x));
    }
    std::vector<double> norms;
    for (double sig : {1e-1, 1e-2, 1e-3}) {
        auto s = source_term_sigma(probe, sig);
        long double acc = 0.0L;
        for (const auto& v : s) acc += std::norm(v);
        norms.push_back(std::sqrt(static_cast<double>(acc) * g.dx));
    }
    CHECK(std::abs(norms[0] / norms[1] / 10.0 - 1.0) < 0.1);
    CHECK(std::abs(norms[1] / norms[2] / 10.0 - 1.0) < 0.1);
}

TEST_CASE("pointwise log inequality over random samples", "[selfsim]") {
    CHECK(ch_inequality_check(cdouble(1.0, 0.0), cdouble(1.0, 0.0)));
    CHECK(ch_inequality_check(cdouble(1.0, 0.0), cdouble(0.0, 1.0)));
    CHECK(ch_inequality_check(cdouble(0.0, 0.0), cdouble(2.0, -1.0)));

    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> logr(std::log(1e-6), std::log(1e3));
    for (int i = 0; i < 100000; ++i) {
        double r1 = std::exp(logr(rng)), r2 = std::exp(logr(rng));
        double a1 = angle(rng), a2 = angle(rng);
        cdouble z1 = r1 * cdouble(std::cos(a1), std::sin(a1));
        cdouble z2 = r2 * cdouble(std::cos(a2), std::sin(a2));
        REQUIRE(ch_inequality_check(z1, z2));
    }
}

TEST_CASE("frame maps roundtrip", "[selfsim]") {
    Grid gu = make_grid(1, 1024, 16.0);
    Grid gv = make_grid(1, 512, 8.0);
    ComplexField u = gaussian_field(gu, 1.0, 1.0, 0.3);
    double tau = 1.8, tau_dot = 0.6, gauge = 0.9;
    ComplexField v = to_self_similar(u, tau, tau_dot, gv, gauge);
    ComplexField back = to_lab_frame(v, tau, tau_dot, gu, gauge);
    CHECK(l2_distance(back, u) < 1e-9);
}
