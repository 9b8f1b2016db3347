#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "kslab/elliptic.hpp"
#include "kslab/initdata.hpp"
#include "kslab/quadrature.hpp"

using namespace kslab;

namespace {

// Manufactured pair with zero slope at both ends of [0, R]:
// v(r) = 2 + cos(pi r / R) and u = v - v'' - (N-1) v'/r.
double manufactured_v(double r, double R) { return 2.0 + std::cos(M_PI * r / R); }

double manufactured_u(double r, double R, int N) {
    const double k = M_PI / R;
    return manufactured_v(r, R) + k * k * std::cos(k * r) +
           double(N - 1) * k * std::sin(k * r) / r;
}

RadialField sample_manufactured_u(const RadialGrid& g) {
    RadialField u(g, 0.0);
    for (std::size_t i = 0; i < g.n_cells; ++i)
        u[i] = manufactured_u(g.centers[i], g.radius, g.dim);
    return u;
}

} // namespace

TEST_CASE("tridiag_solve on a known symmetric system") {
    const std::vector<double> lower = {0.0, -1.0, -1.0};
    const std::vector<double> diag = {2.0, 2.0, 2.0};
    const std::vector<double> upper = {-1.0, -1.0, 0.0};
    const std::vector<double> x = tridiag_solve(lower, diag, upper, {1.0, 0.0, 1.0});
    for (double xi : x) REQUIRE(std::abs(xi - 1.0) < 1e-14);
}

TEST_CASE("tridiag_solve satisfies the system it was given") {
    const std::size_t n = 5;
    std::vector<double> lower(n), diag(n), upper(n), rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        lower[i] = i > 0 ? -0.3 - 0.1 * double(i) : 0.0;
        upper[i] = i + 1 < n ? -0.7 + 0.05 * double(i) : 0.0;
        diag[i] = 2.0 + 0.2 * double(i);
        rhs[i] = std::sin(double(i) + 1.0);
    }
    const std::vector<double> x = tridiag_solve(lower, diag, upper, rhs);
    for (std::size_t i = 0; i < n; ++i) {
        double row = diag[i] * x[i];
        if (i > 0) row += lower[i] * x[i - 1];
        if (i + 1 < n) row += upper[i] * x[i + 1];
        REQUIRE(std::abs(row - rhs[i]) < 1e-13);
    }
}

TEST_CASE("tridiag_solve input validation") {
    REQUIRE_THROWS_AS(tridiag_solve({0.0}, {1.0, 1.0}, {0.0, 0.0}, {1.0, 1.0}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(tridiag_solve({0.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}, {1.0, 1.0}),
                      NumericError);
}

TEST_CASE("constants are fixed points of the screened solve") {
    const RadialGrid g = make_radial_grid(3, 1.0, 64, 0.97);
    const EllipticSolution sol = solve_screened_poisson(RadialField(g, 2.5));
    for (double v : sol.v.values) REQUIRE(std::abs(v - 2.5) < 1e-12);
    REQUIRE(sol.residual_linf < 1e-13);
    REQUIRE(sol.mass_gap < 1e-12 * g.ball_volume());
}

TEST_CASE("zero input produces the zero solution") {
    const RadialGrid g = make_radial_grid(2, 1.0, 32);
    const EllipticSolution sol = solve_screened_poisson(RadialField(g, 0.0));
    for (double v : sol.v.values) REQUIRE(v == 0.0);
}

TEST_CASE("solve conserves mass on spike inputs") {
    const RadialGrid g = make_radial_grid(3, 1.0, 400, 1.0 / 1.02);
    const EtaExponents e{2.75, 0.875, 1.0, 1.0};
    const RadialField u = build_u_eta(e, 0.1, g);
    const EllipticSolution sol = solve_screened_poisson(u);
    REQUIRE(sol.mass_gap <= 1e-9 * (1.0 + integrate(u)));
    REQUIRE(std::abs(integrate(sol.v) - integrate(u)) ==  sol.mass_gap);
}

TEST_CASE("solution is positive for nonnegative nonzero input") {
    const RadialGrid g = make_radial_grid(3, 1.0, 64);
    RadialField u(g, 0.0);
    unsigned long state = 12345;
    for (std::size_t i = 0; i < g.n_cells; ++i) {
        state = state * 6364136223846793005UL + 1442695040888963407UL;
        u[i] = double(state >> 11) / double(1UL << 53) * 2.0;
    }
    const EllipticSolution sol = solve_screened_poisson(u);
    for (double v : sol.v.values) REQUIRE(v > 0.0);
}

TEST_CASE("solve is monotone in its input") {
    const RadialGrid g = make_radial_grid(3, 1.0, 48);
    RadialField u1(g, 0.0), u2(g, 0.0);
    for (std::size_t i = 0; i < g.n_cells; ++i) {
        u1[i] = 1.0 + std::sin(3.0 * g.centers[i]);
        u2[i] = u1[i] + 0.5 * std::exp(-20.0 * g.centers[i]);
    }
    const RadialField v1 = solve_screened_poisson(u1).v;
    const RadialField v2 = solve_screened_poisson(u2).v;
    for (std::size_t i = 0; i < g.n_cells; ++i) REQUIRE(v2[i] >= v1[i] - 1e-14);
}

TEST_CASE("solve converges at second order to a manufactured solution") {
    std::vector<double> ln_n, ln_err;
    for (std::size_t n : {32, 64, 128, 256}) {
        const RadialGrid g = make_radial_grid(3, 1.0, n);
        const RadialField v = solve_screened_poisson(sample_manufactured_u(g)).v;
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            err = std::max(err, std::abs(v[i] - manufactured_v(g.centers[i], 1.0)));
        ln_n.push_back(std::log(double(n)));
        ln_err.push_back(std::log(err));
    }
    const SlopeFit fit = fit_slope(ln_n, ln_err);
    REQUIRE(fit.valid);
    REQUIRE(fit.slope < -1.8);
}

TEST_CASE("weighted quadrature panels integrate linear data exactly") {
    REQUIRE(std::abs(detail::pow_moment(1.0, 2.0, -1) - std::log(2.0)) < 1e-15);
    REQUIRE(std::abs(detail::pow_moment(1.0, 2.0, 2) - 7.0 / 3.0) < 1e-15);
    // int_1^2 s^2 (3 + 4 s) ds = 22
    REQUIRE(std::abs(detail::weighted_panel(1.0, 2.0, 7.0, 11.0, 2) - 22.0) < 1e-13);
}

TEST_CASE("representation residual vanishes for constants and zero") {
    const RadialGrid g = make_radial_grid(3, 1.0, 50, 0.96);
    REQUIRE(representation_residual(RadialField(g, 0.0), RadialField(g, 0.0)) == 0.0);
    const RadialField c(g, 2.5);
    REQUIRE(representation_residual(c, solve_screened_poisson(c).v) < 1e-12);
}

TEST_CASE("representation residual of solved pairs shrinks at second order") {
    std::vector<double> ln_n, ln_res;
    for (std::size_t n : {100, 200, 400}) {
        const RadialGrid g = make_radial_grid(3, 1.0, n);
        const RadialField u = sample_manufactured_u(g);
        const RadialField v = solve_screened_poisson(u).v;
        ln_n.push_back(std::log(double(n)));
        ln_res.push_back(std::log(representation_residual(u, v)));
    }
    const SlopeFit fit = fit_slope(ln_n, ln_res);
    REQUIRE(fit.valid);
    REQUIRE(fit.slope < -1.8);
}

TEST_CASE("representation residual exposes a corrupted solution") {
    const RadialGrid g = make_radial_grid(3, 1.0, 128);
    const RadialField u = sample_manufactured_u(g);
    RadialField v = solve_screened_poisson(u).v;
    const double clean = representation_residual(u, v);
    for (std::size_t i = 0; i < g.n_cells; ++i)
        v[i] += 0.1 * g.centers[i] * g.centers[i];
    REQUIRE(representation_residual(u, v) > 1e-3);
    REQUIRE(representation_residual(u, v) > 100.0 * clean);
}

TEST_CASE("check_neumann accepts genuine solutions and flags injected slope") {
    const RadialGrid g = make_radial_grid(3, 1.0, 128);
    REQUIRE(check_neumann(RadialField(g, 3.0)));
    const RadialField v = solve_screened_poisson(sample_manufactured_u(g)).v;
    REQUIRE(check_neumann(v));

    RadialField linear(g, 0.0);
    for (std::size_t i = 0; i < g.n_cells; ++i) linear[i] = g.centers[i];
    REQUIRE_FALSE(check_neumann(linear));

    const RadialGrid tiny = make_radial_grid(3, 1.0, 2);
    REQUIRE(check_neumann(RadialField(tiny, 1.0)));
}
