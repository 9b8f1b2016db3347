#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "kslab/initdata.hpp"

using namespace kslab;

namespace {

template <class F>
std::string thrown_message(F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

bool mentions(const std::string& msg, const std::string& needle) {
    return msg.find(needle) != std::string::npos;
}

} // namespace

TEST_CASE("select_exponents picks the documented midpoints") {
    SECTION("N = 3, alpha = -1") {
        const EtaExponents e = select_exponents(make_model(3, 1.0, 1.0), 1.0);
        REQUIRE(e.gamma == 2.75);
        REQUIRE(e.delta_init == 0.875);
        REQUIRE(e.q == 1.0);
        REQUIRE(e.p == 1.0);
    }
    SECTION("N = 4, alpha = -1") {
        const EtaExponents e = select_exponents(make_model(4, 1.0, 1.0), 1.0);
        REQUIRE(e.gamma == 3.5);
        REQUIRE(e.delta_init == 0.8125);
        REQUIRE(e.q == 1.0);
    }
    SECTION("N = 5, alpha = -2.5 avoids gamma = 4") {
        const EtaExponents e = select_exponents(make_model(5, 1.0, 2.5), 1.0);
        REQUIRE(e.gamma == 4.5);
        REQUIRE(e.delta_init == 0.5);
        REQUIRE(e.q == 2.0);
    }
}

TEST_CASE("select_exponents raises named infeasibility errors") {
    REQUIRE_THROWS_AS(select_exponents(make_model(3, 1.0, 0.0), 1.0), InfeasibleError);
    REQUIRE(mentions(
        thrown_message([] { select_exponents(make_model(3, 1.0, 0.0), 1.0); }),
        "-alpha <= 2/N"));
    REQUIRE(mentions(
        thrown_message([] { select_exponents(make_model(3, 1.0, 0.5), 1.0); }),
        "-alpha <= 2/N"));
    REQUIRE(mentions(
        thrown_message([] { select_exponents(make_model(3, 1.0, 1.0), 0.5); }),
        "p < 1"));
    REQUIRE(mentions(
        thrown_message([] { select_exponents(make_model(3, 1.0, 1.0), 1.3); }),
        "p >= 2*N/(N+2)"));
    REQUIRE(mentions(
        thrown_message([] { select_exponents(make_model(3, 1.0, 0.7), 1.1); }),
        "p >= -alpha*N/2"));
}

TEST_CASE("verify_exponents names each violated inequality") {
    const ModelParams mp = make_model(3, 1.0, 1.0);
    const EtaExponents base{2.75, 0.875, 1.0, 1.0};
    REQUIRE_NOTHROW(verify_exponents(mp, base));

    EtaExponents e = base;
    e.p = 0.5;
    REQUIRE(mentions(thrown_message([&] { verify_exponents(mp, e); }), "p < 1"));

    e = base;
    e.gamma = 2.4;
    REQUIRE(mentions(thrown_message([&] { verify_exponents(mp, e); }),
                     "gamma <= (N+2)/2"));

    e = base;
    e.gamma = 3.2;
    REQUIRE(mentions(thrown_message([&] { verify_exponents(mp, e); }), "gamma >= N"));

    const ModelParams mp5 = make_model(5, 1.0, 2.5);
    EtaExponents e5{4.0, 0.5, 2.0, 1.0};
    REQUIRE(mentions(thrown_message([&] { verify_exponents(mp5, e5); }),
                     "gamma in {2, 4}"));

    const ModelParams weak = make_model(3, 1.0, 0.6);  // alpha = -0.6
    REQUIRE(mentions(thrown_message([&] { verify_exponents(weak, base); }),
                     "-gamma*alpha <= 2"));

    e = base;
    e.p = 1.2;  // N / gamma = 1.09
    REQUIRE(mentions(thrown_message([&] { verify_exponents(mp, e); }),
                     "N/gamma <= p"));

    e = base;
    e.delta_init = 1.0;
    REQUIRE(mentions(thrown_message([&] { verify_exponents(mp, e); }),
                     "delta not in (0, 1)"));

    e = base;
    e.delta_init = 0.7;  // support shrinks too slowly for the spike mass
    REQUIRE(mentions(thrown_message([&] { verify_exponents(mp, e); }),
                     "2 + (1-delta)*N >= -gamma*alpha"));

    e = base;
    e.q = 0.0;
    REQUIRE(mentions(thrown_message([&] { verify_exponents(mp, e); }), "q <= 0"));

    EtaExponents big_q{4.5, 0.5, 5.0, 1.0};
    REQUIRE(mentions(thrown_message([&] { verify_exponents(mp5, big_q); }),
                     "2 - 2*gamma + N >= (alpha+2)*q"));
}

TEST_CASE("selected exponents give the energy term the dominant decay") {
    REQUIRE(exponent_ordering_ok(EtaExponents{2.75, 0.875, 1.0, 1.0}, 3));
    REQUIRE(exponent_ordering_ok(EtaExponents{3.5, 0.8125, 1.0, 1.0}, 4));
    REQUIRE(exponent_ordering_ok(EtaExponents{4.5, 0.5, 2.0, 1.0}, 5));
    REQUIRE_FALSE(exponent_ordering_ok(EtaExponents{1.8, 0.9, 1.0, 1.0}, 3));
}

TEST_CASE("build_u_eta shapes the spike from the exponent rules") {
    const RadialGrid g = make_radial_grid(3, 1.0, 400, 1.0 / 1.02);
    const EtaExponents e{2.75, 0.875, 1.0, 1.0};
    const double eta = 0.1;
    const RadialField u = build_u_eta(e, eta, g);
    const double r_eta = std::pow(eta, e.delta_init);

    SECTION("zero outside the support radius") {
        for (std::size_t i = 0; i < g.n_cells; ++i)
            if (g.centers[i] >= r_eta) REQUIRE(u[i] == 0.0);
    }
    SECTION("peak height matches the profile formula near r = 0") {
        REQUIRE(g.centers[0] < 1e-5);
        REQUIRE(std::abs(u[0] - 424.36387673322174652) < 1e-3);
    }
    SECTION("nonnegative and monotone decreasing on the support") {
        for (std::size_t i = 0; i + 1 < g.n_cells; ++i) {
            REQUIRE(u[i] >= 0.0);
            if (u[i + 1] > 0.0) REQUIRE(u[i + 1] <= u[i]);
        }
    }
    SECTION("pointwise bounded by r^(-gamma)") {
        for (std::size_t i = 0; i < g.n_cells; ++i)
            if (u[i] > 0.0) REQUIRE(u[i] <= std::pow(g.centers[i], -e.gamma));
    }
    SECTION("mass bounded by the support-radius power law") {
        const double bound = g.omega / (3.0 - e.gamma) *
                             std::pow(eta, e.delta_init * (3.0 - e.gamma));
        REQUIRE(integrate(u) <= bound);
    }
}

TEST_CASE("build_u_eta validates eta") {
    const RadialGrid g = make_radial_grid(3, 1.0, 16);
    const EtaExponents e{2.75, 0.875, 1.0, 1.0};
    for (double eta : {0.0, 1.0, -0.5, 1.5})
        REQUIRE_THROWS_AS(build_u_eta(e, eta, g), std::invalid_argument);
}

TEST_CASE("build_u_hat adds the base state and the floor") {
    const RadialGrid g = make_radial_grid(3, 1.0, 400, 1.0 / 1.02);
    const EtaExponents e{2.75, 0.875, 1.0, 1.0};
    const double eta = 0.1;
    const EtaConstruction c = build_u_hat(e, eta, RadialField(g, 0.0));

    const double floor = std::pow(eta, e.q);
    double mn = c.u_hat[0];
    for (double x : c.u_hat.values) mn = std::min(mn, x);
    REQUIRE(mn == floor);
    REQUIRE(c.u_hat.values.back() == floor);

    const double mass = integrate(c.u_hat);
    REQUIRE(std::abs(integrate(c.v_hat) - mass) <= 1e-9 * (1.0 + mass));

    // L1 distance to the base state obeys the spike + floor budget
    std::vector<double> diff(g.n_cells);
    for (std::size_t i = 0; i < g.n_cells; ++i) diff[i] = c.u_hat[i] - 0.0;
    const double dist = lp_norm(RadialField(g, std::move(diff)), 1.0);
    const double bound = g.omega / (3.0 - e.gamma) *
                             std::pow(eta, e.delta_init * (3.0 - e.gamma)) +
                         floor * g.ball_volume();
    REQUIRE(dist <= bound);
}

TEST_CASE("build_u_hat rejects invalid inputs") {
    const RadialGrid g = make_radial_grid(3, 1.0, 16);
    const EtaExponents e{2.75, 0.875, 1.0, 1.0};
    RadialField neg(g, 1.0);
    neg[2] = -0.1;
    REQUIRE_THROWS_AS(build_u_hat(e, 0.1, neg), std::invalid_argument);
    REQUIRE_THROWS_AS(build_u_hat(e, 1.5, RadialField(g, 0.0)), std::invalid_argument);
}

TEST_CASE("resolve_jobs precedence") {
    REQUIRE(resolve_jobs(4) == 4u);
    setenv("KS_JOBS", "2", 1);
    REQUIRE(resolve_jobs() == 2u);
    setenv("KS_JOBS", "garbage", 1);
    REQUIRE(resolve_jobs() >= 1u);
    unsetenv("KS_JOBS");
    REQUIRE(resolve_jobs() >= 1u);
}

TEST_CASE("sweep_scalings validates the ladder and the grid") {
    const ModelParams mp = make_model(3, 0.0, 0.0);
    const EtaExponents e{2.75, 0.875, 1.0, 1.0};
    const RadialGrid fine = make_radial_grid(3, 1.0, 600, 1.0 / 1.008);
    const RadialField u0(fine, 1.0);

    REQUIRE_THROWS_AS(sweep_scalings(e, mp, u0, {0.2, 0.1, 0.05, 0.002}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(sweep_scalings(e, mp, u0, {0.2, 0.15, 0.12, 0.1, 0.05}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(sweep_scalings(e, mp, u0, {0.2, 0.1, 0.05, 0.01, 1.5}),
                      std::invalid_argument);

    const RadialGrid coarse = make_radial_grid(3, 1.0, 32);
    REQUIRE_THROWS_AS(sweep_scalings(e, mp, RadialField(coarse, 1.0),
                                     {0.2, 0.1, 0.05, 0.01, 0.002}),
                      ResolutionError);
}

TEST_CASE("sweep_scalings evaluates the ladder deterministically") {
    const ModelParams mp = make_model(3, 0.0, 0.0);
    const EtaExponents e{2.75, 0.875, 1.0, 1.0};
    const RadialGrid g = make_radial_grid(3, 1.0, 600, 1.0 / 1.008);
    const RadialField u0(g, 1.0);
    const std::vector<double> etas = {0.2, 0.1, 0.05, 0.01, 0.002};

    const ScalingReport serial = sweep_scalings(e, mp, u0, etas, 1);
    REQUIRE(serial.points.size() == 5);
    REQUIRE(serial.fit_count == 3);
    for (std::size_t k = 0; k + 1 < 5; ++k) {
        REQUIRE(serial.points[k].eta > serial.points[k + 1].eta);
        REQUIRE(serial.points[k + 1].X > serial.points[k].X);  // X ~ eta^(-1/2)
    }
    for (const ScalingPoint& pt : serial.points) {
        REQUIRE(pt.X > 0.0);
        REQUIRE(pt.Gterm > 0.0);
        REQUIRE(pt.dist > 0.0);
    }
    REQUIRE(serial.x_fit.valid);
    REQUIRE(serial.x_target == -0.5);
    REQUIRE(serial.gterm_target == -0.125);

    const ScalingReport parallel = sweep_scalings(e, mp, u0, etas, 3);
    for (std::size_t k = 0; k < 5; ++k) {
        REQUIRE(parallel.points[k].eta == serial.points[k].eta);
        REQUIRE(parallel.points[k].X == serial.points[k].X);
        REQUIRE(parallel.points[k].Gterm == serial.points[k].Gterm);
        REQUIRE(parallel.points[k].Fval == serial.points[k].Fval);
        REQUIRE(parallel.points[k].dist == serial.points[k].dist);
    }
}
