#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <future>
#include <string>
#include <thread>
#include <vector>

#include "kslab/elliptic.hpp"
#include "kslab/energy.hpp"
#include "kslab/errors.hpp"
#include "kslab/grid.hpp"
#include "kslab/model.hpp"
#include "kslab/quadrature.hpp"

namespace kslab {

/// Exponents of the concentrating initial-data family: spike strength gamma,
/// support shrink rate delta (support radius eta^delta), floor exponent q,
/// and the approximation norm p.
struct EtaExponents {
    double gamma = 0.0;
    double delta_init = 0.0;
    double q = 0.0;
    double p = 1.0;
};

/// Re-checks every inequality the construction relies on; throws an
/// infeasibility error naming the violated inequality.
inline void verify_exponents(const ModelParams& mp, const EtaExponents& e) {
    const double N = double(mp.N);
    const double a = mp.alpha();
    const double g = e.gamma;
    const double d = e.delta_init;
    if (!(e.p >= 1.0)) throw InfeasibleError("p < 1");
    if (!(g > 0.5 * (N + 2.0))) throw InfeasibleError("gamma <= (N+2)/2");
    if (!(g < N)) throw InfeasibleError("gamma >= N");
    if (g == 2.0 || g == 4.0) throw InfeasibleError("gamma in {2, 4}");
    if (!(2.0 < -g * a)) throw InfeasibleError("-gamma*alpha <= 2");
    if (!(N / g > e.p)) throw InfeasibleError("N/gamma <= p");
    if (!(d > 0.0 && d < 1.0)) throw InfeasibleError("delta not in (0, 1)");
    if (!(2.0 + (1.0 - d) * N < -g * a))
        throw InfeasibleError("2 + (1-delta)*N >= -gamma*alpha");
    if (!(2.0 - 2.0 * g + N < N * d - g * (a + 2.0)))
        throw InfeasibleError("2 - 2*gamma + N >= N*delta - gamma*(alpha+2)");
    if (!(e.q > 0.0)) throw InfeasibleError("q <= 0");
    if (!(2.0 - 2.0 * g + N < (a + 2.0) * e.q))
        throw InfeasibleError("2 - 2*gamma + N >= (alpha+2)*q");
}

/// Deterministic midpoint choice of (gamma, delta, q) in the feasible set.
/// gamma lives in (max((N+2)/2, 2/(-alpha)), min(N, N/p)); when 2 or 4 falls
/// inside, the longer remaining subinterval wins. All inequalities are
/// re-verified before returning.
inline EtaExponents select_exponents(const ModelParams& mp, double p) {
    const double N = double(mp.N);
    const double a = mp.alpha();
    if (!(-a > 2.0 / N)) throw InfeasibleError("-alpha <= 2/N");
    if (!(p >= 1.0)) throw InfeasibleError("p < 1");
    if (a <= -4.0 / (N + 2.0)) {
        if (!(p < 2.0 * N / (N + 2.0))) throw InfeasibleError("p >= 2*N/(N+2)");
    } else {
        if (!(p < -a * N / 2.0)) throw InfeasibleError("p >= -alpha*N/2");
    }

    const double lo = std::max(0.5 * (N + 2.0), 2.0 / (-a));
    const double hi = std::min(N, N / p);
    if (!(lo < hi)) throw InfeasibleError("(N+2)/2 >= N");

    std::vector<double> cuts = {lo};
    for (double c : {2.0, 4.0})
        if (c > lo && c < hi) cuts.push_back(c);
    cuts.push_back(hi);
    double best_lo = cuts[0], best_hi = cuts[1];
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        if (cuts[k + 1] - cuts[k] > best_hi - best_lo) {
            best_lo = cuts[k];
            best_hi = cuts[k + 1];
        }

    EtaExponents e;
    e.p = p;
    e.gamma = 0.5 * (best_lo + best_hi);
    const double d_lo = std::max(0.0, 1.0 - (-e.gamma * a - 2.0) / N);
    e.delta_init = 0.5 * (d_lo + 1.0);
    e.q = a + 2.0 >= 0.0 ? 1.0 : 0.5 * (2.0 - 2.0 * e.gamma + N) / (a + 2.0);
    verify_exponents(mp, e);
    return e;
}

/// Support-ordering relations of the sweep targets: with gamma > 2 and
/// delta < 1 the leading exponent 2 - 2*gamma + N undercuts every competing
/// term of the energy expansion.
inline bool exponent_ordering_ok(const EtaExponents& e, int dim) {
    const double N = double(dim);
    const double g = e.gamma;
    const double d = e.delta_init;
    const double lead = 2.0 - 2.0 * g + N;
    const double competitors[] = {N - g + (2.0 - g) * d, N - g, N + 4.0 - 2.0 * g,
                                  N + 2.0 - g - g * d};
    for (double c : competitors)
        if (!(lead < c)) return false;
    return true;
}

/// Spike profile (r^2 + eta^2)^{-gamma/2} - (r_eta^2 + eta^2)^{-gamma/2} on
/// [0, r_eta], zero outside, sampled at cell centers.
inline RadialField build_u_eta(const EtaExponents& e, double eta, const RadialGrid& g) {
    if (!(eta > 0.0 && eta < 1.0))
        throw std::invalid_argument("build_u_eta: eta must lie in (0, 1)");
    const double r_eta = std::pow(eta, e.delta_init);
    const double cutoff = std::pow(r_eta * r_eta + eta * eta, -0.5 * e.gamma);
    RadialField u(g, 0.0);
    for (std::size_t i = 0; i < g.n_cells; ++i) {
        const double r = g.centers[i];
        if (r >= r_eta) break;
        u.values[i] = std::pow(r * r + eta * eta, -0.5 * e.gamma) - cutoff;
    }
    return u;
}

struct EtaConstruction {
    EtaExponents exponents;
    double eta = 0.0;
    RadialField u_eta;
    RadialField u_hat;  ///< u0 + u_eta + eta^q
    RadialField v_hat;  ///< elliptic solve of u_hat
    RadialField base_u0;
};

inline EtaConstruction build_u_hat(const EtaExponents& e, double eta,
                                   const RadialField& u0) {
    require_grid(u0);
    for (double x : u0.values)
        if (!(x >= 0.0))
            throw std::invalid_argument("build_u_hat: u0 must be nonnegative");
    EtaConstruction c;
    c.exponents = e;
    c.eta = eta;
    c.base_u0 = u0;
    c.u_eta = build_u_eta(e, eta, *u0.grid);
    const double floor = std::pow(eta, e.q);
    std::vector<double> vals(u0.size());
    for (std::size_t i = 0; i < u0.size(); ++i)
        vals[i] = u0.values[i] + c.u_eta.values[i] + floor;
    c.u_hat = RadialField(*u0.grid, std::move(vals));
    c.v_hat = solve_screened_poisson(c.u_hat).v;
    return c;
}

/// Parallelism degree: explicit argument wins, then the KS_JOBS environment
/// variable, then the hardware concurrency.
inline unsigned resolve_jobs(unsigned requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("KS_JOBS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return unsigned(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

struct ScalingPoint {
    double eta = 0.0;
    double X = 0.0;      ///< int u_eta * v_eta
    double Gterm = 0.0;  ///< int G(u_hat)
    double Fval = 0.0;   ///< reduced energy of (u_hat, v_hat)
    double dist = 0.0;   ///< Lp distance between u_hat and u0
};

struct ScalingReport {
    EtaExponents exponents;
    std::vector<ScalingPoint> points;  ///< sorted by descending eta
    std::size_t fit_count = 0;         ///< smallest-eta points entering the fits
    SlopeFit x_fit, gterm_fit, fval_fit, dist_fit;
    double x_target = 0.0;      ///< 2 - 2*gamma + N
    double gterm_target = 0.0;  ///< N*delta - gamma*(2+alpha)
    double fval_target = 0.0;   ///< 2 - 2*gamma + N
    bool x_slope_ok = false;              ///< |x slope - target| <= 0.1
    bool gterm_bound_ok = false;          ///< gterm slope <= target + 0.15
    bool fval_decreasing_negative = false;  ///< strictly decreasing, ends < 0
    bool dist_decreasing = false;         ///< strictly decreasing across sweep
    double dist_ratio = 0.0;              ///< smallest-eta dist / largest-eta dist
};

/// Evaluates the spike family over a descending eta ladder and fits log-log
/// slopes of the pairing integral, the G term, the reduced energy, and the
/// Lp distance over the smallest half of the etas. Entries evaluate
/// concurrently (KS_JOBS degree) and aggregate deterministically by index.
inline ScalingReport sweep_scalings(const EtaExponents& e, const ModelParams& mp,
                                    const RadialField& u0,
                                    std::vector<double> etas, unsigned jobs = 0) {
    require_grid(u0);
    if (etas.size() < 5)
        throw std::invalid_argument("sweep_scalings: need at least 5 etas");
    for (double x : etas)
        if (!(x > 0.0 && x < 1.0))
            throw std::invalid_argument("sweep_scalings: etas must lie in (0, 1)");
    std::sort(etas.begin(), etas.end(), std::greater<double>());
    // about two decades; admits the documented default ladder 0.2 -> 0.003
    if (!(etas.front() / etas.back() >= 50.0))
        throw std::invalid_argument(
            "sweep_scalings: etas must span a factor >= 50 from largest to smallest");
    const RadialGrid& g = *u0.grid;
    const double w0 = g.faces[1] - g.faces[0];
    if (!(w0 <= etas.back() / 8.0))
        throw ResolutionError(
            "sweep_scalings: first cell width exceeds eta_min/8; refine the grid near r = 0");

    const GTable table(mp);
    std::vector<ScalingPoint> pts(etas.size());
    auto eval_one = [&](std::size_t k) {
        ScalingPoint pt;
        pt.eta = etas[k];
        const RadialField u_eta = build_u_eta(e, etas[k], g);
        const RadialField v_eta = solve_screened_poisson(u_eta).v;
        double x = 0.0;
        for (std::size_t i = 0; i < g.n_cells; ++i)
            x += u_eta.values[i] * v_eta.values[i] * g.volumes[i];
        pt.X = x;
        const EtaConstruction c = build_u_hat(e, etas[k], u0);
        pt.Gterm = detail::integral_G(c.u_hat, mp, &table);
        pt.Fval = energy_reduced(c.u_hat, c.v_hat, mp, &table);
        std::vector<double> diff(g.n_cells);
        for (std::size_t i = 0; i < g.n_cells; ++i)
            diff[i] = c.u_hat.values[i] - u0.values[i];
        pt.dist = lp_norm(RadialField(g, std::move(diff)), e.p);
        return pt;
    };

    const unsigned degree = std::min<unsigned>(resolve_jobs(jobs), unsigned(etas.size()));
    if (degree <= 1) {
        for (std::size_t k = 0; k < etas.size(); ++k) pts[k] = eval_one(k);
    } else {
        std::size_t next = 0;
        while (next < etas.size()) {
            std::vector<std::future<ScalingPoint>> batch;
            const std::size_t stop = std::min(etas.size(), next + degree);
            for (std::size_t k = next; k < stop; ++k)
                batch.push_back(std::async(std::launch::async, eval_one, k));
            for (std::size_t k = next; k < stop; ++k) pts[k] = batch[k - next].get();
            next = stop;
        }
    }

    ScalingReport rep;
    rep.exponents = e;
    rep.points = std::move(pts);
    const std::size_t n = rep.points.size();
    rep.fit_count = (n + 1) / 2;
    std::vector<double> lx, lX, lG, lF, ld;
    for (std::size_t k = n - rep.fit_count; k < n; ++k) {
        const ScalingPoint& pt = rep.points[k];
        lx.push_back(std::log(pt.eta));
        lX.push_back(std::log(pt.X));
        lG.push_back(std::log(pt.Gterm));
        lF.push_back(std::log(-pt.Fval));
        ld.push_back(std::log(pt.dist));
    }
    rep.x_fit = fit_slope(lx, lX);
    rep.gterm_fit = fit_slope(lx, lG);
    rep.fval_fit = fit_slope(lx, lF);
    rep.dist_fit = fit_slope(lx, ld);

    const double N = double(mp.N);
    rep.x_target = 2.0 - 2.0 * e.gamma + N;
    rep.gterm_target = N * e.delta_init - e.gamma * (2.0 + mp.alpha());
    rep.fval_target = rep.x_target;
    rep.x_slope_ok = rep.x_fit.valid && std::abs(rep.x_fit.slope - rep.x_target) <= 0.1;
    rep.gterm_bound_ok =
        rep.gterm_fit.valid && rep.gterm_fit.slope <= rep.gterm_target + 0.15;

    bool fdec = true, ddec = true;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (!(rep.points[k + 1].Fval < rep.points[k].Fval)) fdec = false;
        if (!(rep.points[k + 1].dist < rep.points[k].dist)) ddec = false;
    }
    rep.fval_decreasing_negative = fdec && rep.points.back().Fval < 0.0;
    rep.dist_decreasing = ddec;
    rep.dist_ratio = rep.points.back().dist / rep.points.front().dist;
    return rep;
}

} // namespace kslab
