#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "kslab/errors.hpp"
#include "kslab/interp.hpp"
#include "kslab/quadrature.hpp"

namespace kslab {

/// Nonlinearity parameters: diffusion D(u) = (u+1)^{m-1} and sensitivity
/// S(u) = u(u+1)^{sigma-1} by default, with an optional hook for user-supplied
/// (D, S) pairs. alpha = m - sigma - 1 drives every regime boundary.
struct ModelParams {
    int N = 3;
    double m = 1.0;
    double sigma = 0.0;
    std::function<double(double)> custom_D;  ///< together with custom_S replaces the built-in pair
    std::function<double(double)> custom_S;

    double alpha() const { return m - sigma - 1.0; }
    bool has_custom() const { return bool(custom_D) || bool(custom_S); }
};

inline ModelParams make_model(int N, double m, double sigma) {
    if (N < 1) throw std::invalid_argument("make_model: N must be a positive integer");
    if (!std::isfinite(m) || !std::isfinite(sigma))
        throw std::invalid_argument("make_model: m and sigma must be finite");
    return ModelParams{N, m, sigma, nullptr, nullptr};
}

inline ModelParams make_custom_model(int N, double m, double sigma,
                                     std::function<double(double)> D,
                                     std::function<double(double)> S) {
    ModelParams p = make_model(N, m, sigma);
    if (!D || !S)
        throw std::invalid_argument("make_custom_model: both D and S must be callable");
    p.custom_D = std::move(D);
    p.custom_S = std::move(S);
    return p;
}

inline double eval_D(const ModelParams& p, double u) {
    if (p.has_custom()) return p.custom_D(u);
    return std::pow(u + 1.0, p.m - 1.0);
}

inline double eval_S(const ModelParams& p, double u) {
    if (p.has_custom()) return p.custom_S(u);
    return u * std::pow(u + 1.0, p.sigma - 1.0);
}

/// D(xi)/S(xi); for the built-in family (xi+1)^{m-sigma}/xi, with an
/// integrable singularity at xi = 0.
inline double ds_ratio(const ModelParams& p, double xi) {
    if (!(xi > 0.0)) throw std::domain_error("ds_ratio: xi must be > 0");
    if (p.has_custom()) return p.custom_D(xi) / p.custom_S(xi);
    return std::pow(xi + 1.0, p.m - p.sigma) / xi;
}

namespace detail {

// Integrand of G'(e^x): rho(e^t) e^t, smooth after the log substitution.
inline double gprime_integrand(const ModelParams& p, double t) {
    const double xi = std::exp(t);
    if (p.has_custom()) return ds_ratio(p, xi) * xi;
    return std::pow(xi + 1.0, p.m - p.sigma);
}

// Integrand of H(e^x) = int_1^u xi rho(xi) dxi after the substitution.
inline double h_integrand(const ModelParams& p, double t) {
    return gprime_integrand(p, t) * std::exp(t);
}

} // namespace detail

/// Antiderivative G'(u) = int_1^u D/S, by adaptive quadrature in t = ln(xi).
inline double eval_Gprime(const ModelParams& p, double u, double tol = 1e-10) {
    if (!(u > 0.0)) throw std::domain_error("eval_Gprime: u must be > 0");
    const double x = std::log(u);
    if (x == 0.0) return 0.0;
    auto f = [&](double t) { return detail::gprime_integrand(p, t); };
    return x > 0 ? adaptive_integrate(f, 0.0, x, tol)
                 : -adaptive_integrate(f, x, 0.0, tol);
}

/// G(u) = int_1^u int_1^s D/S, reduced to the single integral
/// int_1^u (u - xi) D/S dxi and evaluated in t = ln(xi) so the 1/xi endpoint
/// singularity of the built-in family disappears.
inline double eval_G(const ModelParams& p, double u, double tol = 1e-10) {
    if (!(u > 0.0)) throw std::domain_error("eval_G: u must be > 0");
    if (!(tol > 0.0)) throw std::invalid_argument("eval_G: tol must be > 0");
    const double x = std::log(u);
    if (x == 0.0) return 0.0;
    if (x > 0.0) {
        auto f = [&](double t) {
            return (u - std::exp(t)) * detail::gprime_integrand(p, t);
        };
        return adaptive_integrate(f, 0.0, x, tol);
    }
    auto f = [&](double t) {
        return (std::exp(t) - u) * detail::gprime_integrand(p, t);
    };
    return adaptive_integrate(f, x, 0.0, tol);
}

/// Continuous extension G(0+) = int_0^1 xi D/S dxi, finite for the built-in
/// family (closed form) and for any hook with integrable xi D/S near 0.
inline double eval_G0(const ModelParams& p) {
    if (!p.has_custom()) {
        const double a = p.m - p.sigma;
        if (a == -1.0) return std::log(2.0);
        return (std::pow(2.0, a + 1.0) - 1.0) / (a + 1.0);
    }
    auto f = [&](double t) { return detail::h_integrand(p, t); };
    return adaptive_integrate(f, -40.0, 0.0, 1e-12);
}

/// Cached evaluation of G and G' on log-spaced knots with cubic Hermite
/// interpolation (exact nodal derivatives; the G' table is clamped monotone).
/// Inputs outside the covered range fall back to direct quadrature.
class GTable {
public:
    GTable() = default;

    GTable(const ModelParams& p, std::size_t n_knots = 2048, double u_min = 1e-6,
           double u_max = 1e8)
        : params_(p) {
        if (n_knots < 8) throw std::invalid_argument("GTable: need at least 8 knots");
        const double x0 = std::log(u_min);
        const double x1 = std::log(u_max);
        const double dx = (x1 - x0) / double(n_knots - 1);
        using rule = boost::math::quadrature::gauss_kronrod<double, 15>;

        // One Gauss-Kronrod panel per knot interval, prefix-summed, then
        // re-anchored at x = 0 where both antiderivatives vanish.
        std::vector<double> cum1(n_knots, 0.0), cum2(n_knots, 0.0);
        auto f1 = [&](double t) { return detail::gprime_integrand(p, t); };
        auto f2 = [&](double t) { return detail::h_integrand(p, t); };
        for (std::size_t j = 1; j < n_knots; ++j) {
            const double a = x0 + dx * double(j - 1);
            const double b = a + dx;
            cum1[j] = cum1[j - 1] + rule::integrate(f1, a, b, 0);
            cum2[j] = cum2[j - 1] + rule::integrate(f2, a, b, 0);
        }
        const double anchor1 = adaptive_integrate(f1, x0, 0.0, 1e-14, 1e-14);
        const double anchor2 = adaptive_integrate(f2, x0, 0.0, 1e-14, 1e-14);

        std::vector<double> gp(n_knots), g(n_knots), dgp(n_knots), dg(n_knots);
        for (std::size_t j = 0; j < n_knots; ++j) {
            const double x = x0 + dx * double(j);
            const double u = std::exp(x);
            gp[j] = cum1[j] - anchor1;
            const double h = cum2[j] - anchor2;
            g[j] = u * gp[j] - h;   // G = u G' - int_1^u xi rho(xi) dxi
            dgp[j] = f1(x);
            dg[j] = u * gp[j];
        }
        gprime_ = HermiteTable(x0, dx, std::move(gp), std::move(dgp), true);
        g_ = HermiteTable(x0, dx, std::move(g), std::move(dg), false);
        g0_ = eval_G0(p);
        built_ = true;
    }

    bool built() const { return built_; }
    double G0() const { return g0_; }

    double G(double u) const {
        if (!(u >= 0.0)) throw std::domain_error("GTable::G: u must be >= 0");
        if (u == 0.0) return g0_;
        const double x = std::log(u);
        if (!built_ || !g_.covers(x)) return eval_G(params_, u, fallback_tol(u));
        return g_.eval(x);
    }

    double Gprime(double u) const {
        if (!(u > 0.0)) throw std::domain_error("GTable::Gprime: u must be > 0");
        const double x = std::log(u);
        if (!built_ || !gprime_.covers(x)) return eval_Gprime(params_, u, fallback_tol(u));
        return gprime_.eval(x);
    }

private:
    static double fallback_tol(double u) { return 1e-10 * (1.0 + std::abs(u)); }

    ModelParams params_;
    HermiteTable g_, gprime_;
    double g0_ = 0.0;
    bool built_ = false;
};

/// Growth-envelope check G(zeta) <= C_G (1 + zeta^{2+alpha}) over samples.
struct GrowthCheck {
    bool ok = false;
    double worst_ratio = 0.0;   ///< max of G(zeta) / (1 + zeta^{2+alpha})
    double minimal_C_G = 0.0;   ///< smallest constant that would pass these samples
};

inline GrowthCheck check_growth_condition(const ModelParams& p, double C_G,
                                          const std::vector<double>& zeta_samples) {
    GrowthCheck r;
    const double e = 2.0 + p.alpha();
    for (double z : zeta_samples) {
        if (!(z > 0.0))
            throw std::domain_error("check_growth_condition: samples must be > 0");
        const double envelope = 1.0 + std::pow(z, e);
        const double ratio = eval_G(p, z, 1e-10 * envelope) / envelope;
        if (ratio > r.worst_ratio) r.worst_ratio = ratio;
    }
    r.minimal_C_G = r.worst_ratio;
    r.ok = r.worst_ratio <= C_G;
    return r;
}

/// Parameters of the integral comparison between int s D/S and its own
/// double integral that separates the boundedness regime.
struct Condition13Params {
    double s0 = 1.0;
    double delta13 = 0.1;
    double K = 10.0;
    double s_max = 1e3;
    int n_samples = 64;
    double tol = 1e-9;
};

struct Condition13Report {
    bool ok = false;
    double max_violation = 0.0;  ///< max over samples of LHS - RHS
    std::string warning;
};

/// Samples LHS(s) = int_{s0}^{s} tau D/S dtau against
/// RHS(s) = ((N-2-delta)/N) int_{s0}^{s} int_{s0}^{t} D/S + K s on a geometric
/// ladder. The double integral collapses to s F1(s) - F2(s) by parts.
inline Condition13Report check_condition_13(const ModelParams& p,
                                            const Condition13Params& c) {
    if (!(c.s0 > 0.0) || !(c.s_max >= c.s0))
        throw std::invalid_argument("check_condition_13: need 0 < s0 <= s_max");
    if (c.n_samples < 1) throw std::invalid_argument("check_condition_13: n_samples >= 1");
    Condition13Report rep;
    if (p.N <= 2) {
        rep.warning = "condition vacuous for N <= 2: prefactor (N-2-delta)/N requires delta < N-2";
        rep.ok = true;
        return rep;
    }
    if (!(c.delta13 > 0.0) || !(c.delta13 < double(p.N - 2)))
        throw std::invalid_argument("check_condition_13: delta13 must lie in (0, N-2)");

    std::vector<double> s(std::size_t(c.n_samples));
    const double ratio = c.s_max > c.s0 && c.n_samples > 1
                             ? std::pow(c.s_max / c.s0, 1.0 / double(c.n_samples - 1))
                             : 1.0;
    s[0] = c.s0;
    for (std::size_t k = 1; k < s.size(); ++k) s[k] = s[k - 1] * ratio;

    auto rho = [&](double tau) { return ds_ratio(p, tau); };
    auto tau_rho = [&](double tau) { return tau * ds_ratio(p, tau); };
    double F1 = 0.0, F2 = 0.0;
    const double pref = (double(p.N - 2) - c.delta13) / double(p.N);
    rep.ok = true;
    rep.max_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (k > 0) {
            F1 += adaptive_integrate(rho, s[k - 1], s[k], 1e-12 * (1.0 + F1));
            F2 += adaptive_integrate(tau_rho, s[k - 1], s[k], 1e-12 * (1.0 + F2));
        }
        const double lhs = F2;
        const double rhs = pref * (s[k] * F1 - F2) + c.K * s[k];
        rep.max_violation = std::max(rep.max_violation, lhs - rhs);
        if (lhs - rhs > c.tol * (1.0 + std::abs(rhs))) rep.ok = false;
    }
    return rep;
}

/// Regime booleans derived from the parameter boundaries.
struct RegimeVerdict {
    bool bounded_regime = false;        ///< sigma < m - (N-2)/N
    bool global_regime = false;         ///< sigma <= 0
    bool blowup_regime = false;         ///< -alpha > 2/N
    bool infinite_time_blowup = false;  ///< global and blow-up together
};

inline RegimeVerdict classify_regime(const ModelParams& p) {
    RegimeVerdict v;
    v.bounded_regime = p.sigma < p.m - double(p.N - 2) / p.N;
    v.global_regime = p.sigma <= 0.0;
    v.blowup_regime = -p.alpha() > 2.0 / p.N;
    v.infinite_time_blowup = v.global_regime && v.blowup_regime;
    return v;
}

/// Sampled envelope check for hook-supplied (D, S): D(u) >= c_D (u+1)^{m-1}
/// and 0 < S(u) <= C_S u (u+1)^{sigma-1}.
struct EnvelopeCheck {
    bool D_ok = true;
    bool S_ok = true;
    double worst_D_margin = 0.0;  ///< most negative D(u) - c_D (u+1)^{m-1}
    double worst_S_margin = 0.0;  ///< most negative C_S u (u+1)^{sigma-1} - S(u)
};

inline EnvelopeCheck check_envelopes(const ModelParams& p, double c_D, double C_S,
                                     const std::vector<double>& samples) {
    EnvelopeCheck r;
    for (double u : samples) {
        if (!(u > 0.0)) throw std::domain_error("check_envelopes: samples must be > 0");
        const double dm = eval_D(p, u) - c_D * std::pow(u + 1.0, p.m - 1.0);
        const double s = eval_S(p, u);
        const double sm = C_S * u * std::pow(u + 1.0, p.sigma - 1.0) - s;
        r.worst_D_margin = std::min(r.worst_D_margin, dm);
        r.worst_S_margin = std::min(r.worst_S_margin, sm);
        if (dm < 0.0) r.D_ok = false;
        if (sm < 0.0 || !(s > 0.0)) r.S_ok = false;
    }
    return r;
}

} // namespace kslab
