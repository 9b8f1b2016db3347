#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kslab/grid.hpp"
#include "kslab/model.hpp"

namespace kslab {

namespace detail {

// Integral of G(u) over the ball; cells at u = 0 use the continuous
// extension G(0+). A prebuilt table accelerates repeated evaluation.
inline double integral_G(const RadialField& u, const ModelParams& p,
                         const GTable* table) {
    require_grid(u);
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double ui = u.values[i];
        double Gi;
        if (table)
            Gi = table->G(ui);
        else if (ui == 0.0)
            Gi = eval_G0(p);
        else
            Gi = eval_G(p, ui, 1e-10 * (1.0 + std::abs(ui)));
        acc += Gi * u.grid->volumes[i];
    }
    return acc;
}

// Integral of a squared face quantity with the same face weights the
// elliptic stencil uses: sum over interior faces of omega * A_f * d_f * q_f^2.
// Matching these weights makes the full and reduced energies agree exactly
// for solved (u, v) pairs.
inline double face_square_integral(const RadialGrid& g,
                                   const std::vector<double>& face_values) {
    double acc = 0.0;
    for (std::size_t f = 0; f + 1 < g.n_cells; ++f)
        acc += g.face_area[f] * g.center_gap[f] * face_values[f + 1] * face_values[f + 1];
    return g.omega * acc;
}

} // namespace detail

/// Full energy: (1/2) int |grad v|^2 + (1/2) int v^2 - int u v + int G(u).
inline double energy_full(const RadialField& u, const RadialField& v,
                          const ModelParams& p, const GTable* table = nullptr) {
    require_same_grid(u, v);
    const RadialGrid& g = *u.grid;
    const std::vector<double> vr = radial_derivative(v);
    const double grad2 = detail::face_square_integral(g, vr);
    double v2 = 0.0, uv = 0.0;
    for (std::size_t i = 0; i < g.n_cells; ++i) {
        v2 += v.values[i] * v.values[i] * g.volumes[i];
        uv += u.values[i] * v.values[i] * g.volumes[i];
    }
    return 0.5 * grad2 + 0.5 * v2 - uv + detail::integral_G(u, p, table);
}

/// Reduced energy: int G(u) - (1/2) int u v. Coincides with the full energy
/// whenever (u, v) satisfies the discrete elliptic relation.
inline double energy_reduced(const RadialField& u, const RadialField& v,
                             const ModelParams& p, const GTable* table = nullptr) {
    require_same_grid(u, v);
    double uv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        uv += u.values[i] * v.values[i] * u.grid->volumes[i];
    return detail::integral_G(u, p, table) - 0.5 * uv;
}

/// Dissipation int S(u) |(D/S)(u) u_r - v_r|^2, evaluated at faces with u
/// averaged across the face. Faces with u_face = 0 contribute nothing: there
/// nonnegativity forces u_r = 0 and S(0) = 0 kills the remaining term.
inline double dissipation(const RadialField& u, const RadialField& v,
                          const ModelParams& p) {
    require_same_grid(u, v);
    const RadialGrid& g = *u.grid;
    const std::vector<double> ur = radial_derivative(u);
    const std::vector<double> vr = radial_derivative(v);
    double acc = 0.0;
    for (std::size_t f = 0; f + 1 < g.n_cells; ++f) {
        const double uf = 0.5 * (u.values[f] + u.values[f + 1]);
        if (uf <= 0.0) continue;
        const double flux = ds_ratio(p, uf) * ur[f + 1] - vr[f + 1];
        acc += g.face_area[f] * g.center_gap[f] * eval_S(p, uf) * flux * flux;
    }
    return g.omega * acc;
}

struct EnergyReport {
    double F_full = 0.0;
    double F_reduced = 0.0;
    double dissipation = 0.0;
    double gap_full_vs_reduced = 0.0;
};

inline EnergyReport make_energy_report(const RadialField& u, const RadialField& v,
                                       const ModelParams& p,
                                       const GTable* table = nullptr) {
    EnergyReport r;
    r.F_full = energy_full(u, v, p, table);
    r.F_reduced = energy_reduced(u, v, p, table);
    r.dissipation = dissipation(u, v, p);
    r.gap_full_vs_reduced = std::abs(r.F_full - r.F_reduced);
    return r;
}

/// Checks d/dt F = -dissipation along a recorded trajectory: centered energy
/// differences against trapezoid-averaged dissipation, returning the max over
/// snapshot pairs of |LHS - RHS| / (1 + |RHS|).
inline double check_energy_identity(const std::vector<double>& times,
                                    const std::vector<double>& energies,
                                    const std::vector<double>& dissipations) {
    const std::size_t n = times.size();
    if (n < 3 || energies.size() != n || dissipations.size() != n)
        throw std::invalid_argument(
            "check_energy_identity: need >= 3 snapshots with matching lists");
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double dt = times[k + 1] - times[k];
        if (!(dt > 0.0))
            throw std::invalid_argument("check_energy_identity: times must increase");
        const double lhs = (energies[k + 1] - energies[k]) / dt;
        const double rhs = -0.5 * (dissipations[k] + dissipations[k + 1]);
        worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
    }
    return worst;
}

/// Checks the p-energy differential inequality along snapshots:
///   (1/p) d/dt int (u+1)^p
///     <= -(4 c_D (p-1)/(m+p-1)^2) int |grad (u+1)^{(m+p-1)/2}|^2
///        + (C_S (p-1)/(p+sigma-1)) int (u+1)^{p+sigma}.
/// LHS by finite differences, RHS trapezoid-averaged across each pair.
/// Returns the max over pairs of LHS - RHS (positive means violation).
inline double check_differential_inequality(const std::vector<double>& times,
                                            const std::vector<RadialField>& fields,
                                            double p_exp, const ModelParams& p,
                                            double c_D = 1.0, double C_S = 1.0) {
    if (!(p_exp > 1.0) || !(p_exp > 1.0 - p.sigma))
        throw std::invalid_argument(
            "check_differential_inequality: requires p > 1 and p > 1 - sigma");
    const std::size_t n = times.size();
    if (n < 2 || fields.size() != n)
        throw std::invalid_argument(
            "check_differential_inequality: need >= 2 snapshots with matching lists");

    const double grad_coef = 4.0 * c_D * (p_exp - 1.0) / ((p.m + p_exp - 1.0) * (p.m + p_exp - 1.0));
    const double lot_coef = C_S * (p_exp - 1.0) / (p_exp + p.sigma - 1.0);
    const double half_exp = 0.5 * (p.m + p_exp - 1.0);

    auto lp_mass = [&](const RadialField& u) {
        double acc = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i)
            acc += std::pow(u.values[i] + 1.0, p_exp) * u.grid->volumes[i];
        return acc;
    };
    auto rhs_at = [&](const RadialField& u) {
        const RadialGrid& g = *u.grid;
        std::vector<double> w(g.n_cells + 1, 0.0);
        for (std::size_t i = 0; i + 1 < g.n_cells; ++i)
            w[i + 1] = (std::pow(u.values[i + 1] + 1.0, half_exp) -
                        std::pow(u.values[i] + 1.0, half_exp)) /
                       g.center_gap[i];
        const double grad2 = detail::face_square_integral(g, w);
        double lot = 0.0;
        for (std::size_t i = 0; i < g.n_cells; ++i)
            lot += std::pow(u.values[i] + 1.0, p_exp + p.sigma) * g.volumes[i];
        return -grad_coef * grad2 + lot_coef * lot;
    };

    double worst = -std::numeric_limits<double>::infinity();
    double mass_prev = lp_mass(fields[0]);
    double rhs_prev = rhs_at(fields[0]);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double dt = times[k + 1] - times[k];
        if (!(dt > 0.0))
            throw std::invalid_argument(
                "check_differential_inequality: times must increase");
        const double mass_next = lp_mass(fields[k + 1]);
        const double rhs_next = rhs_at(fields[k + 1]);
        const double lhs = (mass_next - mass_prev) / (p_exp * dt);
        const double rhs = 0.5 * (rhs_prev + rhs_next);
        worst = std::max(worst, lhs - rhs);
        mass_prev = mass_next;
        rhs_prev = rhs_next;
    }
    return worst;
}

} // namespace kslab
