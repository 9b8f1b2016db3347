#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kslab/elliptic.hpp"
#include "kslab/energy.hpp"
#include "kslab/errors.hpp"
#include "kslab/grid.hpp"
#include "kslab/model.hpp"

namespace kslab {

struct EvolutionConfig {
    double t_end = 1.0;
    double dt_init = 1e-4;
    double dt_min = 1e-12;
    double cfl_safety = 0.9;
    double u_max_threshold = 1e6;
    double mass_drift_tol = 1e-6;
    double snapshot_every = 1e-2;
};

inline void validate(const EvolutionConfig& c) {
    if (!(c.t_end > 0.0)) throw std::invalid_argument("EvolutionConfig: t_end must be > 0");
    if (!(c.dt_init > 0.0) || !(c.dt_min > 0.0) || !(c.dt_min < c.dt_init))
        throw std::invalid_argument("EvolutionConfig: need 0 < dt_min < dt_init");
    if (!(c.cfl_safety > 0.0) || !(c.cfl_safety <= 1.0))
        throw std::invalid_argument("EvolutionConfig: cfl_safety must lie in (0, 1]");
    if (!(c.u_max_threshold > 0.0) || !(c.mass_drift_tol > 0.0) || !(c.snapshot_every > 0.0))
        throw std::invalid_argument("EvolutionConfig: thresholds must be positive");
}

enum class VerdictKind { completed_horizon, threshold_exceeded, step_collapse };

inline const char* to_string(VerdictKind k) {
    switch (k) {
        case VerdictKind::completed_horizon: return "completed_horizon";
        case VerdictKind::threshold_exceeded: return "threshold_exceeded";
        case VerdictKind::step_collapse: return "step_collapse";
    }
    return "unknown";
}

struct BlowupVerdict {
    VerdictKind kind = VerdictKind::completed_horizon;
    double t_stop = 0.0;
    double sup_u_final = 0.0;
    bool sup_u_history_monotone_tail = false;
};

struct Snapshot {
    double t = 0.0;
    RadialField u;
    RadialField v;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> sup_norms;
    std::vector<double> masses;
    std::vector<double> energies;
    std::vector<double> dissipations;
    std::vector<Snapshot> snapshots;
};

struct StepResult {
    bool accepted = false;
    double dt_limit = 0.0;  ///< positivity-safe step bound for this state
    RadialField u_next;     ///< valid only when accepted
    RadialField v;          ///< elliptic solution at the incoming state
};

/// One IMEX finite-volume step: solve the elliptic problem for v, move the
/// chemotactic flux explicitly with donor-cell upwinding (S at the upwind
/// cell), then advance diffusion implicitly with D frozen at the face-averaged
/// incoming state. The step is rejected, not clipped, when dt exceeds the
/// per-cell bound that keeps every explicit outflow from overdrawing its cell,
/// so accepted steps preserve nonnegativity exactly.
inline StepResult step(const RadialField& u, double dt, const ModelParams& p,
                       double cfl_safety = 0.9) {
    require_grid(u);
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
    const RadialGrid& g = *u.grid;
    const std::size_t n = g.n_cells;

    StepResult res;
    res.v = solve_screened_poisson(u).v;

    // Face drift w and donor-cell outflow bookkeeping. Face j sits between
    // cells j-1 and j; array index j-1 in face_area / center_gap.
    std::vector<double> w(n + 1, 0.0), phi(n + 1, 0.0);
    for (std::size_t j = 1; j < n; ++j)
        w[j] = (res.v.values[j] - res.v.values[j - 1]) / g.center_gap[j - 1];

    double dt_limit = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double ui = u.values[i];
        if (!(ui > 0.0)) continue;
        const double s_over_u = eval_S(p, ui) / ui;
        double out = 0.0;
        if (i + 1 < n) out += g.face_area[i] * std::max(w[i + 1], 0.0);
        if (i > 0) out += g.face_area[i - 1] * std::max(-w[i], 0.0);
        out *= s_over_u;
        if (out > 0.0) dt_limit = std::min(dt_limit, (g.volumes[i] / g.omega) / out);
    }
    res.dt_limit = cfl_safety * dt_limit;
    if (dt > res.dt_limit) return res;

    for (std::size_t j = 1; j < n; ++j) {
        const double donor = w[j] > 0.0 ? u.values[j - 1] : u.values[j];
        phi[j] = g.face_area[j - 1] * eval_S(p, donor) * w[j];
    }

    std::vector<double> lower(n, 0.0), diag(n, 0.0), upper(n, 0.0), rhs(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double mi = g.volumes[i] / g.omega;
        diag[i] = mi;
        rhs[i] = mi * u.values[i] + dt * (phi[i] - phi[i + 1]);
    }
    for (std::size_t j = 1; j < n; ++j) {
        const double uf = 0.5 * (u.values[j - 1] + u.values[j]);
        const double c = dt * g.face_area[j - 1] * eval_D(p, uf) / g.center_gap[j - 1];
        diag[j - 1] += c;
        diag[j] += c;
        upper[j - 1] = -c;
        lower[j] = -c;
    }
    res.u_next = RadialField(g, tridiag_solve(lower, diag, upper, rhs));
    res.accepted = true;
    return res;
}

/// L2-norm of the steady-state defect D(u) u_r - S(u) v_r over faces, with u
/// face-averaged. Vanishes at constants and whenever D = S with u = v.
inline double steady_state_residual(const RadialField& u, const RadialField& v,
                                    const ModelParams& p) {
    require_same_grid(u, v);
    const RadialGrid& g = *u.grid;
    const std::vector<double> ur = radial_derivative(u);
    const std::vector<double> vr = radial_derivative(v);
    double acc = 0.0;
    for (std::size_t f = 0; f + 1 < g.n_cells; ++f) {
        const double uf = 0.5 * (u.values[f] + u.values[f + 1]);
        const double q = eval_D(p, uf) * ur[f + 1] - eval_S(p, uf) * vr[f + 1];
        acc += g.face_area[f] * g.center_gap[f] * q * q;
    }
    return std::sqrt(g.omega * acc);
}

namespace detail {

inline double sup_norm(const RadialField& u) {
    double s = 0.0;
    for (double x : u.values) s = std::max(s, x);
    return s;
}

inline double min_value(const RadialField& u) {
    double s = std::numeric_limits<double>::infinity();
    for (double x : u.values) s = std::min(s, x);
    return s;
}

inline bool monotone_tail(const std::vector<double>& sup_norms) {
    const std::size_t n = sup_norms.size();
    if (n < 3) return false;
    const std::size_t tail = std::max<std::size_t>(3, n / 4);
    for (std::size_t k = n - tail; k + 1 < n; ++k)
        if (sup_norms[k + 1] < sup_norms[k] * (1.0 - 1e-12)) return false;
    return true;
}

} // namespace detail

/// Advances u0 until the horizon, the sup-norm threshold, or step collapse,
/// with the step growing 1.2x per ten accepted steps (capped at the snapshot
/// cadence) and halving on rejection. Snapshots land exactly on multiples of
/// snapshot_every by clipping dt, and each records the pair (u, v) together
/// with mass, sup-norm, energy, and dissipation.
inline std::pair<TrajectoryRecord, BlowupVerdict> run(const RadialField& u0,
                                                      const ModelParams& p,
                                                      const EvolutionConfig& cfg) {
    require_grid(u0);
    validate(cfg);
    if (detail::min_value(u0) < 0.0)
        throw std::invalid_argument("run: u0 must be nonnegative");

    const GTable table(p);
    TrajectoryRecord traj;
    BlowupVerdict verdict;
    RadialField u = u0;
    const double mass0 = integrate(u0);

    auto record = [&](double t) {
        if (!traj.times.empty() && t <= traj.times.back()) return;
        Snapshot snap;
        snap.t = t;
        snap.u = u;
        snap.v = solve_screened_poisson(u).v;
        traj.times.push_back(t);
        traj.sup_norms.push_back(detail::sup_norm(u));
        const double mass = integrate(u);
        traj.masses.push_back(mass);
        traj.energies.push_back(energy_full(snap.u, snap.v, p, &table));
        traj.dissipations.push_back(dissipation(snap.u, snap.v, p));
        traj.snapshots.push_back(std::move(snap));
        if (std::abs(mass - mass0) > cfg.mass_drift_tol * (std::abs(mass0) + 1e-300))
            throw SchemeViolationError("run: mass drifted beyond mass_drift_tol");
    };

    record(0.0);

    double t = 0.0;
    double dt = std::min(cfg.dt_init, cfg.snapshot_every);
    double next_snap = cfg.snapshot_every;
    int streak = 0;
    const double t_eps = 1e-12 * cfg.t_end;
    const double snap_eps = 1e-9 * cfg.snapshot_every;

    while (true) {
        if (t >= cfg.t_end - t_eps) {
            verdict.kind = VerdictKind::completed_horizon;
            break;
        }
        double dt_step = std::min(dt, cfg.t_end - t);
        if (next_snap - t > snap_eps) dt_step = std::min(dt_step, next_snap - t);

        const StepResult res = step(u, dt_step, p, cfg.cfl_safety);
        if (!res.accepted) {
            dt = 0.5 * dt_step;
            streak = 0;
            if (dt < cfg.dt_min) {
                verdict.kind = VerdictKind::step_collapse;
                record(t);
                break;
            }
            continue;
        }

        u = res.u_next;
        t += dt_step;
        const double sup = detail::sup_norm(u);
        if (detail::min_value(u) < -1e-12 * (1.0 + sup))
            throw SchemeViolationError("run: negative values beyond rounding scale");

        if (++streak % 10 == 0) dt = std::min(dt * 1.2, cfg.snapshot_every);

        if (t >= next_snap - snap_eps) {
            record(t);
            while (next_snap <= t + snap_eps) next_snap += cfg.snapshot_every;
        }
        if (sup >= cfg.u_max_threshold) {
            verdict.kind = VerdictKind::threshold_exceeded;
            record(t);
            break;
        }
    }

    record(t);
    verdict.t_stop = t;
    verdict.sup_u_final = detail::sup_norm(u);
    verdict.sup_u_history_monotone_tail = detail::monotone_tail(traj.sup_norms);
    return {std::move(traj), std::move(verdict)};
}

inline double check_energy_identity(const TrajectoryRecord& traj) {
    return check_energy_identity(traj.times, traj.energies, traj.dissipations);
}

inline double check_differential_inequality(const TrajectoryRecord& traj, double p_exp,
                                            const ModelParams& p, double c_D = 1.0,
                                            double C_S = 1.0) {
    std::vector<RadialField> fields;
    fields.reserve(traj.snapshots.size());
    for (const Snapshot& s : traj.snapshots) fields.push_back(s.u);
    return check_differential_inequality(traj.times, fields, p_exp, p, c_D, C_S);
}

inline void write_trajectory_csv(const TrajectoryRecord& traj, std::ostream& os) {
    os << "t,sup_u,mass,energy,dissipation\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        os << format_double17(traj.times[k]) << ',' << format_double17(traj.sup_norms[k])
           << ',' << format_double17(traj.masses[k]) << ','
           << format_double17(traj.energies[k]) << ','
           << format_double17(traj.dissipations[k]) << '\n';
    }
}

} // namespace kslab
