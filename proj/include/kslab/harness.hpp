#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "kslab/elliptic.hpp"
#include "kslab/energy.hpp"
#include "kslab/errors.hpp"
#include "kslab/evolution.hpp"
#include "kslab/grid.hpp"
#include "kslab/initdata.hpp"
#include "kslab/model.hpp"
#include "kslab/quadrature.hpp"
#include "kslab/version.hpp"

namespace kslab {

using nlohmann::json;

struct GridConfig {
    int N = 3;
    double R = 1.0;
    std::size_t n_cells = 256;
    double ratio = 1.0;
};

struct SweepConfig {
    double p = 1.0;
    std::vector<double> etas;  ///< explicit ladder; wins over the range below
    int eta_count = 8;
    double eta_max = 0.2;
    double eta_min = 0.003;
};

struct CheckConfig {
    double C_G = 1.0;
    int growth_samples = 64;
    double zeta_min = 1e-2;
    double zeta_max = 1e4;
    Condition13Params c13;
};

struct U0Config {
    std::string kind = "constant";  ///< constant | u_hat | csv
    double value = 1.0;             ///< constant level, also the u_hat base level
    double eta = 0.1;               ///< u_hat spike scale, also used by construct
    std::string path;               ///< csv source
};

struct ExperimentConfig {
    ModelParams model = make_model(3, 1.0, 0.0);
    GridConfig grid;
    EvolutionConfig evolution;
    SweepConfig sweep;
    CheckConfig check;
    U0Config u0;
    std::string label = "run";
    std::string output_dir = "out";
};

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                           const std::string& ctx) {
    if (!j.is_object())
        throw std::invalid_argument("config: section '" + ctx + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* a : allowed)
            if (it.key() == a) known = true;
        if (!known)
            throw std::invalid_argument("config: unknown key '" + ctx + it.key() + "'");
    }
}

template <class T>
void read_into(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace detail

inline ExperimentConfig parse_config(const json& j) {
    detail::reject_unknown(
        j, {"model", "grid", "evolution", "sweep", "check", "u0", "label", "output_dir"},
        "");
    ExperimentConfig c;
    if (j.contains("model")) {
        const json& m = j.at("model");
        detail::reject_unknown(m, {"N", "m", "sigma"}, "model.");
        int N = 3;
        double mm = 1.0, sigma = 0.0;
        detail::read_into(m, "N", N);
        detail::read_into(m, "m", mm);
        detail::read_into(m, "sigma", sigma);
        c.model = make_model(N, mm, sigma);
    }
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        detail::reject_unknown(g, {"R", "n_cells", "ratio"}, "grid.");
        detail::read_into(g, "R", c.grid.R);
        detail::read_into(g, "n_cells", c.grid.n_cells);
        detail::read_into(g, "ratio", c.grid.ratio);
    }
    c.grid.N = c.model.N;
    if (j.contains("evolution")) {
        const json& e = j.at("evolution");
        detail::reject_unknown(e,
                               {"t_end", "dt_init", "dt_min", "cfl_safety",
                                "u_max_threshold", "mass_drift_tol", "snapshot_every"},
                               "evolution.");
        detail::read_into(e, "t_end", c.evolution.t_end);
        detail::read_into(e, "dt_init", c.evolution.dt_init);
        detail::read_into(e, "dt_min", c.evolution.dt_min);
        detail::read_into(e, "cfl_safety", c.evolution.cfl_safety);
        detail::read_into(e, "u_max_threshold", c.evolution.u_max_threshold);
        detail::read_into(e, "mass_drift_tol", c.evolution.mass_drift_tol);
        detail::read_into(e, "snapshot_every", c.evolution.snapshot_every);
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        detail::reject_unknown(s, {"p", "etas", "eta_count", "eta_max", "eta_min"},
                               "sweep.");
        detail::read_into(s, "p", c.sweep.p);
        detail::read_into(s, "etas", c.sweep.etas);
        detail::read_into(s, "eta_count", c.sweep.eta_count);
        detail::read_into(s, "eta_max", c.sweep.eta_max);
        detail::read_into(s, "eta_min", c.sweep.eta_min);
    }
    if (j.contains("check")) {
        const json& k = j.at("check");
        detail::reject_unknown(
            k, {"C_G", "growth_samples", "zeta_min", "zeta_max", "s0", "delta13", "K",
                "s_max", "n_samples", "tol"},
            "check.");
        detail::read_into(k, "C_G", c.check.C_G);
        detail::read_into(k, "growth_samples", c.check.growth_samples);
        detail::read_into(k, "zeta_min", c.check.zeta_min);
        detail::read_into(k, "zeta_max", c.check.zeta_max);
        detail::read_into(k, "s0", c.check.c13.s0);
        detail::read_into(k, "delta13", c.check.c13.delta13);
        detail::read_into(k, "K", c.check.c13.K);
        detail::read_into(k, "s_max", c.check.c13.s_max);
        detail::read_into(k, "n_samples", c.check.c13.n_samples);
        detail::read_into(k, "tol", c.check.c13.tol);
    }
    if (j.contains("u0")) {
        const json& u = j.at("u0");
        detail::reject_unknown(u, {"kind", "value", "eta", "path"}, "u0.");
        detail::read_into(u, "kind", c.u0.kind);
        detail::read_into(u, "value", c.u0.value);
        detail::read_into(u, "eta", c.u0.eta);
        detail::read_into(u, "path", c.u0.path);
        if (c.u0.kind != "constant" && c.u0.kind != "u_hat" && c.u0.kind != "csv")
            throw std::invalid_argument("config: u0.kind must be constant, u_hat, or csv");
    }
    detail::read_into(j, "label", c.label);
    detail::read_into(j, "output_dir", c.output_dir);
    return c;
}

/// Canonical echo: every field explicit, so outputs are self-describing and
/// re-running the echoed config reproduces the experiment byte-for-byte.
inline json config_to_json(const ExperimentConfig& c) {
    json j;
    j["model"] = {{"N", c.model.N}, {"m", c.model.m}, {"sigma", c.model.sigma}};
    j["grid"] = {{"R", c.grid.R}, {"n_cells", c.grid.n_cells}, {"ratio", c.grid.ratio}};
    j["evolution"] = {{"t_end", c.evolution.t_end},
                      {"dt_init", c.evolution.dt_init},
                      {"dt_min", c.evolution.dt_min},
                      {"cfl_safety", c.evolution.cfl_safety},
                      {"u_max_threshold", c.evolution.u_max_threshold},
                      {"mass_drift_tol", c.evolution.mass_drift_tol},
                      {"snapshot_every", c.evolution.snapshot_every}};
    j["sweep"] = {{"p", c.sweep.p},
                  {"etas", c.sweep.etas},
                  {"eta_count", c.sweep.eta_count},
                  {"eta_max", c.sweep.eta_max},
                  {"eta_min", c.sweep.eta_min}};
    j["check"] = {{"C_G", c.check.C_G},
                  {"growth_samples", c.check.growth_samples},
                  {"zeta_min", c.check.zeta_min},
                  {"zeta_max", c.check.zeta_max},
                  {"s0", c.check.c13.s0},
                  {"delta13", c.check.c13.delta13},
                  {"K", c.check.c13.K},
                  {"s_max", c.check.c13.s_max},
                  {"n_samples", c.check.c13.n_samples},
                  {"tol", c.check.c13.tol}};
    j["u0"] = {{"kind", c.u0.kind},
               {"value", c.u0.value},
               {"eta", c.u0.eta},
               {"path", c.u0.path}};
    j["label"] = c.label;
    j["output_dir"] = c.output_dir;
    return j;
}

inline std::vector<double> resolve_etas(const SweepConfig& s) {
    if (!s.etas.empty()) return s.etas;
    if (s.eta_count < 2)
        throw std::invalid_argument("sweep: eta_count must be >= 2 when no list given");
    std::vector<double> etas(std::size_t(s.eta_count));
    const double ratio = std::pow(s.eta_min / s.eta_max, 1.0 / double(s.eta_count - 1));
    etas[0] = s.eta_max;
    for (std::size_t k = 1; k < etas.size(); ++k) etas[k] = etas[k - 1] * ratio;
    return etas;
}

/// Writes content to path via a sibling temp file and an atomic rename.
inline void write_text_atomic(const std::filesystem::path& path,
                              const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string());
        os << content;
    }
    std::filesystem::rename(tmp, path);
}

inline RadialField read_field_csv(const RadialGrid& g, std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("r,value", 0) != 0)
        throw std::invalid_argument("field csv: missing 'r,value' header");
    std::vector<double> vals;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("field csv: malformed row '" + line + "'");
        vals.push_back(std::stod(line.substr(comma + 1)));
    }
    if (vals.size() != g.n_cells)
        throw std::invalid_argument("field csv: row count does not match the grid");
    return RadialField(g, std::move(vals));
}

inline json regime_to_json(const RegimeVerdict& v) {
    return json{{"bounded_regime", v.bounded_regime},
                {"global_regime", v.global_regime},
                {"blowup_regime", v.blowup_regime},
                {"infinite_time_blowup", v.infinite_time_blowup}};
}

inline json exponents_to_json(const EtaExponents& e) {
    return json{{"gamma", e.gamma}, {"delta", e.delta_init}, {"q", e.q}, {"p", e.p}};
}

inline json slope_to_json(const SlopeFit& f) {
    return json{{"slope", f.slope}, {"stderr", f.stderr_slope}, {"valid", f.valid}};
}

inline json scaling_report_to_json(const ScalingReport& r) {
    json pts = json::array();
    for (const ScalingPoint& p : r.points)
        pts.push_back({{"eta", p.eta},
                       {"X", p.X},
                       {"Gterm", p.Gterm},
                       {"Fval", p.Fval},
                       {"dist", p.dist}});
    return json{{"exponents", exponents_to_json(r.exponents)},
                {"points", pts},
                {"fit_count", r.fit_count},
                {"x_fit", slope_to_json(r.x_fit)},
                {"gterm_fit", slope_to_json(r.gterm_fit)},
                {"fval_fit", slope_to_json(r.fval_fit)},
                {"dist_fit", slope_to_json(r.dist_fit)},
                {"x_target", r.x_target},
                {"gterm_target", r.gterm_target},
                {"fval_target", r.fval_target},
                {"x_slope_ok", r.x_slope_ok},
                {"gterm_bound_ok", r.gterm_bound_ok},
                {"fval_decreasing_negative", r.fval_decreasing_negative},
                {"dist_decreasing", r.dist_decreasing},
                {"dist_ratio", r.dist_ratio}};
}

namespace detail {

inline std::filesystem::path ensure_run_dir(const ExperimentConfig& c) {
    const std::filesystem::path dir =
        std::filesystem::path(c.output_dir) / c.label;
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string field_csv_string(const RadialField& f) {
    std::ostringstream os;
    write_field_csv(os, f);
    return os.str();
}

inline RadialGrid make_grid(const ExperimentConfig& c) {
    return make_radial_grid(c.grid.N, c.grid.R, c.grid.n_cells, c.grid.ratio);
}

inline RadialField make_u0(const ExperimentConfig& c, const RadialGrid& g) {
    if (c.u0.kind == "constant") return RadialField(g, c.u0.value);
    if (c.u0.kind == "u_hat") {
        const EtaExponents e = select_exponents(c.model, c.sweep.p);
        return build_u_hat(e, c.u0.eta, RadialField(g, c.u0.value)).u_hat;
    }
    std::ifstream is(c.u0.path);
    if (!is) throw std::invalid_argument("u0 csv not readable: " + c.u0.path);
    return read_field_csv(g, is);
}

} // namespace detail

inline int cmd_classify(const ExperimentConfig& c, std::ostream& out) {
    json j = regime_to_json(classify_regime(c.model));
    j["model"] = config_to_json(c)["model"];
    j["version"] = version;
    out << j.dump(2) << '\n';
    return 0;
}

inline int cmd_check(const ExperimentConfig& c, std::ostream& out) {
    std::vector<double> zetas(std::size_t(c.check.growth_samples));
    const double ratio =
        std::pow(c.check.zeta_max / c.check.zeta_min,
                 1.0 / double(std::max(1, c.check.growth_samples - 1)));
    double z = c.check.zeta_min;
    for (auto& zk : zetas) {
        zk = z;
        z *= ratio;
    }
    const GrowthCheck growth = check_growth_condition(c.model, c.check.C_G, zetas);
    const Condition13Report c13 = check_condition_13(c.model, c.check.c13);
    json j;
    j["version"] = version;
    j["model"] = config_to_json(c)["model"];
    j["growth"] = {{"ok", growth.ok},
                   {"worst_ratio", growth.worst_ratio},
                   {"minimal_C_G", growth.minimal_C_G},
                   {"C_G", c.check.C_G}};
    j["condition_13"] = {{"ok", c13.ok},
                         {"max_violation", c13.max_violation},
                         {"warning", c13.warning}};
    out << j.dump(2) << '\n';
    return 0;
}

inline int cmd_construct(const ExperimentConfig& c, std::ostream& out) {
    const RadialGrid g = detail::make_grid(c);
    const EtaExponents e = select_exponents(c.model, c.sweep.p);
    const EtaConstruction built =
        build_u_hat(e, c.u0.eta, RadialField(g, c.u0.kind == "constant" ? c.u0.value : 0.0));
    const std::filesystem::path dir = detail::ensure_run_dir(c);
    write_text_atomic(dir / "u_eta.csv", detail::field_csv_string(built.u_eta));
    write_text_atomic(dir / "u_hat.csv", detail::field_csv_string(built.u_hat));
    write_text_atomic(dir / "v_hat.csv", detail::field_csv_string(built.v_hat));
    json j;
    j["version"] = version;
    j["config"] = config_to_json(c);
    j["exponents"] = exponents_to_json(e);
    j["eta"] = c.u0.eta;
    j["outputs"] = {{"u_eta", (dir / "u_eta.csv").string()},
                    {"u_hat", (dir / "u_hat.csv").string()},
                    {"v_hat", (dir / "v_hat.csv").string()}};
    const std::string text = j.dump(2) + "\n";
    write_text_atomic(dir / "construction.json", text);
    out << text;
    return 0;
}

inline int cmd_sweep(const ExperimentConfig& c, std::ostream& out) {
    const RadialGrid g = detail::make_grid(c);
    const EtaExponents e = select_exponents(c.model, c.sweep.p);
    const RadialField u0(g, c.u0.kind == "constant" ? c.u0.value : 0.0);
    const ScalingReport rep =
        sweep_scalings(e, c.model, u0, resolve_etas(c.sweep), 0);
    const std::filesystem::path dir = detail::ensure_run_dir(c);

    std::ostringstream csv;
    csv << "eta,X,Gterm,Fval,dist\n";
    for (const ScalingPoint& p : rep.points)
        csv << format_double17(p.eta) << ',' << format_double17(p.X) << ','
            << format_double17(p.Gterm) << ',' << format_double17(p.Fval) << ','
            << format_double17(p.dist) << '\n';
    write_text_atomic(dir / "sweep.csv", csv.str());

    json j;
    j["version"] = version;
    j["config"] = config_to_json(c);
    j["report"] = scaling_report_to_json(rep);
    j["outputs"] = {{"csv", (dir / "sweep.csv").string()}};
    const std::string text = j.dump(2) + "\n";
    write_text_atomic(dir / "sweep.json", text);
    out << text;
    return 0;
}

inline int cmd_solve(const ExperimentConfig& c, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const RadialGrid g = detail::make_grid(c);
    const RadialField u0 = detail::make_u0(c, g);
    auto [traj, verdict] = run(u0, c.model, c.evolution);
    const std::filesystem::path dir = detail::ensure_run_dir(c);

    std::ostringstream tcsv;
    write_trajectory_csv(traj, tcsv);
    write_text_atomic(dir / "trajectory.csv", tcsv.str());
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const Snapshot& s = traj.snapshots[k];
        std::ostringstream os;
        os << "r,u,v\n";
        for (std::size_t i = 0; i < s.u.size(); ++i)
            os << format_double17(s.u.grid->centers[i]) << ','
               << format_double17(s.u.values[i]) << ','
               << format_double17(s.v.values[i]) << '\n';
        char name[32];
        std::snprintf(name, sizeof(name), "snap_%04zu.csv", k);
        write_text_atomic(dir / name, os.str());
    }

    const double wall_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
    json j;
    j["version"] = version;
    j["config"] = config_to_json(c);
    j["regime"] = regime_to_json(classify_regime(c.model));
    j["verdict"] = {{"kind", to_string(verdict.kind)},
                    {"t_stop", verdict.t_stop},
                    {"sup_u_final", verdict.sup_u_final},
                    {"monotone_tail", verdict.sup_u_history_monotone_tail}};
    j["outputs"] = {{"trajectory", (dir / "trajectory.csv").string()},
                    {"snapshots", traj.snapshots.size()}};
    double drift = 0.0;
    for (double m : traj.masses) drift = std::max(drift, std::abs(m - traj.masses[0]));
    j["summary"] = {{"mass_drift_abs", drift},
                    {"final_energy", traj.energies.back()},
                    {"snapshots", traj.times.size()}};
    j["timing"] = {{"wall_ms", wall_ms}};
    const std::string text = j.dump(2) + "\n";
    write_text_atomic(dir / "record.json", text);
    out << text;
    return 0;
}

} // namespace kslab
