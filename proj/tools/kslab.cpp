// Command-line front end: classify | check | construct | sweep | solve.
// Values come from an optional JSON config file; explicit flags win.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "kslab/harness.hpp"

namespace {

struct Cli {
    std::string config_path;
    int N = 3;
    double m = 1.0;
    double sigma = 0.0;
    double R = 1.0;
    std::size_t n_cells = 256;
    double ratio = 1.0;
    double t_end = 1.0;
    double dt_init = 1e-4;
    double dt_min = 1e-12;
    double snapshot_every = 1e-2;
    double u_max_threshold = 1e6;
    double p = 1.0;
    int eta_count = 8;
    double eta_max = 0.2;
    double eta_min = 0.003;
    std::vector<double> etas;
    double C_G = 1.0;
    std::string u0_kind = "constant";
    double u0_value = 1.0;
    double eta = 0.1;
    std::string u0_path;
    std::string label = "run";
    std::string output_dir = "out";
};

void add_common(CLI::App* sub, Cli& c) {
    sub->add_option("--config", c.config_path, "JSON config file")
        ->check(CLI::ExistingFile);
    sub->add_option("--N", c.N, "space dimension");
    sub->add_option("--m", c.m, "diffusion exponent: D(u) = (u+1)^(m-1)");
    sub->add_option("--sigma", c.sigma, "sensitivity exponent: S(u) = u(u+1)^(sigma-1)");
    sub->add_option("--R", c.R, "ball radius");
    sub->add_option("--n-cells", c.n_cells, "radial cell count");
    sub->add_option("--ratio", c.ratio, "geometric width ratio w_last/w_first in (0, 1]");
    sub->add_option("--t-end", c.t_end, "time horizon");
    sub->add_option("--dt-init", c.dt_init, "initial time step");
    sub->add_option("--dt-min", c.dt_min, "step collapse floor");
    sub->add_option("--snapshot-every", c.snapshot_every, "snapshot spacing");
    sub->add_option("--u-max-threshold", c.u_max_threshold, "sup-norm stop threshold");
    sub->add_option("--p", c.p, "Lp exponent for the spike construction");
    sub->add_option("--eta-count", c.eta_count, "sweep ladder size");
    sub->add_option("--eta-max", c.eta_max, "largest sweep eta");
    sub->add_option("--eta-min", c.eta_min, "smallest sweep eta");
    sub->add_option("--etas", c.etas, "explicit sweep etas (overrides the range)");
    sub->add_option("--C-G", c.C_G, "growth-condition constant");
    sub->add_option("--u0-kind", c.u0_kind, "initial data kind: constant | u_hat | csv");
    sub->add_option("--u0-value", c.u0_value, "constant level / u_hat base level");
    sub->add_option("--eta", c.eta, "spike scale for u_hat initial data and construct");
    sub->add_option("--u0-path", c.u0_path, "csv source for u0");
    sub->add_option("--label", c.label, "run label (output subdirectory)");
    sub->add_option("--output-dir", c.output_dir, "output root directory");
}

kslab::json load_config(const std::string& path) {
    if (path.empty()) return kslab::json::object();
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot read config: " + path);
    return kslab::json::parse(is);
}

void apply_overrides(const CLI::App* sub, const Cli& c, kslab::json& j) {
    auto set = [&](const char* flag, const char* section, const char* key,
                   const auto& value) {
        if (sub->count(flag)) j[section][key] = value;
    };
    set("--N", "model", "N", c.N);
    set("--m", "model", "m", c.m);
    set("--sigma", "model", "sigma", c.sigma);
    set("--R", "grid", "R", c.R);
    set("--n-cells", "grid", "n_cells", c.n_cells);
    set("--ratio", "grid", "ratio", c.ratio);
    set("--t-end", "evolution", "t_end", c.t_end);
    set("--dt-init", "evolution", "dt_init", c.dt_init);
    set("--dt-min", "evolution", "dt_min", c.dt_min);
    set("--snapshot-every", "evolution", "snapshot_every", c.snapshot_every);
    set("--u-max-threshold", "evolution", "u_max_threshold", c.u_max_threshold);
    set("--p", "sweep", "p", c.p);
    set("--eta-count", "sweep", "eta_count", c.eta_count);
    set("--eta-max", "sweep", "eta_max", c.eta_max);
    set("--eta-min", "sweep", "eta_min", c.eta_min);
    set("--etas", "sweep", "etas", c.etas);
    set("--C-G", "check", "C_G", c.C_G);
    set("--u0-kind", "u0", "kind", c.u0_kind);
    set("--u0-value", "u0", "value", c.u0_value);
    set("--eta", "u0", "eta", c.eta);
    set("--u0-path", "u0", "path", c.u0_path);
    if (sub->count("--label")) j["label"] = c.label;
    if (sub->count("--output-dir")) j["output_dir"] = c.output_dir;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for radial quasilinear chemotaxis models"};
    app.require_subcommand(1);
    Cli c;
    CLI::App* classify =
        app.add_subcommand("classify", "report the regime flags for a model");
    CLI::App* check =
        app.add_subcommand("check", "evaluate the growth and comparison conditions");
    CLI::App* construct =
        app.add_subcommand("construct", "build and archive the spike initial data");
    CLI::App* sweep = app.add_subcommand("sweep", "evaluate the eta scaling ladder");
    CLI::App* solve =
        app.add_subcommand("solve", "run the evolution and archive the trajectory");
    for (CLI::App* s : {classify, check, construct, sweep, solve}) add_common(s, c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        kslab::json j = load_config(c.config_path);
        apply_overrides(sub, c, j);
        const kslab::ExperimentConfig cfg = kslab::parse_config(j);
        if (sub == classify) return kslab::cmd_classify(cfg, std::cout);
        if (sub == check) return kslab::cmd_check(cfg, std::cout);
        if (sub == construct) return kslab::cmd_construct(cfg, std::cout);
        if (sub == sweep) return kslab::cmd_sweep(cfg, std::cout);
        return kslab::cmd_solve(cfg, std::cout);
    } catch (const std::invalid_argument& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
}
