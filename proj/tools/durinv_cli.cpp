#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "durinv/csv.hpp"
#include "durinv/hjbqvi.hpp"
#include "durinv/no_tc.hpp"
#include "durinv/params.hpp"
#include "durinv/scenario_io.hpp"
#include "durinv/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace durinv;

namespace {

std::vector<double> parse_phi_grid(const std::string& s) {
    double a, step, b;
    char trail;
    if (std::sscanf(s.c_str(), "%lf:%lf:%lf%c", &a, &step, &b, &trail) != 3)
        throw std::runtime_error("--phi-grid expects a:step:b, got '" + s + "'");
    if (step <= 0.0) throw std::runtime_error("--phi-grid step must be > 0");
    if (b < a) throw std::runtime_error("--phi-grid upper end below lower end");
    std::vector<double> grid;
    for (int i = 0;; ++i) {
        double v = a + i * step;
        if (v > b + 1e-12) break;
        grid.push_back(v);
    }
    return grid;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string phi_tag(double phi) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", phi);
    return buf;
}

json params_json(const ModelParams& p) {
    return json{{"mu_S", p.mu_S},         {"sigma_S", p.sigma_S}, {"eta", p.eta},
                {"lambda_1", p.lambda_1}, {"r", p.r},             {"mu_P", p.mu_P},
                {"sigma_P1", p.sigma_P1}, {"sigma_P2", p.sigma_P2},
                {"delta", p.delta},       {"ell", p.ell},         {"lambda_2", p.lambda_2},
                {"phi", p.phi},           {"rho", p.rho},         {"beta", p.beta},
                {"gamma", p.gamma},       {"theta", p.theta}};
}

json solver_config_json(const HJBQVIConfig& cfg, const Grid& grid) {
    return json{{"n", grid.n},
                {"z_max", grid.z_max},
                {"h", grid.h},
                {"tol_outer", cfg.tol_outer},
                {"tol_inner", cfg.tol_inner},
                {"tol_psor", cfg.tol_psor},
                {"omega", cfg.omega},
                {"max_outer", cfg.max_outer},
                {"max_inner", cfg.max_inner},
                {"max_psor_sweeps", cfg.max_psor_sweeps},
                {"golden_tol", cfg.golden_tol},
                {"band_tol", cfg.band_tol}};
}

struct ManifestClock {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void finish_manifest(json& m, const ManifestClock& clk, const fs::path& out_dir,
                     std::vector<std::string> outputs) {
    m["wall_time_seconds"] = clk.seconds();
    m["library_version"] = kLibraryVersion;
    outputs.push_back("manifest.json");
    m["outputs"] = outputs;
    write_file(out_dir / "manifest.json", m.dump(2) + "\n");
}

json manifest_base(const std::string& command, const std::string& scenario_path,
                   const Scenario& sc) {
    json m;
    m["command"] = command;
    m["scenario_file"] = scenario_path;
    m["scenario_name"] = sc.name;
    m["params"] = params_json(sc.params);
    return m;
}

std::string ntc_row(double phi, const NoTCSolution& s) {
    return fmt17(phi) + "," + fmt17(s.alpha_c) + "," + fmt17(s.alpha_pi1) + "," +
           fmt17(s.alpha_k) + "," + fmt17(s.alpha_q) + "," + fmt17(s.alpha_v) + "," +
           fmt17(s.objective) + "\n";
}

constexpr const char* kNtcHeader = "phi,alpha_c,alpha_pi1,alpha_k,alpha_q,alpha_v,objective\n";

std::string tc_solution_csv(const HJBQVISolution& sol) {
    std::string csv = "z,v,Mv,excess,c_hat,pi1_hat,q_hat,trade_flag\n";
    for (int i = 0; i < sol.grid.n; ++i) {
        csv += fmt17(sol.grid.z[i]) + "," + fmt17(sol.v[i]) + "," + fmt17(sol.Mv[i]) + "," +
               fmt17(sol.v[i] - sol.Mv[i]) + "," + fmt17(sol.policy.c_hat[i]) + "," +
               fmt17(sol.policy.pi1_hat[i]) + "," + fmt17(sol.policy.q_hat[i]) + "," +
               (sol.policy.trade_flag[i] ? "1" : "0") + "\n";
    }
    return csv;
}

std::string tc_trace_csv(const HJBQVISolution& sol) {
    std::string csv = "iter,delta_v_inf,M\n";
    for (const auto& rec : sol.trace)
        csv += std::to_string(rec.iter) + "," + fmt17(rec.delta_v_inf) + "," + fmt17(rec.M) + "\n";
    return csv;
}

constexpr const char* kTcSummaryHeader = "phi,z_low,z_high,z_star,M,outer_iters\n";

std::string tc_summary_row(double phi, const HJBQVISolution& sol) {
    return fmt17(phi) + "," + fmt17(sol.bands.z_low) + "," + fmt17(sol.bands.z_high) + "," +
           fmt17(sol.bands.z_star) + "," + fmt17(sol.bands.M) + "," +
           std::to_string(sol.outer_iters) + "\n";
}

struct SolverFlags {
    int grid_n = 0;
    double z_max = 0.0;
    double tol_outer = 0.0, tol_inner = 0.0, tol_psor = 0.0;
    double omega = 0.0;

    HJBQVIConfig resolve() const {
        HJBQVIConfig cfg;
        if (grid_n > 0) cfg.n = grid_n;
        if (z_max > 0.0) cfg.z_max = z_max;
        if (tol_outer > 0.0) cfg.tol_outer = tol_outer;
        if (tol_inner > 0.0) cfg.tol_inner = tol_inner;
        if (tol_psor > 0.0) cfg.tol_psor = tol_psor;
        if (omega > 0.0) cfg.omega = omega;
        return cfg;
    }
};

void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
    cmd->add_option("--grid-n", f.grid_n, "number of grid nodes");
    cmd->add_option("--z-max", f.z_max, "right end of the z grid");
    cmd->add_option("--tol-outer", f.tol_outer, "outer stopping tolerance");
    cmd->add_option("--tol-inner", f.tol_inner, "inner stopping tolerance");
    cmd->add_option("--tol-psor", f.tol_psor, "PSOR stopping tolerance");
    cmd->add_option("--omega", f.omega, "PSOR relaxation factor");
}

std::vector<double> resolve_phi_grid(const Scenario& sc, const std::string& flag) {
    std::vector<double> grid = flag.empty() ? sc.phi_grid : parse_phi_grid(flag);
    if (grid.empty())
        throw std::runtime_error("no phi grid: scenario file lists none and --phi-grid not given");
    for (double phi : grid)
        if (phi < 1.0) throw std::runtime_error("phi grid value " + phi_tag(phi) + " below 1");
    return grid;
}

int run_validate(const std::string& scenario_path) {
    Scenario sc = load_scenario(scenario_path);
    std::vector<std::string> violations = validate_params(sc.params);
    TransversalityResult tv = check_transversality(sc.params);
    if (!violations.empty()) {
        for (const auto& msg : violations) std::cerr << "constraint violated: " << msg << "\n";
        return 1;
    }
    if (!tv.holds) {
        std::cerr << "constraint violated: transversality condition fails (margin "
                  << fmt17(tv.margin) << ")\n";
        return 1;
    }
    std::cout << "scenario '" << sc.name << "' valid; transversality margin " << fmt17(tv.margin)
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"durinv: optimal consumption, investment and insurance solver"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = ".";
    std::string phi_grid_flag;
    SolverFlags sf;

    long paths = 10000;
    double dt = 1.0 / 250.0;
    double horizon = 0.0;
    std::uint64_t seed = 1;
    double x0 = 1.0, p0 = 1.0, k0 = 0.0;
    std::string strategy_name = "ntc";

    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--scenario", scenario_path, "scenario file")->required();
        if (needs_out) cmd->add_option("--out", out_dir, "output directory");
    };

    CLI::App* c_ntc = app.add_subcommand("solve-ntc", "frictionless constant fractions");
    add_common(c_ntc, true);

    CLI::App* c_sweep = app.add_subcommand("sweep-loading", "frictionless solve per phi");
    add_common(c_sweep, true);
    c_sweep->add_option("--phi-grid", phi_grid_flag, "a:step:b, overrides the scenario grid");

    CLI::App* c_tc = app.add_subcommand("solve-tc", "HJBQVI solve with transaction costs");
    add_common(c_tc, true);
    add_solver_flags(c_tc, sf);

    CLI::App* c_tcsweep = app.add_subcommand("sweep-tc-loading", "HJBQVI solve per phi");
    add_common(c_tcsweep, true);
    c_tcsweep->add_option("--phi-grid", phi_grid_flag, "a:step:b, overrides the scenario grid");
    add_solver_flags(c_tcsweep, sf);

    CLI::App* c_sim = app.add_subcommand("simulate", "Monte Carlo value of a strategy");
    add_common(c_sim, true);
    add_solver_flags(c_sim, sf);
    c_sim->add_option("--paths", paths, "number of Monte Carlo paths");
    c_sim->add_option("--dt", dt, "time step in years");
    c_sim->add_option("--horizon", horizon, "horizon in years (default: truncation rule)");
    c_sim->add_option("--seed", seed, "RNG seed");
    c_sim->add_option("--x0", x0, "initial wealth");
    c_sim->add_option("--p0", p0, "initial durable price");
    c_sim->add_option("--k0", k0, "initial durable units (default: strategy target)");
    c_sim->add_option("--strategy", strategy_name, "ntc or band")
        ->check(CLI::IsMember({"ntc", "band"}));

    CLI::App* c_val = app.add_subcommand("validate", "check a scenario file");
    add_common(c_val, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_val->parsed()) return run_validate(scenario_path);

        ManifestClock clk;
        Scenario sc = load_scenario(scenario_path);
        fs::create_directories(out_dir);
        fs::path out(out_dir);

        if (c_ntc->parsed()) {
            NoTCSolution sol = solve_no_tc(sc.params);
            write_file(out / "ntc.csv", kNtcHeader + ntc_row(sc.params.phi, sol));
            json m = manifest_base("solve-ntc", scenario_path, sc);
            finish_manifest(m, clk, out, {"ntc.csv"});
            std::cout << "alpha_pi1 " << fmt17(sol.alpha_pi1) << ", alpha_k " << fmt17(sol.alpha_k)
                      << ", alpha_q " << fmt17(sol.alpha_q) << ", alpha_v " << fmt17(sol.alpha_v)
                      << "\n";
        } else if (c_sweep->parsed()) {
            Scenario swept = sc;
            swept.phi_grid = resolve_phi_grid(sc, phi_grid_flag);
            std::vector<LoadingSweepRow> rows = sweep_loading(swept);
            std::string csv = kNtcHeader;
            for (const auto& r : rows)
                csv += fmt17(r.phi) + "," + fmt17(r.alpha_c) + "," + fmt17(r.alpha_pi1) + "," +
                       fmt17(r.alpha_k) + "," + fmt17(r.alpha_q) + "," + fmt17(r.alpha_v) + "," +
                       fmt17(r.objective) + "\n";
            write_file(out / "sweep_loading.csv", csv);
            json m = manifest_base("sweep-loading", scenario_path, sc);
            m["phi_grid"] = swept.phi_grid;
            finish_manifest(m, clk, out, {"sweep_loading.csv"});
            std::cout << rows.size() << " loadings solved\n";
        } else if (c_tc->parsed()) {
            HJBQVISolver solver(sc.params, sf.resolve());
            HJBQVISolution sol = solver.main_loop();
            write_file(out / "tc_solution.csv", tc_solution_csv(sol));
            write_file(out / "tc_summary.csv", kTcSummaryHeader + tc_summary_row(sc.params.phi, sol));
            write_file(out / "tc_trace.csv", tc_trace_csv(sol));
            json m = manifest_base("solve-tc", scenario_path, sc);
            m["solver"] = solver_config_json(solver.config(), solver.grid());
            finish_manifest(m, clk, out, {"tc_solution.csv", "tc_summary.csv", "tc_trace.csv"});
            std::cout << "no-trade band [" << fmt17(sol.bands.z_low) << ", "
                      << fmt17(sol.bands.z_high) << "], z* " << fmt17(sol.bands.z_star) << ", M "
                      << fmt17(sol.bands.M) << ", " << sol.outer_iters << " outer iterations\n";
        } else if (c_tcsweep->parsed()) {
            std::vector<double> grid = resolve_phi_grid(sc, phi_grid_flag);
            std::string summary = kTcSummaryHeader;
            std::vector<std::string> outputs;
            json solver_cfg;
            for (double phi : grid) {
                ModelParams p = sc.params;
                p.phi = phi;
                HJBQVISolver solver(p, sf.resolve());
                HJBQVISolution sol = solver.main_loop();
                if (solver_cfg.is_null())
                    solver_cfg = solver_config_json(solver.config(), solver.grid());
                summary += tc_summary_row(phi, sol);
                std::string tag = phi_tag(phi);
                write_file(out / ("tc_solution_phi" + tag + ".csv"), tc_solution_csv(sol));
                write_file(out / ("tc_trace_phi" + tag + ".csv"), tc_trace_csv(sol));
                outputs.push_back("tc_solution_phi" + tag + ".csv");
                outputs.push_back("tc_trace_phi" + tag + ".csv");
                std::cout << "phi " << tag << ": band [" << fmt17(sol.bands.z_low) << ", "
                          << fmt17(sol.bands.z_high) << "], M " << fmt17(sol.bands.M) << "\n";
            }
            write_file(out / "tc_summary.csv", summary);
            outputs.push_back("tc_summary.csv");
            json m = manifest_base("sweep-tc-loading", scenario_path, sc);
            m["phi_grid"] = grid;
            m["solver"] = solver_cfg;
            finish_manifest(m, clk, out, outputs);
        } else if (c_sim->parsed()) {
            NoTCSolution ntc = solve_no_tc(sc.params);
            Strategy strat;
            json solver_cfg;
            if (strategy_name == "band") {
                HJBQVISolver solver(sc.params, sf.resolve());
                HJBQVISolution sol = solver.main_loop();
                solver_cfg = solver_config_json(solver.config(), solver.grid());
                strat = band_strategy(sol);
                if (k0 <= 0.0) k0 = x0 / (sol.bands.z_star * p0);
            } else {
                strat = no_tc_strategy(ntc);
                if (k0 <= 0.0) k0 = ntc.alpha_k * x0 / p0;
            }
            SimConfig cfg;
            cfg.T = horizon > 0.0 ? horizon : default_horizon(sc.params, ntc);
            cfg.dt = dt;
            cfg.n_paths = paths;
            cfg.seed = seed;
            SimResult res = simulate_paths(sc.params, strat, x0, p0, k0, cfg);
            std::string csv = "mean,stderr,truncation_bound,n_paths,dt,T,solvency_violations\n";
            csv += fmt17(res.mean) + "," + fmt17(res.stderr_) + "," +
                   fmt17(res.truncation_bound) + "," + std::to_string(res.n_paths) + "," +
                   fmt17(res.dt) + "," + fmt17(res.T) + "," +
                   std::to_string(res.solvency_violations) + "\n";
            write_file(out / "sim.csv", csv);
            json m = manifest_base("simulate", scenario_path, sc);
            m["strategy"] = strategy_name;
            m["x0"] = x0;
            m["p0"] = p0;
            m["k0"] = k0;
            m["sim"] = json{{"T", cfg.T},
                            {"dt", cfg.dt},
                            {"n_paths", cfg.n_paths},
                            {"seed", cfg.seed}};
            if (!solver_cfg.is_null()) m["solver"] = solver_cfg;
            m["diagnostics"] = json{{"mean_n1", res.mean_n1},
                                    {"mean_n2", res.mean_n2},
                                    {"mean_premium", res.mean_premium},
                                    {"mean_indemnity", res.mean_indemnity},
                                    {"fair_gap_mean", res.fair_gap_mean},
                                    {"fair_gap_stderr", res.fair_gap_stderr},
                                    {"mean_trades", res.mean_trades}};
            finish_manifest(m, clk, out, {"sim.csv"});
            std::cout << "mean " << fmt17(res.mean) << ", stderr " << fmt17(res.stderr_)
                      << ", truncation bound " << fmt17(res.truncation_bound) << ", "
                      << res.n_paths << " paths\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
