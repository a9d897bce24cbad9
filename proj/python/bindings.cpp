#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>

#include "durinv/csv.hpp"
#include "durinv/hjbqvi.hpp"
#include "durinv/no_tc.hpp"
#include "durinv/params.hpp"
#include "durinv/scenario_io.hpp"
#include "durinv/sim.hpp"

namespace py = pybind11;
using namespace durinv;

namespace {

// Dense-matrix convenience wrapper so callers do not build CSR by hand.
std::vector<double> psor_solve_dense(const std::vector<std::vector<double>>& A,
                                     const std::vector<double>& b,
                                     const std::vector<double>& u, double omega,
                                     double tol, int max_sweeps) {
    LCPProblem lcp;
    const int n = static_cast<int>(A.size());
    lcp.A.n = n;
    lcp.A.row_ptr.assign(1, 0);
    lcp.A.diag.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(A[i].size()) != n)
            throw std::invalid_argument("psor_solve: A must be square");
        for (int j = 0; j < n; ++j) {
            if (A[i][j] == 0.0 && i != j) continue;
            lcp.A.col.push_back(j);
            lcp.A.val.push_back(A[i][j]);
            if (i == j) lcp.A.diag[i] = A[i][j];
        }
        lcp.A.row_ptr.push_back(static_cast<int>(lcp.A.col.size()));
    }
    lcp.b = b;
    lcp.u = u;
    return psor_solve(lcp, omega, tol, max_sweeps, u);
}

}  // namespace

PYBIND11_MODULE(_durinv, m) {
    m.doc() = "optimal consumption, investment and insurance with durable goods";
    m.attr("__version__") = kLibraryVersion;

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init<>())
        .def_readwrite("mu_S", &ModelParams::mu_S)
        .def_readwrite("sigma_S", &ModelParams::sigma_S)
        .def_readwrite("eta", &ModelParams::eta)
        .def_readwrite("lambda_1", &ModelParams::lambda_1)
        .def_readwrite("r", &ModelParams::r)
        .def_readwrite("mu_P", &ModelParams::mu_P)
        .def_readwrite("sigma_P1", &ModelParams::sigma_P1)
        .def_readwrite("sigma_P2", &ModelParams::sigma_P2)
        .def_readwrite("delta", &ModelParams::delta)
        .def_readwrite("ell", &ModelParams::ell)
        .def_readwrite("lambda_2", &ModelParams::lambda_2)
        .def_readwrite("phi", &ModelParams::phi)
        .def_readwrite("rho", &ModelParams::rho)
        .def_readwrite("beta", &ModelParams::beta)
        .def_readwrite("gamma", &ModelParams::gamma)
        .def_readwrite("theta", &ModelParams::theta);

    py::class_<DerivedParams>(m, "DerivedParams")
        .def_readonly("beta_bar", &DerivedParams::beta_bar)
        .def_readonly("rho_bar", &DerivedParams::rho_bar)
        .def_readonly("mu_bar_P", &DerivedParams::mu_bar_P)
        .def_readonly("mu_bar_S", &DerivedParams::mu_bar_S)
        .def_readonly("sigma_P_sq", &DerivedParams::sigma_P_sq);

    py::class_<TransversalityResult>(m, "TransversalityResult")
        .def_readonly("holds", &TransversalityResult::holds)
        .def_readonly("margin", &TransversalityResult::margin);

    py::class_<Scenario>(m, "Scenario")
        .def(py::init<>())
        .def_readwrite("name", &Scenario::name)
        .def_readwrite("params", &Scenario::params)
        .def_readwrite("phi_grid", &Scenario::phi_grid);

    m.def("utility", &utility, py::arg("c"), py::arg("k"), py::arg("beta"), py::arg("gamma"));
    m.def("derive_constants", &derive_constants, py::arg("p"));
    m.def("check_transversality", &check_transversality, py::arg("p"));
    m.def("validate_params", &validate_params, py::arg("p"));
    m.def("load_scenario", &load_scenario, py::arg("path"));
    m.def(
        "save_scenario",
        [](const Scenario& sc, const std::string& path) {
            std::ofstream f(path);
            if (!f) throw std::runtime_error("cannot open " + path);
            save_scenario(sc, f);
        },
        py::arg("sc"), py::arg("path"));

    py::class_<NoTCSolution>(m, "NoTCSolution")
        .def_readonly("alpha_c", &NoTCSolution::alpha_c)
        .def_readonly("alpha_pi1", &NoTCSolution::alpha_pi1)
        .def_readonly("alpha_k", &NoTCSolution::alpha_k)
        .def_readonly("alpha_q", &NoTCSolution::alpha_q)
        .def_readonly("alpha_v", &NoTCSolution::alpha_v)
        .def_readonly("objective", &NoTCSolution::objective);

    py::class_<LoadingSweepRow>(m, "LoadingSweepRow")
        .def_readonly("phi", &LoadingSweepRow::phi)
        .def_readonly("alpha_c", &LoadingSweepRow::alpha_c)
        .def_readonly("alpha_pi1", &LoadingSweepRow::alpha_pi1)
        .def_readonly("alpha_k", &LoadingSweepRow::alpha_k)
        .def_readonly("alpha_q", &LoadingSweepRow::alpha_q)
        .def_readonly("alpha_v", &LoadingSweepRow::alpha_v)
        .def_readonly("objective", &LoadingSweepRow::objective);

    m.def("solve_no_tc", &solve_no_tc, py::arg("p"));
    m.def("value_function_no_tc", &value_function_no_tc, py::arg("x"), py::arg("price"),
          py::arg("sol"), py::arg("p"));
    m.def("sweep_loading", &sweep_loading, py::arg("scenario"));

    py::class_<Grid>(m, "Grid")
        .def_readonly("theta", &Grid::theta)
        .def_readonly("z_max", &Grid::z_max)
        .def_readonly("n", &Grid::n)
        .def_readonly("h", &Grid::h)
        .def_readonly("z", &Grid::z);

    py::class_<PolicyField>(m, "PolicyField")
        .def_readonly("c_hat", &PolicyField::c_hat)
        .def_readonly("pi1_hat", &PolicyField::pi1_hat)
        .def_readonly("q_hat", &PolicyField::q_hat)
        .def_property_readonly("trade_flag", [](const PolicyField& pf) {
            return std::vector<bool>(pf.trade_flag.begin(), pf.trade_flag.end());
        });

    py::class_<TradingBands>(m, "TradingBands")
        .def_readonly("z_low", &TradingBands::z_low)
        .def_readonly("z_high", &TradingBands::z_high)
        .def_readonly("z_star", &TradingBands::z_star)
        .def_readonly("M", &TradingBands::M);

    py::class_<ConvergenceRecord>(m, "ConvergenceRecord")
        .def_readonly("iter", &ConvergenceRecord::iter)
        .def_readonly("delta_v_inf", &ConvergenceRecord::delta_v_inf)
        .def_readonly("M", &ConvergenceRecord::M)
        .def_readonly("min_increment", &ConvergenceRecord::min_increment)
        .def_readonly("inner_iters", &ConvergenceRecord::inner_iters);

    py::class_<HJBQVIConfig>(m, "HJBQVIConfig")
        .def(py::init<>())
        .def_readwrite("n", &HJBQVIConfig::n)
        .def_readwrite("z_max", &HJBQVIConfig::z_max)
        .def_readwrite("tol_outer", &HJBQVIConfig::tol_outer)
        .def_readwrite("tol_inner", &HJBQVIConfig::tol_inner)
        .def_readwrite("tol_psor", &HJBQVIConfig::tol_psor)
        .def_readwrite("omega", &HJBQVIConfig::omega)
        .def_readwrite("max_outer", &HJBQVIConfig::max_outer)
        .def_readwrite("max_inner", &HJBQVIConfig::max_inner)
        .def_readwrite("max_psor_sweeps", &HJBQVIConfig::max_psor_sweeps)
        .def_readwrite("golden_tol", &HJBQVIConfig::golden_tol)
        .def_readwrite("band_tol", &HJBQVIConfig::band_tol);

    py::class_<HJBQVISolution>(m, "HJBQVISolution")
        .def_readonly("grid", &HJBQVISolution::grid)
        .def_readonly("v", &HJBQVISolution::v)
        .def_readonly("Mv", &HJBQVISolution::Mv)
        .def_readonly("v0", &HJBQVISolution::v0)
        .def_readonly("policy", &HJBQVISolution::policy)
        .def_readonly("bands", &HJBQVISolution::bands)
        .def_readonly("trace", &HJBQVISolution::trace)
        .def_readonly("outer_iters", &HJBQVISolution::outer_iters)
        .def_readonly("ntc", &HJBQVISolution::ntc);

    m.def("alpha_lower_const", &alpha_lower_const, py::arg("p"));
    m.def(
        "solve_tc",
        [](const ModelParams& p, const HJBQVIConfig& cfg) {
            return HJBQVISolver(p, cfg).main_loop();
        },
        py::arg("p"), py::arg("config") = HJBQVIConfig{},
        py::call_guard<py::gil_scoped_release>());
    m.def("psor_solve", &psor_solve_dense, py::arg("A"), py::arg("b"), py::arg("u"),
          py::arg("omega") = 1.2, py::arg("tol") = 1e-10, py::arg("max_sweeps") = 100000);

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("T", &SimConfig::T)
        .def_readwrite("dt", &SimConfig::dt)
        .def_readwrite("n_paths", &SimConfig::n_paths)
        .def_readwrite("seed", &SimConfig::seed);

    py::class_<SimResult>(m, "SimResult")
        .def_readonly("mean", &SimResult::mean)
        .def_readonly("stderr", &SimResult::stderr_)
        .def_readonly("truncation_bound", &SimResult::truncation_bound)
        .def_readonly("solvency_violations", &SimResult::solvency_violations)
        .def_readonly("n_paths", &SimResult::n_paths)
        .def_readonly("dt", &SimResult::dt)
        .def_readonly("T", &SimResult::T)
        .def_readonly("mean_n1", &SimResult::mean_n1)
        .def_readonly("mean_n2", &SimResult::mean_n2)
        .def_readonly("mean_premium", &SimResult::mean_premium)
        .def_readonly("mean_indemnity", &SimResult::mean_indemnity)
        .def_readonly("fair_gap_mean", &SimResult::fair_gap_mean)
        .def_readonly("fair_gap_stderr", &SimResult::fair_gap_stderr)
        .def_readonly("mean_trades", &SimResult::mean_trades);

    py::class_<Strategy>(m, "Strategy");

    m.def("no_tc_strategy", &no_tc_strategy, py::arg("sol"));
    m.def("band_strategy", &band_strategy, py::arg("sol"));
    m.def("default_horizon", &default_horizon, py::arg("p"), py::arg("sol"));
    m.def("simulate_paths", &simulate_paths, py::arg("p"), py::arg("strategy"),
          py::arg("x0"), py::arg("p0"), py::arg("k0"), py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
}
