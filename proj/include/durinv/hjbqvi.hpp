#pragma once

#include <vector>

#include "durinv/no_tc.hpp"
#include "durinv/params.hpp"

namespace durinv {

struct Grid {
    double theta = 0.0;
    double z_max = 0.0;
    int n = 0;
    double h = 0.0;
    std::vector<double> z;  // uniform, z[0] = theta, z[n-1] = z_max
};

Grid make_grid(double theta, double z_max, int n);

// Compressed sparse rows with the diagonal cached per row.
struct CsrMatrix {
    int n = 0;
    std::vector<int> row_ptr;  // size n+1
    std::vector<int> col;
    std::vector<double> val;
    std::vector<double> diag;  // size n

    double row_dot(int i, const std::vector<double>& x) const {
        double s = 0.0;
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
        return s;
    }
};

struct LCPProblem {
    CsrMatrix A;
    std::vector<double> b;
    std::vector<double> u;  // obstacle
};

// Algorithm-3 projected SOR for min(Av - b, v - u) = 0. Sweeps until the
// sup-norm change is below tol; throws std::runtime_error at the sweep limit.
std::vector<double> psor_solve(const LCPProblem& lcp, double omega, double tol,
                               int max_sweeps, std::vector<double> v0,
                               int* sweeps_out = nullptr);

struct PolicyField {
    std::vector<double> c_hat;
    std::vector<double> pi1_hat;
    std::vector<double> q_hat;
    std::vector<char> trade_flag;
};

struct Controls {
    double c_hat, pi1_hat, q_hat;
    double supremand;
};

struct TradingBands {
    double z_low, z_high;
    double z_star;
    double M;
};

struct Bounds {
    double lower, upper;
};

struct ConvergenceRecord {
    int iter;
    double delta_v_inf;
    double M;
    double min_increment;  // min over nodes of v_{n+1} - v_n
    int inner_iters;
};

struct HJBQVIConfig {
    int n = 2001;
    double z_max = 0.0;  // <= 0 selects the default 40/alpha_k
    double tol_outer = 1e-8;
    double tol_inner = 1e-8;
    double tol_psor = 1e-10;
    double omega = 1.2;
    int max_outer = 200;
    int max_inner = 200;
    int max_psor_sweeps = 100000;
    double golden_tol = 1e-9;
    double band_tol = 1e-6;
};

struct HJBQVISolution {
    Grid grid;
    std::vector<double> v;
    std::vector<double> Mv;
    std::vector<double> v0;
    PolicyField policy;
    TradingBands bands;
    std::vector<ConvergenceRecord> trace;
    int outer_iters;
    NoTCSolution ntc;
};

// alpha underbar of the closed-form lower bound; throws if its denominator
// is not positive.
double alpha_lower_const(const ModelParams& p);

class HJBQVISolver {
public:
    HJBQVISolver(const ModelParams& p, const HJBQVIConfig& cfg = {});

    const Grid& grid() const { return grid_; }
    const NoTCSolution& no_tc() const { return ntc_; }
    const HJBQVIConfig& config() const { return cfg_; }

    Bounds bounds(double z) const;

    struct InterventionResult {
        std::vector<double> Mv;
        double M;
        double z_star;
    };
    InterventionResult intervention(const std::vector<double>& v) const;

    // Maximizes the discrete HJB supremand at node i >= 1 (c closed form,
    // pi1/q by coordinate-wise golden section, two passes).
    Controls optimize_controls(const std::vector<double>& v, int i) const;
    PolicyField optimize_all(const std::vector<double>& v) const;

    // A = rho_bar*I - L with upwind drift, central diffusion, linearly
    // interpolated jump targets; Dirichlet rows 0 and n-1; utility source b.
    LCPProblem discretize_generator(const PolicyField& pf, double b_right) const;

    // Policy iteration for the no-trade PDE, clamped to the lower bound.
    std::vector<double> solve_initial(int* iters_out = nullptr) const;

    std::vector<double> inner_loop(const std::vector<double>& v_n,
                                   const std::vector<double>& Mv_n,
                                   int* iters_out = nullptr) const;

    HJBQVISolution main_loop() const;

    TradingBands extract_bands(const std::vector<double>& v,
                               const std::vector<double>& Mv, double tol) const;

private:
    double interp(const std::vector<double>& v, double zq) const;
    double supremand(const std::vector<double>& v, int i, double c, double pi1,
                     double q) const;
    double best_pi1(const std::vector<double>& v, int i, double c, double q) const;
    double best_q(const std::vector<double>& v, int i, double c, double pi1) const;

    ModelParams p_;
    DerivedParams d_;
    HJBQVIConfig cfg_;
    Grid grid_;
    NoTCSolution ntc_;
    double alpha_low_;
    double g0_;         // v-coefficient of the generator
    double jump2_fac_;  // lambda_2 * (1-ell)^{1-gamma}
};

}  // namespace durinv
