#pragma once

#include <optional>
#include <vector>

#include "durinv/params.hpp"

namespace durinv {

struct NoTCSolution {
    double alpha_c;    // perishable consumption fraction of wealth
    double alpha_pi1;  // risky-asset fraction
    double alpha_k;    // durable-good value fraction
    double alpha_q;    // insurance coverage fraction
    double alpha_v;    // value-function constant
    double objective;  // HJB right-hand side at the optimum
};

struct InnerFractions {
    double alpha_k;
    double alpha_q;
    double alpha_c;
    double alpha_v;
};

// First-order-condition system at fixed alpha_pi1 (requires sigma_P1 != 0).
// nullopt flags an infeasible candidate (alpha_k <= 0, alpha_c <= 0, or a
// post-jump solvency violation).
std::optional<InnerFractions> inner_fractions(double alpha_pi1, const ModelParams& p);

// The braced supremand of the reduced HJB equation at the given fractions.
double hjb_objective(double alpha_c, double alpha_pi1, double alpha_k, double alpha_q,
                     double alpha_v, const ModelParams& p);

// Constant optimal fractions of the frictionless problem. Throws
// std::runtime_error if no admissible bracket or no convergence.
NoTCSolution solve_no_tc(const ModelParams& p);

// (1/(1-gamma)) * alpha_v * p^{-(1-beta)(1-gamma)} * x^{1-gamma}
double value_function_no_tc(double x, double price, const NoTCSolution& sol,
                            const ModelParams& p);

struct LoadingSweepRow {
    double phi;
    double alpha_c, alpha_pi1, alpha_k, alpha_q, alpha_v;
    double objective;
};

std::vector<LoadingSweepRow> sweep_loading(const Scenario& sc);

}  // namespace durinv
