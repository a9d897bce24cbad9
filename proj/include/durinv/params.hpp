#pragma once

#include <string>
#include <vector>

namespace durinv {

// All market, preference, insurance and cost constants. Rates are annualized.
struct ModelParams {
    double mu_S = 0.0;      // risky asset drift
    double sigma_S = 0.0;   // risky asset volatility
    double eta = 0.0;       // crash loss fraction of the risky asset
    double lambda_1 = 0.0;  // crash intensity
    double r = 0.0;         // risk-free rate
    double mu_P = 0.0;      // durable price drift
    double sigma_P1 = 0.0;  // durable price loading on W1
    double sigma_P2 = 0.0;  // durable price loading on W2
    double delta = 0.0;     // durable depreciation rate
    double ell = 0.0;       // insured-event loss fraction, in (0,1)
    double lambda_2 = 0.0;  // insured-event intensity
    double phi = 1.0;       // insurance loading, >= 1
    double rho = 0.0;       // time preference
    double beta = 0.5;      // perishable consumption weight, in (0,1)
    double gamma = 0.5;     // relative risk aversion, > 0 and != 1
    double theta = 0.0;     // proportional transaction cost, >= 0
};

struct DerivedParams {
    double beta_bar;     // beta*(1-gamma)
    double rho_bar;      // rho + delta*(1-gamma)
    double mu_bar_P;     // mu_P - r - delta
    double mu_bar_S;     // mu_S + lambda_1*eta - r
    double sigma_P_sq;   // sigma_P1^2 + sigma_P2^2
};

struct Scenario {
    std::string name;
    ModelParams params;
    std::vector<double> phi_grid;  // strictly increasing, entries >= 1
};

struct TransversalityResult {
    bool holds;
    double margin;  // rho_bar - (beta_bar*mu_P - 0.5*beta_bar*(1-beta_bar)*sigma_P_sq)
};

// CRRA Cobb-Douglas utility (c^beta k^(1-beta))^(1-gamma)/(1-gamma).
// For gamma < 1 the boundary c*k = 0 returns the analytic limit 0; for
// gamma > 1 it throws std::domain_error (utility diverges to -inf).
double utility(double c, double k, double beta, double gamma);

DerivedParams derive_constants(const ModelParams& p);

TransversalityResult check_transversality(const ModelParams& p);

// Empty vector iff all ModelParams invariants hold; entries name the
// offending field and constraint. Diagnostics only, never throws.
std::vector<std::string> validate_params(const ModelParams& p);

}  // namespace durinv
