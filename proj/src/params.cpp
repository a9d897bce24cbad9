#include "durinv/params.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace durinv {

double utility(double c, double k, double beta, double gamma) {
    if (c < 0.0 || k < 0.0) throw std::domain_error("utility: negative argument");
    if (c == 0.0 || k == 0.0) {
        if (gamma > 1.0) throw std::domain_error("utility: c*k = 0 with gamma > 1");
        return 0.0;
    }
    double g = std::pow(c, beta) * std::pow(k, 1.0 - beta);
    return std::pow(g, 1.0 - gamma) / (1.0 - gamma);
}

DerivedParams derive_constants(const ModelParams& p) {
    DerivedParams d;
    d.beta_bar = p.beta * (1.0 - p.gamma);
    d.rho_bar = p.rho + p.delta * (1.0 - p.gamma);
    d.mu_bar_P = p.mu_P - p.r - p.delta;
    d.mu_bar_S = p.mu_S + p.lambda_1 * p.eta - p.r;
    d.sigma_P_sq = p.sigma_P1 * p.sigma_P1 + p.sigma_P2 * p.sigma_P2;
    return d;
}

TransversalityResult check_transversality(const ModelParams& p) {
    DerivedParams d = derive_constants(p);
    double rhs = d.beta_bar * p.mu_P - 0.5 * d.beta_bar * (1.0 - d.beta_bar) * d.sigma_P_sq;
    double margin = d.rho_bar - rhs;
    return {margin >= 0.0, margin};
}

std::vector<std::string> validate_params(const ModelParams& p) {
    std::vector<std::string> out;
    auto bad = [&out](const std::string& msg) { out.push_back(msg); };

    if (!(p.beta > 0.0 && p.beta < 1.0)) bad("beta must lie in (0,1)");
    if (!(p.gamma > 0.0)) bad("gamma must be positive");
    if (p.gamma == 1.0) bad("gamma must differ from 1");
    if (!(p.phi >= 1.0)) bad("loading factor must be >= 1");
    if (!(p.ell > 0.0 && p.ell < 1.0)) bad("ell must lie in (0,1)");
    if (!(p.theta >= 0.0)) bad("theta must be >= 0");
    if (!(p.sigma_S > 0.0)) bad("sigma_S must be positive");
    if (!(p.lambda_1 >= 0.0)) bad("lambda_1 must be >= 0");
    if (!(p.lambda_2 >= 0.0)) bad("lambda_2 must be >= 0");
    if (!(p.eta >= 0.0)) bad("eta must be >= 0");
    if (p.lambda_1 > 0.0 && !(p.eta > 0.0)) bad("eta must be positive when lambda_1 > 0");
    for (double v : {p.mu_S, p.sigma_S, p.eta, p.lambda_1, p.r, p.mu_P, p.sigma_P1,
                     p.sigma_P2, p.delta, p.ell, p.lambda_2, p.phi, p.rho, p.beta,
                     p.gamma, p.theta}) {
        if (!std::isfinite(v)) {
            bad("all parameters must be finite");
            break;
        }
    }
    return out;
}

}  // namespace durinv
