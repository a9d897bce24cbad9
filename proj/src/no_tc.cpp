#include "durinv/no_tc.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "durinv/golden.hpp"

namespace durinv {

namespace {

double clamp_q(double alpha_k, const ModelParams& p) {
    double deductible = 1.0 - std::pow(p.phi, -1.0 / p.gamma);
    return std::fmax(p.ell * alpha_k - deductible, 0.0);
}

// alpha_c from the consumption FOC given the other fractions; shared by both
// the sigma_P1 != 0 and sigma_P1 = 0 systems (the pi1 cross term drops out of
// the latter since sigma_P1 = 0 kills it).
double alpha_c_of(double alpha_pi1, double alpha_k, double post_loss, const ModelParams& p) {
    double g = p.gamma, b = p.beta;
    double sigP2 = p.sigma_P1 * p.sigma_P1 + p.sigma_P2 * p.sigma_P2;
    return (b / (1.0 - b)) *
           (sigP2 * ((1.0 - b) * (1.0 - g) + g * alpha_k) +
            g * alpha_pi1 * p.sigma_S * p.sigma_P1 + p.r - p.mu_P + p.delta +
            p.ell * p.lambda_2 * std::pow(post_loss, -g)) *
           alpha_k;
}

double alpha_v_of(double alpha_c, double alpha_k, const ModelParams& p) {
    double g = p.gamma, b = p.beta;
    return b * std::pow(alpha_c, b * (1.0 - g) - 1.0) *
           std::pow(alpha_k, (1.0 - b) * (1.0 - g));
}

struct Candidate {
    bool ok = false;
    NoTCSolution sol{};
};

Candidate evaluate(double alpha_pi1, const ModelParams& p) {
    Candidate c;
    auto f = inner_fractions(alpha_pi1, p);
    if (!f) return c;
    c.ok = true;
    c.sol.alpha_pi1 = alpha_pi1;
    c.sol.alpha_k = f->alpha_k;
    c.sol.alpha_q = f->alpha_q;
    c.sol.alpha_c = f->alpha_c;
    c.sol.alpha_v = f->alpha_v;
    c.sol.objective =
        hjb_objective(f->alpha_c, alpha_pi1, f->alpha_k, f->alpha_q, f->alpha_v, p);
    return c;
}

NoTCSolution solve_sigma_p1_nonzero(const ModelParams& p) {
    double lo = -5.0;
    double hi = p.lambda_1 > 0.0 ? std::fmin(5.0, (1.0 - 1e-9) / p.eta) : 5.0;
    const int n = 512;

    // The supremand with the inner FOCs substituted is monotone in alpha_pi1
    // and crosses zero at the optimum, so locate the sign change and refine.
    bool have_prev = false;
    double px = 0.0, pf = 0.0;
    int crossings = 0;
    double root = 0.0;
    bool found = false;
    for (int i = 0; i < n; ++i) {
        double x = lo + (hi - lo) * i / (n - 1);
        Candidate c = evaluate(x, p);
        if (!c.ok) {
            have_prev = false;
            continue;
        }
        double f = c.sol.objective;
        if (have_prev && (f > 0.0) != (pf > 0.0)) {
            ++crossings;
            if (!found) {
                root = brent_root(
                    [&p](double t) {
                        Candidate cc = evaluate(t, p);
                        return cc.ok ? cc.sol.objective : 1e30;
                    },
                    px, x, 1e-15);
                found = true;
            }
        }
        have_prev = true;
        px = x;
        pf = f;
    }
    if (!found)
        throw std::runtime_error(
            "solve_no_tc: no admissible bracket with a stationary point found for "
            "alpha_pi1 in [-5, 5]");
    if (crossings > 1)
        std::fprintf(stderr,
                     "solve_no_tc: warning: %d candidate stationary points in the scan; "
                     "using the first\n",
                     crossings);
    Candidate c = evaluate(root, p);
    if (!c.ok || std::fabs(c.sol.objective) > 1e-8)
        throw std::runtime_error("solve_no_tc: root refinement failed to converge");
    return c.sol;
}

NoTCSolution solve_sigma_p1_zero(const ModelParams& p) {
    double g = p.gamma, b = p.beta;
    double sigP2 = p.sigma_P2 * p.sigma_P2;

    // line 2 decouples: mu_S + lambda_1*eta - r - gamma*pi1*sigma_S^2
    //   - eta*lambda_1*(1-eta*pi1)^{-gamma} = 0
    auto line2 = [&p, g](double pi1) {
        double jump = p.lambda_1 > 0.0
                          ? p.eta * p.lambda_1 * std::pow(1.0 - p.eta * pi1, -g)
                          : 0.0;
        return p.mu_S + p.lambda_1 * p.eta - p.r - g * pi1 * p.sigma_S * p.sigma_S - jump;
    };
    double hi1 = p.lambda_1 > 0.0 ? (1.0 - 1e-9) / p.eta : 50.0;
    double alpha_pi1 = brent_root(line2, -50.0, hi1, 1e-15);

    auto eval_k = [&](double ak) -> Candidate {
        Candidate c;
        if (ak <= 0.0) return c;
        double aq = clamp_q(ak, p);
        double post_loss = 1.0 - p.ell * ak + aq;
        if (post_loss <= 0.0) return c;
        double ac = (b / (1.0 - b)) *
                    (sigP2 * ((1.0 - b) * (1.0 - g) + g * ak) + p.r - p.mu_P + p.delta +
                     p.ell * p.lambda_2 * std::pow(post_loss, -g)) *
                    ak;
        if (ac <= 0.0) return c;
        c.ok = true;
        c.sol = {ac, alpha_pi1, ak, aq, alpha_v_of(ac, ak, p), 0.0};
        c.sol.objective = hjb_objective(ac, alpha_pi1, ak, aq, c.sol.alpha_v, p);
        return c;
    };

    const int n = 512;
    double lo = 1e-8, hi = 5.0;
    bool have_prev = false;
    double px = 0.0, pf = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = lo + (hi - lo) * i / (n - 1);
        Candidate c = eval_k(x);
        if (!c.ok) {
            have_prev = false;
            continue;
        }
        if (have_prev && (c.sol.objective > 0.0) != (pf > 0.0)) {
            double root = brent_root(
                [&eval_k](double t) {
                    Candidate cc = eval_k(t);
                    return cc.ok ? cc.sol.objective : 1e30;
                },
                px, x, 1e-15);
            Candidate out = eval_k(root);
            if (!out.ok || std::fabs(out.sol.objective) > 1e-8)
                throw std::runtime_error("solve_no_tc: alpha_k refinement failed");
            return out.sol;
        }
        have_prev = true;
        px = x;
        pf = c.sol.objective;
    }
    throw std::runtime_error(
        "solve_no_tc: no admissible alpha_k bracket found in (0, 5] (sigma_P1 = 0 branch)");
}

}  // namespace

std::optional<InnerFractions> inner_fractions(double alpha_pi1, const ModelParams& p) {
    if (p.sigma_P1 == 0.0)
        throw std::invalid_argument("inner_fractions: requires sigma_P1 != 0");
    double g = p.gamma, b = p.beta;
    if (p.lambda_1 > 0.0 && 1.0 - p.eta * alpha_pi1 <= 0.0) return std::nullopt;
    double jump1 = p.lambda_1 > 0.0
                       ? p.eta * p.lambda_1 * std::pow(1.0 - p.eta * alpha_pi1, -g)
                       : 0.0;
    double alpha_k = (p.mu_S + p.lambda_1 * p.eta - p.r -
                      g * alpha_pi1 * p.sigma_S * p.sigma_S -
                      (1.0 - b) * (1.0 - g) * p.sigma_S * p.sigma_P1 - jump1) /
                     (g * p.sigma_S * p.sigma_P1);
    if (alpha_k <= 0.0) return std::nullopt;
    double alpha_q = clamp_q(alpha_k, p);
    double post_loss = 1.0 - p.ell * alpha_k + alpha_q;
    if (post_loss <= 0.0) return std::nullopt;
    double alpha_c = alpha_c_of(alpha_pi1, alpha_k, post_loss, p);
    if (alpha_c <= 0.0) return std::nullopt;
    return InnerFractions{alpha_k, alpha_q, alpha_c, alpha_v_of(alpha_c, alpha_k, p)};
}

double hjb_objective(double alpha_c, double alpha_pi1, double alpha_k, double alpha_q,
                     double alpha_v, const ModelParams& p) {
    double g = p.gamma, b = p.beta;
    double bb = b * (1.0 - g);
    double sigP2 = p.sigma_P1 * p.sigma_P1 + p.sigma_P2 * p.sigma_P2;
    double post_crash = 1.0 - p.eta * alpha_pi1;
    double post_loss = 1.0 - (p.ell * alpha_k - alpha_q);
    if ((p.lambda_1 > 0.0 && post_crash <= 0.0) || (p.lambda_2 > 0.0 && post_loss <= 0.0))
        throw std::domain_error("hjb_objective: post-jump solvency violated");

    double u = std::pow(std::pow(alpha_c, b) * std::pow(alpha_k, 1.0 - b), 1.0 - g) /
               (1.0 - g);
    double t2 = alpha_v / (1.0 - g) *
                (bb * p.mu_P - p.rho - 0.5 * sigP2 * bb * (1.0 - bb));
    double t3 = alpha_v *
                ((p.r + (1.0 - bb) * sigP2 - p.mu_P) * (1.0 - alpha_k) -
                 p.delta * alpha_k - p.phi * p.lambda_2 * alpha_q +
                 alpha_pi1 * (p.mu_S + p.lambda_1 * p.eta - p.r -
                              (1.0 - bb) * p.sigma_S * p.sigma_P1) -
                 alpha_c);
    double t4 = -g * alpha_v *
                (0.5 * alpha_pi1 * alpha_pi1 * p.sigma_S * p.sigma_S +
                 0.5 * sigP2 * (1.0 - alpha_k) * (1.0 - alpha_k) -
                 alpha_pi1 * p.sigma_S * p.sigma_P1 * (1.0 - alpha_k));
    double j1 = p.lambda_1 > 0.0 ? p.lambda_1 * (std::pow(post_crash, 1.0 - g) - 1.0) : 0.0;
    double j2 = p.lambda_2 > 0.0 ? p.lambda_2 * (std::pow(post_loss, 1.0 - g) - 1.0) : 0.0;
    double t5 = alpha_v / (1.0 - g) * (j1 + j2);
    return u + t2 + t3 + t4 + t5;
}

NoTCSolution solve_no_tc(const ModelParams& p) {
    auto violations = validate_params(p);
    if (!violations.empty())
        throw std::invalid_argument("solve_no_tc: invalid params: " + violations.front());
    return p.sigma_P1 != 0.0 ? solve_sigma_p1_nonzero(p) : solve_sigma_p1_zero(p);
}

double value_function_no_tc(double x, double price, const NoTCSolution& sol,
                            const ModelParams& p) {
    if (!(x > 0.0) || !(price > 0.0))
        throw std::domain_error("value_function_no_tc: requires x > 0 and p > 0");
    double g = p.gamma;
    return sol.alpha_v / (1.0 - g) * std::pow(x, 1.0 - g) *
           std::pow(price, -(1.0 - p.beta) * (1.0 - g));
}

std::vector<LoadingSweepRow> sweep_loading(const Scenario& sc) {
    std::vector<LoadingSweepRow> rows;
    rows.reserve(sc.phi_grid.size());
    for (double phi : sc.phi_grid) {
        ModelParams p = sc.params;
        p.phi = phi;
        NoTCSolution s;
        try {
            s = solve_no_tc(p);
        } catch (const std::exception& e) {
            throw std::runtime_error("sweep_loading: phi = " + std::to_string(phi) + ": " +
                                     e.what());
        }
        rows.push_back({phi, s.alpha_c, s.alpha_pi1, s.alpha_k, s.alpha_q, s.alpha_v,
                        s.objective});
    }
    return rows;
}

}  // namespace durinv
