#include "durinv/hjbqvi.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "durinv/golden.hpp"

namespace durinv {

Grid make_grid(double theta, double z_max, int n) {
    if (n < 3) throw std::invalid_argument("make_grid: n must be >= 3");
    if (!(z_max > theta)) throw std::invalid_argument("make_grid: z_max must exceed theta");
    Grid g;
    g.theta = theta;
    g.z_max = z_max;
    g.n = n;
    g.h = (z_max - theta) / (n - 1);
    g.z.resize(n);
    for (int i = 0; i < n; ++i) g.z[i] = theta + g.h * i;
    g.z[n - 1] = z_max;
    return g;
}

std::vector<double> psor_solve(const LCPProblem& lcp, double omega, double tol,
                               int max_sweeps, std::vector<double> v0, int* sweeps_out) {
    const CsrMatrix& A = lcp.A;
    const int n = A.n;
    if ((int)v0.size() != n) throw std::invalid_argument("psor_solve: bad initial iterate");
    if (!(omega > 0.0 && omega < 2.0))
        throw std::invalid_argument("psor_solve: omega must lie in (0,2)");
    std::vector<double>& v = v0;
    for (int s = 0; s < max_sweeps; ++s) {
        double delta = 0.0;
        for (int k = 0; k < n; ++k) {
            double w = v[k] + omega / A.diag[k] * (lcp.b[k] - A.row_dot(k, v));
            double vk = std::fmax(w, lcp.u[k]);
            delta = std::fmax(delta, std::fabs(vk - v[k]));
            v[k] = vk;
        }
        if (delta < tol) {
            if (sweeps_out) *sweeps_out = s + 1;
            return v;
        }
    }
    double res = 0.0;
    for (int k = 0; k < n; ++k) {
        double r = std::fmin(A.row_dot(k, v) - lcp.b[k], v[k] - lcp.u[k]);
        res = std::fmax(res, std::fabs(r));
    }
    std::ostringstream msg;
    msg << "psor_solve: no convergence in " << max_sweeps
        << " sweeps; complementarity residual " << res;
    throw std::runtime_error(msg.str());
}

double alpha_lower_const(const ModelParams& p) {
    double g = p.gamma, b = p.beta;
    double den = p.rho + (p.delta - p.ell * p.lambda_2) * (1.0 - b) * (1.0 - g);
    if (!(den > 0.0))
        throw std::runtime_error("bounds: lower-bound constant has nonpositive denominator");
    double num = std::pow(b, b * (1.0 - g)) * std::pow(1.0 - b, (1.0 - b) * (1.0 - g)) *
                 std::pow(p.r, b * (1.0 - g));
    return num / den;
}

HJBQVISolver::HJBQVISolver(const ModelParams& p, const HJBQVIConfig& cfg)
    : p_(p), cfg_(cfg) {
    auto violations = validate_params(p);
    if (!violations.empty())
        throw std::invalid_argument("hjbqvi: invalid params: " + violations.front());
    if (!(p.gamma < 1.0))
        throw std::invalid_argument("hjbqvi: gamma must lie in (0,1) for this solver");
    auto tr = check_transversality(p);
    if (!tr.holds)
        throw std::invalid_argument("hjbqvi: transversality condition fails");
    d_ = derive_constants(p);
    ntc_ = solve_no_tc(p);
    alpha_low_ = alpha_lower_const(p);
    double z_max = cfg_.z_max > 0.0 ? cfg_.z_max : 40.0 / ntc_.alpha_k;
    grid_ = make_grid(p.theta, z_max, cfg_.n);
    g0_ = d_.beta_bar * p.mu_P - 0.5 * d_.beta_bar * (1.0 - d_.beta_bar) * d_.sigma_P_sq;
    jump2_fac_ = p.lambda_2 * std::pow(1.0 - p.ell, 1.0 - p.gamma);
}

Bounds HJBQVISolver::bounds(double z) const {
    if (z < grid_.theta - 1e-15) throw std::domain_error("bounds: z below theta");
    double g = p_.gamma;
    double lower = alpha_low_ / (1.0 - g) * std::pow(std::fmax(z - p_.theta, 0.0), 1.0 - g);
    double upper = ntc_.alpha_v / (1.0 - g) * std::pow(z, 1.0 - g);
    return {lower, upper};
}

HJBQVISolver::InterventionResult HJBQVISolver::intervention(
    const std::vector<double>& v) const {
    const int n = grid_.n;
    double M = -1.0;
    int best = -1;
    for (int i = 0; i < n; ++i) {
        double z = grid_.z[i];
        double s = (z == 0.0 && v[i] == 0.0) ? 0.0 : std::pow(z, p_.gamma - 1.0) * v[i];
        if (s > M) {
            M = s;
            best = i;
        }
    }
    if (!(M > 0.0))
        throw std::runtime_error("intervention: degenerate value function (M <= 0)");
    InterventionResult out;
    out.M = M;
    out.z_star = grid_.z[best];
    out.Mv.resize(n);
    for (int i = 0; i < n; ++i)
        out.Mv[i] = std::pow(grid_.z[i] - p_.theta, 1.0 - p_.gamma) * M;
    return out;
}

double HJBQVISolver::interp(const std::vector<double>& v, double zq) const {
    double w = std::clamp(zq, grid_.theta, grid_.z_max);
    int j = std::min((int)((w - grid_.theta) / grid_.h), grid_.n - 2);
    double t = std::clamp((w - grid_.z[j]) / grid_.h, 0.0, 1.0);
    return (1.0 - t) * v[j] + t * v[j + 1];
}

double HJBQVISolver::supremand(const std::vector<double>& v, int i, double c, double pi1,
                               double q) const {
    const double z = grid_.z[i], h = grid_.h;
    const double bb = d_.beta_bar, g = p_.gamma;
    double vm = v[i - 1], vc = v[i];
    double bwd = (vc - vm) / h;
    double fwd, vpp;
    if (i + 1 < grid_.n) {
        fwd = (v[i + 1] - vc) / h;
        vpp = (v[i + 1] - 2.0 * vc + vm) / (h * h);
    } else {
        fwd = bwd;
        vpp = 0.0;
    }
    double drift = (1.0 - z) * (d_.mu_bar_P - (1.0 - bb) * d_.sigma_P_sq) +
                   pi1 * (d_.mu_bar_S - (1.0 - bb) * p_.sigma_S * p_.sigma_P1) - c -
                   p_.lambda_2 * p_.phi * q;
    double s1 = (1.0 - z) * p_.sigma_P1 + pi1 * p_.sigma_S;
    double diffu = 0.5 * (s1 * s1 + (1.0 - z) * (1.0 - z) * p_.sigma_P2 * p_.sigma_P2);
    double val = -d_.rho_bar * vc + g0_ * vc + drift * (drift >= 0.0 ? fwd : bwd) +
                 diffu * vpp;
    if (p_.lambda_1 > 0.0) val += p_.lambda_1 * (interp(v, z - p_.eta * pi1) - vc);
    if (p_.lambda_2 > 0.0)
        val += jump2_fac_ * interp(v, (z - p_.ell + q) / (1.0 - p_.ell)) - p_.lambda_2 * vc;
    val += std::pow(c, bb) / (1.0 - g);
    return val;
}

double HJBQVISolver::best_pi1(const std::vector<double>& v, int i, double c,
                              double q) const {
    const double z = grid_.z[i], h = grid_.h;
    double lo = -5.0 * (1.0 + z);
    double hi = 5.0 * (1.0 + z);
    if (p_.lambda_1 > 0.0) hi = std::fmin(hi, (z - p_.theta) / p_.eta * (1.0 - 1e-9));
    double pi_safe = std::clamp(-(1.0 - z) * p_.sigma_P1 / p_.sigma_S, lo, hi);
    double vpp = (i + 1 < grid_.n) ? (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h) : 0.0;
    if (!(vpp < 0.0)) return pi_safe;  // degenerate curvature: diffusion-minimizing choice
    return golden_max([&](double x) { return supremand(v, i, c, x, q); }, lo, hi,
                      cfg_.golden_tol);
}

double HJBQVISolver::best_q(const std::vector<double>& v, int i, double c,
                            double pi1) const {
    const double z = grid_.z[i];
    double lo = std::fmax(0.0, p_.theta + p_.ell - z);
    if (z - p_.ell + lo <= p_.theta) lo = p_.theta + p_.ell - z + 1e-12 * (1.0 + z);
    double hi = p_.ell + z;
    return golden_max([&](double x) { return supremand(v, i, c, pi1, x); }, lo, hi,
                      cfg_.golden_tol);
}

Controls HJBQVISolver::optimize_controls(const std::vector<double>& v, int i) const {
    if (i < 1 || i >= grid_.n)
        throw std::invalid_argument("optimize_controls: node index out of range");
    const double h = grid_.h;
    const double bb = d_.beta_bar;
    double vp = (i + 1 < grid_.n) ? (v[i + 1] - v[i - 1]) / (2.0 * h)
                                  : (v[i] - v[i - 1]) / h;
    double c = vp > 0.0 ? std::pow(vp / p_.beta, 1.0 / (bb - 1.0)) : 0.0;

    double q = std::fmax(0.0, p_.theta + p_.ell - grid_.z[i]);
    double pi1 = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
        pi1 = best_pi1(v, i, c, q);
        q = best_q(v, i, c, pi1);
    }
    return {c, pi1, q, supremand(v, i, c, pi1, q)};
}

PolicyField HJBQVISolver::optimize_all(const std::vector<double>& v) const {
    const int n = grid_.n;
    PolicyField pf;
    pf.c_hat.resize(n);
    pf.pi1_hat.resize(n);
    pf.q_hat.resize(n);
    pf.trade_flag.assign(n, 0);
    // node 0 is the Dirichlet solvency boundary; controls there are nominal
    pf.c_hat[0] = 0.0;
    pf.pi1_hat[0] = p_.lambda_1 > 0.0 ? -1e-9 : 0.0;
    pf.q_hat[0] = p_.ell + 1e-12 * (1.0 + p_.ell + grid_.theta);
    for (int i = 1; i < n; ++i) {
        Controls c = optimize_controls(v, i);
        pf.c_hat[i] = c.c_hat;
        pf.pi1_hat[i] = c.pi1_hat;
        pf.q_hat[i] = c.q_hat;
    }
    return pf;
}

LCPProblem HJBQVISolver::discretize_generator(const PolicyField& pf,
                                              double b_right) const {
    const int n = grid_.n;
    const double h = grid_.h, bb = d_.beta_bar, g = p_.gamma;
    LCPProblem lcp;
    CsrMatrix& A = lcp.A;
    A.n = n;
    A.row_ptr.assign(n + 1, 0);
    A.col.reserve(7 * n);
    A.val.reserve(7 * n);
    A.diag.assign(n, 0.0);
    lcp.b.assign(n, 0.0);
    lcp.u.assign(n, 0.0);

    // scratch for one row: (col, value) pairs merged by column
    std::vector<int> rc;
    std::vector<double> rv;
    rc.reserve(8);
    rv.reserve(8);
    auto add = [&rc, &rv](int j, double x) {
        for (size_t k = 0; k < rc.size(); ++k)
            if (rc[k] == j) {
                rv[k] += x;
                return;
            }
        rc.push_back(j);
        rv.push_back(x);
    };
    auto add_jump = [&](int i, double fac, double target, auto& addf) {
        double w = std::clamp(target, grid_.theta, grid_.z_max);
        int j = std::min((int)((w - grid_.theta) / h), n - 2);
        double t = std::clamp((w - grid_.z[j]) / h, 0.0, 1.0);
        addf(j, -fac * (1.0 - t));
        addf(j + 1, -fac * t);
        (void)i;
    };

    auto flush_row = [&](int i) {
        // diagonal first for cache friendliness of row_dot is unnecessary;
        // just store sorted by column
        std::vector<std::pair<int, double>> ents;
        ents.reserve(rc.size());
        for (size_t k = 0; k < rc.size(); ++k) ents.emplace_back(rc[k], rv[k]);
        std::sort(ents.begin(), ents.end());
        for (auto& [j, x] : ents) {
            if (j != i && x > 1e-12)
                throw std::runtime_error(
                    "discretize_generator: positive off-diagonal breaks scheme "
                    "monotonicity");
            A.col.push_back(j);
            A.val.push_back(x);
            if (j == i) A.diag[i] = x;
        }
        A.row_ptr[i + 1] = (int)A.col.size();
        if (!(A.diag[i] > 0.0))
            throw std::runtime_error("discretize_generator: nonpositive diagonal");
        rc.clear();
        rv.clear();
    };

    add(0, 1.0);
    lcp.b[0] = 0.0;
    flush_row(0);

    for (int i = 1; i < n - 1; ++i) {
        const double z = grid_.z[i];
        double c = pf.c_hat[i], pi1 = pf.pi1_hat[i], q = pf.q_hat[i];
        double drift = (1.0 - z) * (d_.mu_bar_P - (1.0 - bb) * d_.sigma_P_sq) +
                       pi1 * (d_.mu_bar_S - (1.0 - bb) * p_.sigma_S * p_.sigma_P1) - c -
                       p_.lambda_2 * p_.phi * q;
        double s1 = (1.0 - z) * p_.sigma_P1 + pi1 * p_.sigma_S;
        double diffu =
            0.5 * (s1 * s1 + (1.0 - z) * (1.0 - z) * p_.sigma_P2 * p_.sigma_P2);

        double dgn = d_.rho_bar - g0_ + 2.0 * diffu / (h * h);
        add(i - 1, -diffu / (h * h));
        add(i + 1, -diffu / (h * h));
        if (drift >= 0.0) {
            add(i + 1, -drift / h);
            dgn += drift / h;
        } else {
            add(i - 1, drift / h);
            dgn += -drift / h;
        }
        auto addd = [&](int j, double x) {
            if (j == i)
                dgn += x;
            else
                add(j, x);
        };
        if (p_.lambda_1 > 0.0) {
            dgn += p_.lambda_1;
            add_jump(i, p_.lambda_1, z - p_.eta * pi1, addd);
        }
        if (p_.lambda_2 > 0.0) {
            dgn += p_.lambda_2;
            add_jump(i, jump2_fac_, (z - p_.ell + q) / (1.0 - p_.ell), addd);
        }
        add(i, dgn);
        lcp.b[i] = std::pow(c, bb) / (1.0 - g);
        flush_row(i);
    }

    add(n - 1, 1.0);
    lcp.b[n - 1] = b_right;
    flush_row(n - 1);
    return lcp;
}

namespace {

// Direct solve of Ax = b for the no-obstacle policy-iteration step: Thomas
// factorization of the tridiagonal band, with entries outside the band
// (jump interpolation) lagged to the previous iterate. The band part is
// strictly diagonally dominant and the lagged part is a contraction because
// the full matrix has positive row sums.
std::vector<double> band_lagged_solve(const LCPProblem& lcp, std::vector<double> x,
                                      double tol, int max_iters) {
    const CsrMatrix& A = lcp.A;
    const int n = A.n;
    std::vector<double> sub(n, 0.0), dia(n, 0.0), sup(n, 0.0);
    // far entries per row
    std::vector<std::vector<std::pair<int, double>>> far(n);
    for (int i = 0; i < n; ++i) {
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            int j = A.col[k];
            double v = A.val[k];
            if (j == i - 1)
                sub[i] += v;
            else if (j == i)
                dia[i] += v;
            else if (j == i + 1)
                sup[i] += v;
            else
                far[i].emplace_back(j, v);
        }
    }
    std::vector<double> cp(n), dp(n), rhs(n), xn(n);
    std::vector<double> deltas;
    for (int it = 0; it < max_iters; ++it) {
        for (int i = 0; i < n; ++i) {
            double s = lcp.b[i];
            for (auto& [j, v] : far[i]) s -= v * x[j];
            rhs[i] = s;
        }
        cp[0] = sup[0] / dia[0];
        dp[0] = rhs[0] / dia[0];
        for (int i = 1; i < n; ++i) {
            double m = dia[i] - sub[i] * cp[i - 1];
            cp[i] = sup[i] / m;
            dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / m;
        }
        xn[n - 1] = dp[n - 1];
        for (int i = n - 2; i >= 0; --i) xn[i] = dp[i] - cp[i] * xn[i + 1];
        double delta = 0.0;
        for (int i = 0; i < n; ++i) delta = std::fmax(delta, std::fabs(xn[i] - x[i]));
        x = xn;
        if (delta < tol) return x;
        deltas.push_back(delta);
    }
    std::ostringstream msg;
    msg << "solve_initial: lagged-band solve stalled; last deltas:";
    for (size_t k = deltas.size() > 5 ? deltas.size() - 5 : 0; k < deltas.size(); ++k)
        msg << " " << deltas[k];
    throw std::runtime_error(msg.str());
}

}  // namespace

std::vector<double> HJBQVISolver::solve_initial(int* iters_out) const {
    const int n = grid_.n;
    std::vector<double> lb(n);
    for (int i = 0; i < n; ++i) lb[i] = bounds(grid_.z[i]).lower;
    std::vector<double> v = lb;
    std::vector<double> deltas;
    for (int it = 0; it < cfg_.max_outer; ++it) {
        PolicyField pf = optimize_all(v);
        LCPProblem lcp = discretize_generator(pf, lb[n - 1]);
        std::vector<double> vn = band_lagged_solve(lcp, v, cfg_.tol_psor, 20000);
        double delta = 0.0;
        for (int i = 0; i < n; ++i) delta = std::fmax(delta, std::fabs(vn[i] - v[i]));
        v = std::move(vn);
        if (delta < cfg_.tol_inner) {
            // the raw no-trade value falls below the closed-form lower bound
            // for large z (never trading is badly suboptimal there); both are
            // values of admissible suboptimal strategies, so take the max
            for (int i = 0; i < n; ++i) v[i] = std::fmax(v[i], lb[i]);
            if (iters_out) *iters_out = it + 1;
            return v;
        }
        deltas.push_back(delta);
    }
    std::ostringstream msg;
    msg << "solve_initial: policy iteration did not converge; last deltas:";
    for (size_t k = deltas.size() > 5 ? deltas.size() - 5 : 0; k < deltas.size(); ++k)
        msg << " " << deltas[k];
    throw std::runtime_error(msg.str());
}

std::vector<double> HJBQVISolver::inner_loop(const std::vector<double>& v_n,
                                             const std::vector<double>& Mv_n,
                                             int* iters_out) const {
    const int n = grid_.n;
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) u[i] = std::fmax(Mv_n[i], v_n[i]);
    std::vector<double> v = u;
    for (int it = 0; it < cfg_.max_inner; ++it) {
        PolicyField pf = optimize_all(v);
        LCPProblem lcp = discretize_generator(pf, Mv_n[n - 1]);
        lcp.u = u;
        std::vector<double> vn;
        try {
            vn = psor_solve(lcp, cfg_.omega, cfg_.tol_psor, cfg_.max_psor_sweeps, v);
        } catch (const std::exception& e) {
            throw std::runtime_error("inner_loop: iteration " + std::to_string(it) + ": " +
                                     e.what());
        }
        double delta = 0.0;
        for (int i = 0; i < n; ++i) delta = std::fmax(delta, std::fabs(vn[i] - v[i]));
        v = std::move(vn);
        if (delta < cfg_.tol_inner) {
            if (iters_out) *iters_out = it + 1;
            return v;
        }
    }
    throw std::runtime_error("inner_loop: no convergence within max_inner iterations");
}

HJBQVISolution HJBQVISolver::main_loop() const {
    HJBQVISolution sol;
    sol.grid = grid_;
    sol.ntc = ntc_;
    sol.v0 = solve_initial();
    std::vector<double> v = sol.v0;
    bool converged = false;
    for (int it = 0; it < cfg_.max_outer; ++it) {
        InterventionResult iv = intervention(v);
        int inner_iters = 0;
        std::vector<double> vn = inner_loop(v, iv.Mv, &inner_iters);
        double delta = 0.0, min_inc = 0.0;
        for (int i = 0; i < grid_.n; ++i) {
            double d = vn[i] - v[i];
            delta = std::fmax(delta, std::fabs(d));
            min_inc = std::fmin(min_inc, d);
        }
        sol.trace.push_back({it, delta, iv.M, min_inc, inner_iters});
        v = std::move(vn);
        if (delta < cfg_.tol_outer) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "main_loop: no convergence in " << cfg_.max_outer
            << " outer iterations; last delta "
            << (sol.trace.empty() ? 0.0 : sol.trace.back().delta_v_inf);
        throw std::runtime_error(msg.str());
    }
    sol.outer_iters = (int)sol.trace.size();
    InterventionResult iv = intervention(v);
    sol.v = std::move(v);
    sol.Mv = std::move(iv.Mv);
    sol.bands = extract_bands(sol.v, sol.Mv, cfg_.band_tol);
    sol.policy = optimize_all(sol.v);
    for (int i = 0; i < grid_.n; ++i)
        sol.policy.trade_flag[i] = (sol.v[i] - sol.Mv[i] <= cfg_.band_tol) ? 1 : 0;
    return sol;
}

TradingBands HJBQVISolver::extract_bands(const std::vector<double>& v,
                                         const std::vector<double>& Mv,
                                         double tol) const {
    const int n = grid_.n;
    int first = -1, last = -1;
    for (int i = 0; i < n; ++i) {
        if (v[i] - Mv[i] > tol) {
            if (first < 0) first = i;
            last = i;
        }
    }
    if (first < 0)
        throw std::runtime_error("extract_bands: degenerate zone (v = Mv everywhere)");
    for (int i = first; i <= last; ++i)
        if (!(v[i] - Mv[i] > tol))
            throw std::runtime_error(
                "extract_bands: no-trading zone is not a single interval");
    InterventionResult iv = intervention(v);
    TradingBands tb;
    tb.z_low = grid_.z[first];
    tb.z_high = grid_.z[last];
    tb.z_star = iv.z_star;
    tb.M = iv.M;
    return tb;
}

}  // namespace durinv
