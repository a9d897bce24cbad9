#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "durinv/hjbqvi.hpp"
#include "durinv/no_tc.hpp"
#include "durinv/params.hpp"
#include "durinv/sim.hpp"

using namespace durinv;

namespace {

ModelParams base_params(double phi = 1.0) {
    ModelParams p;
    p.mu_S = 0.06;
    p.sigma_S = 0.25;
    p.eta = 0.1;
    p.lambda_1 = 0.0;
    p.r = 0.02;
    p.mu_P = 0.02;
    p.sigma_P1 = 0.1;
    p.sigma_P2 = 0.2;
    p.delta = 0.015;
    p.ell = 0.5;
    p.lambda_2 = 0.01;
    p.phi = phi;
    p.rho = 0.04;
    p.beta = 0.5;
    p.gamma = 0.9;
    p.theta = 0.05;
    return p;
}

Strategy fractions(double ac, double api1, double ak, double aq, double abar = 20.0) {
    Strategy s;
    s.kind = Strategy::Kind::constant_fractions;
    s.alpha_c = ac;
    s.alpha_pi1 = api1;
    s.alpha_k = ak;
    s.alpha_q = aq;
    s.alpha_bar = abar;
    return s;
}

}  // namespace

TEST_CASE("noise-free paths reproduce the discrete-time quadrature") {
    ModelParams p = base_params();
    p.sigma_S = 1e-12;
    p.sigma_P1 = 0.0;
    p.sigma_P2 = 0.0;
    p.lambda_1 = 0.0;
    p.lambda_2 = 0.0;

    Strategy s = fractions(0.02, 0.0, 0.4, 0.0);
    SimConfig cfg;
    cfg.T = 50.0;
    cfg.dt = 1.0 / 250.0;
    cfg.n_paths = 4;
    cfg.seed = 7;
    SimResult res = simulate_paths(p, s, 1.0, 1.0, 0.0, cfg);

    double g = p.r + s.alpha_k * (p.mu_P - p.r - p.delta) - s.alpha_c;
    double ucoef = std::pow(std::pow(s.alpha_c, 0.5) * std::pow(s.alpha_k, 0.5), 0.1) / 0.1;
    long nst = std::lround(cfg.T / cfg.dt);
    double expect = 0.0, lx = 0.0;
    for (long k = 0; k < nst; ++k) {
        double t = k * cfg.dt;
        expect += std::exp(-p.rho * t) * ucoef * cfg.dt *
                  std::exp(0.1 * lx - 0.05 * p.mu_P * t);
        lx += std::log1p(g * cfg.dt);
    }
    CHECK(res.mean == doctest::Approx(expect).epsilon(1e-9));
    CHECK(res.stderr_ <= 1e-12 * std::fabs(res.mean));
    CHECK(res.solvency_violations == 0);
    CHECK(res.n_paths == 4);
    CHECK(res.T == doctest::Approx(50.0));

    double tail = std::exp(-p.rho * cfg.T) * (s.alpha_bar / 0.1) *
                  std::exp(0.1 * lx - 0.05 * p.mu_P * cfg.T);
    CHECK(res.truncation_bound == doctest::Approx(tail).epsilon(1e-9));
}

TEST_CASE("runs are deterministic in the seed") {
    ModelParams p = base_params();
    Strategy s = fractions(0.02, 0.5, 0.4, 0.2);
    SimConfig cfg;
    cfg.T = 5.0;
    cfg.dt = 1.0 / 50.0;
    cfg.n_paths = 333;
    cfg.seed = 42;
    SimResult a = simulate_paths(p, s, 1.0, 1.0, 0.0, cfg);
    SimResult b = simulate_paths(p, s, 1.0, 1.0, 0.0, cfg);
    CHECK(a.mean == b.mean);
    CHECK(a.stderr_ == b.stderr_);
    CHECK(a.truncation_bound == b.truncation_bound);
    cfg.seed = 43;
    SimResult c = simulate_paths(p, s, 1.0, 1.0, 0.0, cfg);
    CHECK(a.mean != c.mean);
}

TEST_CASE("jump counters match the Poisson intensities") {
    ModelParams p = base_params();
    p.lambda_1 = 0.2;
    p.lambda_2 = 0.5;
    Strategy s = fractions(0.02, 0.2, 0.3, 0.15);
    SimConfig cfg;
    cfg.T = 10.0;
    cfg.dt = 1.0 / 50.0;
    cfg.n_paths = 2000;
    cfg.seed = 11;
    SimResult res = simulate_paths(p, s, 1.0, 1.0, 0.0, cfg);
    CHECK(std::fabs(res.mean_n1 - 2.0) <= 4.0 * res.stderr_n1);
    CHECK(std::fabs(res.mean_n2 - 5.0) <= 4.0 * res.stderr_n2);
    CHECK(res.stderr_n1 > 0.0);
    CHECK(res.stderr_n1 == doctest::Approx(std::sqrt(2.0 / 2000.0)).epsilon(0.15));
}

TEST_CASE("premiums balance indemnities at fair loading") {
    ModelParams p = base_params(1.0);
    p.lambda_2 = 0.5;
    Strategy s = fractions(0.02, 0.3, 0.4, 0.2);
    SimConfig cfg;
    cfg.T = 20.0;
    cfg.dt = 1.0 / 100.0;
    cfg.n_paths = 4000;
    cfg.seed = 3;
    SimResult res = simulate_paths(p, s, 1.0, 1.0, 0.0, cfg);
    CHECK(res.mean_premium > 0.0);
    CHECK(res.mean_indemnity > 0.0);
    CHECK(std::fabs(res.fair_gap_mean) <=
          4.0 * res.fair_gap_stderr + 0.01 * res.mean_premium);
}

TEST_CASE("simulated value is homogeneous in the initial state") {
    ModelParams p = base_params();
    p.lambda_1 = 0.2;
    Strategy s = fractions(0.02, 0.4, 0.35, 0.17);
    SimConfig cfg;
    cfg.T = 20.0;
    cfg.dt = 1.0 / 50.0;
    cfg.n_paths = 500;
    cfg.seed = 99;
    SimResult ref = simulate_paths(p, s, 1.0, 1.0, 0.0, cfg);
    for (double kappa : {0.5, 2.0}) {
        SimResult sc = simulate_paths(p, s, kappa, kappa, 0.0, cfg);
        double factor = std::pow(kappa, 0.05);
        CHECK(sc.mean == doctest::Approx(factor * ref.mean).epsilon(1e-10));
        CHECK(sc.truncation_bound ==
              doctest::Approx(factor * ref.truncation_bound).epsilon(1e-10));
    }
}

TEST_CASE("frictionless strategy recovers the closed-form value") {
    ModelParams p = base_params();
    NoTCSolution sol = solve_no_tc(p);
    double T = default_horizon(p, sol);
    CHECK(T == 175.0);

    Strategy s = no_tc_strategy(sol);
    SimConfig cfg;
    cfg.T = T;
    cfg.dt = 1.0 / 250.0;
    cfg.n_paths = 8000;
    cfg.seed = 1;
    SimResult res = simulate_paths(p, s, 1.0, 1.0, 0.0, cfg);
    double v = value_function_no_tc(1.0, 1.0, sol, p);
    CHECK(std::fabs(res.mean - v) <= 3.0 * res.stderr_ + res.truncation_bound);
    CHECK(res.truncation_bound < 0.005 * v);
    CHECK(res.solvency_violations == 0);
}

TEST_CASE("horizon rule fails loudly when the tail cannot be truncated") {
    ModelParams p = base_params();
    p.rho = 0.0005;
    NoTCSolution sol{};
    sol.alpha_c = 0.0001;
    sol.alpha_k = 0.01;
    CHECK_THROWS_AS(default_horizon(p, sol), std::runtime_error);
}

TEST_CASE("band strategy simulation tracks the PDE value") {
    ModelParams p = base_params(1.2);
    HJBQVISolver solver(p, HJBQVIConfig{.n = 301});
    HJBQVISolution sol = solver.main_loop();
    Strategy s = band_strategy(sol);

    double zstar = sol.bands.z_star;
    double k0 = 1.0 / zstar;
    SimConfig cfg;
    cfg.T = 50.0;
    cfg.dt = 1.0 / 100.0;
    cfg.n_paths = 500;
    cfg.seed = 5;
    SimResult res = simulate_paths(p, s, 1.0, 1.0, k0, cfg);

    // V(x0, k0, p0) = (k0 p0)^{1-gamma} p0^{-(1-beta)(1-gamma)} v(z0), z0 = z*
    double vz = 0.0;
    for (int i = 0; i + 1 < sol.grid.n; ++i) {
        if (sol.grid.z[i] <= zstar && zstar <= sol.grid.z[i + 1]) {
            double w = (zstar - sol.grid.z[i]) / sol.grid.h;
            vz = (1.0 - w) * sol.v[i] + w * sol.v[i + 1];
            break;
        }
    }
    REQUIRE(vz > 0.0);
    double expect = std::pow(k0, 0.1) * vz;
    CHECK(std::fabs(res.mean - expect) <=
          3.0 * res.stderr_ + res.truncation_bound + 0.05 * expect);
    CHECK(res.mean_trades >= 0.0);
    CHECK(res.solvency_violations == 0);
}

TEST_CASE("insolvent band paths are counted and frozen") {
    ModelParams p = base_params();
    p.lambda_1 = 5.0;
    p.eta = 0.9;
    Strategy s;
    s.kind = Strategy::Kind::band;
    s.grid = make_grid(0.05, 10.0, 11);
    s.policy.c_hat.assign(11, 0.1);
    s.policy.pi1_hat.assign(11, 50.0);
    s.policy.q_hat.assign(11, 0.0);
    s.policy.trade_flag.assign(11, 0);
    s.bands = {2.0, 8.0, 5.0, 1.0};
    s.alpha_bar = 20.0;

    SimConfig cfg;
    cfg.T = 5.0;
    cfg.dt = 1.0 / 50.0;
    cfg.n_paths = 200;
    cfg.seed = 17;
    SimResult res = simulate_paths(p, s, 1.0, 1.0, 0.2, cfg);
    CHECK(res.solvency_violations > 0);
    CHECK(res.solvency_violations <= 200);
}

TEST_CASE("inadmissible strategies and configs are rejected") {
    ModelParams p = base_params();
    p.lambda_1 = 0.2;
    SimConfig cfg;
    cfg.T = 1.0;
    cfg.n_paths = 10;

    CHECK_THROWS_AS(simulate_paths(p, fractions(0.02, 25.0, 0.3, 0.15), 1.0, 1.0, 0.0, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(simulate_paths(p, fractions(0.02, 0.5, 3.0, 0.0), 1.0, 1.0, 0.0, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(simulate_paths(p, fractions(-0.02, 0.5, 0.3, 0.15), 1.0, 1.0, 0.0, cfg),
                    std::invalid_argument);

    Strategy s = fractions(0.02, 0.5, 0.3, 0.15);
    SimConfig bad = cfg;
    bad.T = 0.0;
    CHECK_THROWS_AS(simulate_paths(p, s, 1.0, 1.0, 0.0, bad), std::invalid_argument);
    bad = cfg;
    bad.dt = 2.0;
    CHECK_THROWS_AS(simulate_paths(p, s, 1.0, 1.0, 0.0, bad), std::invalid_argument);
    bad = cfg;
    bad.n_paths = 0;
    CHECK_THROWS_AS(simulate_paths(p, s, 1.0, 1.0, 0.0, bad), std::invalid_argument);
    CHECK_THROWS_AS(simulate_paths(p, s, -1.0, 1.0, 0.0, cfg), std::invalid_argument);

    Strategy b;
    b.kind = Strategy::Kind::band;
    b.grid = make_grid(0.05, 10.0, 11);
    b.policy.c_hat.assign(11, 0.1);
    b.policy.pi1_hat.assign(11, 0.5);
    b.policy.q_hat.assign(11, 0.1);
    b.policy.trade_flag.assign(11, 0);
    b.bands = {2.0, 8.0, 5.0, 1.0};
    b.alpha_bar = 20.0;
    CHECK_THROWS_AS(simulate_paths(p, b, 1.0, 1.0, 0.0, cfg), std::invalid_argument);
    CHECK_THROWS_AS(simulate_paths(p, b, 0.001, 1.0, 1.0, cfg), std::invalid_argument);
    b.policy.q_hat[3] = -0.1;
    CHECK_THROWS_AS(simulate_paths(p, b, 1.0, 1.0, 0.2, cfg), std::invalid_argument);
}
