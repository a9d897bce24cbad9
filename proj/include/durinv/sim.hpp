#pragma once

#include <cstdint>

#include "durinv/hjbqvi.hpp"
#include "durinv/no_tc.hpp"
#include "durinv/params.hpp"

namespace durinv {

struct SimConfig {
    double T = 0.0;  // horizon in years
    double dt = 1.0 / 250.0;
    long n_paths = 10000;
    std::uint64_t seed = 1;
};

struct SimResult {
    double mean = 0.0;
    double stderr_ = 0.0;
    double truncation_bound = 0.0;
    long solvency_violations = 0;
    long n_paths = 0;
    double dt = 0.0;
    double T = 0.0;  // effective horizon (= steps * dt)
    // path diagnostics
    double mean_n1 = 0.0, stderr_n1 = 0.0;
    double mean_n2 = 0.0, stderr_n2 = 0.0;
    double mean_premium = 0.0;
    double mean_indemnity = 0.0;
    double fair_gap_mean = 0.0;    // premium - indemnity, per path
    double fair_gap_stderr = 0.0;
    double mean_trades = 0.0;
};

// Per-state control rule. Constant fractions rebalance every step
// (c = alpha_c X, pi1 = alpha_pi1 X, K = alpha_k X / P, q = alpha_q X);
// the band rule trades only when z = X/(KP) leaves [z_low, z_high].
struct Strategy {
    enum class Kind { constant_fractions, band };
    Kind kind = Kind::constant_fractions;
    double alpha_c = 0.0, alpha_pi1 = 0.0, alpha_k = 0.0, alpha_q = 0.0;
    double alpha_bar = 0.0;  // no-TC value constant, used for the tail bound
    TradingBands bands{};
    Grid grid{};
    PolicyField policy{};
};

Strategy no_tc_strategy(const NoTCSolution& sol);
Strategy band_strategy(const HJBQVISolution& sol);

// Smallest whole number of years T with
// e^{-rho T} * upper_bound(E[X_T], E[P_T]) < 0.001 * V(x0, p0).
double default_horizon(const ModelParams& p, const NoTCSolution& sol);

SimResult simulate_paths(const ModelParams& p, const Strategy& strat, double x0,
                         double p0, double k0, const SimConfig& cfg);

}  // namespace durinv
