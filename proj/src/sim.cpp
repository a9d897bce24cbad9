#include "durinv/sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace durinv {

namespace {

// ---------------------------------------------------------------------------
// Branch-free polynomial math for the hot path kernel. Accuracy ~1e-13, which
// is far below the Monte Carlo statistical error; everything here inlines and
// auto-vectorizes (no libm calls inside the lane loops).
// ---------------------------------------------------------------------------

constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;
constexpr double kInvLn2 = 1.44269504088896338700e+00;

inline double poly_exp(double y) {
    double kd = y * kInvLn2;
    kd = (kd > 1000.0) ? 1000.0 : (kd < -1000.0 ? -1000.0 : kd);
    double kr = std::nearbyint(kd);
    double r = (y - kr * kLn2Hi) - kr * kLn2Lo;
    // Taylor to r^11
    double e = 1.0 / 39916800.0;
    e = e * r + 1.0 / 3628800.0;
    e = e * r + 1.0 / 362880.0;
    e = e * r + 1.0 / 40320.0;
    e = e * r + 1.0 / 5040.0;
    e = e * r + 1.0 / 720.0;
    e = e * r + 1.0 / 120.0;
    e = e * r + 1.0 / 24.0;
    e = e * r + 1.0 / 6.0;
    e = e * r + 0.5;
    e = e * r + 1.0;
    e = e * r + 1.0;
    long long ki = (long long)kr;
    std::uint64_t sbits = (std::uint64_t)(ki + 1023) << 52;
    return e * std::bit_cast<double>(sbits);
}

// natural log of u in (0,1]
inline double poly_ln(double u) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(u);
    long long e = (long long)((bits >> 52) & 0x7FF) - 1022;
    double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFULL) |
                                     0x3FE0000000000000ULL);  // [0.5, 1)
    bool low = m < 0.70710678118654752440;
    m = low ? 2.0 * m : m;
    double ed = (double)(e - (low ? 1 : 0));
    double t = (m - 1.0) / (m + 1.0);
    double t2 = t * t;
    double s = 1.0 / 13.0;
    s = s * t2 + 1.0 / 11.0;
    s = s * t2 + 1.0 / 9.0;
    s = s * t2 + 1.0 / 7.0;
    s = s * t2 + 1.0 / 5.0;
    s = s * t2 + 1.0 / 3.0;
    s = s * t2 + 1.0;
    return ed * kLn2Hi + (ed * kLn2Lo + 2.0 * t * s);
}

// log(1+w) for |w| small (clamped well away from -1 by the caller)
inline double poly_log1p(double w) {
    double t = w / (2.0 + w);
    double t2 = t * t;
    double s = 1.0 / 11.0;
    s = s * t2 + 1.0 / 9.0;
    s = s * t2 + 1.0 / 7.0;
    s = s * t2 + 1.0 / 5.0;
    s = s * t2 + 1.0 / 3.0;
    s = s * t2 + 1.0;
    return 2.0 * t * s;
}

// sin and cos of theta = 2*pi*up for up in (-0.5, 0.5), via psi = theta/4
inline void poly_sincos_2pi(double up, double& s_out, double& c_out) {
    double psi = 1.57079632679489661923 * up;  // in [-pi/4, pi/4]
    double p2 = psi * psi;
    double ss = -1.0 / 6227020800.0;
    ss = ss * p2 + 1.0 / 39916800.0;
    ss = ss * p2 - 1.0 / 362880.0;
    ss = ss * p2 + 1.0 / 5040.0;
    ss = ss * p2 - 1.0 / 120.0;
    ss = ss * p2 + 1.0 / 6.0;
    ss = -ss * p2 + 1.0;
    double sp = psi * ss;  // sin psi
    double cc = -1.0 / 87178291200.0;
    cc = cc * p2 + 1.0 / 479001600.0;
    cc = cc * p2 - 1.0 / 3628800.0;
    cc = cc * p2 + 1.0 / 40320.0;
    cc = cc * p2 - 1.0 / 720.0;
    cc = cc * p2 + 1.0 / 24.0;
    cc = cc * p2 - 1.0 / 2.0;
    double cp = cc * p2 + 1.0;  // cos psi
    double s2 = 2.0 * sp * cp;         // sin(2 psi)
    double c2 = 1.0 - 2.0 * sp * sp;   // cos(2 psi)
    s_out = 2.0 * s2 * c2;             // sin(4 psi)
    c_out = 1.0 - 2.0 * s2 * s2;       // cos(4 psi)
}

// ---------------------------------------------------------------------------
// RNG: per-path xoshiro256++ streams, states expanded by splitmix64 from
// (seed, path index) so every path is reproducible independently of batching.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

constexpr int kBlock = 64;

struct alignas(64) RngBlock {
    std::uint64_t s0[kBlock], s1[kBlock], s2[kBlock], s3[kBlock];

    void seed_lane(int l, std::uint64_t seed, std::uint64_t path) {
        std::uint64_t sm = seed + (path + 1) * 0x9E3779B97F4A7C15ULL;
        s0[l] = splitmix64(sm);
        s1[l] = splitmix64(sm);
        s2[l] = splitmix64(sm);
        s3[l] = splitmix64(sm);
    }
    inline std::uint64_t next_lane(int l) {
        std::uint64_t r = rotl64(s0[l] + s3[l], 23) + s0[l];
        std::uint64_t t = s1[l] << 17;
        s2[l] ^= s0[l];
        s3[l] ^= s1[l];
        s1[l] ^= s2[l];
        s0[l] ^= s3[l];
        s2[l] ^= t;
        s3[l] = rotl64(s3[l], 45);
        return r;
    }
};

constexpr double kP53 = 1.0 / 9007199254740992.0;  // 2^-53

inline double to_open_unit(std::uint64_t x) { return ((x >> 11) + 0.5) * kP53; }

// ---------------------------------------------------------------------------

struct Welford {
    long double sum = 0.0L, sumsq = 0.0L;
    long n = 0;
    void add(double x) {
        sum += x;
        sumsq += (long double)x * x;
        ++n;
    }
    double mean() const { return n ? (double)(sum / n) : 0.0; }
    double sem() const {
        if (n < 2) return 0.0;
        long double m = sum / n;
        long double var = (sumsq - (long double)n * m * m) / (n - 1);
        if (var < 0.0L) var = 0.0L;
        return (double)std::sqrt((double)(var / n));
    }
};

struct PathStats {
    Welford util, n1, n2, gap, trunc, trades;
    long double prem_sum = 0.0L, indem_sum = 0.0L;
    long violations = 0;
};

void finalize(const PathStats& st, const SimConfig& cfg, double T_eff, SimResult& out) {
    out.mean = st.util.mean();
    out.stderr_ = st.util.sem();
    out.truncation_bound = std::fabs(st.trunc.mean());
    out.solvency_violations = st.violations;
    out.n_paths = cfg.n_paths;
    out.dt = cfg.dt;
    out.T = T_eff;
    out.mean_n1 = st.n1.mean();
    out.stderr_n1 = st.n1.sem();
    out.mean_n2 = st.n2.mean();
    out.stderr_n2 = st.n2.sem();
    out.mean_premium = (double)(st.prem_sum / cfg.n_paths);
    out.mean_indemnity = (double)(st.indem_sum / cfg.n_paths);
    out.fair_gap_mean = st.gap.mean();
    out.fair_gap_stderr = st.gap.sem();
    out.mean_trades = st.trades.mean();
}

// Fast kernel for the constant-fractions rule: block-of-64 structure of
// arrays; tracks log X and log P so each step costs two Gaussians, one
// log1p and two poly-exp evaluations per path.
SimResult run_constant_fractions(const ModelParams& p, const Strategy& s, double x0,
                                 double p0, const SimConfig& cfg) {
    const double g = p.gamma, b = p.beta;
    const double a_ = 1.0 - g;
    const double b_ = -(1.0 - b) * (1.0 - g);
    const long nst = std::llround(cfg.T / cfg.dt) > 0 ? std::llround(cfg.T / cfg.dt) : 1;
    const double dt = cfg.dt;
    const double T_eff = nst * dt;
    const double sdt = std::sqrt(dt);

    const double gX = p.r + s.alpha_pi1 * (p.mu_S + p.lambda_1 * p.eta - p.r) +
                      s.alpha_k * (p.mu_P - p.r - p.delta) -
                      p.phi * p.lambda_2 * s.alpha_q - s.alpha_c;
    const double s1 = s.alpha_pi1 * p.sigma_S + s.alpha_k * p.sigma_P1;
    const double s2 = s.alpha_k * p.sigma_P2;
    const double j1 = 1.0 - p.eta * s.alpha_pi1;
    const double j2 = 1.0 - (p.ell * s.alpha_k - s.alpha_q);
    if (p.lambda_1 > 0.0 && j1 <= 0.0)
        throw std::invalid_argument("simulate_paths: strategy violates crash solvency");
    if (p.lambda_2 > 0.0 && j2 <= 0.0)
        throw std::invalid_argument("simulate_paths: strategy violates loss solvency");
    const double lnj1 = p.lambda_1 > 0.0 ? std::log(j1) : 0.0;
    const double lnj2 = p.lambda_2 > 0.0 ? std::log(j2) : 0.0;
    const double gxdt = gX * dt, s1dt = s1 * sdt, s2dt = s2 * sdt;
    const double mupdt = (p.mu_P - 0.5 * (p.sigma_P1 * p.sigma_P1 +
                                          p.sigma_P2 * p.sigma_P2)) * dt;
    const double sp1dt = p.sigma_P1 * sdt, sp2dt = p.sigma_P2 * sdt;
    double ucoef;
    if (s.alpha_c > 0.0 && s.alpha_k > 0.0) {
        ucoef = std::pow(std::pow(s.alpha_c, b) * std::pow(s.alpha_k, 1.0 - b), 1.0 - g) /
                (1.0 - g);
    } else {
        if (g > 1.0)
            throw std::domain_error("simulate_paths: zero consumption with gamma > 1");
        ucoef = 0.0;
    }
    const double ucoef_dt = ucoef * dt;
    const double prem_c = p.phi * p.lambda_2 * s.alpha_q * dt;
    const double dfac = std::exp(-p.rho * dt);
    const double lx0 = std::log(x0), lp0 = std::log(p0);
    const double disc_T = std::exp(-p.rho * T_eff);
    const double vbar_c = s.alpha_bar / (1.0 - g);

    PathStats st;
    alignas(64) double LX[kBlock], LP[kBlock], acc[kBlock], alive[kBlock];
    alignas(64) double nxt1[kBlock], nxt2[kBlock], prem[kBlock], indem[kBlock];
    alignas(64) double n1c[kBlock], n2c[kBlock];
    RngBlock rng;

    const bool jumps = p.lambda_1 > 0.0 || p.lambda_2 > 0.0;
    const long nblocks = (cfg.n_paths + kBlock - 1) / kBlock;
    for (long blk = 0; blk < nblocks; ++blk) {
        for (int l = 0; l < kBlock; ++l) {
            rng.seed_lane(l, cfg.seed, (std::uint64_t)(blk * kBlock + l));
            LX[l] = lx0;
            LP[l] = lp0;
            acc[l] = 0.0;
            alive[l] = 1.0;
            prem[l] = indem[l] = n1c[l] = n2c[l] = 0.0;
            nxt1[l] = p.lambda_1 > 0.0
                          ? -std::log(to_open_unit(rng.next_lane(l))) / p.lambda_1
                          : 1e300;
            nxt2[l] = p.lambda_2 > 0.0
                          ? -std::log(to_open_unit(rng.next_lane(l))) / p.lambda_2
                          : 1e300;
        }
        double disc = 1.0;
        for (long k = 0; k < nst; ++k) {
            const double tend = (k + 1) * dt;
            if (jumps) {
                int flag = 0;
                for (int l = 0; l < kBlock; ++l)
                    flag |= (nxt1[l] < tend) | (nxt2[l] < tend);
                if (flag) {
                    for (int l = 0; l < kBlock; ++l) {
                        while (nxt1[l] < tend) {
                            if (alive[l] != 0.0) {
                                LX[l] += lnj1;
                                n1c[l] += 1.0;
                            }
                            nxt1[l] +=
                                -std::log(to_open_unit(rng.next_lane(l))) / p.lambda_1;
                        }
                        while (nxt2[l] < tend) {
                            if (alive[l] != 0.0) {
                                indem[l] += s.alpha_q * std::exp(LX[l]);
                                LX[l] += lnj2;
                                n2c[l] += 1.0;
                            }
                            nxt2[l] +=
                                -std::log(to_open_unit(rng.next_lane(l))) / p.lambda_2;
                        }
                    }
                }
            }
            const double du = disc * ucoef_dt;
            for (int l = 0; l < kBlock; ++l) {
                std::uint64_t o1 = rng.next_lane(l);
                std::uint64_t o2 = rng.next_lane(l);
                double u1 = to_open_unit(o1);
                double up = to_open_unit(o2) - 0.5;
                double R = std::sqrt(-2.0 * poly_ln(u1));
                double sn, cn;
                poly_sincos_2pi(up, sn, cn);
                double z1 = R * cn, z2 = R * sn;
                double uval = poly_exp(a_ * LX[l] + b_ * LP[l]);
                acc[l] += du * uval * alive[l];
                prem[l] += prem_c * poly_exp(LX[l]) * alive[l];
                double w = gxdt + s1dt * z1 + s2dt * z2;
                double ok = (w > -1.0 + 1e-12) ? 1.0 : 0.0;
                double anew = alive[l] * ok;
                LX[l] += anew * poly_log1p(w > -0.9 ? w : -0.9);
                LP[l] += mupdt + sp1dt * z1 + sp2dt * z2;
                alive[l] = anew;
            }
            disc *= dfac;
        }
        const long lanes = std::min((long)kBlock, cfg.n_paths - blk * kBlock);
        for (int l = 0; l < lanes; ++l) {
            st.util.add(acc[l]);
            st.n1.add(n1c[l]);
            st.n2.add(n2c[l]);
            st.prem_sum += prem[l];
            st.indem_sum += indem[l];
            st.gap.add(prem[l] - indem[l]);
            st.trades.add(0.0);
            st.trunc.add(alive[l] * disc_T * vbar_c *
                         poly_exp(a_ * LX[l] + b_ * LP[l]));
            if (alive[l] == 0.0) ++st.violations;
        }
    }
    SimResult out;
    finalize(st, cfg, T_eff, out);
    return out;
}

double interp_policy(const Grid& grid, const std::vector<double>& f, double z) {
    double w = std::clamp(z, grid.theta, grid.z_max);
    int j = std::min((int)((w - grid.theta) / grid.h), grid.n - 2);
    double t = std::clamp((w - grid.z[j]) / grid.h, 0.0, 1.0);
    return (1.0 - t) * f[j] + t * f[j + 1];
}

// Scalar kernel for the band rule.
SimResult run_band(const ModelParams& p, const Strategy& s, double x0, double p0,
                   double k0, const SimConfig& cfg) {
    const double g = p.gamma, b = p.beta;
    const long nst = std::llround(cfg.T / cfg.dt) > 0 ? std::llround(cfg.T / cfg.dt) : 1;
    const double dt = cfg.dt, sdt = std::sqrt(dt);
    const double T_eff = nst * dt;
    const double mupdt = (p.mu_P - 0.5 * (p.sigma_P1 * p.sigma_P1 +
                                          p.sigma_P2 * p.sigma_P2)) * dt;
    const double dfac = std::exp(-p.rho * dt);
    const double disc_T = std::exp(-p.rho * T_eff);
    const double vbar_c = s.alpha_bar / (1.0 - g);
    const double kdec = std::exp(-p.delta * dt);

    PathStats st;
    RngBlock rng;
    for (long path = 0; path < cfg.n_paths; ++path) {
        const int l = 0;
        rng.seed_lane(l, cfg.seed, (std::uint64_t)path);
        double X = x0, P = p0, K = k0;
        double nxt1 = p.lambda_1 > 0.0
                          ? -std::log(to_open_unit(rng.next_lane(l))) / p.lambda_1
                          : 1e300;
        double nxt2 = p.lambda_2 > 0.0
                          ? -std::log(to_open_unit(rng.next_lane(l))) / p.lambda_2
                          : 1e300;
        double acc = 0.0, prem = 0.0, indem = 0.0, disc = 1.0;
        double n1c = 0.0, n2c = 0.0, trades = 0.0;
        bool alive = true;

        auto trade_if_needed = [&]() {
            double z = X / (K * P);
            if (z < s.bands.z_low || z > s.bands.z_high) {
                double xc = X - p.theta * K * P;
                if (xc <= 0.0)
                    throw std::runtime_error(
                        "band_strategy: post-trade wealth nonpositive");
                X = xc;
                K = xc / (s.bands.z_star * P);
                trades += 1.0;
            }
        };

        for (long k = 0; k < nst && alive; ++k) {
            const double tend = (k + 1) * dt;
            trade_if_needed();
            double z = X / (K * P);
            double chat = interp_policy(s.grid, s.policy.c_hat, z);
            double pihat = interp_policy(s.grid, s.policy.pi1_hat, z);
            double qhat = interp_policy(s.grid, s.policy.q_hat, z);
            double c = chat * K * P, pi1 = pihat * K * P, q = qhat * K * P;
            while (nxt1 < tend || nxt2 < tend) {
                if (nxt1 < nxt2) {
                    X -= pi1 * p.eta;
                    n1c += 1.0;
                    nxt1 += -std::log(to_open_unit(rng.next_lane(l))) / p.lambda_1;
                } else {
                    X -= p.ell * K * P - q;
                    indem += q;
                    K *= 1.0 - p.ell;
                    n2c += 1.0;
                    nxt2 += -std::log(to_open_unit(rng.next_lane(l))) / p.lambda_2;
                }
                if (X <= 0.0) {
                    alive = false;
                    ++st.violations;
                    break;
                }
                trade_if_needed();
                z = X / (K * P);
                chat = interp_policy(s.grid, s.policy.c_hat, z);
                pihat = interp_policy(s.grid, s.policy.pi1_hat, z);
                qhat = interp_policy(s.grid, s.policy.q_hat, z);
                c = chat * K * P;
                pi1 = pihat * K * P;
                q = qhat * K * P;
            }
            if (!alive) break;
            if (c > 0.0 && K > 0.0)
                acc += disc * dt *
                       std::pow(std::pow(c, b) * std::pow(K, 1.0 - b), 1.0 - g) /
                       (1.0 - g);
            prem += p.phi * p.lambda_2 * q * dt;
            double u1 = to_open_unit(rng.next_lane(l));
            double up = to_open_unit(rng.next_lane(l)) - 0.5;
            double R = std::sqrt(-2.0 * std::log(u1));
            double z1 = R * std::cos(6.283185307179586477 * up);
            double z2 = R * std::sin(6.283185307179586477 * up);
            double drift = p.r * X + pi1 * (p.mu_S + p.lambda_1 * p.eta - p.r) +
                           K * P * (p.mu_P - p.r - p.delta) - p.phi * p.lambda_2 * q - c;
            double xn = X + drift * dt + (pi1 * p.sigma_S + K * P * p.sigma_P1) * sdt * z1 +
                        K * P * p.sigma_P2 * sdt * z2;
            P *= std::exp(mupdt + p.sigma_P1 * sdt * z1 + p.sigma_P2 * sdt * z2);
            K *= kdec;
            if (xn <= 0.0) {
                alive = false;
                ++st.violations;
                break;
            }
            X = xn;
            disc *= dfac;
        }
        st.util.add(acc);
        st.n1.add(n1c);
        st.n2.add(n2c);
        st.prem_sum += prem;
        st.indem_sum += indem;
        st.gap.add(prem - indem);
        st.trades.add(trades);
        st.trunc.add(alive ? disc_T * vbar_c * std::pow(X, 1.0 - g) *
                                 std::pow(P, -(1.0 - b) * (1.0 - g))
                           : 0.0);
    }
    SimResult out;
    finalize(st, cfg, T_eff, out);
    return out;
}

}  // namespace

Strategy no_tc_strategy(const NoTCSolution& sol) {
    Strategy s;
    s.kind = Strategy::Kind::constant_fractions;
    s.alpha_c = sol.alpha_c;
    s.alpha_pi1 = sol.alpha_pi1;
    s.alpha_k = sol.alpha_k;
    s.alpha_q = sol.alpha_q;
    s.alpha_bar = sol.alpha_v;
    return s;
}

Strategy band_strategy(const HJBQVISolution& sol) {
    Strategy s;
    s.kind = Strategy::Kind::band;
    s.bands = sol.bands;
    s.grid = sol.grid;
    s.policy = sol.policy;
    s.alpha_bar = sol.ntc.alpha_v;
    return s;
}

double default_horizon(const ModelParams& p, const NoTCSolution& sol) {
    double g = p.gamma, b = p.beta;
    double a_ = 1.0 - g, b_ = -(1.0 - b) * (1.0 - g);
    double gX = p.r + sol.alpha_pi1 * (p.mu_S + p.lambda_1 * p.eta - p.r) +
                sol.alpha_k * (p.mu_P - p.r - p.delta) -
                p.phi * p.lambda_2 * sol.alpha_q - sol.alpha_c;
    double g_mean = gX - p.lambda_1 * p.eta * sol.alpha_pi1 -
                    p.lambda_2 * (p.ell * sol.alpha_k - sol.alpha_q);
    double decay = -p.rho + a_ * g_mean + b_ * p.mu_P;
    if (!(decay < 0.0))
        throw std::runtime_error(
            "default_horizon: discounted value bound does not decay; cannot truncate");
    return std::ceil(std::log(1000.0) / (-decay));
}

SimResult simulate_paths(const ModelParams& p, const Strategy& strat, double x0,
                         double p0, double k0, const SimConfig& cfg) {
    if (!(cfg.T > 0.0) || !(cfg.dt > 0.0) || cfg.dt > cfg.T || cfg.n_paths < 1)
        throw std::invalid_argument("simulate_paths: invalid SimConfig");
    if (!(x0 > 0.0) || !(p0 > 0.0))
        throw std::invalid_argument("simulate_paths: initial state must be positive");
    if (strat.kind == Strategy::Kind::constant_fractions) {
        if (strat.alpha_c < 0.0 || strat.alpha_k < 0.0 || strat.alpha_q < 0.0)
            throw std::invalid_argument(
                "simulate_paths: strategy violates c, K, q >= 0");
        return run_constant_fractions(p, strat, x0, p0, cfg);
    }
    if (!(k0 > 0.0))
        throw std::invalid_argument("simulate_paths: band strategy requires k0 > 0");
    if (!(x0 > p.theta * k0 * p0))
        throw std::invalid_argument("simulate_paths: initial state outside solvency region");
    for (int i = 0; i < strat.grid.n; ++i)
        if (strat.policy.c_hat[i] < 0.0 || strat.policy.q_hat[i] < 0.0)
            throw std::invalid_argument("simulate_paths: strategy violates c, q >= 0");
    return run_band(p, strat, x0, p0, k0, cfg);
}

}  // namespace durinv
