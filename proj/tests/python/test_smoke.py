import math
import os

import pytest

import durinv


SCENARIOS = os.environ.get("DURINV_SCENARIOS", os.path.join(os.path.dirname(__file__), "..", "..", "scenarios"))


def table2(phi=1.0):
    p = durinv.ModelParams()
    p.beta = 0.5
    p.gamma = 0.9
    p.r = 0.02
    p.mu_S = 0.06
    p.sigma_S = 0.25
    p.mu_P = 0.02
    p.delta = 0.015
    p.sigma_P1 = 0.1
    p.sigma_P2 = 0.2
    p.eta = 0.1
    p.lambda_1 = 0.0
    p.ell = 0.5
    p.lambda_2 = 0.01
    p.rho = 0.04
    p.theta = 0.05
    p.phi = phi
    return p


def test_utility_and_derived():
    assert durinv.utility(1.0, 1.0, 0.5, 0.9) == pytest.approx(10.0)
    d = durinv.derive_constants(table2())
    assert d.beta_bar == pytest.approx(0.05)
    assert d.rho_bar == pytest.approx(0.0415)
    tr = durinv.check_transversality(table2())
    assert tr.holds
    assert tr.margin == pytest.approx(0.0416875)


def test_validation():
    p = table2()
    assert durinv.validate_params(p) == []
    p.gamma = 1.0
    msgs = durinv.validate_params(p)
    assert any("gamma" in m for m in msgs)


def test_scenario_io(tmp_path):
    sc = durinv.load_scenario(os.path.join(SCENARIOS, "scenario_a.txt"))
    assert sc.name == "scenario_a"
    assert sc.params.gamma == pytest.approx(0.9)
    assert list(sc.phi_grid) == pytest.approx([1.0, 1.1, 1.2, 1.3, 1.4, 1.5])
    out = tmp_path / "roundtrip.txt"
    durinv.save_scenario(sc, str(out))
    back = durinv.load_scenario(str(out))
    assert back.params.rho == sc.params.rho


def test_merton_limit():
    sc = durinv.load_scenario(os.path.join(SCENARIOS, "merton.txt"))
    sol = durinv.solve_no_tc(sc.params)
    assert sol.alpha_pi1 == pytest.approx(0.04 / (0.9 * 0.0625), abs=1e-8)


def test_no_tc_frozen_values():
    sol = durinv.solve_no_tc(table2(1.0))
    assert sol.alpha_pi1 == pytest.approx(0.53439795, abs=1e-6)
    assert sol.alpha_q == pytest.approx(0.5 * sol.alpha_k, abs=1e-10)
    assert durinv.value_function_no_tc(1.0, 1.0, sol, table2(1.0)) == pytest.approx(
        195.6000764, abs=1e-4
    )


def test_sweep_loading():
    sc = durinv.load_scenario(os.path.join(SCENARIOS, "scenario_a.txt"))
    rows = durinv.sweep_loading(sc)
    assert len(rows) == 6
    qs = [r.alpha_q for r in rows]
    assert all(b <= a + 1e-12 for a, b in zip(qs, qs[1:]))


def test_small_tc_solve():
    cfg = durinv.HJBQVIConfig()
    cfg.n = 201
    sol = durinv.solve_tc(table2(1.2), cfg)
    assert sol.v[0] == 0.0
    assert sol.bands.z_low < sol.bands.z_star < sol.bands.z_high
    assert sol.bands.M == pytest.approx(194.272, abs=1.0)
    assert sol.trace[-1].delta_v_inf < 1e-8
    flags = sol.policy.trade_flag
    assert len(flags) == 201
    assert flags[0] and flags[-1]


def test_psor_dense():
    v = durinv.psor_solve(
        [[2.0, 0.0], [0.0, 2.0]], [2.0, 6.0], [2.0, 2.0], 1.2, 1e-12, 10000
    )
    assert v == pytest.approx([2.0, 3.0], abs=1e-9)


def test_simulation_round_trip():
    p = table2(1.0)
    ntc = durinv.solve_no_tc(p)
    strat = durinv.no_tc_strategy(ntc)
    assert durinv.default_horizon(p, ntc) == pytest.approx(175.0)
    cfg = durinv.SimConfig()
    cfg.T = 5.0
    cfg.dt = 0.02
    cfg.n_paths = 500
    cfg.seed = 11
    r = durinv.simulate_paths(p, strat, 1.0, 1.0, 0.0, cfg)
    assert r.n_paths == 500
    assert r.mean > 0.0
    assert r.stderr > 0.0
    assert r.solvency_violations == 0
    r2 = durinv.simulate_paths(p, strat, 1.0, 1.0, 0.0, cfg)
    assert r2.mean == r.mean
