from _durinv import (
    ConvergenceRecord,
    DerivedParams,
    Grid,
    HJBQVIConfig,
    HJBQVISolution,
    LoadingSweepRow,
    ModelParams,
    NoTCSolution,
    PolicyField,
    Scenario,
    SimConfig,
    SimResult,
    Strategy,
    TradingBands,
    TransversalityResult,
    __version__,
    alpha_lower_const,
    band_strategy,
    check_transversality,
    default_horizon,
    derive_constants,
    load_scenario,
    no_tc_strategy,
    psor_solve,
    save_scenario,
    simulate_paths,
    solve_no_tc,
    solve_tc,
    sweep_loading,
    utility,
    validate_params,
    value_function_no_tc,
)

__all__ = [
    "ConvergenceRecord",
    "DerivedParams",
    "Grid",
    "HJBQVIConfig",
    "HJBQVISolution",
    "LoadingSweepRow",
    "ModelParams",
    "NoTCSolution",
    "PolicyField",
    "Scenario",
    "SimConfig",
    "SimResult",
    "Strategy",
    "TradingBands",
    "TransversalityResult",
    "__version__",
    "alpha_lower_const",
    "band_strategy",
    "check_transversality",
    "default_horizon",
    "derive_constants",
    "load_scenario",
    "no_tc_strategy",
    "psor_solve",
    "save_scenario",
    "simulate_paths",
    "solve_no_tc",
    "solve_tc",
    "sweep_loading",
    "utility",
    "validate_params",
    "value_function_no_tc",
]
