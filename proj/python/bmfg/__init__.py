"""Binary-action mean field game solver (Python bindings)."""

from ._bmfg import (
    GameModel,
    SolverError,
    closed_form_equilibrium,
    closed_form_sensitivity,
    cycle_statistics,
    expected_hitting_time,
    mean_field_of_theta,
    simulate_population,
    solve_equilibrium,
    solve_sensitivities,
    stationary_distribution,
)

__all__ = [
    "GameModel",
    "SolverError",
    "closed_form_equilibrium",
    "closed_form_sensitivity",
    "cycle_statistics",
    "expected_hitting_time",
    "mean_field_of_theta",
    "simulate_population",
    "solve_equilibrium",
    "solve_sensitivities",
    "stationary_distribution",
]
