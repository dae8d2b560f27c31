import math

import pytest

import bmfg


def test_closed_form_equilibrium():
    e = bmfg.closed_form_equilibrium(0.2, 0.5, 0.9)
    assert e["v0"] == pytest.approx(3.497854, abs=1e-5)
    assert e["theta"] == pytest.approx(0.485162, abs=1e-5)
    assert e["z"] == pytest.approx(0.345854, abs=1e-5)


def test_grid_equilibrium_matches_closed_form():
    sol = bmfg.solve_equilibrium(bmfg.GameModel(n=1000))
    e = bmfg.closed_form_equilibrium()
    assert sol["theta"]["tag"] == "interior"
    assert sol["theta"]["value"] == pytest.approx(e["theta"], abs=2e-3)
    assert sol["z"] == pytest.approx(e["z"], abs=2e-3)
    assert sol["v0"] == pytest.approx(e["v0"], abs=2e-3)
    assert len(sol["x"]) == len(sol["v"]) == 1001
    assert sol["stationary"]["mass"] == pytest.approx(1.0, abs=1e-6)


def test_sensitivities_positive():
    s = bmfg.solve_sensitivities(bmfg.GameModel(n=500))
    cf = bmfg.closed_form_sensitivity()
    assert s["theta_gamma"] > 0 and s["z_gamma"] > 0
    assert s["theta_gamma"] == pytest.approx(cf["theta_gamma"], rel=1e-2)
    assert abs(s["w_jump"]) > 0


def test_degenerate_stationary_laws():
    assert bmfg.mean_field_of_theta("zero") == 0.0
    assert bmfg.mean_field_of_theta("above_one") == 1.0
    d = bmfg.stationary_distribution(0.5, n=2000)
    assert d["pi0"] == pytest.approx(1.0 / (2.0 - math.log(0.5)), abs=1e-4)


def test_simulation_is_reproducible():
    model = bmfg.GameModel(n=200)
    a = bmfg.simulate_population(model, 0.485, agents=300, horizon=200, burn_in=50, seed=3)
    b = bmfg.simulate_population(model, 0.485, agents=300, horizon=200, burn_in=50, seed=3, threads=2)
    assert a["trajectory"] == b["trajectory"]
    assert 0.3 < a["pooled_mean"] < 0.4


def test_cycle_statistics_against_hitting_time():
    c = bmfg.cycle_statistics(0.485162, replications=20000, seed=5)
    t = bmfg.expected_hitting_time(0.485162, n=2000)
    assert abs(c["mean_tau"] - t) < 4 * c["tau_std_error"]


def test_invalid_arguments_raise():
    with pytest.raises(ValueError):
        bmfg.GameModel(beta=1.5)
    with pytest.raises(ValueError):
        bmfg.stationary_distribution(0.5, kernel="nope")
