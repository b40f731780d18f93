"""Hyperchaotic system, Euler integration, and inflow normalization tests."""

import numpy as np
import pytest

from elmopp.chaos import (
    HyperchaosParams,
    derivative,
    euler_integrate,
    experiment_series,
    make_inflow,
    read_inflow_csv,
    training_series,
    write_inflow_csv,
)


def test_derivative_at_origin():
    assert derivative((0, 0, 0, 0)).tolist() == [0.0, 0.0, 20.0, 0.0]


def test_derivative_at_ones():
    # direct substitution: (5*(1-1) - 20.6, 1*1 - 1, 20 - 1 - 1, 0.1 - 0.1)
    assert derivative((1, 1, 1, 1)).tolist() == [-20.6, 0.0, 18.0, 0.0]


def test_derivative_unit_x():
    assert derivative((1, 0, 0, 0)).tolist() == [-5.0, 0.0, 20.0, 0.0]


def test_params_must_be_positive():
    with pytest.raises(ValueError):
        HyperchaosParams(a=-1.0)


def test_euler_single_step_from_origin():
    traj = euler_integrate((0, 0, 0, 0), dt=0.01, steps=1)
    assert traj[1].tolist() == [0.0, 0.0, 0.2, 0.0]


def test_euler_preserves_fixed_point():
    # b is the only constant drive; with the state at the origin and b -> 0+
    # the right-hand side vanishes, so the trajectory must stay put
    p = HyperchaosParams(b=1e-300)
    traj = euler_integrate((0, 0, 0, 0), dt=0.5, steps=50, p=p)
    assert np.allclose(traj, 0.0, atol=1e-290)


def test_euler_rejects_bad_args():
    with pytest.raises(ValueError):
        euler_integrate((0, 0, 0, 0), dt=0.0, steps=10)
    with pytest.raises(ValueError):
        euler_integrate((0, 0, 0, 0), dt=0.01, steps=0)


def test_euler_reports_divergence_step():
    # an enormous state blows up immediately under the quadratic terms
    with pytest.raises(ValueError, match="step"):
        euler_integrate((1e200, 1e200, 1e200, 1e200), dt=1.0, steps=5)


def test_trajectory_stays_bounded():
    rng = np.random.default_rng(8)
    traj = euler_integrate(rng.random(4), dt=0.01, steps=200_000)
    assert np.isfinite(traj).all()
    assert np.abs(traj).max() < 1e3


def test_euler_first_order_convergence():
    # short-horizon endpoint error halves (roughly) when dt halves
    h0 = (0.3, 0.1, 0.2, 0.4)
    ref = euler_integrate(h0, dt=1e-5, steps=100_000)[-1]
    e1 = np.linalg.norm(euler_integrate(h0, dt=0.01, steps=100)[-1] - ref)
    e2 = np.linalg.norm(euler_integrate(h0, dt=0.005, steps=200)[-1] - ref)
    assert 1.5 <= e1 / e2 <= 3.0


# --- inflow series -----------------------------------------------------------

def test_make_inflow_zero_total():
    series = make_inflow(seed=1, n_steps=100, total=0.0)
    assert series.shape == (100, 4)
    assert (series == 0).all()


def test_make_inflow_budget_and_sign():
    series = make_inflow(seed=7, n_steps=2000, total=800.0)
    assert series.shape == (2000, 4)
    assert (series >= 0).all()
    assert abs(series.sum() - 800.0) <= 1e-6 * 800.0


def test_make_inflow_deterministic():
    a = make_inflow(seed=123, n_steps=500, total=200.0)
    b = make_inflow(seed=123, n_steps=500, total=200.0)
    assert (a == b).all()


def test_make_inflow_rejects_negative_total():
    with pytest.raises(ValueError):
        make_inflow(seed=1, n_steps=10, total=-1.0)


def test_training_series_contract():
    series = training_series(seed=5, n_points=10_000, total=800.0)
    assert series.shape == (10_000, 4)
    assert abs(series.sum() - 800.0) <= 1e-6 * 800.0


def test_distinct_seeds_differ():
    a = training_series(seed=1, n_points=1000, total=100.0)
    b = training_series(seed=2, n_points=1000, total=100.0)
    assert not np.allclose(a, b)


def test_experiment_series_scales_the_simulation_segment():
    series = experiment_series(seed=4, sim_total=3200.0, n_train=8000, n_sim=2000)
    assert series.shape == (10_000, 4)
    assert abs(series[8000:].sum() - 3200.0) <= 1e-6 * 3200.0
    assert (series >= 0).all()


def test_inflow_csv_round_trip(tmp_path):
    series = make_inflow(seed=9, n_steps=50, total=25.0)
    path = tmp_path / "inflow.csv"
    write_inflow_csv(path, series)
    again = read_inflow_csv(path)
    assert (again == series).all()
    header = path.read_text().splitlines()[0]
    assert header == "t,n,e,s,w"
