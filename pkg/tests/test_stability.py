import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cfaquifer.cf_calculus import FractionalOrder, WeightTables
from cfaquifer.config import DEFAULTS
from cfaquifer.io import trace_to_csv
from cfaquifer.scheme import AquiferParams, Grid
from cfaquifer.stability import (
    discrete_l2_norm,
    evolve_perturbation,
    fourier_coefficients,
    mode_amplification,
    mode_sweep,
    parseval_check,
    perturbation_experiment,
)

PARAMS = AquiferParams(1.0, 0.01)
GRID = Grid(50.0, 32, 0.1, 64)
finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_norm_examples():
    assert discrete_l2_norm(np.zeros(5), 0.3) == 0.0
    assert discrete_l2_norm([1.0], 0.25) == 0.5


@given(arrays(float, st.integers(1, 50), elements=finite), st.floats(1e-3, 10))
def test_norm_factorises(v, xi):
    assert discrete_l2_norm(v, xi) == pytest.approx(np.sqrt(xi) * np.linalg.norm(v), rel=1e-14, abs=1e-300)


def test_fourier_matches_direct_dft():
    rng = np.random.default_rng(0)
    v = rng.standard_normal(GRID.n_cells - 1)
    m = GRID.n_cells
    full = np.concatenate(([0.0], v))
    j = np.arange(m)
    direct = np.array([np.sum(full * np.exp(-2j * np.pi * a * j / m)) / m for a in range(m)])
    assert fourier_coefficients(v, GRID) == pytest.approx(direct, abs=1e-13)
    with pytest.raises(ValueError):
        fourier_coefficients(v[:-1], GRID)


def test_parseval_examples():
    assert parseval_check(np.zeros(GRID.n_cells - 1), GRID) == 0.0
    j = np.arange(1, GRID.n_cells)
    assert parseval_check(np.sin(np.pi * j / GRID.n_cells), GRID) <= 1e-12


@given(arrays(float, 31, elements=finite))
def test_parseval_random(v):
    physical = discrete_l2_norm(v, GRID.xi) ** 2
    assert parseval_check(v, GRID) <= 1e-10 * physical + 1e-300


def test_constant_mode_ratio_is_one():
    w = GRID.weights(FractionalOrder(0.5))
    for j in (1, 10, 31):
        assert mode_amplification(0.0, j, w, PARAMS, GRID).ratio == 1.0


def test_pure_advection_mode_ratio_is_one():
    w = GRID.weights(FractionalOrder(0.5))
    bare = WeightTables(w.e_weights, np.zeros_like(w.f_weights), w.g_coeff, w.order, w.tau, w.xi)
    for t_factor in (0.1, 0.5, 1.3):
        assert mode_amplification(t_factor, 7, bare, PARAMS, GRID).ratio == pytest.approx(1.0, abs=1e-15)


def test_mode_sweep_bounded():
    sweep = mode_sweep(GRID.weights(FractionalOrder(0.5)), PARAMS, GRID)
    assert len(sweep) == GRID.n_cells
    assert all(m.ratio >= 0 for m in sweep)
    assert max(m.ratio for m in sweep[1:]) <= 1 + 1e-9


@given(st.floats(0.05, 0.95), st.floats(0.0, 20.0), st.integers(1, 31))
def test_mode_ratio_at_most_one(alpha, t_factor, j):
    w = GRID.weights(FractionalOrder(alpha))
    assert mode_amplification(t_factor, j, w, PARAMS, GRID).ratio <= 1 + 1e-9


def test_mode_index_checked():
    with pytest.raises(IndexError):
        mode_amplification(0.1, 0, GRID.weights(FractionalOrder(0.5)), PARAMS, GRID)


def test_zero_seed_rejected():
    with pytest.raises(ValueError):
        perturbation_experiment(PARAMS, GRID, FractionalOrder(0.5), DEFAULTS.phi, np.zeros(GRID.n_cells - 1))
    with pytest.raises(ValueError):
        perturbation_experiment(PARAMS, GRID, FractionalOrder(0.5), DEFAULTS.phi, np.ones(4))


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.3, 0.5, 0.8]))
def test_random_perturbations_do_not_grow(seed, alpha):
    rng = np.random.default_rng(seed)
    trace = perturbation_experiment(PARAMS, GRID, FractionalOrder(alpha), DEFAULTS.phi, rng.standard_normal(31))
    assert trace.max_growth <= 1 + 1e-8


def test_trace_is_linear_in_seed():
    rng = np.random.default_rng(5)
    seed = rng.standard_normal(31)
    order = FractionalOrder(0.5)
    a = perturbation_experiment(PARAMS, GRID, order, DEFAULTS.phi, seed)
    b = evolve_perturbation(PARAMS, GRID, order, seed)
    assert a.norms == pytest.approx(b.norms, rel=1e-12, abs=1e-12)


def test_growth_consistent_with_mode_sweep():
    rng = np.random.default_rng(9)
    order = FractionalOrder(0.5)
    worst_mode = max(m.ratio for m in mode_sweep(GRID.weights(order), PARAMS, GRID))
    for _ in range(5):
        trace = evolve_perturbation(PARAMS, GRID, order, rng.standard_normal(31))
        assert trace.max_growth <= worst_mode + 1e-6


def test_trace_export():
    trace = evolve_perturbation(PARAMS, GRID, FractionalOrder(0.5), np.ones(31))
    lines = trace_to_csv(trace).splitlines()
    assert lines[0] == "k,t_k,norm,growth_ratio"
    assert len(lines) == GRID.n_steps + 2
    k, t, norm, growth = lines[1].split(",")
    assert (k, float(t), float(growth)) == ("0", 0.0, 1.0)
