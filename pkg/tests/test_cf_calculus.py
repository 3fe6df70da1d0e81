import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfaquifer.cf_calculus import (
    FractionalOrder,
    SampledFunction,
    build_e_weights,
    build_f_weights,
    build_weight_tables,
    cf_space_laplacian,
    cf_time_derivative,
    cf_time_integral,
    discrete_cf_derivative,
    erf_fn,
    gamma_fn,
)
from cfaquifer.verification import erf_series_oracle, gamma_stirling_oracle

alphas = st.floats(0.05, 0.95)


# --- special functions ---


@pytest.mark.parametrize("x, expected", [(1.0, 1.0), (0.5, math.sqrt(math.pi)), (5.0, 24.0)])
def test_gamma_examples(x, expected):
    assert gamma_fn(x) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("x", [0.0, -1.0, float("nan"), float("inf")])
def test_gamma_domain(x):
    with pytest.raises(ValueError):
        gamma_fn(x)


def test_gamma_oracle_reproduces_factorials():
    for n in range(1, 8):
        assert gamma_stirling_oracle(float(n)) == pytest.approx(math.factorial(n - 1), rel=1e-15)
    assert gamma_stirling_oracle(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)


@given(st.floats(0.05, 9.0))
def test_gamma_recurrence(x):
    assert gamma_fn(x + 1.0) == pytest.approx(x * gamma_fn(x), rel=1e-14)


def test_erf_examples():
    assert erf_fn(0.0) == 0.0
    assert erf_fn(1.0) == pytest.approx(0.8427007929, abs=1e-10)
    assert abs(erf_fn(6.0) - 1.0) <= 1e-12


def test_erf_oracle_matches_known_value():
    # erf(1) to 20 digits
    assert erf_series_oracle(1.0) == pytest.approx(0.84270079294971486934, abs=1e-16)


@given(st.floats(-8.0, 8.0))
def test_erf_odd_and_bounded(x):
    assert erf_fn(-x) == -erf_fn(x)
    assert -1.0 <= erf_fn(x) <= 1.0


def test_erf_vectorised():
    xs = np.linspace(-2, 2, 9)
    out = erf_fn(xs)
    assert isinstance(out, np.ndarray)
    assert out == pytest.approx([math.erf(x) for x in xs], abs=1e-15)


# --- fractional order ---


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.5, float("nan")])
def test_order_rejects_out_of_range(alpha):
    with pytest.raises(ValueError):
        FractionalOrder(alpha)


@given(alphas)
def test_order_constants(alpha):
    o = FractionalOrder(alpha)
    assert o.rho == pytest.approx(alpha / (1 - alpha))
    assert o.b_alpha == pytest.approx(1 - alpha + alpha / math.gamma(alpha), rel=1e-12)
    assert o.b_alpha > 0


@pytest.mark.parametrize("alpha", [1e-6, 1 - 1e-6])
def test_b_alpha_endpoints(alpha):
    assert abs(FractionalOrder(alpha).b_alpha - 1.0) <= 1e-4


# --- continuous operators ---


@given(alphas, st.floats(-5, 5), st.floats(0.1, 3.0))
def test_time_derivative_of_constant_vanishes(alpha, c, t):
    f = SampledFunction.from_callable(lambda s: np.full_like(s, c), 0.0, 3.0, 301)
    assert abs(cf_time_derivative(f, FractionalOrder(alpha), t)) <= 1e-12


def test_time_derivative_of_identity():
    o = FractionalOrder(0.5)
    f = SampledFunction.from_callable(lambda s: s, 0.0, 1.0, 2001)
    expected = o.b_alpha / o.alpha * (1 - math.exp(-o.rho * 1.0))
    assert cf_time_derivative(f, o, 1.0) == pytest.approx(expected, rel=1e-7)


def _richardson_trapezoid(g, a, b, n):
    def trap(m):
        x = np.linspace(a, b, m + 1)
        return np.trapezoid(g(x), x)

    return (4 * trap(2 * n) - trap(n)) / 3


def test_time_derivative_of_square_against_fine_quadrature():
    o = FractionalOrder(0.5)
    t = 1.0
    oracle = o.b_alpha / (1 - o.alpha) * _richardson_trapezoid(lambda s: 2 * s * np.exp(-o.rho * (t - s)), 0, t, 500_000)
    closed = o.b_alpha / (1 - o.alpha) * 2 * (t / o.rho - (1 - math.exp(-o.rho * t)) / o.rho**2)
    assert oracle == pytest.approx(closed, rel=1e-12)
    f = SampledFunction.from_callable(lambda s: s**2, 0.0, t, 4001)
    assert cf_time_derivative(f, o, t) == pytest.approx(oracle, abs=1e-7)


def test_time_derivative_outside_range():
    f = SampledFunction.from_callable(lambda s: s, 0.0, 1.0, 11)
    with pytest.raises(ValueError):
        cf_time_derivative(f, FractionalOrder(0.5), 1.5)


def test_time_integral_of_zero():
    f = SampledFunction.from_callable(np.zeros_like, 0.0, 2.0, 21)
    assert cf_time_integral(f, FractionalOrder(0.3), 1.7) == 0.0


def test_time_integral_constant_at_half():
    o = FractionalOrder(0.5)
    f = SampledFunction.from_callable(np.ones_like, 0.0, 2.0, 201)
    coeff = 2 * 0.5 / (1.5 * o.b_alpha)
    assert cf_time_integral(f, o, 2.0) == pytest.approx(coeff * 2 + coeff * 1, rel=1e-12)


def test_time_integral_near_one_follows_its_coefficients():
    # cumulative coefficient tends to 2/(2 - alpha) -> 2, so the value is ~1, not the plain integral 0.5
    o = FractionalOrder(1 - 1e-8)
    f = SampledFunction.from_callable(lambda s: s, 0.0, 1.0, 1001)
    local, cumulative = o.integral_coefficients
    assert cumulative == pytest.approx(2.0, rel=1e-7)
    assert cf_time_integral(f, o, 1.0) == pytest.approx(local * 1.0 + cumulative * 0.5, rel=1e-12)
    assert cf_time_integral(f, o, 1.0) == pytest.approx(1.0, abs=1e-6)


@given(alphas, st.floats(-3, 3), st.floats(-3, 3))
def test_space_laplacian_of_linear_vanishes(alpha, a, b):
    h = SampledFunction.from_callable(lambda x: a * x + b, 0.0, 2.0, 201)
    assert abs(cf_space_laplacian(h, FractionalOrder(alpha), 1.3)) <= 1e-8


def test_space_laplacian_of_square():
    o = FractionalOrder(0.5)
    h = SampledFunction.from_callable(lambda x: x**2, 0.0, 1.0, 10_001)
    closed = o.alpha / ((1 - o.alpha) * math.sqrt(math.pi)) * 2 * (math.sqrt(math.pi) / (2 * o.rho)) * math.erf(o.rho)
    assert cf_space_laplacian(h, o, 1.0) == pytest.approx(closed, abs=1e-8)


def test_space_laplacian_needs_five_nodes():
    h = SampledFunction.from_callable(lambda x: x, 0.0, 1.0, 4)
    with pytest.raises(ValueError):
        cf_space_laplacian(h, FractionalOrder(0.5), 0.5)


# --- weights ---


def test_e_weight_diagonal():
    o, tau = FractionalOrder(0.4), 0.01
    e = build_e_weights(o, tau, 5)
    expected = o.b_alpha / (o.alpha * tau) * (1 - math.exp(-o.rho * tau))
    assert np.diag(e) == pytest.approx(np.full(5, expected), rel=1e-14)


def test_e_weight_small_step_limit():
    o, tau = FractionalOrder(0.5), 1e-6
    assert build_e_weights(o, tau, 1)[0, 0] == pytest.approx(o.b_alpha / o.alpha * o.rho, rel=1e-3)


@given(alphas, st.floats(1e-4, 1.0), st.integers(1, 40))
def test_e_weight_telescoping(alpha, tau, n):
    o = FractionalOrder(alpha)
    e = build_e_weights(o, tau, n)
    for k in range(1, n + 1):
        total = e[k - 1, :k].sum() * alpha * tau / o.b_alpha
        assert total == pytest.approx(1 - math.exp(-o.rho * tau * k), rel=1e-12, abs=1e-15)
    assert np.all(e[np.tril_indices(n)] > 0)
    assert np.all(e[np.triu_indices(n, 1)] == 0)


@given(alphas, st.floats(1e-3, 5.0), st.integers(3, 30))
def test_weights_toeplitz(alpha, step, n):
    o = FractionalOrder(alpha)
    for table in (build_e_weights(o, step, n), build_f_weights(o, step, n + 1)):
        for d in range(table.shape[0]):
            diag = np.diagonal(table, -d)
            assert np.all(diag == diag[0])


def test_f_weight_diagonal_and_decay():
    o, xi = FractionalOrder(0.6), 0.2
    f = build_f_weights(o, xi, 200)
    assert f[4, 4] == pytest.approx(math.erf(o.rho * xi) / (2 * xi**2), rel=1e-14)
    lags = np.arange(f.shape[0])
    far = lags[o.rho * xi * lags > 8]
    assert np.all(np.abs(f[-1, f.shape[0] - 1 - far]) < 1e-12)


@given(alphas, st.floats(0.01, 2.0), st.integers(3, 60))
def test_f_weight_telescoping(alpha, xi, m):
    o = FractionalOrder(alpha)
    f = build_f_weights(o, xi, m)
    for j in range(1, m):
        total = 2 * xi**2 * f[j - 1, :j].sum()
        assert total == pytest.approx(math.erf(o.rho * (j - 1) * xi) + math.erf(o.rho * xi), rel=1e-12, abs=1e-14)


def test_weight_table_accessors():
    w = build_weight_tables(FractionalOrder(0.5), 0.1, 4, 0.5, 6)
    assert w.n_steps == 4 and w.n_cells == 6
    assert w.g_coeff == pytest.approx(1.0)
    assert w.e(3, 2) == w.e_weights[2, 1]
    assert w.f(4, 1) == w.f_weights[3, 0]
    assert w.memory_kernel == pytest.approx(w.e_weights[3, ::-1])
    with pytest.raises(IndexError):
        w.e(2, 3)
    with pytest.raises(IndexError):
        w.f(6, 1)
    with pytest.raises(ValueError):
        w.e_weights[0, 0] = 1.0


def test_discrete_derivative_first_order():
    o = FractionalOrder(0.5)
    fine = SampledFunction.from_callable(lambda s: s**2, 0.0, 1.0, 20_001)
    exact = cf_time_derivative(fine, o, 1.0)
    errs = []
    for n in (40, 80, 160):
        tau = 1.0 / n
        samples = (tau * np.arange(n + 2)) ** 2
        errs.append(abs(discrete_cf_derivative(samples, build_e_weights(o, tau, n), n) - exact))
    assert errs[0] / errs[1] == pytest.approx(2.0, abs=0.3)
    assert errs[1] / errs[2] == pytest.approx(2.0, abs=0.3)


def test_sampled_function_validation():
    with pytest.raises(ValueError):
        SampledFunction([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        SampledFunction([0.0, 1.0], [1.0])
    f = SampledFunction([0.0, 1.0, 2.0], [0.0, 1.0, 4.0])
    assert f.second_derivative() == pytest.approx([2.0, 2.0, 2.0])
