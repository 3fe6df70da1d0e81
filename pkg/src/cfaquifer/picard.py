"""Fixed-point (Picard) construction of the solution from the integral form.

The integral form reads ``h = h0 + c1 K(h) + c2 int_0^t K(h) ds`` where
``K(h) = theta h_r + gamma L^alpha h`` and ``(c1, c2)`` are the coefficients
of the associated fractional integral.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .cf_calculus import SQRT_PI, FractionalOrder, SampledFunction, _truncated
from .scheme import AquiferParams, Grid, HeadField, initial_values, spatial_operator

__all__ = [
    "KernelEval",
    "LipschitzEstimate",
    "PicardResult",
    "kernel_k",
    "kernel_profile",
    "lipschitz_estimate",
    "contraction_check",
    "picard_iterate",
    "solve_picard",
    "uniqueness_check",
    "field_norm",
]

logger = logging.getLogger(__name__)

MOMENT_FACTOR = 3.0 * math.sqrt(2.0) / 16.0


def _eta(params: AquiferParams, order: FractionalOrder) -> float:
    return params.gamma * order.rho / SQRT_PI


@dataclass(frozen=True)
class KernelEval:
    """Parts of the kernel after integrating the Laplacian by parts twice.

    ``boundary_part`` carries the terms at the inner end of the integration
    range; it vanishes when ``h`` and ``h'`` vanish there.
    """

    advection_part: float
    gauss_part: float
    moment_part: float
    boundary_part: float = 0.0

    @property
    def total(self) -> float:
        return self.advection_part + self.gauss_part + self.moment_part + self.boundary_part


def kernel_k(h: SampledFunction, params: AquiferParams, order: FractionalOrder, r: float) -> KernelEval:
    """Evaluate ``K(r, h)`` from samples of ``h`` on ``[r0, r]``.

    Uses the form without second derivatives::

        (theta(r) + eta) h'(r)
        - 2 rho^2 eta int exp(-rho^2 (r-s)^2) h(s) ds
        + 4 rho^4 eta int (r-s)^2 exp(-rho^2 (r-s)^2) h(s) ds
        + eta [2 rho^2 (r-r0) h(r0) - h'(r0)] exp(-rho^2 (r-r0)^2)

    with ``eta = gamma rho / sqrt(pi)``.
    """
    if len(h) < 5:
        raise ValueError("kernel_k needs at least 5 sample nodes")
    r = h.check_point(r)
    if r <= 0.0:
        raise ValueError("kernel_k requires r > 0")
    rho, eta = order.rho, _eta(params, order)
    dh = h.derivative()
    xs, ys = _truncated(h.nodes, h.values, r)
    dist2 = (r - xs) ** 2
    gauss = np.exp(-(rho**2) * dist2)
    r0 = xs[0]
    slope = float(np.interp(r, h.nodes, dh))
    if xs.size > 1:
        g_int = float(np.trapezoid(gauss * ys, xs))
        m_int = float(np.trapezoid(dist2 * gauss * ys, xs))
    else:
        g_int = m_int = 0.0
    edge = gauss[0] * (2.0 * rho**2 * (r - r0) * ys[0] - dh[0])
    return KernelEval(
        advection_part=float(params.theta(r) + eta) * slope,
        gauss_part=-2.0 * rho**2 * eta * g_int,
        moment_part=4.0 * rho**4 * eta * m_int,
        boundary_part=float(eta * edge),
    )


def _cumulative_trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    """``W[i, m]`` such that ``W[i] @ g`` is the trapezoid integral on nodes[0..i]."""
    n = nodes.size
    dx = np.diff(nodes)
    w = np.zeros((n, n))
    for i in range(1, n):
        w[i, :i] += 0.5 * dx[:i]
        w[i, 1 : i + 1] += 0.5 * dx[:i]
    return w


def kernel_profile(h: SampledFunction, params: AquiferParams, order: FractionalOrder) -> np.ndarray:
    """``K(r_i, h)`` at every node, same formula as :func:`kernel_k`."""
    x, y = h.nodes, h.values
    if x[0] <= 0.0:
        raise ValueError("kernel_profile requires nodes with r > 0")
    rho, eta = order.rho, _eta(params, order)
    dh = h.derivative()
    dist = x[:, None] - x[None, :]
    gauss = np.exp(-((rho * dist) ** 2))
    w = _cumulative_trapezoid_weights(x)
    g_int = (w * gauss) @ y
    m_int = (w * dist**2 * gauss) @ y
    edge = gauss[:, 0] * (2.0 * rho**2 * (x - x[0]) * y[0] - dh[0])
    return (
        (params.theta(x) + eta) * dh
        - 2.0 * rho**2 * eta * g_int
        + 4.0 * rho**4 * eta * m_int
        + eta * edge
    )


@dataclass(frozen=True)
class LipschitzEstimate:
    """Bound ``eps1 + eps2 + eps3`` on the kernel's Lipschitz ratio.

    ``eps1 = S/T + eta`` (first-derivative terms), ``eps2 = gamma alpha /
    ((1-alpha) sqrt(pi))`` (Gaussian term), ``eps3 = 3 sqrt(2) eta /
    (16 rho^5)`` (moment term). ``terms`` keeps the four raw summands.
    """

    eps1: float
    eps2: float
    eps3: float
    terms: tuple[float, float, float, float] = field(default=(0.0, 0.0, 0.0, 0.0))

    @property
    def lambda_total(self) -> float:
        return self.eps1 + self.eps2 + self.eps3

    @property
    def is_contraction(self) -> bool:
        return self.lambda_total < 1.0


def lipschitz_estimate(params: AquiferParams, order: FractionalOrder) -> LipschitzEstimate:
    eta = _eta(params, order)
    s_over_t = params.storativity / params.transmissivity
    gauss = params.gamma * order.alpha / ((1.0 - order.alpha) * SQRT_PI)
    moment = MOMENT_FACTOR / order.rho**5 * eta
    return LipschitzEstimate(
        eps1=s_over_t + eta,
        eps2=gauss,
        eps3=moment,
        terms=(s_over_t, eta, gauss, moment),
    )


def _weighted_l2(values: np.ndarray, nodes: np.ndarray) -> float:
    widths = np.gradient(nodes)
    return float(np.sqrt(np.sum(widths * values**2)))


def contraction_check(
    h: SampledFunction, phi: SampledFunction, params: AquiferParams, order: FractionalOrder
) -> float:
    """Measured ratio ``||K(h) - K(phi)||_2 / ||h - phi||_2`` over the nodes."""
    if h.nodes.shape != phi.nodes.shape or not np.array_equal(h.nodes, phi.nodes):
        raise ValueError("h and phi must share the same nodes")
    diff = h.values - phi.values
    denom = _weighted_l2(diff, h.nodes)
    if denom == 0.0:
        raise ZeroDivisionError("h and phi are identical; the ratio is undefined")
    num = kernel_profile(h, params, order) - kernel_profile(phi, params, order)
    return _weighted_l2(num, h.nodes) / denom


def field_norm(values: np.ndarray, grid: Grid) -> float:
    """Discrete L2 norm of a space-time field, weighted by ``xi * tau``."""
    return float(np.sqrt(grid.xi * grid.tau * np.sum(np.asarray(values) ** 2)))


def picard_iterate(
    h_prev: HeadField,
    params: AquiferParams,
    order: FractionalOrder,
    operator: np.ndarray | None = None,
) -> HeadField:
    """One Picard sweep of the integral form on the grid of ``h_prev``.

    The kernel is discretised with the same centred-difference and
    F-weighted operators as the Crank-Nicolson scheme; the time integral is
    the trapezoid rule on the grid's own nodes. ``h(r, 0)`` stays pinned to
    the initial datum and the Dirichlet boundaries stay zero.
    """
    grid = h_prev.grid
    if operator is None:
        operator = spatial_operator(params, grid, grid.weights(order))
    c_local, c_cumulative = order.integral_coefficients
    interior = h_prev.values[1:-1, :]
    kern = operator @ interior
    integral = np.zeros_like(kern)
    integral[:, 1:] = np.cumsum(0.5 * grid.tau * (kern[:, 1:] + kern[:, :-1]), axis=1)
    h0 = h_prev.initial[1:-1, None]
    new = np.zeros_like(h_prev.values)
    new[1:-1, :] = h0 + c_local * kern + c_cumulative * integral
    new[1:-1, 0] = h0[:, 0]
    return HeadField(grid, new, h_prev.initial.copy())


@dataclass
class PicardResult:
    field: HeadField
    diff_norms: list[float]
    converged: bool

    @property
    def iterations(self) -> int:
        return len(self.diff_norms)


def solve_picard(
    params: AquiferParams,
    grid: Grid,
    order: FractionalOrder,
    phi,
    initial: HeadField | np.ndarray | None = None,
    max_iter: int = 200,
    rtol: float = 1e-8,
) -> PicardResult:
    """Iterate to ``||h_{m+1} - h_m|| <= rtol ||h_m||`` or ``max_iter`` sweeps.

    ``initial`` is the first iterate; by default the initial datum held
    constant in time. Any first iterate must agree with ``phi`` at ``t = 0``.
    """
    h0 = initial_values(grid, phi)
    if initial is None:
        values = np.repeat(h0[:, None], grid.n_steps + 1, axis=1)
    else:
        values = np.array(initial.values if isinstance(initial, HeadField) else initial, dtype=float)
        if values.shape != (grid.n_cells + 1, grid.n_steps + 1):
            raise ValueError("initial iterate does not match the grid")
        if not np.allclose(values[:, 0], h0, rtol=0.0, atol=1e-12 * max(1.0, np.abs(h0).max())):
            raise ValueError("initial iterate must satisfy the initial condition at t = 0")
    current = HeadField(grid, values, h0)
    operator = spatial_operator(params, grid, grid.weights(order))
    diffs: list[float] = []
    converged = False
    for _ in range(int(max_iter)):
        nxt = picard_iterate(current, params, order, operator)
        d = field_norm(nxt.values - current.values, grid)
        diffs.append(d)
        ref = field_norm(current.values, grid)
        current = nxt
        if d <= rtol * ref:
            converged = True
            break
    if not converged:
        logger.warning("Picard iteration did not converge in %d sweeps (last diff %.3e)", max_iter, diffs[-1])
    return PicardResult(current, diffs, converged)


def uniqueness_check(run_a: HeadField, run_b: HeadField) -> float:
    """Largest absolute difference between two fields on the same grid."""
    if run_a.grid != run_b.grid or run_a.values.shape != run_b.values.shape:
        raise ValueError("fields live on different grids")
    return float(np.max(np.abs(run_a.values - run_b.values)))
