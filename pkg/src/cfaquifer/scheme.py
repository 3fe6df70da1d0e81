"""Crank-Nicolson discretisation of the space-time fractional radial flow equation.

Governing equation on ``r_min <= r <= r_max``::

    D_t^alpha h = theta(r) dh/dr + gamma * L^alpha h,   theta(r) = T / (r S),
    gamma = T / S,  h(r_min, t) = h(r_max, t) = 0,  h(r, 0) = phi(r)

``D_t^alpha`` is the exponential-kernel (Caputo-Fabrizio) derivative and
``L^alpha`` the Gaussian-kernel Laplacian from :mod:`cfaquifer.cf_calculus`.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .cf_calculus import FractionalOrder, WeightTables, build_weight_tables

__all__ = [
    "AquiferParams",
    "Grid",
    "HeadField",
    "StepSystem",
    "SolverError",
    "spatial_operator",
    "cn_first_derivative",
    "assemble_system",
    "step",
    "residual",
    "run_simulation",
    "classical_solve",
]

logger = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Raised when a linear solve cannot be carried out reliably."""


@dataclass(frozen=True)
class AquiferParams:
    """Transmissivity ``T`` (m^2/s) and dimensionless storativity ``S``."""

    transmissivity: float
    storativity: float

    def __post_init__(self):
        for name in ("transmissivity", "storativity"):
            value = float(getattr(self, name))
            if not (value > 0.0 and np.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
            object.__setattr__(self, name, value)

    @property
    def gamma(self) -> float:
        return self.transmissivity / self.storativity

    def theta(self, r):
        """Advection coefficient T / (r S)."""
        return self.gamma / np.asarray(r, dtype=float)


@dataclass(frozen=True)
class Grid:
    """Uniform radial/time grid: ``r_j = r_min + j*xi``, ``t_k = k*tau``."""

    r_max: float
    n_cells: int
    t_max: float
    n_steps: int
    r_min: float = 0.1

    def __post_init__(self):
        if not self.r_min > 0.0:
            raise ValueError("r_min must be positive (theta(r) is singular at r = 0)")
        if not self.r_max > self.r_min:
            raise ValueError("r_max must exceed r_min")
        if int(self.n_cells) != self.n_cells or self.n_cells < 3:
            raise ValueError("n_cells must be an integer >= 3")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be an integer >= 1")
        if not self.t_max > 0.0:
            raise ValueError("t_max must be positive")
        object.__setattr__(self, "n_cells", int(self.n_cells))
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def xi(self) -> float:
        return (self.r_max - self.r_min) / self.n_cells

    @property
    def tau(self) -> float:
        return self.t_max / self.n_steps

    @property
    def r(self) -> np.ndarray:
        return self.r_min + self.xi * np.arange(self.n_cells + 1)

    @property
    def t(self) -> np.ndarray:
        return self.tau * np.arange(self.n_steps + 1)

    def weights(self, order: FractionalOrder) -> WeightTables:
        return build_weight_tables(order, self.tau, self.n_steps, self.xi, self.n_cells)


def initial_values(grid: Grid, phi) -> np.ndarray:
    """Evaluate an initial profile on the grid with zero boundary values."""
    if callable(phi):
        values = np.asarray(phi(grid.r), dtype=float)
        values = np.broadcast_to(values, grid.r.shape).copy()
    else:
        values = np.array(phi, dtype=float)
        if values.shape != grid.r.shape:
            raise ValueError(f"initial profile must have {grid.r.size} values, got {values.shape}")
    values[0] = values[-1] = 0.0
    if not np.all(np.isfinite(values)):
        raise ValueError("initial profile contains non-finite values")
    return values


@dataclass
class HeadField:
    """Hydraulic head ``values[j, k] = h(r_j, t_k)`` on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray
    initial: np.ndarray = field(repr=False)

    @classmethod
    def from_initial(cls, grid: Grid, phi) -> "HeadField":
        init = initial_values(grid, phi)
        values = np.zeros((grid.n_cells + 1, grid.n_steps + 1))
        values[:, 0] = init
        return cls(grid, values, init)

    def copy(self) -> "HeadField":
        return HeadField(self.grid, self.values.copy(), self.initial.copy())

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1, :]

    @property
    def final(self) -> np.ndarray:
        return self.values[:, -1]


def spatial_operator(params: AquiferParams, grid: Grid, weights: WeightTables) -> np.ndarray:
    """Interior matrix of ``theta * d/dr + gamma * L^alpha`` on one time level.

    Row ``j`` (``j = 1..M-1``) holds ``G theta(r_j) (h_{j+1} - h_{j-1})``
    plus ``gamma * sum_{l<=j} (h_{l+1} - 2h_l + h_{l-1}) F[j, l]``. Dirichlet
    boundary values are zero, so boundary columns are dropped.
    """
    m = grid.n_cells
    n = m - 1
    full = np.zeros((n, m + 1))
    rows = np.arange(n)
    theta = params.theta(grid.r[1:-1]) * weights.g_coeff
    full[rows, rows + 2] += theta
    full[rows, rows] -= theta
    # second-difference stencil of node l lives in columns l-1, l, l+1
    stencil = np.zeros((n, m + 1))
    stencil[rows, rows] = 1.0
    stencil[rows, rows + 1] = -2.0
    stencil[rows, rows + 2] = 1.0
    full += params.gamma * (weights.f_weights @ stencil)
    return full[:, 1:-1]


def cn_first_derivative(h: HeadField, j: int, k: int) -> float:
    """Crank-Nicolson averaged centred difference of ``dh/dr`` at ``(r_j, t_k)``."""
    m, n = h.grid.n_cells, h.grid.n_steps
    if not 1 <= j <= m - 1:
        raise IndexError(f"j={j} must be interior (1..{m - 1})")
    if not 0 <= k <= n - 1:
        raise IndexError(f"k={k} needs levels k and k+1 within 0..{n}")
    v = h.values
    return ((v[j + 1, k + 1] - v[j - 1, k + 1]) + (v[j + 1, k] - v[j - 1, k])) / (4.0 * h.grid.xi)


@dataclass(frozen=True)
class StepSystem:
    """Implicit/explicit split of one time step.

    ``matrix_a @ h^{k+1} = explicit @ h^k - memory(k)`` where the memory sum
    runs over completed increments ``h^{s+1} - h^s``, ``s < k``.
    """

    matrix_a: np.ndarray
    explicit: np.ndarray
    memory_kernel: np.ndarray
    spatial: np.ndarray
    lu: tuple = field(repr=False)
    grid: Grid = field(repr=False)

    def rhs(self, h: HeadField, k: int) -> np.ndarray:
        interior = h.values[1:-1, : k + 1]
        out = self.explicit @ interior[:, k]
        if k > 0:
            increments = np.diff(interior, axis=1)  # s = 0..k-1
            lags = self.memory_kernel[k:0:-1]  # lag k - s
            out = out - increments @ lags
        return out


def assemble_system(params: AquiferParams, grid: Grid, weights: WeightTables) -> StepSystem:
    """Build the constant left-hand matrix and factor it once."""
    if weights.n_cells != grid.n_cells or weights.n_steps != grid.n_steps:
        raise ValueError(
            f"weight tables sized for M={weights.n_cells}, N={weights.n_steps} "
            f"but grid has M={grid.n_cells}, N={grid.n_steps}"
        )
    if not (np.isclose(weights.xi, grid.xi, rtol=1e-12) and np.isclose(weights.tau, grid.tau, rtol=1e-12)):
        raise ValueError("weight tables were built for a different xi or tau")
    spatial = spatial_operator(params, grid, weights)
    w0 = weights.memory_kernel[0]
    ident = np.eye(grid.n_cells - 1)
    matrix_a = w0 * ident - 0.5 * spatial
    explicit = w0 * ident + 0.5 * spatial

    diag = np.abs(np.diag(matrix_a))
    off = np.abs(matrix_a).sum(axis=1) - diag
    if np.any(diag <= off):
        warnings.warn(
            "step matrix is not strictly diagonally dominant; consider a smaller time step",
            RuntimeWarning,
            stacklevel=2,
        )

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu = scipy.linalg.lu_factor(matrix_a, check_finite=True)
    min_pivot = np.min(np.abs(np.diag(lu[0])))
    if min_pivot == 0.0 or not np.isfinite(min_pivot):
        cond = np.linalg.cond(matrix_a)
        raise SolverError(f"step matrix is singular (condition estimate {cond:.3e})")
    return StepSystem(matrix_a, explicit, weights.memory_kernel, spatial, lu, grid)


def step(system: StepSystem, h: HeadField, k: int) -> HeadField:
    """Advance ``h`` from level ``k`` to ``k + 1`` in place and return it."""
    if not 0 <= k <= h.grid.n_steps - 1:
        raise IndexError(f"k={k} outside 0..{h.grid.n_steps - 1}")
    new = scipy.linalg.lu_solve(system.lu, system.rhs(h, k))
    if not np.all(np.isfinite(new)):
        raise SolverError(f"non-finite head at step {k + 1}")
    h.values[1:-1, k + 1] = new
    h.values[0, k + 1] = h.values[-1, k + 1] = 0.0
    return h


def residual(params: AquiferParams, weights: WeightTables, h: HeadField, k: int) -> np.ndarray:
    """Residual of the discrete equation at level ``k -> k+1``, node by node.

    Evaluated term by term from the stencil definitions, independently of
    the assembled matrices.
    """
    grid = h.grid
    v = h.values
    xi_g = weights.g_coeff
    w = weights.memory_kernel
    theta = params.theta(grid.r)
    out = np.zeros(grid.n_cells - 1)
    for j in range(1, grid.n_cells):
        memory = sum(w[k - s] * (v[j, s + 1] - v[j, s]) for s in range(k + 1))
        adv = 0.5 * xi_g * theta[j] * ((v[j + 1, k + 1] - v[j - 1, k + 1]) + (v[j + 1, k] - v[j - 1, k]))
        lap = 0.0
        for l in range(1, j + 1):
            d2_new = v[l + 1, k + 1] - 2.0 * v[l, k + 1] + v[l - 1, k + 1]
            d2_old = v[l + 1, k] - 2.0 * v[l, k] + v[l - 1, k]
            lap += (d2_new + d2_old) * weights.f(j, l)
        out[j - 1] = memory - adv - 0.5 * params.gamma * lap
    return out


def run_simulation(params: AquiferParams, grid: Grid, order: FractionalOrder, phi) -> HeadField:
    """March the fractional scheme over all ``grid.n_steps`` steps."""
    weights = grid.weights(order)
    system = assemble_system(params, grid, weights)
    h = HeadField.from_initial(grid, phi)
    for k in range(grid.n_steps):
        step(system, h, k)
    logger.debug("fractional run alpha=%s finished, final max |h| = %g", order.alpha, np.abs(h.final).max())
    return h


def classical_solve(params: AquiferParams, grid: Grid, phi, advection: bool = True) -> HeadField:
    """Crank-Nicolson solve of the local equation ``h_t = theta h_r + gamma h_rr``.

    ``advection=False`` drops the ``theta`` term (pure diffusion).
    """
    h = HeadField.from_initial(grid, phi)
    n = grid.n_cells - 1
    xi, tau = grid.xi, grid.tau
    diff = params.gamma / xi**2
    adv = params.theta(grid.r[1:-1]) / (2.0 * xi) if advection else np.zeros(n)
    lower = diff - adv  # coefficient of h_{j-1}
    upper = diff + adv  # coefficient of h_{j+1}
    centre = -2.0 * diff * np.ones(n)

    # banded storage of I/tau - A/2
    ab = np.zeros((3, n))
    ab[0, 1:] = -0.5 * upper[:-1]
    ab[1, :] = 1.0 / tau - 0.5 * centre
    ab[2, :-1] = -0.5 * lower[1:]
    if np.any(ab[1] == 0.0):
        raise SolverError("classical step matrix has a zero diagonal")

    for k in range(grid.n_steps):
        cur = h.values[1:-1, k]
        rhs = cur / tau + 0.5 * centre * cur
        rhs[1:] += 0.5 * lower[1:] * cur[:-1]
        rhs[:-1] += 0.5 * upper[:-1] * cur[1:]
        try:
            new = scipy.linalg.solve_banded((1, 1), ab, rhs)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular tridiagonal system at step {k}") from exc
        h.values[1:-1, k + 1] = new
    return h
