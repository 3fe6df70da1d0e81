"""Caputo-Fabrizio operators with an exponential (time) and Gaussian (space) kernel.

The continuous operators here are quadrature reference implementations meant
for checking the discrete weights; the solver itself only ever touches the
weight tables built by :func:`build_weight_tables`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import special

__all__ = [
    "FractionalOrder",
    "SampledFunction",
    "WeightTables",
    "gamma_fn",
    "erf_fn",
    "cf_time_derivative",
    "cf_time_integral",
    "cf_space_laplacian",
    "build_e_weights",
    "build_f_weights",
    "build_weight_tables",
    "discrete_cf_derivative",
    "discrete_cf_laplacian",
]

SQRT_PI = math.sqrt(math.pi)


def gamma_fn(x: float) -> float:
    """Gamma function for positive real arguments, correctly rounded.

    ``math.gamma`` can be off by 2 ulp near x = 10, which is ~1e-10 in
    absolute terms; evaluating at 30 digits and rounding once avoids that.
    """
    x = float(x)
    if not x > 0.0 or not math.isfinite(x):
        raise ValueError(f"gamma_fn is defined here for finite x > 0 only, got {x!r}")
    with mpmath.workdps(30):
        return float(mpmath.gamma(mpmath.mpf(x)))


def erf_fn(x):
    """Error function, vectorised, odd by construction.

    Accepts scalars or arrays; scalars come back as ``float``.
    """
    arr = np.asarray(x, dtype=float)
    out = np.copysign(special.erf(np.abs(arr)), arr)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class FractionalOrder:
    """Fractional order ``alpha`` in (0, 1) and its derived constants.

    ``rho`` is the positive decay rate alpha / (1 - alpha); every kernel in
    the package is written as ``exp(-rho * distance)`` or
    ``exp(-rho**2 * distance**2)``.
    """

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not (0.0 < a < 1.0) or not math.isfinite(a):
            raise ValueError(f"alpha must lie strictly inside (0, 1), got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @property
    def b_alpha(self) -> float:
        a = self.alpha
        return 1.0 - a + a / gamma_fn(a)

    @property
    def rho(self) -> float:
        return self.alpha / (1.0 - self.alpha)

    @property
    def integral_coefficients(self) -> tuple[float, float]:
        """Coefficients (local, cumulative) of the associated fractional integral."""
        a, b = self.alpha, self.b_alpha
        return 2.0 * (1.0 - a) / ((2.0 - a) * b), 2.0 * a / ((2.0 - a) * b)


@dataclass(frozen=True)
class SampledFunction:
    """A function known on strictly increasing nodes."""

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        values = np.array(self.values, dtype=float)
        if nodes.ndim != 1 or values.shape != nodes.shape:
            raise ValueError("nodes and values must be 1-D arrays of equal length")
        if nodes.size < 2:
            raise ValueError("a sampled function needs at least two nodes")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("nodes must be strictly increasing")
        if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(values))):
            raise ValueError("nodes and values must be finite")
        nodes.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, func, start: float, stop: float, n: int) -> "SampledFunction":
        nodes = np.linspace(start, stop, n)
        return cls(nodes, func(nodes))

    def __len__(self):
        return self.nodes.size

    def derivative(self) -> np.ndarray:
        """Second-order finite-difference first derivative at every node."""
        return np.gradient(self.values, self.nodes, edge_order=2)

    def second_derivative(self) -> np.ndarray:
        """Centred three-point second derivative; end values extrapolated linearly."""
        x, y = self.nodes, self.values
        if x.size < 3:
            raise ValueError("second derivative needs at least three nodes")
        h0 = x[1:-1] - x[:-2]
        h1 = x[2:] - x[1:-1]
        inner = 2.0 * (h0 * y[2:] - (h0 + h1) * y[1:-1] + h1 * y[:-2]) / (h0 * h1 * (h0 + h1))
        out = np.empty_like(y)
        out[1:-1] = inner
        if inner.size == 1:
            out[0] = out[-1] = inner[0]
        else:
            out[0] = inner[0] - (inner[1] - inner[0]) * (x[1] - x[0]) / (x[2] - x[1])
            out[-1] = inner[-1] + (inner[-1] - inner[-2]) * (x[-1] - x[-2]) / (x[-2] - x[-3])
        return out

    def check_point(self, t: float) -> float:
        t = float(t)
        lo, hi = self.nodes[0], self.nodes[-1]
        tol = 1e-12 * max(1.0, abs(hi))
        if t < lo - tol or t > hi + tol:
            raise ValueError(f"evaluation point {t} outside sampled range [{lo}, {hi}]")
        return min(max(t, lo), hi)


def _truncated(nodes: np.ndarray, values: np.ndarray, t: float):
    """Nodes and values restricted to ``[nodes[0], t]``, endpoint interpolated."""
    idx = int(np.searchsorted(nodes, t, side="right"))
    xs, ys = nodes[:idx], values[:idx]
    if xs[-1] < t:
        xs = np.append(xs, t)
        ys = np.append(ys, np.interp(t, nodes, values))
    return xs, ys


def cf_time_derivative(f: SampledFunction, order: FractionalOrder, t: float) -> float:
    """Caputo-Fabrizio time derivative at ``t`` by trapezoid quadrature.

    The lower terminal is the first sample node.
    """
    t = f.check_point(t)
    xs, dfs = _truncated(f.nodes, f.derivative(), t)
    if xs.size < 2:
        return 0.0
    kernel = np.exp(-order.rho * (t - xs))
    return order.b_alpha / (1.0 - order.alpha) * float(np.trapezoid(dfs * kernel, xs))


def cf_time_integral(f: SampledFunction, order: FractionalOrder, t: float) -> float:
    """Fractional integral associated with the Caputo-Fabrizio derivative."""
    t = f.check_point(t)
    xs, ys = _truncated(f.nodes, f.values, t)
    local, cumulative = order.integral_coefficients
    integral = float(np.trapezoid(ys, xs)) if xs.size > 1 else 0.0
    return local * ys[-1] + cumulative * integral


def cf_space_laplacian(h: SampledFunction, order: FractionalOrder, r: float) -> float:
    """Gaussian-kernel fractional Laplacian at ``r`` (reference quadrature).

    Evaluates ``rho/sqrt(pi) * int_{r0}^{r} exp(-rho^2 (r-s)^2) h''(s) ds``
    with ``r0`` the first node.
    """
    if len(h) < 5:
        raise ValueError("cf_space_laplacian needs at least 5 sample nodes")
    r = h.check_point(r)
    xs, d2 = _truncated(h.nodes, h.second_derivative(), r)
    if xs.size < 2:
        return 0.0
    rho = order.rho
    kernel = np.exp(-(rho * (r - xs)) ** 2)
    return rho / SQRT_PI * float(np.trapezoid(kernel * d2, xs))


def build_e_weights(order: FractionalOrder, tau: float, n_steps: int) -> np.ndarray:
    """Memory weights ``E[k, s]`` of the discrete time derivative.

    Returned as an ``(n_steps, n_steps)`` array with ``E[k-1, s-1]`` holding
    the weight for ``1 <= s <= k``; entries above the diagonal are zero.
    Each weight is the exact integral of the exponential kernel over one
    step, so the table is Toeplitz in ``k - s``.
    """
    if not tau > 0.0:
        raise ValueError("tau must be positive")
    if int(n_steps) < 1:
        raise ValueError("n_steps must be at least 1")
    n = int(n_steps)
    lag = np.arange(n)
    rt = order.rho * tau
    # -expm1 keeps the smallest lags accurate when rho*tau is tiny
    row = order.b_alpha / (order.alpha * tau) * np.exp(-rt * lag) * -np.expm1(-rt)
    k, s = np.indices((n, n))
    diff = k - s
    table = np.where(diff >= 0, row[np.clip(diff, 0, n - 1)], 0.0)
    return table


def build_f_weights(order: FractionalOrder, xi: float, n_cells: int) -> np.ndarray:
    """Gaussian-kernel weights ``F[j, l]`` of the discrete Laplacian.

    ``(n_cells-1, n_cells-1)`` array with ``F[j-1, l-1]`` for
    ``1 <= l <= j <= n_cells-1``; zero above the diagonal. ``F`` depends only
    on ``j - l`` because ``r_j - r_l = (j - l) * xi``.
    """
    if not xi > 0.0:
        raise ValueError("xi must be positive")
    if int(n_cells) < 3:
        raise ValueError("n_cells must be at least 3")
    m = int(n_cells) - 1
    rho = order.rho
    lag = np.arange(m)
    row = (erf_fn(rho * xi * lag) - erf_fn(rho * xi * (lag - 1))) / (2.0 * xi**2)
    j, l = np.indices((m, m))
    diff = j - l
    return np.where(diff >= 0, row[np.clip(diff, 0, m - 1)], 0.0)


@dataclass(frozen=True)
class WeightTables:
    """Precomputed memory (E), Gaussian (F) and advection (G) coefficients."""

    e_weights: np.ndarray
    f_weights: np.ndarray
    g_coeff: float
    order: FractionalOrder = field(repr=False)
    tau: float
    xi: float

    def __post_init__(self):
        for name in ("e_weights", "f_weights"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_steps(self) -> int:
        return self.e_weights.shape[0]

    @property
    def n_cells(self) -> int:
        return self.f_weights.shape[0] + 1

    @property
    def memory_kernel(self) -> np.ndarray:
        """E weights indexed by lag ``k - s`` = 0 .. n_steps-1."""
        return self.e_weights[-1, ::-1].copy()

    def e(self, k: int, s: int) -> float:
        if not 1 <= s <= k <= self.n_steps:
            raise IndexError(f"E[{k}][{s}] outside 1 <= s <= k <= {self.n_steps}")
        return float(self.e_weights[k - 1, s - 1])

    def f(self, j: int, l: int) -> float:
        if not 1 <= l <= j <= self.n_cells - 1:
            raise IndexError(f"F[{j}][{l}] outside 1 <= l <= j <= {self.n_cells - 1}")
        return float(self.f_weights[j - 1, l - 1])


def build_weight_tables(
    order: FractionalOrder, tau: float, n_steps: int, xi: float, n_cells: int
) -> WeightTables:
    return WeightTables(
        e_weights=build_e_weights(order, tau, n_steps),
        f_weights=build_f_weights(order, xi, n_cells),
        g_coeff=1.0 / (2.0 * xi),
        order=order,
        tau=float(tau),
        xi=float(xi),
    )


def discrete_cf_derivative(values, e_weights: np.ndarray, k: int) -> float:
    """E-weighted discrete CF derivative at step ``k``.

    ``sum_{s=1}^{k} (f[s+1] - f[s]) * E[k, s]`` for samples ``f[0..k+1]``
    on a uniform time grid. First-order accurate in the step.
    """
    f = np.asarray(values, dtype=float)
    if k < 1 or f.size < k + 2:
        raise ValueError(f"need samples f[0..{k + 1}] for the derivative at step {k}")
    s = np.arange(1, k + 1)
    return float(np.dot(f[s + 1] - f[s], e_weights[k - 1, s - 1]))


def discrete_cf_laplacian(values, f_weights: np.ndarray) -> np.ndarray:
    """F-weighted discrete Laplacian at every interior node.

    ``values`` holds ``h[0..M]``; returns ``sum_{l=1}^{j} D2h[l] * F[j, l]``
    for ``j = 1..M-1`` where ``D2h[l] = h[l+1] - 2 h[l] + h[l-1]``.
    """
    h = np.asarray(values, dtype=float)
    d2 = h[2:] - 2.0 * h[1:-1] + h[:-2]
    if d2.size != f_weights.shape[0]:
        raise ValueError("values length does not match the F table")
    return f_weights @ d2
