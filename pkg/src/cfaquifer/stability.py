"""Fourier (von Neumann) stability tooling for the fractional scheme.

Perturbations ``delta^k = h^k - h~^k`` are measured in the xi-weighted
discrete L2 norm over interior nodes. Fourier coefficients use the DFT of
the grid-point function padded with its zero boundary value::

    d(a) = (1/M) sum_{j=0}^{M-1} delta_j exp(-2 pi i a j / M)
    sum_j |delta_j|^2 = M sum_a |d(a)|^2
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cf_calculus import FractionalOrder, WeightTables
from .scheme import AquiferParams, Grid, HeadField, assemble_system, initial_values, step

__all__ = [
    "PerturbationTrace",
    "ModeAmplification",
    "discrete_l2_norm",
    "fourier_coefficients",
    "parseval_check",
    "mode_amplification",
    "mode_sweep",
    "perturbation_experiment",
    "evolve_perturbation",
]


def discrete_l2_norm(delta, xi: float) -> float:
    """``sqrt(sum_j xi |delta_j|^2)``."""
    d = np.asarray(delta)
    return float(np.sqrt(xi * np.sum(np.abs(d) ** 2)))


def fourier_coefficients(delta, grid: Grid) -> np.ndarray:
    """DFT coefficients ``d(a)``, ``a = 0..M-1``, of an interior vector."""
    d = np.asarray(delta, dtype=float)
    if d.size != grid.n_cells - 1:
        raise ValueError(f"expected {grid.n_cells - 1} interior values, got {d.size}")
    padded = np.concatenate(([0.0], d))  # delta_0 = 0 on the boundary
    return np.fft.fft(padded) / grid.n_cells


def parseval_check(delta, grid: Grid) -> float:
    """Absolute gap between ``||delta||_2^2`` and its Fourier-side value."""
    coeffs = fourier_coefficients(delta, grid)
    physical = discrete_l2_norm(delta, grid.xi) ** 2
    spectral = grid.xi * grid.n_cells * float(np.sum(np.abs(coeffs) ** 2))
    return abs(physical - spectral)


@dataclass(frozen=True)
class ModeAmplification:
    frequency_index: int
    t_factor: float
    ratio: float


def mode_amplification(
    t_factor: float,
    j: int,
    weights: WeightTables,
    params: AquiferParams,
    grid: Grid,
    frequency_index: int = -1,
) -> ModeAmplification:
    """History-free amplification ``|d_{k+1} / d_k|`` of one Fourier mode at node ``j``.

    Substituting ``delta_j = d_k exp(i j xi T)`` into one implicit step and
    dropping the older memory increments gives
    ``d_{k+1} (E0 - P) = d_k (E0 + P)`` with
    ``P = i G theta_j sin(xi T) + gamma sum_l exp(i (l-j) xi T) (cos(xi T) - 1) F[j, l]``.
    """
    m = grid.n_cells
    if not 1 <= j <= m - 1:
        raise IndexError(f"j={j} must be interior")
    theta = grid.xi * t_factor
    adv = weights.g_coeff * float(params.theta(grid.r[j])) * np.sin(theta)
    lags = np.arange(1, j + 1) - j
    fw = weights.f_weights[j - 1, :j]
    nonlocal_part = params.gamma * (np.cos(theta) - 1.0) * np.sum(np.exp(1j * lags * theta) * fw)
    p = 1j * adv + nonlocal_part
    e0 = weights.memory_kernel[0]
    denom = abs(e0 - p)
    if denom == 0.0:
        raise ZeroDivisionError(f"mode T={t_factor} at j={j} has a vanishing implicit symbol")
    return ModeAmplification(frequency_index, float(t_factor), float(abs(e0 + p) / denom))


def mode_sweep(weights: WeightTables, params: AquiferParams, grid: Grid) -> list[ModeAmplification]:
    """Worst-node amplification for every frequency ``a = 0..M-1``."""
    length = grid.r_max - grid.r_min
    out = []
    for a in range(grid.n_cells):
        t_factor = 2.0 * np.pi * a / length
        worst = max(
            (mode_amplification(t_factor, j, weights, params, grid, a) for j in range(1, grid.n_cells)),
            key=lambda m: m.ratio,
        )
        out.append(worst)
    return out


@dataclass(frozen=True)
class PerturbationTrace:
    norms: np.ndarray
    times: np.ndarray

    @property
    def growth(self) -> np.ndarray:
        return self.norms / self.norms[0]

    @property
    def max_growth(self) -> float:
        return float(np.max(self.growth))

    def rows(self):
        """``(k, t_k, norm, growth_ratio)`` tuples for tabular export."""
        return [(k, float(t), float(n), float(g)) for k, (t, n, g) in enumerate(zip(self.times, self.norms, self.growth))]


def _march(params: AquiferParams, grid: Grid, order: FractionalOrder, phi, system=None) -> HeadField:
    if system is None:
        system = assemble_system(params, grid, grid.weights(order))
    h = HeadField.from_initial(grid, phi)
    for k in range(grid.n_steps):
        step(system, h, k)
    return h


def _trace(delta: np.ndarray, grid: Grid) -> PerturbationTrace:
    norms = np.sqrt(grid.xi * np.sum(delta[1:-1, :] ** 2, axis=0))
    if norms[0] == 0.0:
        raise ValueError("seed perturbation must be nonzero on interior nodes")
    return PerturbationTrace(norms, grid.t)


def perturbation_experiment(
    params: AquiferParams, grid: Grid, order: FractionalOrder, phi, seed_perturbation
) -> PerturbationTrace:
    """Run the scheme from ``phi`` and ``phi + seed`` and trace ``||delta^k||_2``."""
    base = initial_values(grid, phi)
    seed = np.asarray(seed_perturbation, dtype=float)
    if seed.size == grid.n_cells - 1:
        seed = np.concatenate(([0.0], seed, [0.0]))
    if seed.shape != base.shape:
        raise ValueError("seed must have M-1 interior or M+1 full-grid values")
    if not np.any(seed[1:-1]):
        raise ValueError("seed perturbation must be nonzero on interior nodes")
    system = assemble_system(params, grid, grid.weights(order))
    ref = _march(params, grid, order, base, system)
    pert = _march(params, grid, order, base + seed, system)
    return _trace(pert.values - ref.values, grid)


def evolve_perturbation(
    params: AquiferParams, grid: Grid, order: FractionalOrder, seed_perturbation
) -> PerturbationTrace:
    """Trace of the seed evolved alone through the homogeneous scheme."""
    zero = np.zeros(grid.n_cells + 1)
    return perturbation_experiment(params, grid, order, zero, seed_perturbation)
