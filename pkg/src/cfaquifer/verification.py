"""Property checks run by ``cfaquifer verify`` and the acceptance tests.

Every check returns a :class:`CheckResult`; nothing here raises on a failed
property. Tolerances and problem sizes are fixed module constants.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction

import numpy as np
from scipy import optimize

from .cf_calculus import (
    FractionalOrder,
    SampledFunction,
    build_e_weights,
    build_f_weights,
    cf_time_derivative,
    discrete_cf_derivative,
    discrete_cf_laplacian,
    erf_fn,
    gamma_fn,
)
from .config import DEFAULTS, RunConfig
from .io import field_to_csv
from .picard import contraction_check, lipschitz_estimate, solve_picard
from .scheme import AquiferParams, classical_solve, run_simulation
from .stability import parseval_check, perturbation_experiment

__all__ = ["CheckResult", "CHECKS", "run_checks", "erf_series_oracle", "gamma_stirling_oracle"]

# Problem setups for the individual checks.
CLASSICAL_CONFIG = DEFAULTS.with_changes(transmissivity=1.0, storativity=0.01, n_cells=50, n_steps=100)
CLASSICAL_ALPHAS = (0.9, 0.99, 0.999)
STABILITY_CONFIG = DEFAULTS.with_changes(n_cells=32, n_steps=64)
STABILITY_ALPHAS = (0.3, 0.5, 0.8)
PICARD_CONFIG = DEFAULTS.with_changes(transmissivity=0.1, storativity=0.01, n_cells=8, n_steps=16, t_max=1.0)


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float = 0.0
    time_limit: float | None = None
    data: dict = field(default_factory=dict, repr=False)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        limit = f"/{self.time_limit:g}s" if self.time_limit else ""
        return f"[{status}] {self.number}. {self.name} ({self.elapsed:.2f}s{limit}): {self.detail}"


def _timed(number, name, limit):
    def wrap(fn):
        def run() -> CheckResult:
            start = time.perf_counter()
            passed, detail, data = fn()
            elapsed = time.perf_counter() - start
            if limit is not None and elapsed > limit:
                passed = False
                detail += f"; runtime {elapsed:.2f}s exceeds {limit}s"
            return CheckResult(number, name, bool(passed), detail, elapsed, limit, data)

        run.number = number
        run.check_name = name
        return run

    return wrap


def _rel_l2(a, b) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


# --- independent high-precision oracles (stdlib decimal only) ---

_PI = Decimal(
    "3.14159265358979323846264338327950288419716939937510582097494459230781640628620899"
)


def erf_series_oracle(x: float, digits: int = 60) -> float:
    """erf(x) from its Maclaurin series summed in decimal arithmetic."""
    with localcontext() as ctx:
        ctx.prec = digits
        xd = Decimal(x)
        x2 = xd * xd
        term = xd  # (-1)^n x^(2n+1) / n!
        total = Decimal(0)
        n = 0
        eps = Decimal(10) ** (-digits + 5)
        while True:
            contrib = term / (2 * n + 1)
            total += contrib
            if abs(contrib) < eps and n > 2:
                break
            n += 1
            term = -term * x2 / n
        return float(2 * total / _PI.sqrt())


def _bernoulli_even(count: int) -> list[Fraction]:
    """B_2, B_4, ..., B_{2*count} via the Akiyama-Tanigawa algorithm."""
    size = 2 * count + 1
    a = [Fraction(0)] * (size + 1)
    out = []
    for m in range(size + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        if m >= 2 and m % 2 == 0:
            out.append(a[0])
    return out[:count]


_BERNOULLI = _bernoulli_even(12)


def gamma_stirling_oracle(x: float, digits: int = 50) -> float:
    """Gamma(x) via the Stirling series after shifting the argument past 40."""
    with localcontext() as ctx:
        ctx.prec = digits
        z = Decimal(x)
        shift = Decimal(1)
        while z < 40:
            shift *= z
            z += 1
        lg = (z - Decimal("0.5")) * z.ln() - z + (2 * _PI).ln() / 2
        for k, b in enumerate(_BERNOULLI, start=1):
            lg += Decimal(b.numerator) / Decimal(b.denominator) / (2 * k * (2 * k - 1) * z ** (2 * k - 1))
        return float(lg.exp() / shift)


# --- checks ---


@_timed(1, "classical-limit consistency", 10.0)
def check_classical_limit():
    cfg = CLASSICAL_CONFIG
    grid, params, phi = cfg.grid, cfg.params, cfg.phi
    ref = classical_solve(params, grid, phi).final
    dists = [_rel_l2(run_simulation(params, grid, FractionalOrder(a), phi).final, ref) for a in CLASSICAL_ALPHAS]
    monotone = all(d1 > d2 for d1, d2 in zip(dists, dists[1:]))
    ok = dists[-1] <= 0.05 and monotone
    text = ", ".join(f"alpha={a}: {d:.4f}" for a, d in zip(CLASSICAL_ALPHAS, dists))
    return ok, f"rel L2 to classical {text} (limit 0.05, monotone={monotone})", {"distances": dists}


def _time_derivative_errors(alpha: float, t: float, steps: tuple[int, ...]):
    order = FractionalOrder(alpha)
    fine = SampledFunction.from_callable(lambda s: s**2, 0.0, t, 200_001)
    exact = cf_time_derivative(fine, order, t)
    errs = []
    for n in steps:
        tau = t / n
        e = build_e_weights(order, tau, n)
        samples = (tau * np.arange(n + 2)) ** 2
        errs.append(abs(discrete_cf_derivative(samples, e, n) - exact))
    return errs


@_timed(2, "discrete CF derivative is O(tau)", 1.0)
def check_time_operator():
    parts, ratios = [], []
    for a in (0.3, 0.5, 0.8):
        e1, e2 = _time_derivative_errors(a, 1.0, (20, 40))
        ratios.append(e1 / e2)
        parts.append(f"alpha={a}: {e1 / e2:.3f}")
    ok = all(1.7 <= q <= 2.3 for q in ratios)
    return ok, "error ratio on tau -> tau/2 " + ", ".join(parts) + " (need [1.7, 2.3])", {"ratios": ratios}


def _space_laplacian_error(alpha: float, r: float, xi: float) -> float:
    order = FractionalOrder(alpha)
    m = int(round(r / xi)) + 1
    nodes = xi * np.arange(m + 1)
    f = build_f_weights(order, xi, m)
    j = m - 1
    discrete = discrete_cf_laplacian(nodes**2, f)[j - 1]
    closed = erf_fn(order.rho * nodes[j])
    return abs(discrete - closed)


@_timed(3, "discrete CF Laplacian is O(xi^2)", 1.0)
def check_space_operator():
    parts, ratios = [], []
    for a in (0.3, 0.5, 0.8):
        e1 = _space_laplacian_error(a, 1.0, 0.05)
        e2 = _space_laplacian_error(a, 1.0, 0.025)
        ratios.append(e1 / e2)
        parts.append(f"alpha={a}: {e1 / e2:.3f}")
    ok = all(3.0 <= q <= 5.0 for q in ratios)
    return ok, "error ratio on xi -> xi/2 " + ", ".join(parts) + " (need [3.0, 5.0])", {"ratios": ratios}


@_timed(4, "perturbation norms never grow", 30.0)
def check_stability(n_seeds: int = 20, config: RunConfig = STABILITY_CONFIG, rng_seed: int = 20240611):
    rng = np.random.default_rng(rng_seed)
    grid, params, phi = config.grid, config.params, config.phi
    worst = {}
    for a in STABILITY_ALPHAS:
        order = FractionalOrder(a)
        worst[a] = max(
            perturbation_experiment(params, grid, order, phi, rng.standard_normal(grid.n_cells - 1)).max_growth
            for _ in range(n_seeds)
        )
    ok = all(g <= 1.0 + 1e-8 for g in worst.values())
    text = ", ".join(f"alpha={a}: {g:.12f}" for a, g in worst.items())
    return ok, f"max growth over {n_seeds} seeds {text} (limit 1 + 1e-8)", {"max_growth": worst}


def contraction_regime_search():
    """Smallest Lambda over T/S and alpha, found by bounded minimisation."""

    def lam(p):
        gamma, alpha = math.exp(p[0]), 1.0 / (1.0 + math.exp(-p[1]))
        return lipschitz_estimate(AquiferParams(gamma, 1.0), FractionalOrder(alpha)).lambda_total

    best = None
    for g0 in (-2.0, 0.0, 2.0):
        for a0 in (-2.0, 0.0, 2.0):
            res = optimize.minimize(lam, [g0, a0], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12})
            if best is None or res.fun < best.fun:
                best = res
    gamma, alpha = math.exp(best.x[0]), 1.0 / (1.0 + math.exp(-best.x[1]))
    return float(best.fun), gamma, alpha


def random_smooth_pair(rng, nodes: np.ndarray, modes: int = 4):
    """Two random sine sums vanishing at both ends of ``nodes``."""
    x = (nodes - nodes[0]) / (nodes[-1] - nodes[0])
    basis = np.array([np.sin((n + 1) * np.pi * x) for n in range(modes)])
    return rng.standard_normal(modes) @ basis, rng.standard_normal(modes) @ basis


@_timed(5, "kernel contraction", 5.0)
def check_contraction(n_pairs: int = 100, rng_seed: int = 7):
    lam_min, gamma, alpha = contraction_regime_search()
    storativity = 0.01
    params = AquiferParams(gamma * storativity, storativity)
    order = FractionalOrder(alpha)
    est = lipschitz_estimate(params, order)
    nodes = np.linspace(DEFAULTS.r_min, DEFAULTS.r_max, 201)
    rng = np.random.default_rng(rng_seed)
    ratios = []
    for _ in range(n_pairs):
        a, b = random_smooth_pair(rng, nodes)
        ratios.append(contraction_check(SampledFunction(nodes, a), SampledFunction(nodes, b), params, order))
    bound_holds = max(ratios) <= est.lambda_total + 1e-9
    regime = est.is_contraction
    detail = (
        f"smallest attainable Lambda = {lam_min:.4f} at T/S={gamma:.4f}, alpha={alpha:.4f}; "
        f"contraction regime (Lambda < 1) {'found' if regime else 'does not exist'}; "
        f"max measured ratio over {n_pairs} pairs = {max(ratios):.4f} "
        f"({'<=' if bound_holds else '>'} Lambda = {est.lambda_total:.4f})"
    )
    return regime and bound_holds, detail, {"lambda_min": lam_min, "ratios": ratios}


@_timed(6, "Picard convergence and agreement with the CN scheme", 20.0)
def check_picard():
    cfg = PICARD_CONFIG
    grid, params, order, phi = cfg.grid, cfg.params, cfg.order, cfg.phi
    res = solve_picard(params, grid, order, phi, max_iter=200, rtol=1e-8)
    d = res.diff_norms
    decreasing = all(b < a for a, b in zip(d, d[1:]))
    rates = [b / a for a, b in zip(d, d[1:])]
    cn = run_simulation(params, grid, order, phi)
    dist = _rel_l2(res.field.values, cn.values)
    ok = res.converged and decreasing and dist <= 0.10
    detail = (
        f"converged={res.converged} in {res.iterations} sweeps, strictly decreasing={decreasing}, "
        f"max contraction rate {max(rates):.3f}, rel L2 to CN scheme {dist:.4f} (limit 0.10); "
        f"Lambda flag={lipschitz_estimate(params, order).is_contraction}"
    )
    return ok, detail, {"diffs": d, "distance": dist}


@_timed(7, "uniqueness and determinism", None)
def check_uniqueness():
    cfg = DEFAULTS
    first = field_to_csv(run_simulation(cfg.params, cfg.grid, cfg.order, cfg.phi)).encode()
    second = field_to_csv(run_simulation(cfg.params, cfg.grid, cfg.order, cfg.phi)).encode()
    identical = first == second

    pc = PICARD_CONFIG
    grid, params, order, phi = pc.grid, pc.params, pc.order, pc.phi
    a = solve_picard(params, grid, order, phi)
    start_b = run_simulation(params, grid, order, phi)
    b = solve_picard(params, grid, order, phi, initial=start_b)
    scale = np.abs(a.field.values).max()
    diff = float(np.abs(a.field.values - b.field.values).max()) / scale
    ok = identical and a.converged and b.converged and diff <= 1e-6
    detail = f"repeat runs byte-identical={identical}; Picard from two initial iterates rel max diff {diff:.2e} (limit 1e-6)"
    return ok, detail, {"picard_diff": diff}


@_timed(8, "special functions", None)
def check_special_functions():
    xs = np.linspace(-6.0, 6.0, 10_000)
    erf_err = max(abs(erf_fn(x) - erf_series_oracle(x)) for x in xs)
    gs = np.linspace(0.05, 10.0, 2_000)
    gamma_err = max(abs(gamma_fn(x) - gamma_stirling_oracle(x)) for x in gs)
    b_lo = abs(FractionalOrder(1e-6).b_alpha - 1.0)
    b_hi = abs(FractionalOrder(1.0 - 1e-6).b_alpha - 1.0)
    ok = erf_err <= 1e-9 and gamma_err <= 1e-10 and b_lo <= 1e-4 and b_hi <= 1e-4
    detail = (
        f"erf max err {erf_err:.2e} (1e-9), Gamma max err {gamma_err:.2e} (1e-10), "
        f"|B-1| at endpoints {b_lo:.2e}, {b_hi:.2e} (1e-4)"
    )
    return ok, detail, {}


@_timed(9, "Parseval identity", None)
def check_parseval(n_vectors: int = 100, rng_seed: int = 11):
    grid = STABILITY_CONFIG.grid
    rng = np.random.default_rng(rng_seed)
    worst = 0.0
    for _ in range(n_vectors):
        v = rng.standard_normal(grid.n_cells - 1)
        worst = max(worst, parseval_check(v, grid) / (grid.xi * np.sum(v**2)))
    return worst <= 1e-10, f"max relative discrepancy {worst:.2e} over {n_vectors} vectors (1e-10)", {}


CHECKS = [
    check_classical_limit,
    check_time_operator,
    check_space_operator,
    check_stability,
    check_contraction,
    check_picard,
    check_uniqueness,
    check_special_functions,
    check_parseval,
]


def run_checks(numbers=None) -> list[CheckResult]:
    selected = [c for c in CHECKS if numbers is None or c.number in numbers]
    return [c() for c in selected]
