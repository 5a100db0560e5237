"""Generalized Hurst exponent via q-order structure functions.

``structure_function`` treats the input values as the analyzed path
X(t) and computes K_q(tau) = <|X(t+tau) - X(t)|^q> / <|X(t)|^q> over all
overlapping windows. ``estimate_hurst`` builds the path as the cumulative
sum of demeaned returns (so lag-tau increments aggregate tau days of
returns), fits ln K_q(tau) on ln(tau/nu) for every tau_max in the
configured range, and averages H(q | tau_max) = slope/q across them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateStructure, TooShort
from .ingest import ReturnSeries

DEFAULT_Q_GRID = tuple(i / 10 for i in range(1, 41))


@dataclass(frozen=True)
class GheConfig:
    q_grid: tuple = DEFAULT_Q_GRID
    tau_max_range: tuple = (5, 19)
    nu: int = 1

    def __post_init__(self):
        if not self.q_grid or any(q <= 0 for q in self.q_grid):
            raise ValueError("q_grid must be non-empty with q > 0 everywhere")
        lo, hi = self.tau_max_range
        if lo < 2 or hi < lo:
            raise ValueError(f"tau_max_range must satisfy 2 <= lo <= hi, got {self.tau_max_range}")
        if self.nu < 1:
            raise ValueError(f"nu must be a positive day count, got {self.nu}")


@dataclass
class StructureFunction:
    q: float
    taus: np.ndarray
    k_values: np.ndarray


@dataclass
class GheResult:
    q_grid: np.ndarray
    h_of_q: np.ndarray
    h_stderr: np.ndarray
    qhq: np.ndarray
    failures: dict = field(default_factory=dict)


def _k_values(path: np.ndarray, q: float, tau_max: int) -> np.ndarray:
    denom = np.mean(np.abs(path) ** q)
    if denom == 0:
        raise DegenerateStructure("path is identically zero")
    k = np.empty(tau_max)
    for tau in range(1, tau_max + 1):
        d = path[tau:] - path[:-tau]
        k[tau - 1] = np.mean(np.abs(d) ** q) / denom
    if np.any(k == 0) or not np.all(np.isfinite(k)):
        bad = int(np.flatnonzero((k == 0) | ~np.isfinite(k))[0]) + 1
        raise DegenerateStructure(f"K_q(tau) degenerate at tau={bad} for q={q}")
    return k


def structure_function(series: ReturnSeries, q: float, tau_max: int) -> StructureFunction:
    """Normalized q-order moments of lag-tau increments of the path."""
    if q <= 0:
        raise ValueError(f"q must be positive, got {q}")
    if tau_max < 1:
        raise ValueError(f"tau_max must be at least 1, got {tau_max}")
    if series.n < 4 * tau_max:
        raise TooShort(f"{series.ticker}: need n >= 4*tau_max = {4 * tau_max}, got {series.n}")
    k = _k_values(series.values, q, tau_max)
    return StructureFunction(q=q, taus=np.arange(1, tau_max + 1), k_values=k)


def _prefix_slopes(x: np.ndarray, y: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """OLS slopes of y on x over prefixes x[:m], m = lo..hi (1-based m)."""
    sx = np.cumsum(x)
    sy = np.cumsum(y)
    sxx = np.cumsum(x * x)
    sxy = np.cumsum(x * y)
    m = np.arange(1, len(x) + 1, dtype=float)
    num = (sxy - sx * sy / m)[lo - 1 : hi]
    den = (sxx - sx * sx / m)[lo - 1 : hi]
    return num / den


def estimate_hurst(series: ReturnSeries, config: GheConfig | None = None) -> GheResult:
    """H(q) averaged over the tau_max window, with the spread as h_stderr.

    Per-q failures (degenerate structure functions) are recorded in
    ``result.failures`` and leave NaN in the grid instead of aborting.
    """
    config = config or GheConfig()
    if series.n < 100:
        raise TooShort(f"{series.ticker}: GHE needs n >= 100, got {series.n}")
    lo, hi = config.tau_max_range
    if hi >= series.n / 4:
        raise ValueError(f"tau_max {hi} must stay below n/4 = {series.n / 4:g}")

    x = series.values - np.mean(series.values)
    path = np.cumsum(x)
    ln_tau = np.log(np.arange(1, hi + 1, dtype=float) / config.nu)

    q_grid = np.asarray(config.q_grid, dtype=float)
    h = np.full(q_grid.size, np.nan)
    stderr = np.full(q_grid.size, np.nan)
    failures: dict[float, str] = {}
    for i, q in enumerate(q_grid):
        try:
            k = _k_values(path, q, hi)
        except DegenerateStructure as exc:
            failures[float(q)] = str(exc)
            continue
        slopes = _prefix_slopes(ln_tau, np.log(k), lo, hi)
        h_per_tau = slopes / q
        h[i] = np.mean(h_per_tau)
        stderr[i] = np.std(h_per_tau)
    return GheResult(q_grid=q_grid, h_of_q=h, h_stderr=stderr, qhq=q_grid * h, failures=failures)


def qhq_curve(result: GheResult) -> list[tuple[float, float]]:
    """(q, q*H(q)) points; a straight line through the origin is monofractal."""
    return [(float(q), float(v)) for q, v in zip(result.q_grid, result.qhq)]
