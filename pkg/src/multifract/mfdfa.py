"""Multifractal detrended fluctuation analysis.

Pipeline: cumulative demeaned profile -> segment-wise polynomial
detrending over forward and backward partitions -> q-order averaging of
the segment variances -> log-log scaling fit H(q) -> mass exponent
tau(q) = qH(q) - 1 -> Legendre spectrum (alpha, f(alpha)) -> the two
multifractality measures delta_h and delta_alpha.

Segmentation convention: segments are cut from the full partial-sum path
including the empty sum, ``[0, y_1, ..., y_n]``, with N_s = floor(n/s)
segments from each end. Including the origin makes time reversal swap
the forward and backward segment sets exactly, so F_q(s) is invariant
under reversal to machine precision.

Zero-variance segments (flat price runs) are excluded from the q <= 0
averages and counted; only an all-zero scale is an error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InsufficientScales, TooShort, ZeroVarianceSegment
from .ingest import ReturnSeries

DEFAULT_Q_GRID = tuple(i * 0.25 for i in range(-16, 17))


@dataclass(frozen=True)
class MfdfaConfig:
    q_grid: tuple = DEFAULT_Q_GRID
    scales: tuple | None = None
    detrend_order: int = 1

    def __post_init__(self):
        if not self.q_grid:
            raise ValueError("q_grid must be non-empty")
        if self.detrend_order < 1:
            raise ValueError(f"detrend_order must be >= 1, got {self.detrend_order}")
        if self.scales is not None:
            sc = tuple(int(s) for s in self.scales)
            if any(b <= a for a, b in zip(sc, sc[1:])):
                raise ValueError("scales must be strictly increasing")
            if sc[0] <= self.detrend_order + 1:
                raise ValueError(
                    f"min scale {sc[0]} must exceed detrend_order + 1 = {self.detrend_order + 1}"
                )
            object.__setattr__(self, "scales", sc)

    def resolve_scales(self, n: int) -> tuple:
        """Scales for a length-n series: 16 log-spaced integers in [10, n/4]."""
        if self.scales is not None:
            if self.scales[-1] > n // 4:
                raise InsufficientScales(
                    f"max scale {self.scales[-1]} exceeds n/4 = {n // 4}"
                )
            return self.scales
        return default_scales(n)


@lru_cache(maxsize=1024)
def default_scales(n: int, num: int = 16, s_min: int = 10) -> tuple:
    s_max = n // 4
    if s_max <= s_min:
        raise InsufficientScales(f"n = {n} leaves no scale range [{s_min}, n/4]")
    grid = np.unique(np.round(np.geomspace(s_min, s_max, num)).astype(int))
    if grid.size < 6:
        raise InsufficientScales(f"only {grid.size} distinct scales available for n = {n}")
    return tuple(int(s) for s in grid)


@dataclass
class Profile:
    y: np.ndarray
    n: int = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        if self.n is None:
            self.n = len(self.y)
        elif self.n != len(self.y):
            raise ValueError(f"n = {self.n} does not match len(y) = {len(self.y)}")


def profile(series: ReturnSeries) -> Profile:
    """Y(i) = sum_{k<=i} (X_k - <X>); the last value telescopes to 0."""
    if series.n < 2:
        raise TooShort(f"{series.ticker}: profile needs n >= 2, got {series.n}")
    x = series.values
    return Profile(y=np.cumsum(x - np.mean(x)))


@lru_cache(maxsize=256)
def _segment_design(s: int, order: int):
    t = np.arange(s, dtype=float) - (s - 1) / 2.0
    v = np.vander(t, order + 1, increasing=True)
    return v, np.linalg.pinv(v)


def segment_fluctuations(prof: Profile, s: int, order: int = 1) -> np.ndarray:
    """Per-segment detrended variances F^2(nu, s), 2*floor(n/s) values.

    The first floor(n/s) entries are the forward segments (cut from the
    start of the padded path, left to right); the rest are the backward
    segments (cut from the end, also left to right).
    """
    if s < order + 2:
        raise ValueError(f"scale {s} too small for polynomial order {order}")
    if s > prof.n:
        raise ValueError(f"scale {s} exceeds profile length {prof.n}")
    path = np.concatenate([[0.0], prof.y])
    ns = prof.n // s
    segments = np.vstack(
        [path[: ns * s].reshape(ns, s), path[len(path) - ns * s :].reshape(ns, s)]
    )
    v, pinv = _segment_design(s, order)
    coef = pinv @ segments.T
    resid = segments.T - v @ coef
    return np.mean(resid * resid, axis=0)


def _log_fluctuations(f2: np.ndarray, q_grid: np.ndarray, scale: int) -> np.ndarray:
    """ln F_q(s) for every q at one scale, zero segments excluded for q <= 0."""
    pos = f2[f2 > 0]
    if pos.size == 0:
        raise ZeroVarianceSegment(f"scale {scale}: every segment has zero variance")
    logs = np.log(pos)
    v = (q_grid[:, None] / 2.0) * logs[None, :]
    vmax = v.max(axis=1)
    lse = vmax + np.log(np.exp(v - vmax[:, None]).sum(axis=1))
    counts = np.where(q_grid > 0, f2.size, pos.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (lse - np.log(counts)) / q_grid
    out[q_grid == 0] = 0.5 * np.mean(logs)
    return out


def fluctuation_function(f2_values, q: float) -> float:
    """q-order average of segment variances.

    q != 0: ((1/M) sum F^2[nu]^(q/2))^(1/q); q = 0: the logarithmic
    average exp(mean(ln F^2)/2). For q <= 0 zero-variance segments are
    excluded and M renormalized; for q > 0 they contribute 0 to the sum.
    """
    f2 = np.asarray(f2_values, dtype=float)
    return float(np.exp(_log_fluctuations(f2, np.asarray([float(q)]), scale=-1)[0]))


def _fit_scaling(log_fq: np.ndarray, scales) -> tuple[np.ndarray, np.ndarray]:
    ln_s = np.log(np.asarray(scales, dtype=float))
    if ln_s.size < 6:
        raise InsufficientScales(f"scaling fit needs >= 6 scales, got {ln_s.size}")
    if np.ptp(ln_s) == 0:
        raise InsufficientScales("scales are not distinct")
    x = np.column_stack([np.ones(ln_s.size), ln_s])
    beta, *_ = np.linalg.lstsq(x, log_fq.T, rcond=None)
    resid = log_fq.T - x @ beta
    ss_res = np.sum(resid**2, axis=0)
    ss_tot = np.sum((log_fq.T - log_fq.mean(axis=1)) ** 2, axis=0)
    r2 = np.where(ss_tot > 0, 1.0 - ss_res / np.where(ss_tot > 0, ss_tot, 1.0), 1.0)
    return beta[1], r2


def hurst_from_scaling(fq: np.ndarray, q_grid, scales) -> tuple[np.ndarray, np.ndarray]:
    """Per-q OLS slope of ln F_q(s) on ln s, with the fit r^2."""
    fq = np.asarray(fq, dtype=float)
    if fq.shape != (len(q_grid), len(scales)):
        raise ValueError(f"fq must have shape (len(q_grid), len(scales)), got {fq.shape}")
    if np.any(fq <= 0) or not np.all(np.isfinite(fq)):
        raise ZeroVarianceSegment("fluctuation function must be positive and finite")
    return _fit_scaling(np.log(fq), scales)


def mass_exponent(q_grid, h_of_q) -> np.ndarray:
    """tau(q) = q * H(q) - 1."""
    return np.asarray(q_grid, dtype=float) * np.asarray(h_of_q, dtype=float) - 1.0


def legendre_spectrum(q_grid, tau_of_q) -> tuple[np.ndarray, np.ndarray]:
    """alpha = dtau/dq (central differences, one-sided at the ends); f = q*alpha - tau."""
    q = np.asarray(q_grid, dtype=float)
    tau = np.asarray(tau_of_q, dtype=float)
    if q.size < 3:
        raise ValueError(f"Legendre transform needs >= 3 grid points, got {q.size}")
    steps = np.diff(q)
    h = steps[0]
    if np.max(np.abs(steps - h)) > 1e-9 * abs(h):
        raise ValueError("q_grid must be uniform for the finite-difference transform")
    alpha = np.empty_like(tau)
    alpha[1:-1] = (tau[2:] - tau[:-2]) / (2.0 * h)
    alpha[0] = (tau[1] - tau[0]) / h
    alpha[-1] = (tau[-1] - tau[-2]) / h
    return alpha, q * alpha - tau


def multifractality_measures(h_of_q, alpha) -> tuple[float, float]:
    """(delta_h, delta_alpha): the max-minus-min ranges over the q grid."""
    h = np.asarray(h_of_q, dtype=float)
    a = np.asarray(alpha, dtype=float)
    return float(np.max(h) - np.min(h)), float(np.max(a) - np.min(a))


@dataclass
class MfdfaResult:
    q_grid: np.ndarray
    h_of_q: np.ndarray
    fit_r2: np.ndarray
    tau_of_q: np.ndarray
    alpha: np.ndarray
    f_alpha: np.ndarray
    delta_h: float
    delta_alpha: float
    scales: tuple
    detrend_order: int
    zero_variance_segments: int
    quality_flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "q_grid": [float(v) for v in self.q_grid],
            "h_of_q": [float(v) for v in self.h_of_q],
            "fit_r2": [float(v) for v in self.fit_r2],
            "tau_of_q": [float(v) for v in self.tau_of_q],
            "alpha": [float(v) for v in self.alpha],
            "f_alpha": [float(v) for v in self.f_alpha],
            "delta_h": self.delta_h,
            "delta_alpha": self.delta_alpha,
            "scales": list(self.scales),
            "detrend_order": self.detrend_order,
            "zero_variance_segments": self.zero_variance_segments,
            "quality_flags": list(self.quality_flags),
        }


def analyze(series: ReturnSeries, config: MfdfaConfig | None = None) -> MfdfaResult:
    """Full MF-DFA of one return series."""
    config = config or MfdfaConfig()
    prof = profile(series)
    scales = config.resolve_scales(prof.n)
    q_grid = np.asarray(config.q_grid, dtype=float)

    log_fq = np.empty((q_grid.size, len(scales)))
    n_zero = 0
    for j, s in enumerate(scales):
        f2 = segment_fluctuations(prof, s, config.detrend_order)
        n_zero += int(np.sum(f2 == 0))
        log_fq[:, j] = _log_fluctuations(f2, q_grid, s)
    if not np.all(np.isfinite(log_fq)):
        raise ZeroVarianceSegment("non-finite fluctuation function")

    h, r2 = _fit_scaling(log_fq, scales)
    tau = mass_exponent(q_grid, h)
    alpha, f_alpha = legendre_spectrum(q_grid, tau)
    delta_h, delta_alpha = multifractality_measures(h, alpha)

    flags = []
    if np.any(np.diff(h) > 1e-6):
        flags.append("h_of_q is not non-increasing in q; check fit quality")
    if delta_alpha < delta_h:
        flags.append("delta_alpha below delta_h, unusual for these estimators")

    return MfdfaResult(
        q_grid=q_grid,
        h_of_q=h,
        fit_r2=r2,
        tau_of_q=tau,
        alpha=alpha,
        f_alpha=f_alpha,
        delta_h=delta_h,
        delta_alpha=delta_alpha,
        scales=tuple(scales),
        detrend_order=config.detrend_order,
        zero_variance_segments=n_zero,
        quality_flags=flags,
    )
