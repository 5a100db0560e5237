"""Descriptive-statistics battery for return series.

Moment conventions: skewness and kurtosis use population central moments
(1/n normalization, kurtosis non-excess), the standard deviation uses the
n-1 denominator, and the Jarque-Bera statistic is
``(n/6) * (S^2 + (K-3)^2 / 4)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSeries, TooShort
from .ingest import ReturnSeries


@dataclass(frozen=True)
class DescriptiveStats:
    n: int
    mean: float
    median: float
    min: float
    max: float
    std_dev: float
    skewness: float
    kurtosis: float
    jarque_bera: float


def jb_from_moments(n: int, skewness: float, kurtosis: float) -> float:
    """Jarque-Bera statistic from sample skewness and non-excess kurtosis."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return (n / 6.0) * (skewness**2 + (kurtosis - 3.0) ** 2 / 4.0)


def describe_values(values) -> DescriptiveStats:
    """Compute the full battery on a plain vector of observations."""
    x = np.asarray(values, dtype=float)
    n = x.size
    if n < 4:
        raise TooShort(f"need at least 4 observations, got {n}")
    mean = float(np.mean(x))
    d = x - mean
    m2 = float(np.mean(d**2))
    scale = max(1.0, float(np.max(np.abs(x))))
    if np.ptp(x) == 0 or m2 <= (16 * np.finfo(float).eps * scale) ** 2:
        raise DegenerateSeries("zero variance")
    m3 = float(np.mean(d**3))
    m4 = float(np.mean(d**4))
    skewness = m3 / m2**1.5
    kurtosis = m4 / m2**2
    return DescriptiveStats(
        n=n,
        mean=mean,
        median=float(np.median(x)),
        min=float(np.min(x)),
        max=float(np.max(x)),
        std_dev=float(np.sqrt(np.sum(d**2) / (n - 1))),
        skewness=skewness,
        kurtosis=kurtosis,
        jarque_bera=jb_from_moments(n, skewness, kurtosis),
    )


def describe(series: ReturnSeries) -> DescriptiveStats:
    """Descriptive statistics of a return series (percent-return units)."""
    return describe_values(series.values)
