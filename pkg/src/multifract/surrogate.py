"""Shuffling surrogate test for the source of multifractality.

Shuffling destroys temporal correlations while preserving the marginal
distribution, so a measure that stays outside the shuffled ensemble's
percentile band is attributed to the correlation structure. Surrogate
seeds derive from the base seed by indexed mixing
(``SeedSequence((base_seed, i))``), making every surrogate individually
reproducible and the ensemble embarrassingly parallel. Percentiles use
the linear-interpolation quantile definition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, MissingAssignment, SurrogateEnsembleError, TooShort
from .ingest import QuartileAssignment, ReturnSeries
from .mfdfa import MfdfaConfig, analyze

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class SurrogateConfig:
    n_shuffles: int = 1000
    ci_low: float = 0.025
    ci_high: float = 0.975
    base_seed: int = 0

    def __post_init__(self):
        if self.n_shuffles < 100:
            raise ValueError(f"n_shuffles must be at least 100, got {self.n_shuffles}")
        if not 0.0 < self.ci_low < self.ci_high < 1.0:
            raise ValueError(
                f"need 0 < ci_low < ci_high < 1, got ({self.ci_low}, {self.ci_high})"
            )


@dataclass(frozen=True)
class SurrogateTestReport:
    ticker: str
    measure_name: str
    original: float
    shuffled_mean: float
    cl_low: float
    cl_high: float
    flagged: bool


@dataclass
class SurrogateTestResult:
    """The pair of per-measure reports plus ensemble provenance."""

    delta_h: SurrogateTestReport
    delta_alpha: SurrogateTestReport
    shuffled_mean_h_of_q: np.ndarray
    n_shuffles: int
    n_failed: int


def derive_seed(base_seed: int, index: int) -> np.random.SeedSequence:
    """Collision-robust per-surrogate seed from (base_seed, index)."""
    return np.random.SeedSequence(entropy=(int(base_seed) & _U64, int(index)))


def shuffle(series: ReturnSeries, seed) -> ReturnSeries:
    """Uniform random permutation of the values (Fisher-Yates via numpy)."""
    if series.n < 2:
        raise TooShort(f"{series.ticker}: need n >= 2 to shuffle, got {series.n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(series.n)
    seed_note = seed.entropy if isinstance(seed, np.random.SeedSequence) else seed
    return ReturnSeries(
        ticker=series.ticker,
        values=series.values[perm],
        meta=dict(series.meta, surrogate_of=series.ticker, shuffle_seed=seed_note),
    )


def _report(ticker, name, original, draws, config) -> SurrogateTestReport:
    lo, hi = np.quantile(draws, [config.ci_low, config.ci_high], method="linear")
    return SurrogateTestReport(
        ticker=ticker,
        measure_name=name,
        original=float(original),
        shuffled_mean=float(np.mean(draws)),
        cl_low=float(lo),
        cl_high=float(hi),
        flagged=bool(original < lo or original > hi),
    )


def surrogate_test(
    series: ReturnSeries,
    config: SurrogateConfig | None = None,
    mfdfa_config: MfdfaConfig | None = None,
) -> SurrogateTestResult:
    """delta_h and delta_alpha of the original vs a shuffled ensemble.

    MF-DFA failures on more than 1% of surrogates abort with diagnostics;
    rarer failures are skipped and counted.
    """
    config = config or SurrogateConfig()
    mfdfa_config = mfdfa_config or MfdfaConfig()
    original = analyze(series, mfdfa_config)

    dh = np.empty(config.n_shuffles)
    da = np.empty(config.n_shuffles)
    h_sum = np.zeros_like(original.h_of_q)
    n_ok = 0
    failures = []
    for i in range(1, config.n_shuffles + 1):
        try:
            res = analyze(shuffle(series, derive_seed(config.base_seed, i)), mfdfa_config)
        except DataError as exc:
            failures.append((i, str(exc)))
            continue
        dh[n_ok] = res.delta_h
        da[n_ok] = res.delta_alpha
        h_sum += res.h_of_q
        n_ok += 1
    if len(failures) > 0.01 * config.n_shuffles:
        raise SurrogateEnsembleError(len(failures), config.n_shuffles, failures)

    return SurrogateTestResult(
        delta_h=_report(series.ticker, "delta_h", original.delta_h, dh[:n_ok], config),
        delta_alpha=_report(series.ticker, "delta_alpha", original.delta_alpha, da[:n_ok], config),
        shuffled_mean_h_of_q=h_sum / n_ok,
        n_shuffles=config.n_shuffles,
        n_failed=len(failures),
    )


@dataclass
class QuartileSummary:
    """Quartile means of the multifractality measures plus flag rates."""

    rows: list = field(default_factory=list)
    flag_rates: dict = field(default_factory=dict)


def aggregate_by_quartile(reports, assignments) -> QuartileSummary:
    """Per-quartile arithmetic means of original and shuffled measures.

    ``reports`` is a flat iterable of SurrogateTestReport (both measures);
    every report's ticker must appear in ``assignments``.
    """
    quartile_of = {a.ticker: a.quartile for a in assignments}
    reports = list(reports)
    if not reports:
        raise DataError("no surrogate reports to aggregate")
    grouped: dict[str, dict[int, list[SurrogateTestReport]]] = {}
    for rep in reports:
        if rep.ticker not in quartile_of:
            raise MissingAssignment(f"{rep.ticker}: no quartile assignment")
        grouped.setdefault(rep.measure_name, {}).setdefault(quartile_of[rep.ticker], []).append(rep)

    quartiles = sorted({q for by_q in grouped.values() for q in by_q})
    rows = []
    for q in quartiles:
        row = {"quartile": q}
        for measure in ("delta_h", "delta_alpha"):
            reps = grouped.get(measure, {}).get(q, [])
            if not reps:
                raise DataError(f"quartile {q}: no {measure} reports")
            row[f"{measure}_original"] = float(np.mean([r.original for r in reps]))
            row[f"{measure}_shuffled"] = float(np.mean([r.shuffled_mean for r in reps]))
        rows.append(row)

    flag_rates = {}
    for measure, by_q in grouped.items():
        all_reps = [r for reps in by_q.values() for r in reps]
        entry = {
            "overall": {
                "n": len(all_reps),
                "n_flagged": sum(r.flagged for r in all_reps),
                "fraction": sum(r.flagged for r in all_reps) / len(all_reps),
            }
        }
        for q in quartiles:
            reps = by_q.get(q, [])
            entry[f"quartile_{q}"] = {
                "n": len(reps),
                "n_flagged": sum(r.flagged for r in reps),
                "fraction": sum(r.flagged for r in reps) / len(reps) if reps else float("nan"),
            }
        flag_rates[measure] = entry
    return QuartileSummary(rows=rows, flag_rates=flag_rates)
