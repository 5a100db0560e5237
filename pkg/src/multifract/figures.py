"""Figure-data emitters: CSV point sets and density grids, no rendering.

Each figure id maps to one CSV file. Density panels are Gaussian-kernel
smoothed grids on 256 evenly spaced points over the observed range, with
the normal-reference bandwidth h = 1.06 * sd * n^(-1/5) recorded in the
comment header.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, MissingAssignment
from .ghe import GheConfig, GheResult, estimate_hurst
from .mfdfa import MfdfaResult, analyze
from .stats import DescriptiveStats
from .surrogate import SurrogateTestResult
from .synth import SynthSpec, generate_fgn

FIGURE_IDS = (
    "hurst_vs_volume_q1",
    "hurst_vs_volume_q2",
    "qhq_by_quartile",
    "qhq_shuffled_by_quartile",
    "kurtosis_vs_delta_h",
    "kurtosis_vs_delta_alpha",
)

DENSITY_GRID_SIZE = 256
BENCHMARK_HURST = 0.5


@dataclass
class TickerResult:
    """Per-ticker analysis bundle consumed by the report emitters."""

    ticker: str
    n: int
    stats: DescriptiveStats
    ghe: GheResult
    mfdfa: MfdfaResult
    surrogate: SurrogateTestResult


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "*" if value else ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, columns, rows, comments=()) -> Path:
    """Write rows (sequences) with repr-exact floats; '#' comment header."""
    import csv

    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def normal_reference_bandwidth(values) -> float:
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        return 0.0
    return 1.06 * float(np.std(x, ddof=1)) * x.size ** (-0.2)


def density_grid(values, gridsize: int = DENSITY_GRID_SIZE):
    """(grid, density, bandwidth) over the observed range; None if degenerate."""
    x = np.asarray(values, dtype=float)
    h = normal_reference_bandwidth(x)
    if h == 0.0 or np.ptp(x) == 0:
        return None
    grid = np.linspace(x.min(), x.max(), gridsize)
    z = (grid[:, None] - x[None, :]) / h
    dens = np.exp(-0.5 * z**2).sum(axis=1) / (x.size * h * np.sqrt(2 * np.pi))
    return grid, dens, h


def _quartile_of(assignments):
    return {a.ticker: a for a in assignments}


def _require(results, assignments):
    if not results:
        raise DataError("no results to emit")
    amap = _quartile_of(assignments)
    for r in results:
        if r.ticker not in amap:
            raise MissingAssignment(f"{r.ticker}: no quartile assignment")
    return amap


def _q_index(grid, q) -> int:
    idx = np.flatnonzero(np.isclose(np.asarray(grid, dtype=float), q))
    if idx.size == 0:
        raise DataError(f"q={q} not present in the configured q grid")
    return int(idx[0])


def _benchmark_series(results, seed):
    n = int(np.median([r.n for r in results]))
    return generate_fgn(SynthSpec(kind="fgn", n=n, hurst=BENCHMARK_HURST, seed=seed))


def _hurst_vs_volume(results, amap, out_path, q):
    rows = []
    comments = [
        f"x(point) = mean_log_volume, y(point) = H({q:g}); "
        f"x(density) = H({q:g}) grid, y(density) = kernel density",
        f"density: gaussian kernel on {DENSITY_GRID_SIZE} points over the observed range, "
        "normal-reference bandwidth h = 1.06*sd*n^(-1/5)",
    ]
    by_quartile: dict[int, list[float]] = {}
    for r in sorted(results, key=lambda r: r.ticker):
        a = amap[r.ticker]
        h = float(r.ghe.h_of_q[_q_index(r.ghe.q_grid, q)])
        rows.append(("point", a.quartile, r.ticker, a.mean_log_volume, h))
        by_quartile.setdefault(a.quartile, []).append(h)
    for quartile in sorted(by_quartile):
        est = density_grid(by_quartile[quartile])
        if est is None:
            comments.append(f"density quartile_{quartile}: degenerate sample, skipped")
            continue
        grid, dens, h = est
        comments.append(f"density quartile_{quartile}: bandwidth {h!r}")
        rows.extend(("density", quartile, "", float(x), float(d)) for x, d in zip(grid, dens))
    return write_csv(out_path, ("kind", "quartile", "ticker", "x", "y"), rows, comments)


def _mean_curves(results, amap, value_of):
    """Per-quartile mean of a per-ticker curve (requires a common q grid)."""
    grids = {tuple(np.asarray(r_grid, dtype=float)) for r_grid in (value_of(r)[0] for r in results)}
    if len(grids) != 1:
        raise DataError("tickers were analyzed on different q grids; cannot average")
    by_quartile: dict[int, list[np.ndarray]] = {}
    for r in results:
        by_quartile.setdefault(amap[r.ticker].quartile, []).append(np.asarray(value_of(r)[1]))
    q_grid = np.asarray(next(iter(grids)))
    return q_grid, {k: np.mean(v, axis=0) for k, v in sorted(by_quartile.items())}


def _qhq_by_quartile(results, amap, out_path, seed):
    q_grid, means = _mean_curves(results, amap, lambda r: (r.ghe.q_grid, r.ghe.qhq))
    bench = estimate_hurst(_benchmark_series(results, seed), GheConfig(q_grid=tuple(q_grid)))
    rows = []
    for quartile, curve in means.items():
        rows.extend((f"quartile_{quartile}", float(q), float(v)) for q, v in zip(q_grid, curve))
    rows.extend(
        (f"benchmark_h{BENCHMARK_HURST:g}", float(q), float(v))
        for q, v in zip(bench.q_grid, bench.qhq)
    )
    comments = [
        "qH(q) vs q averaged by volume quartile, plus a simulated "
        f"monofractal benchmark (fGn, H={BENCHMARK_HURST:g})"
    ]
    return write_csv(out_path, ("series", "q", "qhq"), rows, comments)


def _qhq_shuffled_by_quartile(results, amap, out_path, seed, mfdfa_config):
    q_grid, orig = _mean_curves(results, amap, lambda r: (r.mfdfa.q_grid, r.mfdfa.tau_of_q))
    _, shuf = _mean_curves(
        results,
        amap,
        lambda r: (r.mfdfa.q_grid, r.mfdfa.q_grid * r.surrogate.shuffled_mean_h_of_q - 1.0),
    )
    bench = analyze(_benchmark_series(results, seed), mfdfa_config)
    rows = []
    for quartile, curve in orig.items():
        rows.extend(
            (f"quartile_{quartile}", "original", float(q), float(v))
            for q, v in zip(q_grid, curve)
        )
        rows.extend(
            (f"quartile_{quartile}", "shuffled", float(q), float(v))
            for q, v in zip(q_grid, shuf[quartile])
        )
    rows.extend(
        (f"benchmark_h{BENCHMARK_HURST:g}", "original", float(q), float(v))
        for q, v in zip(bench.q_grid, bench.tau_of_q)
    )
    comments = [
        "qH(q)-1 vs q (MF-DFA mass exponent) on original and shuffled series, "
        "averaged by volume quartile, plus a simulated monofractal benchmark"
    ]
    return write_csv(out_path, ("series", "variant", "q", "tau"), rows, comments)


def _kurtosis_vs(results, amap, out_path, measure):
    rows = []
    for r in sorted(results, key=lambda r: r.ticker):
        rep = getattr(r.surrogate, measure)
        rows.append(
            (r.ticker, amap[r.ticker].quartile, r.stats.kurtosis, rep.original, rep.shuffled_mean)
        )
    columns = ("ticker", "quartile", "kurtosis", measure, f"{measure}_shuffled")
    return write_csv(out_path, columns, rows, ("one row per ticker",))


def emit_figure_data(results, assignments, figure_id, out_dir, *, seed=0, mfdfa_config=None):
    """Write one figure's data file into out_dir and return its path."""
    if figure_id not in FIGURE_IDS:
        raise ValueError(f"unknown figure_id {figure_id!r}, expected one of {FIGURE_IDS}")
    amap = _require(list(results), assignments)
    out_path = Path(out_dir) / f"{figure_id}.csv"
    results = list(results)
    if figure_id == "hurst_vs_volume_q1":
        return _hurst_vs_volume(results, amap, out_path, q=1.0)
    if figure_id == "hurst_vs_volume_q2":
        return _hurst_vs_volume(results, amap, out_path, q=2.0)
    if figure_id == "qhq_by_quartile":
        return _qhq_by_quartile(results, amap, out_path, seed)
    if figure_id == "qhq_shuffled_by_quartile":
        return _qhq_shuffled_by_quartile(results, amap, out_path, seed, mfdfa_config)
    if figure_id == "kurtosis_vs_delta_h":
        return _kurtosis_vs(results, amap, out_path, "delta_h")
    return _kurtosis_vs(results, amap, out_path, "delta_alpha")
