"""Batch orchestration over a universe of series.

Every run emits, per ticker, the descriptive-stats row, GHE summary and
qH(q) curve, the MF-DFA result JSON and the surrogate reports; at the
universe level it emits the volume/Hurst summary table, the quartile
multifractality aggregates, flag rates, figure-data files and a manifest
that suffices to reproduce the run. All randomness derives from the
single pipeline seed: each ticker's surrogate base seed is the first 8
bytes of ``sha256("<seed>:<ticker>")`` (big-endian), and the figure
benchmark uses the label ``benchmark``.

Outputs are deterministic: tickers are processed independently (optionally
in worker processes), results are gathered and written in sorted ticker
order, and floats are serialized with round-trip-exact ``repr``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DataError, EmptyUniverse, PipelineFailure
from .figures import FIGURE_IDS, TickerResult, emit_figure_data, write_csv
from .ghe import GheConfig, estimate_hurst
from .ingest import assign_quartiles, load_universe, log_returns, validate_continuity
from .mfdfa import MfdfaConfig, analyze
from .stats import describe, describe_values
from .surrogate import SurrogateConfig, aggregate_by_quartile, surrogate_test

log = logging.getLogger(__name__)

MANIFEST_SCHEMA = "multifract.manifest.v1"
SEED_DERIVATION = (
    "per-ticker surrogate base_seed = int.from_bytes(sha256('<seed>:<ticker>')[:8], 'big'); "
    "figure benchmark uses the label 'benchmark'"
)

STAT_ROWS = (
    ("Obs.", lambda s: s.n),
    ("Mean", lambda s: s.mean),
    ("Median", lambda s: s.median),
    ("Min", lambda s: s.min),
    ("Max", lambda s: s.max),
    ("Std. Dev.", lambda s: s.std_dev),
    ("Skewness", lambda s: s.skewness),
    ("Kurtosis", lambda s: s.kurtosis),
    ("Jarque-Bera", lambda s: s.jarque_bera),
)


@dataclass
class PipelineConfig:
    input: Path
    output_dir: Path
    seed: int = 0
    ghe: GheConfig = field(default_factory=GheConfig)
    mfdfa: MfdfaConfig = field(default_factory=MfdfaConfig)
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    emit_figures: bool = True
    workers: int = 1
    failure_budget: float = 0.10
    self_check: bool = False


def derived_seed(seed: int, label: str) -> int:
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def process_ticker(raw, ghe_config, mfdfa_config, surrogate_config) -> TickerResult:
    """Full per-ticker analysis: stats, GHE, MF-DFA, surrogate test."""
    series = log_returns(raw)
    return TickerResult(
        ticker=raw.ticker,
        n=series.n,
        stats=describe(series),
        ghe=estimate_hurst(series, ghe_config),
        mfdfa=analyze(series, mfdfa_config),
        surrogate=surrogate_test(series, surrogate_config, mfdfa_config),
    )


def _process_job(job):
    raw, ghe_config, mfdfa_config, surrogate_config = job
    try:
        return "ok", process_ticker(raw, ghe_config, mfdfa_config, surrogate_config)
    except Exception as exc:  # isolated per ticker; summarized in the manifest
        return "err", (raw.ticker, f"{type(exc).__name__}: {exc}")


def _json_dump(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _table(out_tables: Path, name: str, columns, rows, json_rows=None) -> None:
    """CSV plus a JSON twin with a versioned schema field."""
    write_csv(out_tables / f"{name}.csv", columns, rows)
    payload = {
        "schema": f"multifract.table.{name}.v1",
        "columns": list(columns),
        "rows": json_rows
        if json_rows is not None
        else [
            {c: (v if not isinstance(v, (np.floating, np.integer)) else v.item()) for c, v in zip(columns, row)}
            for row in rows
        ],
    }
    _json_dump(out_tables / f"{name}.json", payload)


def _config_dicts(config: PipelineConfig) -> dict:
    return {
        "ghe": {
            "q_grid": [float(q) for q in config.ghe.q_grid],
            "tau_max_range": [int(v) for v in config.ghe.tau_max_range],
            "nu": config.ghe.nu,
        },
        "mfdfa": {
            "q_grid": [float(q) for q in config.mfdfa.q_grid],
            "scales": None if config.mfdfa.scales is None else [int(s) for s in config.mfdfa.scales],
            "detrend_order": config.mfdfa.detrend_order,
        },
        "surrogate": {
            "n_shuffles": config.surrogate.n_shuffles,
            "ci_low": config.surrogate.ci_low,
            "ci_high": config.surrogate.ci_high,
            "base_seed": config.surrogate.base_seed,
        },
    }


def config_from_manifest(manifest: dict, output_dir, input_path=None) -> PipelineConfig:
    """Rebuild a PipelineConfig from a manifest (reproducibility hook)."""
    cfg = manifest["configs"]
    return PipelineConfig(
        input=Path(input_path if input_path is not None else manifest["input"]),
        output_dir=Path(output_dir),
        seed=manifest["seed"],
        ghe=GheConfig(
            q_grid=tuple(cfg["ghe"]["q_grid"]),
            tau_max_range=tuple(cfg["ghe"]["tau_max_range"]),
            nu=cfg["ghe"]["nu"],
        ),
        mfdfa=MfdfaConfig(
            q_grid=tuple(cfg["mfdfa"]["q_grid"]),
            scales=None if cfg["mfdfa"]["scales"] is None else tuple(cfg["mfdfa"]["scales"]),
            detrend_order=cfg["mfdfa"]["detrend_order"],
        ),
        surrogate=SurrogateConfig(**cfg["surrogate"]),
        emit_figures=manifest["emit_figures"],
        workers=manifest["workers"],
        failure_budget=manifest["failure_budget"],
    )


def _surrogate_columns(config: SurrogateConfig, measure_label: str):
    return (
        "Crypto",
        measure_label,
        f"{measure_label} shuffled",
        f"CL_{config.ci_low:g}",
        f"CL_{config.ci_high:g}",
        "flag",
    )


def write_surrogate_tables(
    results,
    assignments,
    surrogate_config,
    out_tables: Path,
    measures=("delta_h", "delta_alpha"),
):
    """Supplementary-table style per-ticker rows plus quartile aggregates.

    The quartile aggregate and flag-rate tables need both measures; they
    are skipped when ``measures`` selects only one.
    """
    results = sorted(results, key=lambda r: r.ticker)
    labels = {"delta_h": "Delta H", "delta_alpha": "Delta alpha"}
    for measure, label in ((m, labels[m]) for m in measures):
        rows = []
        json_rows = []
        for r in results:
            rep = getattr(r.surrogate, measure)
            rows.append(
                (r.ticker, rep.original, rep.shuffled_mean, rep.cl_low, rep.cl_high, rep.flagged)
            )
            json_rows.append(
                {
                    "ticker": r.ticker,
                    "measure": measure,
                    "original": rep.original,
                    "shuffled_mean": rep.shuffled_mean,
                    "cl_low": rep.cl_low,
                    "cl_high": rep.cl_high,
                    "flagged": rep.flagged,
                }
            )
        _table(
            out_tables,
            f"surrogate_{measure}",
            _surrogate_columns(surrogate_config, label),
            rows,
            json_rows=json_rows,
        )

    if set(measures) != {"delta_h", "delta_alpha"}:
        return None
    reports = [rep for r in results for rep in (r.surrogate.delta_h, r.surrogate.delta_alpha)]
    summary = aggregate_by_quartile(reports, assignments)
    _table(
        out_tables,
        "quartile_multifractality",
        ("Quartile", "Delta H", "Delta H shuffled", "Delta alpha", "Delta alpha shuffled"),
        [
            (
                f"Quartile {row['quartile']}",
                row["delta_h_original"],
                row["delta_h_shuffled"],
                row["delta_alpha_original"],
                row["delta_alpha_shuffled"],
            )
            for row in summary.rows
        ],
        json_rows=summary.rows,
    )
    rate_rows = []
    for measure in sorted(summary.flag_rates):
        for group in sorted(summary.flag_rates[measure]):
            cell = summary.flag_rates[measure][group]
            rate_rows.append((measure, group, cell["n"], cell["n_flagged"], cell["fraction"]))
    _table(out_tables, "flag_rates", ("measure", "group", "n", "n_flagged", "fraction"), rate_rows)
    return summary


def _write_per_ticker(out_dir: Path, result: TickerResult) -> None:
    tdir = out_dir / "per_ticker" / result.ticker
    tdir.mkdir(parents=True, exist_ok=True)
    write_csv(
        tdir / "qhq_curve.csv",
        ("q", "qhq"),
        [(float(q), float(v)) for q, v in zip(result.ghe.q_grid, result.ghe.qhq)],
    )
    _json_dump(
        tdir / "mfdfa.json",
        {"schema": "multifract.mfdfa.v1", "ticker": result.ticker, **result.mfdfa.to_dict()},
    )
    su = result.surrogate
    _json_dump(
        tdir / "surrogate.json",
        {
            "schema": "multifract.surrogate.v1",
            "ticker": result.ticker,
            "n_shuffles": su.n_shuffles,
            "n_failed": su.n_failed,
            "q_grid": [float(q) for q in result.mfdfa.q_grid],
            "shuffled_mean_h_of_q": [float(v) for v in su.shuffled_mean_h_of_q],
            "reports": {
                name: {
                    "original": rep.original,
                    "shuffled_mean": rep.shuffled_mean,
                    "cl_low": rep.cl_low,
                    "cl_high": rep.cl_high,
                    "flagged": rep.flagged,
                }
                for name, rep in (("delta_h", su.delta_h), ("delta_alpha", su.delta_alpha))
            },
        },
    )


def _q_column(results, q: float):
    out = []
    for r in results:
        idx = int(np.flatnonzero(np.isclose(r.ghe.q_grid, q))[0])
        out.append((float(r.ghe.h_of_q[idx]), float(r.ghe.h_stderr[idx])))
    return out


def run_pipeline(config: PipelineConfig) -> Path:
    """Run the batch analysis; returns the report directory.

    Per-ticker failures are isolated and recorded in the manifest; the
    pipeline raises PipelineFailure (after writing everything it can)
    only when the failure fraction exceeds the budget.
    """
    for q in (1.0, 2.0):
        if not np.any(np.isclose(np.asarray(config.ghe.q_grid, dtype=float), q)):
            raise ValueError(f"pipeline GHE config must include q={q:g} for the summary tables")

    out_dir = Path(config.output_dir)
    tables_dir = out_dir / "tables"
    tables_dir.mkdir(parents=True, exist_ok=True)

    universe = sorted(load_universe(config.input), key=lambda s: s.ticker)
    if len(universe) < 4:
        raise EmptyUniverse(f"pipeline needs at least 4 series, got {len(universe)}")

    failures: dict[str, str] = {}
    validated = []
    for raw in universe:
        try:
            validated.append(validate_continuity(raw))
        except DataError as exc:
            failures[raw.ticker] = f"{type(exc).__name__}: {exc}"
            log.warning("skipping %s: %s", raw.ticker, exc)

    assignments = assign_quartiles(validated) if len(validated) >= 4 else []

    jobs = [
        (
            raw,
            config.ghe,
            config.mfdfa,
            replace(config.surrogate, base_seed=derived_seed(config.seed, raw.ticker)),
        )
        for raw in validated
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_process_job, jobs))
    else:
        outcomes = [_process_job(job) for job in jobs]

    results: list[TickerResult] = []
    for status, payload in outcomes:
        if status == "ok":
            results.append(payload)
        else:
            ticker, msg = payload
            failures[ticker] = msg
            log.warning("ticker %s failed: %s", ticker, msg)
    results.sort(key=lambda r: r.ticker)

    notes = []
    amap = {a.ticker: a for a in assignments}
    if results:
        _table(
            tables_dir,
            "descriptive_stats",
            ("Crypto", "Obs.", "Mean", "Median", "Min", "Max", "Std. Dev.", "Skewness", "Kurtosis", "Jarque-Bera"),
            [
                (r.ticker, r.stats.n, r.stats.mean, r.stats.median, r.stats.min, r.stats.max,
                 r.stats.std_dev, r.stats.skewness, r.stats.kurtosis, r.stats.jarque_bera)
                for r in results
            ],
        )
        h1 = _q_column(results, 1.0)
        h2 = _q_column(results, 2.0)
        _table(
            tables_dir,
            "ghe_summary",
            ("Crypto", "Log vol.", "Quartile", "H(1)", "H(1) stderr", "H(2)", "H(2) stderr"),
            [
                (r.ticker, amap[r.ticker].mean_log_volume, amap[r.ticker].quartile,
                 h1[i][0], h1[i][1], h2[i][0], h2[i][1])
                for i, r in enumerate(results)
            ],
        )
        try:
            batteries = {
                "Log vol.": describe_values([amap[r.ticker].mean_log_volume for r in results]),
                "q=1": describe_values([v[0] for v in h1]),
                "q=2": describe_values([v[0] for v in h2]),
            }
            _table(
                tables_dir,
                "summary_table1",
                ("statistic", "Log vol.", "q=1", "q=2"),
                [
                    (name, getter(batteries["Log vol."]), getter(batteries["q=1"]), getter(batteries["q=2"]))
                    for name, getter in STAT_ROWS
                ],
            )
        except DataError as exc:
            notes.append(f"summary_table1 skipped: {exc}")

        try:
            write_surrogate_tables(results, assignments, config.surrogate, tables_dir)
        except DataError as exc:
            notes.append(f"surrogate tables skipped: {exc}")

        for r in results:
            _write_per_ticker(out_dir, r)

        if config.emit_figures:
            figures_dir = out_dir / "figures"
            figures_dir.mkdir(parents=True, exist_ok=True)
            for figure_id in FIGURE_IDS:
                emit_figure_data(
                    results,
                    assignments,
                    figure_id,
                    figures_dir,
                    seed=derived_seed(config.seed, "benchmark"),
                    mfdfa_config=config.mfdfa,
                )

    manifest = {
        "schema": MANIFEST_SCHEMA,
        "package_version": __version__,
        "seed": config.seed,
        "input": str(config.input),
        "emit_figures": config.emit_figures,
        "workers": config.workers,
        "failure_budget": config.failure_budget,
        "seed_derivation": SEED_DERIVATION,
        "configs": _config_dicts(config),
        "tickers": [r.ticker for r in results],
        "failures": dict(sorted(failures.items())),
        "notes": notes,
        "n_series": len(universe),
    }
    _json_dump(out_dir / "manifest.json", manifest)

    if len(failures) > config.failure_budget * len(universe):
        raise PipelineFailure(failures, len(universe))
    if config.self_check:
        self_check(out_dir)
    return out_dir


def _read_table(path: Path):
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(line for line in fh if not line.startswith("#"))]
    return rows[0], rows[1:]


def _close(a: float, b: float, tol: float = 1e-12) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def self_check(out_dir) -> dict:
    """Re-derive every aggregate table from the per-ticker records.

    Raises DataError on any mismatch beyond 1e-12; returns the number of
    values checked per table.
    """
    out_dir = Path(out_dir)
    tables = out_dir / "tables"
    checked = {}

    header, rows = _read_table(tables / "ghe_summary.csv")
    col = {name: i for i, name in enumerate(header)}
    logvol = [float(r[col["Log vol."]]) for r in rows]
    h1 = [float(r[col["H(1)"]]) for r in rows]
    h2 = [float(r[col["H(2)"]]) for r in rows]
    quartile_of = {r[col["Crypto"]]: int(r[col["Quartile"]]) for r in rows}

    if (tables / "summary_table1.csv").exists():
        sheader, srows = _read_table(tables / "summary_table1.csv")
        batteries = {
            "Log vol.": describe_values(logvol),
            "q=1": describe_values(h1),
            "q=2": describe_values(h2),
        }
        n_checked = 0
        for row in srows:
            name = row[0]
            getter = dict(STAT_ROWS)[name]
            for j, colname in enumerate(sheader[1:], start=1):
                expected = float(getter(batteries[colname]))
                if not _close(expected, float(row[j])):
                    raise DataError(
                        f"self-check: summary_table1 {name}/{colname}: "
                        f"recomputed {expected!r} != emitted {row[j]}"
                    )
                n_checked += 1
        checked["summary_table1"] = n_checked

    measures = {}
    for measure in ("delta_h", "delta_alpha"):
        mheader, mrows = _read_table(tables / f"surrogate_{measure}.csv")
        measures[measure] = {
            r[0]: (float(r[1]), float(r[2]), r[5].strip() == "*") for r in mrows
        }
        for r in mrows:
            srec = json.loads((out_dir / "per_ticker" / r[0] / "surrogate.json").read_text())
            rep = srec["reports"][measure]
            for label, emitted, stored in (
                ("original", float(r[1]), rep["original"]),
                ("shuffled_mean", float(r[2]), rep["shuffled_mean"]),
            ):
                if not _close(emitted, stored):
                    raise DataError(
                        f"self-check: surrogate_{measure} {r[0]} {label}: "
                        f"table {emitted!r} != per-ticker record {stored!r}"
                    )

    qheader, qrows = _read_table(tables / "quartile_multifractality.csv")
    n_checked = 0
    for row in qrows:
        q = int(row[0].split()[-1])
        tickers = [t for t, k in quartile_of.items() if k == q and t in measures["delta_h"]]
        expected = (
            float(np.mean([measures["delta_h"][t][0] for t in tickers])),
            float(np.mean([measures["delta_h"][t][1] for t in tickers])),
            float(np.mean([measures["delta_alpha"][t][0] for t in tickers])),
            float(np.mean([measures["delta_alpha"][t][1] for t in tickers])),
        )
        for j, exp in enumerate(expected, start=1):
            if not _close(exp, float(row[j])):
                raise DataError(
                    f"self-check: quartile_multifractality {row[0]} col {qheader[j]}: "
                    f"recomputed {exp!r} != emitted {row[j]}"
                )
            n_checked += 1
    checked["quartile_multifractality"] = n_checked

    rheader, rrows = _read_table(tables / "flag_rates.csv")
    n_checked = 0
    for measure, group, n, n_flagged, fraction in rrows:
        flags = measures[measure]
        if group == "overall":
            subset = list(flags)
        else:
            q = int(group.split("_")[-1])
            subset = [t for t, k in quartile_of.items() if k == q and t in flags]
        exp_n = len(subset)
        exp_flagged = sum(flags[t][2] for t in subset)
        if exp_n != int(n) or exp_flagged != int(n_flagged) or not _close(
            exp_flagged / exp_n, float(fraction)
        ):
            raise DataError(f"self-check: flag_rates {measure}/{group} mismatch")
        n_checked += 3
    checked["flag_rates"] = n_checked
    return checked
