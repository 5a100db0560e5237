"""Batch CLI: stats, ghe, mfdfa, surrogate, simulate, pipeline.

Exit codes: 0 success, 1 usage error, 2 data error, 3 pipeline failure
over the budget. A ``--config`` file holds ``key = value`` lines (``#``
comments) overriding defaults, e.g. ``surrogate.n_shuffles = 500`` or
``mfdfa.q_grid = -4:4:0.25``; explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .errors import DataError, PipelineFailure
from .figures import write_csv
from .ghe import DEFAULT_Q_GRID, GheConfig, estimate_hurst
from .ingest import assign_quartiles, load_universe, log_returns, validate_continuity
from .mfdfa import MfdfaConfig, analyze
from .pipeline import (
    PipelineConfig,
    derived_seed,
    process_ticker,
    run_pipeline,
    self_check,
    write_surrogate_tables,
)
from .stats import describe
from .surrogate import SurrogateConfig
from .synth import KINDS, SynthSpec, generate

log = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_float_list(text: str) -> tuple:
    text = text.strip()
    if ":" in text:
        lo, hi, step = (float(v) for v in text.split(":"))
        count = int(round((hi - lo) / step))
        grid = [lo + i * step for i in range(count + 1)]
        return tuple(round(v, 12) for v in grid)
    return tuple(float(v) for v in text.split(","))


def _parse_int_list(text: str) -> tuple:
    return tuple(int(v) for v in text.strip().split(","))


def _parse_bool(text: str) -> bool:
    val = text.strip().lower()
    if val in ("true", "1", "yes", "on"):
        return True
    if val in ("false", "0", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


_CONFIG_KEYS = {
    "seed": int,
    "workers": int,
    "emit_figures": _parse_bool,
    "failure_budget": float,
    "ghe.q_grid": _parse_float_list,
    "ghe.tau_max_range": _parse_int_list,
    "ghe.nu": int,
    "mfdfa.q_grid": _parse_float_list,
    "mfdfa.scales": _parse_int_list,
    "mfdfa.detrend_order": int,
    "surrogate.n_shuffles": int,
    "surrogate.ci_low": float,
    "surrogate.ci_high": float,
    "surrogate.base_seed": int,
}


def load_config_file(path) -> dict:
    """Parse ``key = value`` lines into typed overrides."""
    overrides = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{line_no}: unknown config key {key!r}")
        try:
            overrides[key] = _CONFIG_KEYS[key](value)
        except (ValueError, TypeError):
            raise UsageError(f"{path}:{line_no}: bad value for {key}: {value!r}") from None
    return overrides


def _configs_from(overrides: dict):
    try:
        ghe = GheConfig(
            q_grid=overrides.get("ghe.q_grid", DEFAULT_Q_GRID),
            tau_max_range=overrides.get("ghe.tau_max_range", (5, 19)),
            nu=overrides.get("ghe.nu", 1),
        )
        mfdfa = MfdfaConfig(
            q_grid=overrides.get("mfdfa.q_grid", MfdfaConfig().q_grid),
            scales=overrides.get("mfdfa.scales"),
            detrend_order=overrides.get("mfdfa.detrend_order", 1),
        )
        surrogate = SurrogateConfig(
            n_shuffles=overrides.get("surrogate.n_shuffles", 1000),
            ci_low=overrides.get("surrogate.ci_low", 0.025),
            ci_high=overrides.get("surrogate.ci_high", 0.975),
            base_seed=overrides.get("surrogate.base_seed", 0),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return ghe, mfdfa, surrogate


def _overrides(args) -> dict:
    return load_config_file(args.config) if getattr(args, "config", None) else {}


def _load_validated(path):
    universe = sorted(load_universe(path), key=lambda s: s.ticker)
    return [log_returns(validate_continuity(raw)) for raw in universe], universe


def _emit(path, text):
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_simulate(args) -> int:
    spec = SynthSpec(
        kind=args.kind,
        n=args.n,
        hurst=args.hurst,
        cascade_weight=args.cascade_weight,
        seed=args.seed,
    )
    series = generate(spec)
    prices = 100.0 * np.exp(np.concatenate([[0.0], np.cumsum(series.values)]) / 100.0)
    start = date.fromisoformat(args.start_date)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("date", "price", "volume"))
        for i, p in enumerate(prices):
            writer.writerow(((start + timedelta(days=i)).isoformat(), repr(float(p)), repr(float(args.volume))))
    log.info("wrote %s (%d rows)", out, len(prices))
    return 0


STATS_COLUMNS = ("Crypto", "Obs.", "Mean", "Median", "Min", "Max", "Std. Dev.", "Skewness", "Kurtosis", "Jarque-Bera")


def cmd_stats(args) -> int:
    series_list, _ = _load_validated(args.input)
    lines = [",".join(STATS_COLUMNS)]
    for series in series_list:
        s = describe(series)
        row = (series.ticker, s.n, s.mean, s.median, s.min, s.max, s.std_dev, s.skewness, s.kurtosis, s.jarque_bera)
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    _emit(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_ghe(args) -> int:
    overrides = _overrides(args)
    ghe_cfg, _, _ = _configs_from(overrides)
    q_values = _parse_float_list(args.q)
    series_list, universe = _load_validated(args.input)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    table_cfg = replace(ghe_cfg, q_grid=q_values)
    columns = ["Crypto"]
    for q in q_values:
        columns += [f"H({q:g})", f"H({q:g}) stderr"]
    rows = []
    curve_results = {}
    for series in series_list:
        res = estimate_hurst(series, table_cfg)
        row = [series.ticker]
        for i in range(len(q_values)):
            row += [float(res.h_of_q[i]), float(res.h_stderr[i])]
        rows.append(row)
        if args.curve:
            curve_results[series.ticker] = estimate_hurst(series, ghe_cfg)
    write_csv(out_dir / "ghe.csv", columns, rows)

    if args.curve:
        assignments = assign_quartiles(universe)
        by_quartile: dict[int, list] = {}
        for a in assignments:
            if a.ticker in curve_results:
                by_quartile.setdefault(a.quartile, []).append(curve_results[a.ticker].qhq)
        q_grid = np.asarray(ghe_cfg.q_grid, dtype=float)
        for quartile in sorted(by_quartile):
            mean_curve = np.mean(by_quartile[quartile], axis=0)
            write_csv(
                out_dir / f"qhq_quartile_{quartile}.csv",
                ("q", "qhq"),
                [(float(q), float(v)) for q, v in zip(q_grid, mean_curve)],
            )
    log.info("wrote GHE tables to %s", out_dir)
    return 0


def cmd_mfdfa(args) -> int:
    overrides = _overrides(args)
    _, mfdfa_cfg, _ = _configs_from(overrides)
    series_list, _ = _load_validated(args.input)
    if args.ticker:
        matches = [s for s in series_list if s.ticker == args.ticker]
        if not matches:
            raise DataError(f"ticker {args.ticker!r} not found in {args.input}")
        series_list = matches
    payload = []
    for series in series_list:
        res = analyze(series, mfdfa_cfg)
        payload.append({"schema": "multifract.mfdfa.v1", "ticker": series.ticker, **res.to_dict()})
    text = json.dumps(payload[0] if args.ticker else payload, indent=2, sort_keys=True) + "\n"
    _emit(args.out, text)
    return 0


def cmd_surrogate(args) -> int:
    overrides = _overrides(args)
    ghe_cfg, mfdfa_cfg, surr_cfg = _configs_from(overrides)
    if args.n is not None:
        surr_cfg = replace(surr_cfg, n_shuffles=args.n)
    measures = tuple(m.strip() for m in args.measures.split(","))
    for m in measures:
        if m not in ("delta_h", "delta_alpha"):
            raise UsageError(f"unknown measure {m!r}")
    _, universe = _load_validated(args.input)
    out_dir = Path(args.out)
    (out_dir / "tables").mkdir(parents=True, exist_ok=True)
    assignments = assign_quartiles(universe)
    results = []
    for raw in universe:
        cfg = replace(surr_cfg, base_seed=derived_seed(args.seed, raw.ticker))
        results.append(process_ticker(raw, ghe_cfg, mfdfa_cfg, cfg))
    write_surrogate_tables(results, assignments, surr_cfg, out_dir / "tables", measures=measures)
    log.info("wrote surrogate tables to %s", out_dir / "tables")
    return 0


def cmd_pipeline(args) -> int:
    overrides = _overrides(args)
    ghe_cfg, mfdfa_cfg, surr_cfg = _configs_from(overrides)
    config = PipelineConfig(
        input=Path(args.input),
        output_dir=Path(args.out),
        seed=args.seed if args.seed is not None else overrides.get("seed", 0),
        ghe=ghe_cfg,
        mfdfa=mfdfa_cfg,
        surrogate=surr_cfg,
        emit_figures=args.emit_figures
        if args.emit_figures is not None
        else overrides.get("emit_figures", True),
        workers=args.workers if args.workers is not None else overrides.get("workers", 1),
        failure_budget=args.failure_budget
        if args.failure_budget is not None
        else overrides.get("failure_budget", 0.10),
        self_check=args.self_check,
    )
    out = run_pipeline(config)
    print(out)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="multifract", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic series as an ingest-format CSV")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--n", type=int, required=True, help="number of returns")
    p.add_argument("--hurst", type=float, default=None)
    p.add_argument("--cascade-weight", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start-date", default="2020-01-01")
    p.add_argument("--volume", type=float, default=1000.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("stats", help="descriptive statistics, one CSV row per ticker")
    p.add_argument("--input", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("ghe", help="generalized Hurst exponents")
    p.add_argument("--input", required=True)
    p.add_argument("--q", default="1,2", help="comma list of q values for the table")
    p.add_argument("--curve", action="store_true", help="also emit quartile-averaged qH(q) curves")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ghe)

    p = sub.add_parser("mfdfa", help="MF-DFA result JSON per series")
    p.add_argument("--input", required=True)
    p.add_argument("--ticker", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_mfdfa)

    p = sub.add_parser("surrogate", help="shuffling surrogate tests")
    p.add_argument("--input", required=True)
    p.add_argument("--n", type=int, default=None, help="number of shuffles")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--measures", default="delta_h,delta_alpha")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_surrogate)

    p = sub.add_parser("pipeline", help="end-to-end batch run")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--emit-figures", dest="emit_figures", action="store_true", default=None)
    p.add_argument("--no-emit-figures", dest="emit_figures", action="store_false")
    p.add_argument("--self-check", action="store_true")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--failure-budget", type=float, default=None)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except PipelineFailure as exc:
        print(f"pipeline failure: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
