import csv
from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pytest

from multifract.synth import SynthSpec, generate


def write_series_csv(path: Path, prices, volumes=None, start=date(2020, 1, 1)):
    """Write an ingest-format CSV with contiguous daily dates."""
    prices = list(prices)
    volumes = list(volumes) if volumes is not None else [1000.0] * len(prices)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("date", "price", "volume"))
        for i, (p, v) in enumerate(zip(prices, volumes)):
            writer.writerow(((start + timedelta(days=i)).isoformat(), repr(float(p)), repr(float(v))))
    return Path(path)


def returns_to_prices(values):
    return 100.0 * np.exp(np.concatenate([[0.0], np.cumsum(values)]) / 100.0)


def build_synthetic_universe(directory: Path, specs, n=789):
    """specs: iterable of (name, kind, hurst, volume, seed). Returns the dir."""
    directory.mkdir(parents=True, exist_ok=True)
    for name, kind, hurst, volume, seed in specs:
        series = generate(SynthSpec(kind=kind, n=n, hurst=hurst, seed=seed))
        write_series_csv(directory / f"{name}.csv", returns_to_prices(series.values), [volume] * (n + 1))
    return directory


@pytest.fixture
def eight_series_universe(tmp_path):
    """4 fGn H=0.5 high-volume + 4 fGn H=0.7 low-volume tickers."""
    specs = [
        ("HVA", "fgn", 0.5, 9000.0, 0),
        ("HVB", "fgn", 0.5, 5000.0, 1),
        ("HVC", "fgn", 0.5, 3000.0, 2),
        ("HVD", "fgn", 0.5, 2000.0, 3),
        ("LVA", "fgn", 0.7, 900.0, 4),
        ("LVB", "fgn", 0.7, 500.0, 5),
        ("LVC", "fgn", 0.7, 300.0, 6),
        ("LVD", "fgn", 0.7, 100.0, 7),
    ]
    return build_synthetic_universe(tmp_path / "universe", specs)
