"""Localization error statistics, empirical CDFs and method comparison."""
from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np

from .grid import GridMap


@dataclass(frozen=True)
class ErrorStats:
    mean: float
    rms: float
    q80: float
    q95: float
    count: int


def error_series(estimates: Sequence[tuple[int, int]], truth: Sequence[tuple[int, int]], grid: GridMap) -> np.ndarray:
    """Per-step Euclidean distance between estimated and true cell centers (m)."""
    est = np.asarray(estimates, dtype=np.int64).reshape(-1, 2)
    tru = np.asarray(truth, dtype=np.int64).reshape(-1, 2)
    if len(est) != len(tru):
        raise ValueError(f"length mismatch: {len(est)} estimates vs {len(tru)} truth cells")
    return np.hypot(est[:, 0] - tru[:, 0], est[:, 1] - tru[:, 1]) * grid.cell_size


def stats(s) -> ErrorStats:
    """Mean, RMS and linearly interpolated 80%/95% quantiles."""
    s = np.asarray(s, dtype=np.float64).ravel()
    if s.size == 0:
        raise ValueError("empty error series")
    if np.any(~np.isfinite(s)) or np.any(s < 0):
        raise ValueError("errors must be finite and non-negative")
    s = np.sort(s)
    mean = float(s.mean())
    rms = float(np.sqrt(np.mean(s * s)))
    q80, q95 = (float(q) for q in np.quantile(s, [0.8, 0.95], method="linear"))
    # summation-order round-off can flip mean > rms on constant series
    return ErrorStats(mean, max(rms, mean), q80, q95, int(s.size))


def cdf(s) -> tuple[np.ndarray, np.ndarray]:
    """Right-continuous empirical CDF: distinct sorted errors and fraction <= each."""
    s = np.sort(np.asarray(s, dtype=np.float64).ravel())
    if s.size == 0:
        raise ValueError("empty error series")
    values, counts = np.unique(s, return_counts=True)
    frac = np.cumsum(counts) / s.size
    frac[-1] = 1.0
    return values, frac


def percent_smaller(a: float, b: float) -> float:
    """How much smaller ``b`` is than ``a``, in percent of ``a``."""
    if a == 0:
        return 0.0 if b == 0 else -math.inf
    return 100.0 * (a - b) / a


def compare(runs: Mapping[str, ErrorStats]) -> dict:
    """Pairwise percent differences in RMS and q95, and methods ordered by RMS."""
    if len(runs) < 2:
        raise ValueError("compare needs at least two runs")
    pairs = []
    for (na, a), (nb, b) in itertools.permutations(runs.items(), 2):
        pairs.append(
            {
                "a": na,
                "b": nb,
                "rms_pct_smaller": percent_smaller(a.rms, b.rms),
                "q95_pct_smaller": percent_smaller(a.q95, b.q95),
            }
        )
    order = sorted(runs, key=lambda k: (runs[k].rms, k))
    return {"pairs": pairs, "order_by_rms": order}


def write_stats_json(path, name: str, st: ErrorStats, config_hash: str = "") -> None:
    doc = {"run": name, "config_hash": config_hash, **asdict(st), "samples": st.count}
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def read_stats_json(path) -> tuple[str, ErrorStats]:
    with open(path) as f:
        doc = json.load(f)
    return doc["run"], ErrorStats(doc["mean"], doc["rms"], doc["q80"], doc["q95"], doc["count"])


def write_cdf_csv(path, s) -> None:
    values, frac = cdf(s)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["error_m", "cum_fraction"])
        for v, p in zip(values, frac):
            w.writerow([repr(float(v)), repr(float(p))])


def write_cdf_dat(path, s) -> None:
    """Two whitespace-separated numeric columns, no header (gnuplot)."""
    values, frac = cdf(s)
    with open(path, "w") as f:
        for v, p in zip(values, frac):
            f.write(f"{float(v)!r} {float(p)!r}\n")
