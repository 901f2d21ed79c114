"""Diagnostic datasets: stint scoring and possession histograms, RAPM densities.

Everything here returns data (bin edges, counts, density grids) and never
renders images.
"""
from __future__ import annotations

import csv
import math
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import EstimationError, ParameterError

KDE_GRID_POINTS = 512
MAX_BINS = 10_000


@dataclass(frozen=True)
class HistogramSpec:
    edges: np.ndarray
    counts: np.ndarray
    rule: str

    def __post_init__(self):
        if len(self.edges) != len(self.counts) + 1:
            raise ParameterError("need exactly one more edge than counts")
        if np.any(np.diff(self.edges) <= 0):
            raise ParameterError("histogram edges must be strictly increasing")

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def _samples(values, minimum: int = 1) -> np.ndarray:
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise ParameterError("no samples")
    if x.size < minimum:
        raise ParameterError(f"need at least {minimum} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ParameterError("samples must be finite")
    return x


def iqr(x) -> float:
    q75, q25 = np.percentile(x, [75, 25])
    return float(q75 - q25)


def fd_bin_width(samples) -> float:
    """Freedman-Diaconis width ``2 * IQR / N^(1/3)``."""
    x = _samples(samples)
    return 2.0 * iqr(x) / x.size ** (1.0 / 3.0)


def fd_histogram(samples) -> HistogramSpec:
    """Histogram with Freedman-Diaconis bins anchored at the sample minimum.

    A zero IQR falls back to one bin spanning the data (half a unit either
    side when the data are constant). A tiny IQR against a wide range would
    ask for an absurd bin count, so bins are capped at ``MAX_BINS``.
    """
    x = _samples(samples, minimum=2)
    lo, hi = float(x.min()), float(x.max())
    h = fd_bin_width(x)
    if h <= 0:
        warnings.warn("IQR is zero; using a single histogram bin", stacklevel=2)
        edges = np.array([lo, hi]) if hi > lo else np.array([lo - 0.5, lo + 0.5])
        return HistogramSpec(edges, np.array([x.size]), "single-bin")
    rule = "freedman-diaconis"
    if (hi - lo) / h > MAX_BINS:
        warnings.warn(f"Freedman-Diaconis asks for more than {MAX_BINS} bins; capping", stacklevel=2)
        h = (hi - lo) / MAX_BINS
        rule = "freedman-diaconis-capped"
    nbins = max(1, int(math.ceil((hi - lo) / h)))
    edges = lo + h * np.arange(nbins + 1)
    if edges[-1] < hi:
        edges = np.append(edges, edges[-1] + h)
    counts, _ = np.histogram(x, bins=edges)
    return HistogramSpec(edges, counts, rule)


def silverman_bandwidth(samples) -> float:
    """``0.9 * min(std, IQR / 1.34) * n^(-1/5)`` with the sample std (ddof=1).

    When the IQR is zero but the spread is not, the IQR term is dropped and
    the std alone is used.
    """
    x = np.sort(_samples(samples, minimum=2))
    sd = float(np.std(x, ddof=1))
    spread_iqr = iqr(x) / 1.34
    spread = min(sd, spread_iqr) if spread_iqr > 0 else sd
    h = 0.9 * spread * x.size ** (-0.2)
    if not h > 0:
        raise EstimationError("bandwidth is zero (constant sample); use a histogram instead")
    return h


def kde_grid(samples, bandwidth: float, points: int = KDE_GRID_POINTS) -> np.ndarray:
    x = _samples(samples)
    return np.linspace(x.min() - 3 * bandwidth, x.max() + 3 * bandwidth, points)


def silverman_kde(samples, grid=None, bandwidth: float | None = None):
    """Gaussian KDE at ``grid``; returns ``(grid, density, bandwidth)``."""
    x = _samples(samples, minimum=2)
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise EstimationError("bandwidth must be > 0")
    g = kde_grid(x, h) if grid is None else np.asarray(grid, dtype=float)
    # sort so the sum order, hence the floating result, ignores input order
    xs = np.sort(x)
    z = (g[:, None] - xs[None, :]) / h
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (xs.size * h * math.sqrt(2 * math.pi))
    return g, dens, h


def _write_hist(path, spec: HistogramSpec) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["bin_low", "bin_high", "count", "rule"])
        for lo, hi, c in zip(spec.edges[:-1], spec.edges[1:], spec.counts):
            out.writerow([repr(float(lo)), repr(float(hi)), int(c), spec.rule])


def emit_diagnostics(directory, system, table) -> list[str]:
    """Write ``scoring_hist.csv``, ``poss_hist.csv`` and ``rapm_kde.csv``.

    ``system`` supplies the regression responses and weights, ``table`` the
    centered ORAPM/DRAPM values. Returns the written paths.
    """
    os.makedirs(directory, exist_ok=True)
    paths = [os.path.join(directory, n) for n in ("scoring_hist.csv", "poss_hist.csv", "rapm_kde.csv")]
    _write_hist(paths[0], fd_histogram(system.y))
    _write_hist(paths[1], fd_histogram(system.w))
    orapm = np.array([r.orapm for r in table.rows])
    drapm = np.array([r.drapm for r in table.rows])
    with open(paths[2], "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["component", "x", "density", "bandwidth"])
        for name, values in (("orapm", orapm), ("drapm", drapm)):
            _, dens, h = silverman_kde(values)
            for gx, d in zip(kde_grid(values, h), dens):
                out.writerow([name, repr(float(gx)), repr(float(d)), repr(h)])
    return paths
