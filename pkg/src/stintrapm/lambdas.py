"""Ridge penalty selection: coverage-scaled formula and k-fold cross-validation."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import check_count
from .design import RidgeSystem
from .exceptions import ParameterError

log = logging.getLogger(__name__)

FULL_SEASON_LAMBDA = 5000.0
DEFAULT_GRID = np.logspace(-10, 10, 101)
AGREEMENT_BAND = (0.99, 1.01)

#: (season, games logged, games in season) for every published season.
SEASON_COVERAGE = (
    ("1979-80", 22, 820),
    ("1984-85", 106, 943),
    ("1985-86", 79, 943),
    ("1986-87", 152, 943),
    ("1987-88", 203, 943),
    ("1988-89", 248, 1025),
    ("1989-90", 249, 1107),
    ("1990-91", 297, 1107),
    ("1991-92", 249, 1107),
    ("1992-93", 301, 1107),
    ("1993-94", 20, 1107),
    ("1994-95", 10, 1107),
    ("1995-96", 264, 1189),
)


def coverage_scaled_lambda(games_logged: int, games_season: int,
                           scale: float = FULL_SEASON_LAMBDA) -> float:
    """``(games_logged / games_season) * scale``; equals ``scale`` at full coverage."""
    games_logged = check_count(games_logged, "games_logged")
    games_season = check_count(games_season, "games_season", minimum=1)
    if games_logged == 0:
        raise ParameterError("games_logged must be > 0")
    if games_logged > games_season:
        raise ParameterError(f"games_logged ({games_logged}) exceeds games_season ({games_season})")
    return games_logged / games_season * scale


@dataclass(frozen=True)
class CVResult:
    lam: float
    grid: np.ndarray
    cv_error: np.ndarray
    holdout_error: float
    folds: int
    train_fraction: float
    seed: int
    weighted: bool
    skipped_folds: int = 0


def _fold_path(X, y, w, grid, Xv, yv, wv, weighted, center=True):
    """Validation error of the ridge solution at every grid value.

    With ``center`` the intercept is fitted unpenalized by centering on the
    (weighted) fitting-row means; the constant design column then centers to
    zero and drops out. Without it every column is penalized. One
    eigendecomposition of Xc'WXc serves the whole grid.
    """
    if center:
        sw = w.sum()
        x_mean = (w @ X) / sw
        y_mean = float(w @ y) / sw
    else:
        x_mean, y_mean = np.zeros(X.shape[1]), 0.0
    Xc = X - x_mean
    A = Xc.T @ (Xc * w[:, None])
    evals, V = np.linalg.eigh(0.5 * (A + A.T))
    evals = np.clip(evals, 0.0, None)
    b = V.T @ (Xc.T @ (w * (y - y_mean)))
    P = (Xv - x_mean) @ V
    errs = np.empty(len(grid))
    for g, lam in enumerate(grid):
        beta_rot = b / (evals + lam)
        r = yv - y_mean - P @ beta_rot
        errs[g] = (r @ (wv * r)) / wv.sum() if weighted else (r @ r) / len(r)
    return errs


def cross_validated_lambda(system: RidgeSystem, folds: int = 5, grid=None,
                           train_fraction: float = 0.8, seed: int = 42,
                           weighted: bool = False) -> CVResult:
    """Grid-search lambda by k-fold CV on a random training split.

    Rows are shuffled once under ``seed``; the first ``train_fraction`` are the
    training split, cut into ``folds`` contiguous folds. Each fold fit uses
    the system's intercept treatment: unpenalized (scikit-learn's
    ``fit_intercept=True`` behaviour, the default from ``build_system``), so
    a huge penalty shrinks the players to zero but keeps the league mean, or
    penalized like the players. ``weighted`` uses possession weights in the fit and in the
    fold error; otherwise both are unweighted. The held-out 20% error at the
    chosen lambda is informational only.
    """
    grid = DEFAULT_GRID if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0):
        raise ParameterError("grid must be a non-empty 1-D array of positive values")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ParameterError("grid must be strictly increasing")
    folds = check_count(folds, "folds", minimum=2)
    if not 0 < train_fraction <= 1:
        raise ParameterError(f"train_fraction must be in (0, 1], got {train_fraction}")

    X, y = system.X, system.y
    center = not system.penalize_intercept
    w = system.w if weighted else np.ones_like(system.y)
    n = len(y)
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(train_fraction * n))
    if n_train < folds:
        raise ParameterError(f"{n_train} training rows cannot fill {folds} folds")
    train, test = perm[:n_train], perm[n_train:]

    if grid.size == 1:
        total = np.zeros(1)
        used = 1
        skipped = 0
    else:
        total = np.zeros(grid.size)
        used = skipped = 0
        splits = np.array_split(train, folds)
        for k, val in enumerate(splits):
            fit_idx = np.concatenate([f for j, f in enumerate(splits) if j != k])
            if np.ptp(y[fit_idx]) == 0:
                warnings.warn(f"fold {k}: constant response in the fitting rows; fold skipped",
                              stacklevel=2)
                skipped += 1
                continue
            total += _fold_path(X[fit_idx], y[fit_idx], w[fit_idx], grid,
                                X[val], y[val], w[val], weighted, center)
            used += 1
        if used == 0:
            raise ParameterError("every cross-validation fold was degenerate")
    cv_error = total / used
    best = int(np.argmin(cv_error)) if grid.size > 1 else 0
    lam = float(grid[best])

    holdout = float("nan")
    if len(test):
        holdout = float(_fold_path(X[train], y[train], w[train], grid[best:best + 1],
                                   X[test], y[test], w[test], weighted, center)[0])
    log.debug("cv lambda=%g holdout=%g", lam, holdout)
    return CVResult(lam, grid, cv_error, holdout, folds, train_fraction, seed, weighted, skipped)


@dataclass(frozen=True)
class LambdaReport:
    lambda_cs: float
    lambda_cv: Optional[float] = None
    grid: Optional[np.ndarray] = None
    cv_config: dict = field(default_factory=dict)

    @property
    def ratio(self) -> Optional[float]:
        if self.lambda_cv is None:
            return None
        return self.lambda_cs / self.lambda_cv

    @property
    def verdict(self) -> str:
        if self.ratio is None:
            return "cv-unavailable"
        lo, hi = AGREEMENT_BAND
        return "agreement" if lo <= self.ratio <= hi else "flagged"

    def to_dict(self) -> dict:
        return {
            "lambda_cs": self.lambda_cs,
            "lambda_cv": self.lambda_cv,
            "ratio": self.ratio,
            "verdict": self.verdict,
            "cv_config": self.cv_config,
        }


def compare_lambdas(lambda_cs: float, lambda_cv: float | CVResult | None) -> LambdaReport:
    """Ratio ``lambda_cs / lambda_cv`` and an agreement verdict (band 0.99-1.01)."""
    if isinstance(lambda_cv, CVResult):
        cfg = {"folds": lambda_cv.folds, "train_fraction": lambda_cv.train_fraction,
               "seed": lambda_cv.seed, "weighted": lambda_cv.weighted,
               "holdout_error": lambda_cv.holdout_error}
        return LambdaReport(float(lambda_cs), lambda_cv.lam, lambda_cv.grid, cfg)
    return LambdaReport(float(lambda_cs), None if lambda_cv is None else float(lambda_cv))
