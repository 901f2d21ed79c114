"""Possession-weighted ridge solve, posterior covariance and RAPM extraction."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_penalty, check_weighted_system
from .design import RidgeSystem
from .exceptions import EstimationError, ParameterError
from .stint_io import Roster

Z95 = 1.96
DEFAULT_MAX_DIM = 8000
CI_MODES = ("diag_only", "full")


def _normal_matrix(X, w, lam, penalize_intercept=True):
    A = X.T @ (X * w[:, None])
    A[np.diag_indices_from(A)] += lam
    if not penalize_intercept:
        A[0, 0] -= lam
    return A


def _factor(A):
    try:
        return linalg.cho_factor(A, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise EstimationError(f"normal matrix is not positive definite: {exc}") from None


def ridge_coefficients(X, y, w, lam, penalize_intercept=True):
    """(X'WX + lam D)^-1 X'Wy via a Cholesky factorization.

    D is the identity, or the identity with a zero in the intercept slot
    (column 0) when ``penalize_intercept`` is false.
    """
    lam = check_penalty(lam)
    X, y, w = check_weighted_system(X, y, w)
    c = _factor(_normal_matrix(X, w, lam, penalize_intercept))
    return linalg.cho_solve(c, X.T @ (w * y), check_finite=False)


def solve(system: RidgeSystem, lam: float | None = None) -> np.ndarray:
    lam = system.lam if lam is None else lam
    if lam is None:
        raise ParameterError("no lambda given and the system carries none")
    return ridge_coefficients(system.X, system.y, system.w, lam, system.penalize_intercept)


def degrees_of_freedom(n_total_rows: int, n_params: int) -> float:
    return n_total_rows / 2 - n_params


def residual_variance(system: RidgeSystem, beta, n_total_rows: int | None = None,
                      n_players: int | None = None) -> float:
    """Weighted residual sum of squares over ``N_total/2 - 2P - 1``.

    ``N_total`` counts every row of the stint file, zero-possession rows
    included, even though those rows never enter the regression.
    """
    n_total_rows = system.n_total_rows if n_total_rows is None else n_total_rows
    n_players = system.n_players if n_players is None else n_players
    df = degrees_of_freedom(n_total_rows, 2 * n_players + 1)
    if df <= 0:
        raise EstimationError(
            f"non-positive residual degrees of freedom: N_total/2 - 2P - 1 = "
            f"{n_total_rows}/2 - {2 * n_players + 1} = {df}"
        )
    r = system.y - system.X @ np.asarray(beta, dtype=float)
    return float(r @ (system.w * r)) / df


def posterior_covariance(system: RidgeSystem, sigma2_hat: float, lam: float | None = None,
                         max_dim: int = DEFAULT_MAX_DIM) -> np.ndarray:
    """sigma2_hat * (X'WX + lam D)^-1, materialized as a dense matrix."""
    lam = check_penalty(system.lam if lam is None else lam)
    dim = system.X.shape[1]
    if dim > max_dim:
        raise ParameterError(
            f"posterior covariance would be {dim}x{dim}; raise max_dim (currently {max_dim}) to allow it"
        )
    c = _factor(_normal_matrix(system.X, system.w, lam, system.penalize_intercept))
    inv = linalg.cho_solve(c, np.eye(dim), check_finite=False)
    cov = sigma2_hat * inv
    return 0.5 * (cov + cov.T)


@dataclass(frozen=True)
class RidgeFit:
    beta: np.ndarray
    lam: float
    sigma2_hat: float
    cov: np.ndarray
    n_players: int
    center_off: float = field(init=False)
    center_def: float = field(init=False)

    def __post_init__(self):
        P = self.n_players
        object.__setattr__(self, "center_off", float(np.mean(self.beta[1:P + 1])) if P else 0.0)
        object.__setattr__(self, "center_def", float(np.mean(self.beta[P + 1:2 * P + 1])) if P else 0.0)

    @property
    def intercept(self) -> float:
        return float(self.beta[0])

    @property
    def beta_off(self) -> np.ndarray:
        return self.beta[1:self.n_players + 1]

    @property
    def beta_def(self) -> np.ndarray:
        return self.beta[self.n_players + 1:]


def fit_ridge(system: RidgeSystem, lam: float | None = None, max_dim: int = DEFAULT_MAX_DIM) -> RidgeFit:
    lam = check_penalty(system.lam if lam is None else lam)
    beta = solve(system, lam)
    sigma2 = residual_variance(system, beta)
    cov = posterior_covariance(system, sigma2, lam, max_dim=max_dim)
    return RidgeFit(beta, lam, sigma2, cov, system.n_players)


@dataclass(frozen=True)
class RapmRow:
    rank: int
    player: object
    team: str
    off_poss: float
    off_pts: float
    def_poss: float
    def_pts: float
    orapm: float
    drapm: float
    rapm: float
    ci_low: float
    ci_high: float

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    @property
    def poss(self) -> float:
        return self.off_poss + self.def_poss


@dataclass(frozen=True)
class RapmTable:
    rows: tuple
    intercept: float
    center_off: float
    center_def: float
    lam: float
    sigma2_hat: float
    ci_mode: str

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def by_player(self) -> dict:
        return {r.player: r for r in self.rows}


def extract_rapm(fit: RidgeFit, roster: Roster, ci_mode: str = "diag_only") -> RapmTable:
    """Centered ORAPM/DRAPM/RAPM with 95% credible bounds, ranked by RAPM.

    ``diag_only`` ignores the covariance between a player's offensive and
    defensive coefficients; ``full`` includes it.
    """
    if ci_mode not in CI_MODES:
        raise ParameterError(f"ci_mode must be one of {CI_MODES}, got {ci_mode!r}")
    P = fit.n_players
    if roster.n_players != P:
        raise ParameterError(f"roster has {roster.n_players} players but the fit has {P}")
    rows = []
    for player in roster.players:
        k1 = roster.index_of[player] + 1
        k2 = k1 + P
        orapm = float(fit.beta[k1]) - fit.center_off
        drapm = float(fit.beta[k2]) - fit.center_def
        var = fit.cov[k1, k1] + fit.cov[k2, k2]
        if ci_mode == "full":
            var += 2.0 * fit.cov[k1, k2]
        hw = Z95 * math.sqrt(max(var, 0.0))
        rapm = orapm + drapm
        rows.append([player, roster.team_of[player], roster.off_poss[player], roster.off_pts[player],
                     roster.def_poss[player], roster.def_pts[player], orapm, drapm, rapm,
                     rapm - hw, rapm + hw])
    rows.sort(key=lambda r: (-r[8], str(r[0])))
    ranked = tuple(RapmRow(i + 1, *r) for i, r in enumerate(rows))
    return RapmTable(ranked, fit.intercept, fit.center_off, fit.center_def, fit.lam,
                     fit.sigma2_hat, ci_mode)


_TEMPLATE = "{0:5} {1:25} {2:5}|{3:>7} {4:>7}|{5:>7} {6:>7} | {7:>7} {8:>7} | {9:>7} {10:>7} {11:>7}"


def _num(value) -> str:
    return str(int(value)) if float(value).is_integer() else f"{value:.1f}"


def format_rapm_table(table: RapmTable) -> str:
    lines = [_TEMPLATE.format("Rank", "Player", "Team", "OPoss", "O PTS", "DPoss", "D PTS",
                              "ORAPM", "DRAPM", "TOTAL", "LOW", "HIGH")]
    for r in table.rows:
        lines.append(_TEMPLATE.format(
            r.rank, str(r.player)[:25], r.team[:5], _num(r.off_poss), _num(r.off_pts),
            _num(r.def_poss), _num(r.def_pts), f"{r.orapm:.2f}", f"{r.drapm:.2f}",
            f"{r.rapm:.2f}", f"{r.ci_low:.2f}", f"{r.ci_high:.2f}",
        ))
    lines.append(
        f"intercept={table.intercept:.3f} mean_off={table.center_off:+.3f} "
        f"mean_def={table.center_def:+.3f} lambda={table.lam:.2f} "
        f"sigma_hat={math.sqrt(table.sigma2_hat):.3f} ci={table.ci_mode}"
    )
    return "\n".join(lines) + "\n"


def rapm_table_to_dict(table: RapmTable) -> dict:
    rows = []
    for r in table.rows:
        d = asdict(r)
        d["player"] = str(r.player)
        rows.append(d)
    return {
        "intercept": table.intercept,
        "center_off": table.center_off,
        "center_def": table.center_def,
        "lambda": table.lam,
        "sigma2_hat": table.sigma2_hat,
        "ci_mode": table.ci_mode,
        "players": rows,
    }


def rapm_table_to_json(table: RapmTable) -> str:
    return json.dumps(rapm_table_to_dict(table), indent=2, sort_keys=True) + "\n"


class RidgeRAPM(RegressorMixin, BaseEstimator):
    """Possession-weighted ridge regressor with a Gaussian posterior.

    ``X`` should already contain the leading column of ones produced by
    :class:`~stintrapm.design.StintEncoder`. That column is left out of the
    penalty unless ``penalize_intercept`` is set.

    Parameters
    ----------
    alpha : float, default=1.0
        Ridge penalty (lambda). Must be > 0.
    n_total_rows : int, optional
        Row count of the source stint file for the residual degrees of
        freedom ``n_total_rows / 2 - n_features``. Defaults to
        ``2 * n_samples`` (one mirrored row per retained stint).
    compute_covariance : bool, default=True
    penalize_intercept : bool, default=False
        Penalize column 0 like every other column.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
    sigma2_ : float
    covariance_ : ndarray of shape (n_features, n_features)
    """

    def __init__(self, alpha=1.0, n_total_rows=None, compute_covariance=True, penalize_intercept=False):
        self.alpha = alpha
        self.n_total_rows = n_total_rows
        self.compute_covariance = compute_covariance
        self.penalize_intercept = penalize_intercept

    def fit(self, X, y, sample_weight=None):
        X, y, w = check_weighted_system(X, y, sample_weight)
        lam = check_penalty(self.alpha, "alpha")
        self.coef_ = ridge_coefficients(X, y, w, lam, self.penalize_intercept)
        self.n_features_in_ = X.shape[1]
        if self.compute_covariance:
            n_total = 2 * X.shape[0] if self.n_total_rows is None else self.n_total_rows
            df = degrees_of_freedom(n_total, X.shape[1])
            if df <= 0:
                raise EstimationError(f"non-positive residual degrees of freedom ({df})")
            r = y - X @ self.coef_
            self.sigma2_ = float(r @ (w * r)) / df
            c = _factor(_normal_matrix(X, w, lam, self.penalize_intercept))
            inv = linalg.cho_solve(c, np.eye(X.shape[1]), check_finite=False)
            self.covariance_ = self.sigma2_ * 0.5 * (inv + inv.T)
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        return X @ self.coef_

    def to_fit(self) -> RidgeFit:
        check_is_fitted(self, ["coef_", "covariance_"])
        return RidgeFit(self.coef_, float(self.alpha), self.sigma2_, self.covariance_,
                        (self.n_features_in_ - 1) // 2)
