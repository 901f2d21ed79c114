"""Team-level validation: rating calibration and win-loss projections."""
from __future__ import annotations

import csv
import io
import math
import os
import warnings
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .exceptions import EstimationError, ParameterError, ParseError

GAMES_PER_SEASON = 82


@dataclass(frozen=True)
class TeamSeasonRecord:
    franchise: str
    wins_sampled: int
    losses_sampled: int
    games_season: int = GAMES_PER_SEASON
    truth_wins: Optional[int] = None
    pct_sampled: Optional[float] = None

    def __post_init__(self):
        if self.wins_sampled < 0 or self.losses_sampled < 0:
            raise ParameterError(f"{self.franchise}: negative sampled record")
        if self.truth_wins is not None and not 0 <= self.truth_wins <= self.games_season:
            raise ParameterError(f"{self.franchise}: truth_wins outside [0, {self.games_season}]")

    @property
    def games_logged(self) -> int:
        return self.wins_sampled + self.losses_sampled

    @property
    def mle(self) -> float:
        return mle_wins(self.wins_sampled, self.games_logged, self.games_season)

    @property
    def bayes(self) -> float:
        return bayes_wins(self.wins_sampled, self.games_logged, games_season=self.games_season)


@dataclass(frozen=True)
class TeamRatingPair:
    predicted: float
    actual: float


def mle_wins(w: int, n: int, games_season: int = GAMES_PER_SEASON) -> float:
    if n < 1:
        raise ParameterError("MLE win projection is undefined with no logged games")
    return w / n * games_season


def bayes_wins(w: int, n: int, a: float = 5, b: float = 5,
               games_season: int = GAMES_PER_SEASON) -> float:
    """Posterior-mean win projection under a Beta(a, b) prior."""
    if n < 0 or w < 0 or w > n:
        raise ParameterError(f"need 0 <= w <= n, got w={w}, n={n}")
    return (w + a) / (n + a + b) * games_season


def team_rating_prediction(rapm_table, team_of: Mapping | None = None) -> dict:
    """Possession-weighted mean RAPM of each team's players.

    Team membership defaults to the table's ``team`` column; pass ``team_of``
    to override it.
    """
    num: dict = {}
    den: dict = {}
    for row in rapm_table:
        team = row.team if team_of is None else team_of.get(row.player)
        if team is None:
            continue
        num[team] = num.get(team, 0.0) + row.poss * row.rapm
        den[team] = den.get(team, 0.0) + row.poss
    out = {}
    for team in num:
        if den[team] <= 0:
            warnings.warn(f"team {team!r} has no recorded possessions; omitted", stacklevel=2)
            continue
        out[team] = num[team] / den[team]
    return out


@dataclass(frozen=True)
class Calibration:
    alpha: float
    gamma: float
    r_squared: float
    n: int


def calibration_regression(pairs: Sequence[TeamRatingPair]) -> Calibration:
    """OLS of actual on predicted team rating: ``actual = alpha + gamma * predicted``."""
    if len(pairs) < 3:
        raise ParameterError(f"calibration needs at least 3 pairs, got {len(pairs)}")
    x = np.array([p.predicted for p in pairs], dtype=float)
    y = np.array([p.actual for p in pairs], dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ParameterError("team ratings must be finite")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise EstimationError("predicted ratings are constant; slope is undefined")
    yc = y - y.mean()
    gamma = float(xc @ yc) / sxx
    alpha = float(y.mean() - gamma * x.mean())
    resid = yc - gamma * xc
    syy = float(yc @ yc)
    r2 = 1.0 - float(resid @ resid) / syy if syy > 0 else 1.0
    return Calibration(alpha, gamma, r2, len(pairs))


@dataclass(frozen=True)
class EstimatorScores:
    mae_mle: float
    mae_bayes: float
    rmse_mle: float
    rmse_bayes: float
    n: int


def score_estimators(records: Iterable[TeamSeasonRecord]) -> EstimatorScores:
    """MAE and RMSE of the MLE and Bayes projections against true wins."""
    scored = [r for r in records if r.truth_wins is not None and r.games_logged > 0]
    if not scored:
        raise ParameterError("no records with truth_wins to score")
    truth = np.array([r.truth_wins for r in scored], dtype=float)
    e_mle = np.array([r.mle for r in scored]) - truth
    e_bay = np.array([r.bayes for r in scored]) - truth
    return EstimatorScores(
        float(np.mean(np.abs(e_mle))), float(np.mean(np.abs(e_bay))),
        float(np.sqrt(np.mean(e_mle ** 2))), float(np.sqrt(np.mean(e_bay ** 2))),
        len(scored),
    )


def read_fixture(source, games_season: int = GAMES_PER_SEASON) -> list[TeamSeasonRecord]:
    """Read a ``franchise,sampled_w,sampled_l,truth_wins,pct_sampled`` CSV."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8-sig") as fh:
            return read_fixture(io.StringIO(fh.read()), games_season)
    out = []
    for i, row in enumerate(csv.DictReader(source)):
        try:
            truth = row.get("truth_wins", "").strip()
            pct = row.get("pct_sampled", "").strip()
            out.append(TeamSeasonRecord(
                row["franchise"].strip(), int(row["sampled_w"]), int(row["sampled_l"]),
                games_season, int(truth) if truth else None, float(pct) if pct else None,
            ))
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad validation fixture row: {exc}", row=i) from None
    return out


def bundled_seasons() -> list[str]:
    root = resources.files("stintrapm").joinpath("data/appendix_c")
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".csv"))


def load_appendix_c(season: str) -> list[TeamSeasonRecord]:
    """Sampled records and true wins for one bundled season, e.g. ``"1984-85"``."""
    path = resources.files("stintrapm").joinpath(f"data/appendix_c/{season}.csv")
    if not path.is_file():
        raise ParameterError(f"no bundled validation table for season {season!r}")
    return read_fixture(io.StringIO(path.read_text("utf-8")))


def format_validation_report(records: Sequence[TeamSeasonRecord], title: str = "") -> str:
    lines = [title] if title else []
    lines.append(f"{'Franchise':<16}{'Sampled':>9}{'MLE':>7}{'Bayes':>7}{'Truth':>7}{'Error':>8}{'%Samp':>8}")
    for r in records:
        mle = f"{r.mle:.1f}" if r.games_logged else "-"
        err = f"{r.mle - r.truth_wins:+.1f}" if r.truth_wins is not None and r.games_logged else "-"
        truth = str(r.truth_wins) if r.truth_wins is not None else "-"
        pct = f"{r.pct_sampled:.1f}%" if r.pct_sampled is not None else "-"
        lines.append(f"{r.franchise:<16}{f'{r.wins_sampled}-{r.losses_sampled}':>9}{mle:>7}"
                     f"{r.bayes:>7.1f}{truth:>7}{err:>8}{pct:>8}")
    if any(r.truth_wins is not None for r in records):
        s = score_estimators(records)
        lines.append(f"{'League MAE':<25}{s.mae_mle:>7.1f}{s.mae_bayes:>7.1f}")
        lines.append(f"{'League RMSE':<25}{s.rmse_mle:>7.1f}{s.rmse_bayes:>7.1f}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FranchiseTotal:
    franchise: str
    mle_error: float
    pct_sampled: float
    seasons: int
    games: int


def aggregate_franchise_errors(seasons: Mapping[str, Sequence[TeamSeasonRecord]]) -> list[FranchiseTotal]:
    """Summed MLE-minus-truth wins per franchise across seasons.

    ``games`` is the franchise's schedule total over the seasons it appears
    in and ``pct_sampled`` the share of those games that were logged.
    """
    acc: dict = {}
    for records in seasons.values():
        for r in records:
            if r.truth_wins is None or not r.games_logged:
                continue
            e = acc.setdefault(r.franchise, [0.0, 0, 0, 0])
            e[0] += r.mle - r.truth_wins
            e[1] += r.games_logged
            e[2] += 1
            e[3] += r.games_season
    return [FranchiseTotal(f, e[0], 100.0 * e[1] / e[3], e[2], e[3])
            for f, e in sorted(acc.items(), key=lambda kv: kv[0])]
