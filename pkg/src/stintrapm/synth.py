"""Synthetic seasons with known player effects, naive solver oracles and the
precision / sample-size calculator.

Scores follow the weighted linear model ``y ~ N(x'beta, sigma^2 / w)`` at
stint level: nothing about real basketball beyond alternating possessions.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .exceptions import ConfigError, EstimationError, ParameterError
from .qc import GameLog, SplitTag, apportion_split_possessions, game_to_records
from .ridge import Z95
from .stint_io import SeasonDataset, StintRecord, dataset_from_records


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of a synthetic season.

    ``mean_stint_poss`` is the mean number of possessions per team in a
    stint; stint lengths are geometric, hence right-skewed. ``split_prob`` is
    the chance that a stint boundary falls mid-possession. ``modal_prob`` is
    the chance a team fields its five starters in a stint, which drives
    collinearity between starters.

    With ``discretize`` on, continuous stint points become nonnegative
    integers. ``rounding="stochastic"`` rounds up with probability equal to
    the fractional part, which keeps the points unbiased; ``"nearest"``
    rounds to the closest integer and biases short stints (a one-possession
    stint near 105 per 100 always scores exactly 1).
    """

    teams: int = 10
    players_per_team: int = 9
    tau: float = 3.0
    intercept: float = 105.0
    sigma: float = 9.5
    mean_stint_poss: float = 3.38
    poss_per_game: int = 100
    games: int = 200
    split_prob: float = 0.0
    modal_prob: float = 0.0
    discretize: bool = True
    rounding: str = "stochastic"
    seed: int = 0

    def __post_init__(self):
        if self.teams < 2:
            raise ConfigError("need at least 2 teams")
        if self.players_per_team < 5:
            raise ConfigError("each team needs at least 5 players for a legal lineup")
        if self.games < 1 or self.poss_per_game < 1:
            raise ConfigError("games and poss_per_game must be >= 1")
        if self.mean_stint_poss < 0.5:
            raise ConfigError("mean_stint_poss must be >= 0.5")
        for name in ("tau", "sigma"):
            if not getattr(self, name) >= 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.rounding not in ("stochastic", "nearest"):
            raise ConfigError(f"rounding must be 'stochastic' or 'nearest', got {self.rounding!r}")
        for name in ("split_prob", "modal_prob"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class GroundTruth:
    intercept: float
    off: dict
    def_: dict
    team_of: dict

    def rapm(self) -> dict:
        """Centered true RAPM, comparable with the fitted table."""
        players = list(self.off)
        mo = float(np.mean([self.off[p] for p in players]))
        md = float(np.mean([self.def_[p] for p in players]))
        return {p: (self.off[p] - mo) + (self.def_[p] - md) for p in players}

    def to_json(self) -> str:
        return json.dumps({
            "intercept": self.intercept,
            "players": {p: {"team": self.team_of[p], "off": self.off[p], "def": self.def_[p]}
                        for p in sorted(self.off)},
        }, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        data = json.loads(text)
        players = data["players"]
        return cls(float(data["intercept"]),
                   {p: float(v["off"]) for p, v in players.items()},
                   {p: float(v["def"]) for p, v in players.items()},
                   {p: v["team"] for p, v in players.items()})


@dataclass(frozen=True)
class SimGame:
    """A generated game plus its possession stream.

    ``events[k]`` is ``(side, stints)``: the team in possession and the
    stints whose raw tallies count that possession.
    """

    log: GameLog
    events: tuple


def team_code(t: int) -> str:
    return f"T{t:02d}"


def player_name(t: int, j: int) -> str:
    return f"T{t:02d}P{j:02d}"


def draw_truth(config: SynthConfig) -> GroundTruth:
    rng = np.random.default_rng([config.seed, 0])
    off, def_, team_of = {}, {}, {}
    for t in range(config.teams):
        for j in range(config.players_per_team):
            p = player_name(t, j)
            off[p] = float(rng.normal(0.0, config.tau)) if config.tau > 0 else 0.0
            def_[p] = float(rng.normal(0.0, config.tau)) if config.tau > 0 else 0.0
            team_of[p] = team_code(t)
    return GroundTruth(config.intercept, off, def_, team_of)


def _lineup(rng, config: SynthConfig, t: int) -> tuple:
    if rng.random() < config.modal_prob:
        idx = range(5)
    else:
        idx = sorted(rng.choice(config.players_per_team, size=5, replace=False))
    return tuple(player_name(t, int(j)) for j in idx)


def _draw_points(rng, config, truth, off_lineup, def_lineup, weight):
    if weight <= 0:
        return 0
    mean = truth.intercept + sum(truth.off[p] for p in off_lineup) - sum(truth.def_[p] for p in def_lineup)
    y = mean + (rng.normal(0.0, config.sigma / math.sqrt(weight)) if config.sigma > 0 else 0.0)
    pts = y * weight / 100.0
    if config.discretize:
        if config.rounding == "nearest":
            return max(0, int(round(pts)))
        lo = math.floor(pts)
        return max(0, int(lo) + int(rng.random() < pts - lo))
    return max(0.0, pts)


def _simulate_game(g: int, config: SynthConfig, truth: GroundTruth, rng) -> SimGame:
    pairs = list(combinations(range(config.teams), 2))
    a, b = pairs[g % len(pairs)]
    home, away = (a, b) if (g // len(pairs)) % 2 == 0 else (b, a)

    n_events = 2 * config.poss_per_game
    first = int(rng.integers(2))
    sides = ["home" if (first + k) % 2 == 0 else "away" for k in range(n_events)]

    # stint boundaries over the event stream
    p = 1.0 / (2.0 * config.mean_stint_poss)
    bounds = [0]
    while bounds[-1] < n_events:
        bounds.append(min(n_events, bounds[-1] + int(rng.geometric(p))))
    n_stints = len(bounds) - 1

    stint_of = np.repeat(np.arange(n_stints), np.diff(bounds))
    events = [[s, [int(stint_of[k])]] for k, s in enumerate(sides)]
    tags = []
    for i in range(n_stints - 1):
        if rng.random() < config.split_prob:
            k = bounds[i + 1] - 1
            events[k][1].append(i + 1)
            tags.append(SplitTag(events[k][0], i))

    raw = {"home": [0] * n_stints, "away": [0] * n_stints}
    for side, stints in events:
        for i in stints:
            raw[side][i] += 1
    weight = {side: [float(v) for v in raw[side]] for side in raw}
    for tag in tags:
        weight[tag.team][tag.boundary] -= 0.5
        weight[tag.team][tag.boundary + 1] -= 0.5

    stints = []
    for i in range(n_stints):
        h_lineup = _lineup(rng, config, home)
        a_lineup = _lineup(rng, config, away)
        h_pts = _draw_points(rng, config, truth, h_lineup, a_lineup, weight["home"][i])
        a_pts = _draw_points(rng, config, truth, a_lineup, h_lineup, weight["away"][i])
        stints.append(StintRecord(team_code(home), team_code(away), h_lineup, a_lineup,
                                  raw["home"][i], raw["away"][i], h_pts, a_pts))
    final = (sum(s.o_score for s in stints), sum(s.d_score for s in stints))
    if not config.discretize:
        final = None
    log = GameLog(team_code(home), team_code(away), tuple(stints),
                  split_count_home=sum(1 for t in tags if t.team == "home"),
                  split_count_away=sum(1 for t in tags if t.team == "away"),
                  split_tags=tuple(tags), official_final=final)
    return SimGame(log, tuple((s, tuple(st)) for s, st in events))


def generate_game_logs(config: SynthConfig, truth: Optional[GroundTruth] = None) -> list[SimGame]:
    """Simulate every game with its own seed derived from ``config.seed``.

    Games are independent given the truth, so the per-game seeds make the
    output identical however the games are scheduled.
    """
    truth = draw_truth(config) if truth is None else truth
    seeds = np.random.SeedSequence([config.seed, 1]).spawn(config.games)
    return [_simulate_game(g, config, truth, np.random.default_rng(s)) for g, s in enumerate(seeds)]


def season_from_games(games, convention: str = "half_half") -> SeasonDataset:
    """Apportion split possessions and emit the mirrored two-row stint data."""
    records = []
    for game in games:
        log = game.log if isinstance(game, SimGame) else game
        records.extend(game_to_records(apportion_split_possessions(log, convention)))
    return dataset_from_records(records)


def generate_season(config: SynthConfig, convention: str = "half_half") -> tuple[SeasonDataset, GroundTruth]:
    truth = draw_truth(config)
    return season_from_games(generate_game_logs(config, truth), convention), truth


def write_truth(truth: GroundTruth, path) -> None:
    with open(os.fspath(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(truth.to_json())


def config_to_dict(config: SynthConfig) -> dict:
    return asdict(config)


# -- naive oracles ---------------------------------------------------------

_PIVOT_TOL = 1e-12


def naive_inverse(A) -> np.ndarray:
    """Gauss-Jordan inversion with partial pivoting, written out in loops."""
    A = [list(map(float, row)) for row in np.asarray(A, dtype=float)]
    n = len(A)
    if any(len(row) != n for row in A):
        raise ParameterError("matrix must be square")
    scale = max((abs(v) for row in A for v in row), default=0.0)
    aug = [A[i] + [1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    for c in range(n):
        piv = max(range(c, n), key=lambda r: abs(aug[r][c]))
        if abs(aug[piv][c]) <= _PIVOT_TOL * max(scale, 1.0):
            raise EstimationError("matrix is singular to working precision")
        aug[c], aug[piv] = aug[piv], aug[c]
        d = aug[c][c]
        aug[c] = [v / d for v in aug[c]]
        for r in range(n):
            if r != c and aug[r][c] != 0.0:
                f = aug[r][c]
                row_c = aug[c]
                aug[r] = [v - f * u for v, u in zip(aug[r], row_c)]
    return np.array([row[n:] for row in aug])


def brute_force_ridge(X, W, y, lam: float, penalize_intercept: bool = True) -> np.ndarray:
    """Literal ``(X'WX + lam I)^-1 X'Wy``.

    ``W`` may be a weight vector or the full diagonal matrix. ``lam = 0`` is
    allowed and fails if ``X'WX`` is singular. ``penalize_intercept=False``
    zeroes the penalty on column 0.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = np.diag(W)
    if lam < 0:
        raise ParameterError("lambda must be >= 0")
    D = np.eye(X.shape[1])
    if not penalize_intercept:
        D[0, 0] = 0.0
    A = X.T @ W @ X + lam * D
    return naive_inverse(A) @ (X.T @ W @ y)


# -- precision calculator --------------------------------------------------

def required_possessions(h_star: float, sigma_hat: float, lam: float) -> float:
    """Possessions for a 95% half-width of ``h_star``: ``max(0, 2 z^2 s^2 / h^2 - lam)``."""
    if not h_star > 0:
        raise ParameterError("h_star must be > 0")
    return max(0.0, 2.0 * Z95 ** 2 * sigma_hat ** 2 / h_star ** 2 - lam)


def approx_half_width(n_poss: float, sigma_hat: float, lam: float) -> float:
    """``1.96 * s * sqrt(2) / sqrt(n_poss + lam)``."""
    if n_poss < 0:
        raise ParameterError("n_poss must be >= 0")
    if not lam > 0:
        raise ParameterError("lambda must be > 0")
    return Z95 * sigma_hat * math.sqrt(2.0) / math.sqrt(n_poss + lam)


@dataclass(frozen=True)
class Recovery:
    pearson_r: float
    coverage: float
    n_players: int
    n_well_exposed: int
    min_poss: float

    def to_dict(self) -> dict:
        return asdict(self)


def recovery_report(table, truth: GroundTruth, min_poss: Optional[float] = None) -> Recovery:
    """Correlation of fitted with true centered RAPM, and interval coverage.

    Coverage counts players with at least ``min_poss`` total possessions
    (default: the median exposure) whose interval contains the true value.
    """
    true = truth.rapm()
    rows = [r for r in table.rows if r.player in true]
    if len(rows) < 3:
        raise ParameterError("need at least 3 players shared with the truth")
    est = np.array([r.rapm for r in rows])
    tru = np.array([true[r.player] for r in rows])
    r = float(np.corrcoef(est, tru)[0, 1]) if np.std(tru) > 0 and np.std(est) > 0 else float("nan")
    poss = np.array([r_.poss for r_ in rows])
    cut = float(np.median(poss)) if min_poss is None else float(min_poss)
    well = [r_ for r_ in rows if r_.poss >= cut]
    inside = sum(1 for r_ in well if r_.ci_low <= true[r_.player] <= r_.ci_high)
    cov = inside / len(well) if well else float("nan")
    return Recovery(r, cov, len(rows), len(well), cut)
