"""Box-score possession estimates and the steal/live-turnover audit.

A steal can only follow a live-ball turnover, so a team's steal total may
never exceed its opponent's live-ball turnovers. Box scores that break this
bound contain phantom steals, and every phantom steal implies a phantom
turnover that inflates the opponent's possession estimate one-for-one.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, Optional

from .exceptions import IntegrityError, ParseError

#: Free-throw coefficient of the Oliver estimator (Kubatko et al. calibration).
#: Modern-era value; older eras may warrant a different coefficient.
DEFAULT_FT_COEFF = 0.44

_COUNT_FIELDS = ("fga", "oreb", "to", "fta", "stl")


@dataclass(frozen=True)
class TeamBox:
    team: str
    fga: int
    oreb: int
    to: int
    fta: int
    stl: int = 0
    to_live: Optional[int] = None
    to_dead: Optional[int] = None
    player_steals: Optional[Mapping[str, int]] = None

    def __post_init__(self):
        for name in _COUNT_FIELDS + ("to_live", "to_dead"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise IntegrityError(f"{self.team}: {name} must be >= 0, got {value}")
        if (self.to_live is None) != (self.to_dead is None):
            raise IntegrityError(f"{self.team}: live/dead turnover split must give both parts")
        if self.to_live is not None and self.to_live + self.to_dead != self.to:
            raise IntegrityError(
                f"{self.team}: live ({self.to_live}) + dead ({self.to_dead}) != TO ({self.to})"
            )
        if self.player_steals is not None and any(v < 0 for v in self.player_steals.values()):
            raise IntegrityError(f"{self.team}: negative player steal count")


@dataclass(frozen=True)
class BoxScore:
    home: TeamBox
    away: TeamBox
    game: str = ""

    def opponent_of(self, side: str) -> TeamBox:
        return self.away if side == "home" else self.home


@dataclass(frozen=True)
class AuditVerdict:
    satisfied: bool
    excess: int = 0
    detail: dict = field(default_factory=dict)

    def __str__(self):
        return "satisfied" if self.satisfied else f"violated({self.excess})"


def oliver_possessions(box: TeamBox, ft_coeff: float = DEFAULT_FT_COEFF) -> float:
    """FGA - OREB + TO + ft_coeff * FTA."""
    return box.fga - box.oreb + box.to + ft_coeff * box.fta


def audit_steal_constraint(team_steals: int, opp_live_to: int) -> AuditVerdict:
    excess = team_steals - opp_live_to
    if excess > 0:
        return AuditVerdict(False, excess)
    return AuditVerdict(True, 0)


def audit_player_steals(player_steals: Mapping[str, int], opp_live_to: int) -> AuditVerdict:
    """Audit the summed per-player steal credits against opponent live turnovers."""
    verdict = audit_steal_constraint(sum(player_steals.values()), opp_live_to)
    return AuditVerdict(verdict.satisfied, verdict.excess, dict(player_steals))


def steal_discrepancies(film: Mapping[str, int], reported: Mapping[str, int]) -> dict:
    """Reported minus film-verified steals per player, plus a ``"total"`` entry."""
    players = list(dict.fromkeys([*reported, *film]))
    out = {p: reported.get(p, 0) - film.get(p, 0) for p in players}
    out["total"] = sum(reported.values()) - sum(film.values())
    return out


def bias_propagation(box: TeamBox, epsilon_to: float, ft_coeff: float = DEFAULT_FT_COEFF):
    """Possession estimate with and without ``epsilon_to`` phantom turnovers.

    Returns ``(biased, unbiased, delta)``; the turnover term enters linearly
    with unit coefficient, so ``delta == epsilon_to``.
    """
    if epsilon_to < 0:
        raise IntegrityError(f"epsilon_to must be >= 0, got {epsilon_to}")
    unbiased = oliver_possessions(box, ft_coeff)
    biased = (box.fga - box.oreb + (box.to + epsilon_to)) + ft_coeff * box.fta
    return biased, unbiased, biased - unbiased


def audit_game(box: BoxScore, ft_coeff: float = DEFAULT_FT_COEFF) -> dict:
    """Per-team steal audits and possession estimates for one game.

    Teams whose opponent lacks a live/dead turnover split are reported as
    ``"not-evaluated"`` rather than passed.
    """
    report = {"game": box.game, "teams": {}}
    for side in ("home", "away"):
        team, opp = (box.home, box.away) if side == "home" else (box.away, box.home)
        entry = {"team": team.team, "oliver_poss": oliver_possessions(team, ft_coeff)}
        if opp.to_live is None:
            entry["steal_audit"] = "not-evaluated"
        else:
            verdict = audit_steal_constraint(team.stl, opp.to_live)
            entry["steal_audit"] = str(verdict)
            entry["steal_excess"] = verdict.excess
            if team.player_steals is not None:
                entry["player_steal_audit"] = str(audit_player_steals(team.player_steals, opp.to_live))
        report["teams"][side] = entry
    return report


def _team_from_mapping(data: Mapping) -> TeamBox:
    try:
        kwargs = {k: int(data[k]) for k in _COUNT_FIELDS if k != "stl"}
    except KeyError as exc:
        raise ParseError(f"box score missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad box score count: {exc}") from None
    for key in ("stl", "to_live", "to_dead"):
        if data.get(key) not in (None, ""):
            kwargs[key] = int(data[key])
    steals = data.get("player_steals")
    return TeamBox(team=str(data.get("team", "")), player_steals=steals, **kwargs)


def box_from_dict(data: Mapping) -> BoxScore:
    return BoxScore(
        home=_team_from_mapping(data["home"]),
        away=_team_from_mapping(data["away"]),
        game=str(data.get("game", "")),
    )


def read_box_scores(path) -> list[BoxScore]:
    """Read box scores from JSON (one object or a list) or CSV.

    CSV rows carry ``game,side,team,fga,oreb,to,fta,stl,to_live,to_dead``
    with ``side`` in {home, away}; two rows per game.
    """
    path = os.fspath(path)
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return [box_from_dict(d) for d in (data if isinstance(data, list) else [data])]
    games: dict = {}
    with open(path, newline="", encoding="utf-8-sig") as fh:
        for row in csv.DictReader(fh):
            side = row.get("side", "").strip().lower()
            if side not in ("home", "away"):
                raise ParseError(f"side must be home/away, got {row.get('side')!r}")
            games.setdefault(row["game"], {"game": row["game"]})[side] = row
    return [box_from_dict(g) for g in games.values()]


def load_feb15_1988() -> dict:
    """The Atlanta at Chicago turnover log and steal attribution fixture."""
    text = resources.files("stintrapm").joinpath("data/feb15_1988.json").read_text("utf-8")
    data = json.loads(text)
    data["live_turnovers"] = sum(1 for t in data["turnovers"] if t["type"] == "live")
    data["dead_turnovers"] = sum(1 for t in data["turnovers"] if t["type"] == "dead")
    return data
