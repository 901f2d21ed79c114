"""Per-game quality control and split-possession apportionment.

A split possession spans a substitution: the raw tallies count it for both
the closing and the opening stint, so the game total over-counts by the
number of splits. Apportionment removes the double count at stint level,
conserving the corrected game total under every convention.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

from .boxscore import DEFAULT_FT_COEFF, BoxScore, box_from_dict, oliver_possessions
from .exceptions import ConfigError, IntegrityError, ParseError
from .stint_io import POSS_TOL, SeasonDataset, StintRecord

CONVENTIONS = ("half_half", "close_full", "open_full")
MINUTES_TOLERANCE = 2.0
POSSESSION_TOLERANCE = 10.0
SIDES = ("home", "away")


@dataclass(frozen=True)
class SplitTag:
    """A split possession of ``team`` across the boundary after stint ``boundary``."""

    team: str
    boundary: int


@dataclass(frozen=True)
class Substitution:
    boundary: int
    team: str
    player_out: str
    player_in: str


@dataclass(frozen=True)
class GameLog:
    """One reconstructed game. Stints are seen from the home offense:
    ``o_poss``/``o_score`` are home tallies and points, ``d_*`` the away ones.
    """

    home_team: str
    away_team: str
    stints: tuple
    split_count_home: int = 0
    split_count_away: int = 0
    split_tags: tuple = ()
    official_final: Optional[tuple] = None
    official_minutes: Optional[Mapping[str, float]] = None
    stint_minutes: Optional[tuple] = None
    substitutions: Optional[tuple] = None
    ended_live: bool = False
    rereviewed: bool = False
    footage_ok: bool = True

    def __post_init__(self):
        object.__setattr__(self, "stints", tuple(self.stints))
        object.__setattr__(self, "split_tags", tuple(self.split_tags))
        n_boundaries = max(len(self.stints) - 1, 0)
        for side, d in (("home", self.split_count_home), ("away", self.split_count_away)):
            if d < 0 or d > n_boundaries:
                raise IntegrityError(f"{side} split count {d} outside [0, {n_boundaries}]")
        for tag in self.split_tags:
            if tag.team not in SIDES or not 0 <= tag.boundary < n_boundaries:
                raise IntegrityError(f"bad split tag {tag}")
        if self.official_final is not None and min(self.official_final) < 0:
            raise IntegrityError("official final score must be >= 0")
        if self.stint_minutes is not None and len(self.stint_minutes) != len(self.stints):
            raise IntegrityError("stint_minutes must have one entry per stint")

    def split_count(self, side: str) -> int:
        return self.split_count_home if side == "home" else self.split_count_away


def _raw_tallies(log: GameLog, side: str) -> list:
    return [s.o_poss if side == "home" else s.d_poss for s in log.stints]


def corrected_possession_totals(log: GameLog) -> tuple[float, float]:
    """``W_k = sum of raw stint tallies - d_k`` for home and away."""
    out = []
    for side in SIDES:
        w = sum(_raw_tallies(log, side)) - log.split_count(side)
        if w < -POSS_TOL:
            raise IntegrityError(f"{side} split count exceeds the raw possession tallies")
        out.append(w)
    return out[0], out[1]


def apportion_split_possessions(log: GameLog, convention: str = "half_half") -> GameLog:
    """Remove the split-possession double count at stint level.

    ``half_half`` leaves each adjacent stint half the possession,
    ``close_full`` keeps it whole in the closing stint and ``open_full`` in
    the opening stint. The returned log carries no outstanding splits, so its
    raw tallies sum to the corrected totals.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    for side in SIDES:
        tagged = sum(1 for t in log.split_tags if t.team == side)
        if tagged != log.split_count(side):
            raise IntegrityError(
                f"{side}: {log.split_count(side)} split possessions recorded but {tagged} tagged"
            )
    take = {
        "half_half": (0.5, 0.5),
        "close_full": (0.0, 1.0),
        "open_full": (1.0, 0.0),
    }[convention]
    poss = {side: list(_raw_tallies(log, side)) for side in SIDES}
    for tag in log.split_tags:
        poss[tag.team][tag.boundary] -= take[0]
        poss[tag.team][tag.boundary + 1] -= take[1]
    for side in SIDES:
        for i, p in enumerate(poss[side]):
            if p < -POSS_TOL:
                raise IntegrityError(f"{side} stint {i}: split tag without a matching raw tally")
            poss[side][i] = max(p, 0.0)
    stints = tuple(
        replace(s, o_poss=poss["home"][i], d_poss=poss["away"][i]) for i, s in enumerate(log.stints)
    )
    return replace(log, stints=stints, split_count_home=0, split_count_away=0, split_tags=())


def check_possession_balance(w_home: float, w_away: float, ended_live: bool = False) -> str:
    """``"pass"`` when the totals differ by at most 1 (2 if the game ended live)."""
    bound = 2 if ended_live else 1
    return "pass" if abs(w_home - w_away) <= bound + POSS_TOL else "review"


@dataclass(frozen=True)
class QcReport:
    score_ok: bool
    lineup_ok: bool
    minutes_flags: tuple
    poss_flags: tuple
    verdict: str
    minutes_evaluated: bool = True
    balance: str = "pass"
    totals: tuple = ()
    lineup_notes: tuple = ()
    reasons: tuple = ()

    def to_dict(self) -> dict:
        return {
            "score_ok": self.score_ok,
            "lineup_ok": self.lineup_ok,
            "minutes_evaluated": self.minutes_evaluated,
            "minutes_flags": [list(f) for f in self.minutes_flags],
            "poss_flags": [list(f) for f in self.poss_flags],
            "balance": self.balance,
            "totals": list(self.totals),
            "lineup_notes": list(self.lineup_notes),
            "reasons": list(self.reasons),
            "verdict": self.verdict,
        }

    def to_text(self) -> str:
        lines = [f"verdict: {self.verdict}",
                 f"score reconciliation: {'ok' if self.score_ok else 'MISMATCH'}",
                 f"lineup consistency: {'ok' if self.lineup_ok else 'INCONSISTENT'}"]
        if not self.minutes_evaluated:
            lines.append("minutes reconciliation: not evaluated (no stint durations)")
        for player, delta in self.minutes_flags:
            lines.append(f"minutes flag: {player} off by {delta:.2f}")
        lines.append(f"possession balance: {self.balance} (W_home={self.totals[0]:g}, W_away={self.totals[1]:g})")
        for team, delta in self.poss_flags:
            lines.append(f"possession flag: {team} differs from box-score estimate by {delta:.2f}")
        lines.extend(f"note: {n}" for n in self.lineup_notes)
        lines.extend(f"reason: {r}" for r in self.reasons)
        return "\n".join(lines) + "\n"


def _check_lineups(log: GameLog) -> tuple[bool, list]:
    notes: list = []
    stints = log.stints
    if log.substitutions is None:
        # no event list: only flag boundaries where neither lineup changed
        for i in range(1, len(stints)):
            a, b = stints[i - 1], stints[i]
            if set(a.o_players) == set(b.o_players) and set(a.d_players) == set(b.d_players):
                notes.append(f"boundary {i - 1}: no lineup change between stints {i - 1} and {i}")
        return True, notes
    ok = True
    for i in range(1, len(stints)):
        lineups = {"home": set(stints[i - 1].o_players), "away": set(stints[i - 1].d_players)}
        for sub in log.substitutions:
            if sub.boundary != i - 1:
                continue
            if sub.player_out not in lineups[sub.team]:
                ok = False
                notes.append(f"boundary {i - 1}: {sub.player_out} subbed out but not on the floor")
            lineups[sub.team].discard(sub.player_out)
            lineups[sub.team].add(sub.player_in)
        if lineups["home"] != set(stints[i].o_players) or lineups["away"] != set(stints[i].d_players):
            ok = False
            notes.append(f"stint {i}: logged lineup does not match substitution replay")
    return ok, notes


def run_qc(log: GameLog, box: Optional[BoxScore], ft_coeff: float = DEFAULT_FT_COEFF) -> QcReport:
    """Score, lineup, minutes and possession checks for one game.

    Possession implausibility and minutes gaps only trigger review. A game is
    excluded only when its score or lineups still fail after re-review, or
    when the footage was insufficient.
    """
    if log.official_final is None:
        raise ConfigError("official final score is required for QC")
    if box is None:
        raise ConfigError("official box score is required for the possession plausibility check")

    home_pts = sum(s.o_score for s in log.stints)
    away_pts = sum(s.d_score for s in log.stints)
    score_ok = (home_pts, away_pts) == tuple(log.official_final)

    lineup_ok, notes = _check_lineups(log)

    minutes_flags = []
    minutes_evaluated = log.stint_minutes is not None and log.official_minutes is not None
    if minutes_evaluated:
        implied: dict = {}
        for s, minutes in zip(log.stints, log.stint_minutes):
            for p in (*s.o_players, *s.d_players):
                implied[p] = implied.get(p, 0.0) + minutes
        for player in sorted(set(implied) | set(log.official_minutes)):
            delta = abs(implied.get(player, 0.0) - log.official_minutes.get(player, 0.0))
            if delta > MINUTES_TOLERANCE:
                minutes_flags.append((player, delta))

    w_home, w_away = corrected_possession_totals(log)
    balance = check_possession_balance(w_home, w_away, log.ended_live)
    poss_flags = []
    for team_box, w in ((box.home, w_home), (box.away, w_away)):
        delta = abs(w - oliver_possessions(team_box, ft_coeff))
        if delta > POSSESSION_TOLERANCE:
            poss_flags.append((team_box.team or log.home_team, delta))

    reasons = []
    verdict = "pass"
    if not score_ok:
        reasons.append(f"reconstructed score {home_pts}-{away_pts} != official "
                       f"{log.official_final[0]}-{log.official_final[1]}")
    if not lineup_ok:
        reasons.append("lineup replay inconsistent")
    if not log.footage_ok:
        reasons.append("footage insufficient to detect substitutions")
    if not log.footage_ok or (log.rereviewed and (not score_ok or not lineup_ok)):
        verdict = "exclude"
    elif not score_ok or not lineup_ok or minutes_flags or poss_flags or balance != "pass":
        verdict = "review"
    return QcReport(score_ok, lineup_ok, tuple(minutes_flags), tuple(poss_flags), verdict,
                    minutes_evaluated, balance, (w_home, w_away), tuple(notes), tuple(reasons))


def game_log_from_dataset(dataset: SeasonDataset, home_team: str, **sidecar) -> GameLog:
    """Game log from the even rows of a one-game stint file, home perspective."""
    stints = []
    for rec in dataset.even_records:
        if rec.o_team == home_team:
            stints.append(rec)
        elif rec.d_team == home_team:
            stints.append(rec.mirrored())
        else:
            raise IntegrityError(f"stint between {rec.o_team} and {rec.d_team} lacks home team {home_team}")
    away = {s.d_team for s in stints}
    if len(away) != 1:
        raise IntegrityError(f"one-game file has several opponents: {sorted(away)}")
    return GameLog(home_team, away.pop(), tuple(stints), **sidecar)


def load_sidecar(path) -> dict:
    """Parse the per-game JSON sidecar into GameLog keyword arguments plus ``box``."""
    with open(os.fspath(path), encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"sidecar is not valid JSON: {exc}") from None
    kwargs: dict = {"home_team": data.get("home_team")}
    if kwargs["home_team"] is None:
        raise ConfigError("sidecar must name home_team")
    if "official_final" in data:
        kwargs["official_final"] = tuple(data["official_final"])
    if "official_minutes" in data:
        kwargs["official_minutes"] = {str(k): float(v) for k, v in data["official_minutes"].items()}
    counts = data.get("split_counts", {})
    kwargs["split_count_home"] = int(counts.get("home", 0))
    kwargs["split_count_away"] = int(counts.get("away", 0))
    kwargs["split_tags"] = tuple(SplitTag(t["team"], int(t["boundary"])) for t in data.get("splits", []))
    if "substitutions" in data:
        kwargs["substitutions"] = tuple(
            Substitution(int(s["boundary"]), s["team"], s["out"], s["in"]) for s in data["substitutions"]
        )
    if "stint_minutes" in data:
        kwargs["stint_minutes"] = tuple(float(m) for m in data["stint_minutes"])
    for flag in ("ended_live", "rereviewed", "footage_ok"):
        if flag in data:
            kwargs[flag] = bool(data[flag])
    kwargs["box"] = box_from_dict(data["box"]) if "box" in data else None
    return kwargs


def game_to_records(log: GameLog) -> list:
    """Mirrored stint-file rows for a game: home-offense row then its mirror."""
    rows = []
    for s in log.stints:
        rows.append(s)
        rows.append(s.mirrored())
    return rows
