"""Stint file parsing, roster enumeration and exposure accumulation.

A stint file carries two rows per stint: the even row (0-based, counted
after the header) is the stint seen from one team's offense and the odd row
is its mirror image. Every row contributes players to the roster, but only
even rows contribute to the possession/point accumulators and to the
regression.
"""
from __future__ import annotations

import csv
import io
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .exceptions import IntegrityError, ParseError

POSS_TOL = 1e-9


@dataclass(frozen=True)
class StintFormat:
    """Column names of a stint CSV. The defaults match the canonical header."""

    o_team: str = "Oteam"
    d_team: str = "Dteam"
    o_players: tuple[str, ...] = ("O1", "O2", "O3", "O4", "O5")
    d_players: tuple[str, ...] = ("D1", "D2", "D3", "D4", "D5")
    o_poss: str = "Oposs"
    d_poss: str = "Dposs"
    o_score: str = "Oscore"
    d_score: str = "Dscore"

    @property
    def columns(self) -> tuple[str, ...]:
        return (
            (self.o_team, self.d_team)
            + self.o_players
            + self.d_players
            + (self.o_poss, self.d_poss, self.o_score, self.d_score)
        )


DEFAULT_FORMAT = StintFormat()


@dataclass(frozen=True)
class StintRecord:
    o_team: str
    d_team: str
    o_players: tuple
    d_players: tuple
    o_poss: float
    d_poss: float
    o_score: int
    d_score: int

    def __post_init__(self):
        object.__setattr__(self, "o_players", tuple(self.o_players))
        object.__setattr__(self, "d_players", tuple(self.d_players))
        for side, lineup in (("offensive", self.o_players), ("defensive", self.d_players)):
            if len(lineup) != 5:
                raise IntegrityError(f"{side} lineup must have 5 players, got {len(lineup)}")
            if any(not str(p) for p in lineup):
                raise IntegrityError(f"{side} lineup contains an empty player name")
            if len(set(lineup)) != 5:
                raise IntegrityError(f"{side} lineup repeats a player: {lineup}")
        both = set(self.o_players) & set(self.d_players)
        if both:
            raise IntegrityError(f"player(s) on both lineups: {sorted(map(str, both))}")
        for name in ("o_poss", "d_poss", "o_score", "d_score"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise IntegrityError(f"{name} must be finite and >= 0, got {value}")

    def mirrored(self) -> "StintRecord":
        """The same stint seen from the other team's offense."""
        return StintRecord(
            self.d_team, self.o_team, self.d_players, self.o_players,
            self.d_poss, self.o_poss, self.d_score, self.o_score,
        )

    def is_mirror_of(self, other: "StintRecord") -> bool:
        return (
            self.o_team == other.d_team
            and self.d_team == other.o_team
            and set(self.o_players) == set(other.d_players)
            and set(self.d_players) == set(other.o_players)
            and abs(self.o_poss - other.d_poss) <= POSS_TOL
            and abs(self.d_poss - other.o_poss) <= POSS_TOL
            and self.o_score == other.d_score
            and self.d_score == other.o_score
        )


@dataclass
class Roster:
    """Player index plus per-player exposure totals (even rows only)."""

    index_of: dict = field(default_factory=dict)
    team_of: dict = field(default_factory=dict)
    off_poss: dict = field(default_factory=dict)
    def_poss: dict = field(default_factory=dict)
    off_pts: dict = field(default_factory=dict)
    def_pts: dict = field(default_factory=dict)

    @property
    def n_players(self) -> int:
        return len(self.index_of)

    @property
    def players(self) -> list:
        """Player keys ordered by column index."""
        return sorted(self.index_of, key=self.index_of.__getitem__)

    def total_poss(self, player) -> float:
        return self.off_poss[player] + self.def_poss[player]


@dataclass(frozen=True)
class SeasonDataset:
    records: tuple
    roster: Roster
    n_zero_poss: int
    n_total_rows: int
    max_stint_poss: float

    @property
    def even_records(self) -> tuple:
        return self.records[0::2]

    @property
    def n_zero_poss_even(self) -> int:
        return sum(1 for r in self.even_records if r.o_poss < 1)


def enumerate_roster(records: Sequence[StintRecord]) -> Roster:
    """Assign column indices in first-encounter order over all rows."""
    roster = Roster()
    for rec in records:
        for team, lineup in ((rec.o_team, rec.o_players), (rec.d_team, rec.d_players)):
            for player in lineup:
                if player not in roster.index_of:
                    roster.index_of[player] = len(roster.index_of)
                    roster.team_of[player] = team
                    roster.off_poss[player] = 0
                    roster.def_poss[player] = 0
                    roster.off_pts[player] = 0
                    roster.def_pts[player] = 0
    return roster


def _accumulate(roster: Roster, records: Sequence[StintRecord]) -> Roster:
    for rec in records[0::2]:
        for player in rec.o_players:
            roster.off_poss[player] += rec.o_poss
            roster.def_poss[player] += rec.d_poss
            roster.off_pts[player] += rec.o_score
            roster.def_pts[player] += rec.d_score
        # defenders see the reversed assignment
        for player in rec.d_players:
            roster.def_poss[player] += rec.o_poss
            roster.off_poss[player] += rec.d_poss
            roster.def_pts[player] += rec.o_score
            roster.off_pts[player] += rec.d_score
    return roster


def accumulate_exposures(dataset: SeasonDataset | Sequence[StintRecord]) -> Roster:
    """Fresh roster for ``dataset`` with even-row possession/point totals."""
    records = dataset.records if isinstance(dataset, SeasonDataset) else tuple(dataset)
    return _accumulate(enumerate_roster(records), records)


def dataset_from_records(records: Iterable[StintRecord], strict: bool = False) -> SeasonDataset:
    records = tuple(records)
    if strict:
        check_mirror_consistency(records)
    roster = accumulate_exposures(records)
    n_zero = sum(1 for r in records if r.o_poss < 1)
    max_poss = max((max(r.o_poss, r.d_poss) for r in records[0::2]), default=0)
    return SeasonDataset(records, roster, n_zero, len(records), max_poss)


def check_mirror_consistency(records: Sequence[StintRecord]) -> None:
    """Raise IntegrityError unless every odd row mirrors the even row before it."""
    if len(records) % 2:
        raise IntegrityError(f"mirrored stint file needs an even row count, got {len(records)}")
    for i in range(0, len(records), 2):
        if not records[i + 1].is_mirror_of(records[i]):
            raise IntegrityError(f"row {i + 1} is not the mirror image of row {i}")


def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8-sig")
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8-sig"), newline="")
    sample = source.read()
    if isinstance(sample, bytes):
        sample = sample.decode("utf-8-sig")
    return io.StringIO(sample, newline="")


def _parse_number(text, what, row, integer=False):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ParseError(f"non-numeric {what}: {text!r}", row=row) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite {what}: {text!r}", row=row)
    if integer:
        if not value.is_integer():
            raise ParseError(f"{what} must be an integer, got {text!r}", row=row)
        return int(value)
    return value


def parse_stint_file(source, format: StintFormat = DEFAULT_FORMAT, strict: bool = False) -> SeasonDataset:
    """Parse a stint CSV into a :class:`SeasonDataset`.

    ``source`` may be a path, raw bytes, or a text/binary stream. Columns are
    located by header name; unknown columns are ignored with a warning. With
    ``strict=True`` every odd row must mirror its even predecessor.
    """
    with _open_text(source) as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty stint file") from None
        missing = [c for c in format.columns if c not in header]
        if missing:
            raise ParseError(f"header is missing columns {missing}")
        extra = [c for c in header if c not in format.columns]
        if extra:
            warnings.warn(f"ignoring extra stint columns {extra}", stacklevel=2)
        pos = {name: header.index(name) for name in format.columns}

        records = []
        for row_no, row in enumerate(reader):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} columns, got {len(row)}", row=row_no)
            o_players = tuple(row[pos[c]].rstrip() for c in format.o_players)
            d_players = tuple(row[pos[c]].rstrip() for c in format.d_players)
            try:
                rec = StintRecord(
                    o_team=row[pos[format.o_team]].strip(),
                    d_team=row[pos[format.d_team]].strip(),
                    o_players=o_players,
                    d_players=d_players,
                    o_poss=_parse_number(row[pos[format.o_poss]], "Oposs", row_no),
                    d_poss=_parse_number(row[pos[format.d_poss]], "Dposs", row_no),
                    o_score=_parse_number(row[pos[format.o_score]], "Oscore", row_no, integer=True),
                    d_score=_parse_number(row[pos[format.d_score]], "Dscore", row_no, integer=True),
                )
            except IntegrityError as exc:
                raise IntegrityError(f"row {row_no}: {exc}") from None
            records.append(rec)
    return dataset_from_records(records, strict=strict)


def _fmt_poss(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def write_stint_file(records: Iterable[StintRecord], target, format: StintFormat = DEFAULT_FORMAT) -> None:
    """Serialize records so that :func:`parse_stint_file` reads them back unchanged."""
    own = isinstance(target, (str, os.PathLike))
    fh = open(target, "w", newline="", encoding="utf-8") if own else target
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(format.columns)
        for r in records:
            writer.writerow(
                [r.o_team, r.d_team, *map(str, r.o_players), *map(str, r.d_players),
                 _fmt_poss(r.o_poss), _fmt_poss(r.d_poss), r.o_score, r.d_score]
            )
    finally:
        if own:
            fh.close()
