"""Multi-season pooling with player-season entities."""
from __future__ import annotations

import warnings
from typing import Iterable, Mapping, NamedTuple

from .exceptions import IntegrityError, ParameterError
from .stint_io import SeasonDataset, StintRecord, dataset_from_records


class PlayerSeasonKey(NamedTuple):
    player: str
    season: str

    def __str__(self):
        return f"{self.player} [{self.season}]"


def _rekey(rec: StintRecord, season: str) -> StintRecord:
    return StintRecord(
        rec.o_team, rec.d_team,
        tuple(PlayerSeasonKey(p, season) for p in rec.o_players),
        tuple(PlayerSeasonKey(p, season) for p in rec.d_players),
        rec.o_poss, rec.d_poss, rec.o_score, rec.d_score,
    )


def pool_seasons(datasets: Iterable[tuple[str, SeasonDataset]]) -> SeasonDataset:
    """Concatenate seasons into one dataset keyed by :class:`PlayerSeasonKey`.

    Each season must have an even row count so that row parity (even rows
    are regression rows) survives concatenation.
    """
    datasets = list(datasets)
    labels = [label for label, _ in datasets]
    dupes = sorted({l for l in labels if labels.count(l) > 1})
    if dupes:
        raise ParameterError(f"duplicate season labels: {dupes}")
    records = []
    for label, ds in datasets:
        if ds.n_total_rows % 2:
            raise IntegrityError(f"season {label} has an odd row count ({ds.n_total_rows})")
        records.extend(_rekey(r, label) for r in ds.records)
    return dataset_from_records(records)


def aggregate_rapm(per_season: Mapping) -> dict:
    """Possession-weighted mean of per-season RAPM for each player.

    ``per_season`` maps ``(player, season)`` to ``(rapm, possessions)``.
    Players whose possessions sum to zero are omitted with a warning.
    """
    num: dict = {}
    den: dict = {}
    for key, (rapm, poss) in per_season.items():
        player = key[0]
        num[player] = num.get(player, 0.0) + poss * rapm
        den[player] = den.get(player, 0.0) + poss
    out = {}
    for player, total in den.items():
        if total <= 0:
            warnings.warn(f"{player!r} has zero total possessions; omitted from aggregate", stacklevel=2)
            continue
        out[player] = num[player] / total
    return out


def per_season_from_table(table) -> dict:
    """``{(player, season): (rapm, possessions)}`` from a pooled RAPM table."""
    return {(r.player.player, r.player.season): (r.rapm, r.poss) for r in table.rows}
