"""Separated-encoding design matrix.

Column 0 is the intercept, columns ``1..P`` hold +1 for the five offensive
players and columns ``P+1..2P`` hold -1 for the five defenders. The response
is the offensive team's points per 100 possessions, weighted by possessions.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import IntegrityError
from .stint_io import Roster, SeasonDataset, StintRecord, enumerate_roster


@dataclass(frozen=True)
class RidgeSystem:
    X: np.ndarray
    y: np.ndarray
    w: np.ndarray
    n_players: int
    n_total_rows: int
    source_rows: np.ndarray
    lam: Optional[float] = None
    #: False leaves column 0 (the intercept) out of the ridge penalty
    penalize_intercept: bool = True

    intercept_col = 0

    @property
    def off_block(self) -> slice:
        return slice(1, self.n_players + 1)

    @property
    def def_block(self) -> slice:
        return slice(self.n_players + 1, 2 * self.n_players + 1)

    @property
    def n_eff(self) -> int:
        return self.X.shape[0]

    def with_lambda(self, lam: float) -> "RidgeSystem":
        return replace(self, lam=lam)


def _fill_rows(X, records, index_of, n_players):
    for i, rec in enumerate(records):
        X[i, 0] = 1.0
        try:
            for p in rec.o_players:
                X[i, 1 + index_of[p]] = 1.0
            for p in rec.d_players:
                X[i, n_players + 1 + index_of[p]] = -1.0
        except KeyError as exc:
            raise IntegrityError(f"player {exc.args[0]!r} is not in the roster") from None


def build_system(dataset: SeasonDataset, roster: Optional[Roster] = None,
                 penalize_intercept: bool = False) -> RidgeSystem:
    """Build (X, y, w) from the even rows of ``dataset`` with ``Oposs >= 1``.

    The intercept is unpenalized by default, so adding a constant to every
    response moves only the intercept. ``penalize_intercept=True`` puts it
    under the same penalty as the players.
    """
    roster = dataset.roster if roster is None else roster
    P = roster.n_players
    kept = [(i, r) for i, r in enumerate(dataset.records) if i % 2 == 0 and r.o_poss >= 1]
    X = np.zeros((len(kept), 2 * P + 1))
    _fill_rows(X, [r for _, r in kept], roster.index_of, P)
    w = np.array([r.o_poss for _, r in kept], dtype=float)
    y = np.array([100.0 * r.o_score / r.o_poss for _, r in kept], dtype=float)
    rows = np.array([i for i, _ in kept], dtype=int)
    return RidgeSystem(X, y, w, P, dataset.n_total_rows, rows, penalize_intercept=penalize_intercept)


def design_triplets(system: RidgeSystem):
    """Nonzero entries of X as ``(row, col, value)`` tuples, row-major."""
    rows, cols = np.nonzero(system.X)
    return [(int(r), int(c), float(system.X[r, c])) for r, c in zip(rows, cols)]


def write_triplets(system: RidgeSystem, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("row,col,value\n")
        for r, c, v in design_triplets(system):
            fh.write(f"{r},{c},{v:g}\n")


class StintEncoder(TransformerMixin, BaseEstimator):
    """Encode stint records as separated-encoding rows.

    ``fit`` enumerates the roster from all records (first-encounter order);
    ``transform`` encodes each record it is given, without the even-row or
    zero-possession filters, so it can be used inside pipelines on
    pre-filtered records.

    Attributes
    ----------
    roster_ : Roster
    n_players_ : int
    """

    def fit(self, records: Sequence[StintRecord], y=None):
        if isinstance(records, SeasonDataset):
            records = records.records
        self.roster_ = enumerate_roster(records)
        self.n_players_ = self.roster_.n_players
        return self

    def transform(self, records: Sequence[StintRecord]) -> np.ndarray:
        check_is_fitted(self, "roster_")
        if isinstance(records, SeasonDataset):
            records = records.records
        X = np.zeros((len(records), 2 * self.n_players_ + 1))
        _fill_rows(X, records, self.roster_.index_of, self.n_players_)
        return X

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "roster_")
        players = self.roster_.players
        names = ["intercept"] + [f"off[{p}]" for p in players] + [f"def[{p}]" for p in players]
        return np.asarray(names, dtype=object)


def response_and_weights(records: Sequence[StintRecord]):
    """Points per 100 possessions and possession weights for ``records``."""
    w = np.array([r.o_poss for r in records], dtype=float)
    if np.any(w <= 0):
        raise IntegrityError("records with zero possessions have no defined response")
    y = np.array([100.0 * r.o_score for r in records], dtype=float) / w
    return y, w
