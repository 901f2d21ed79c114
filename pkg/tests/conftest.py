import io
import sys
import os

import numpy as np
import pytest

from stintrapm.stint_io import StintRecord, dataset_from_records, write_stint_file
from stintrapm.synth import SynthConfig, generate_season

DATA = os.path.join(os.path.dirname(__file__), "data")

HOME = tuple(f"H{i}" for i in range(1, 8))
AWAY = tuple(f"A{i}" for i in range(1, 8))


def stint(o_team, d_team, o_players, d_players, o_poss, d_poss, o_score, d_score):
    return StintRecord(o_team, d_team, tuple(o_players), tuple(d_players), o_poss, d_poss, o_score, d_score)


def mirrored_pair(rec):
    return [rec, rec.mirrored()]


@pytest.fixture
def tiny_records():
    """Three stints of a made-up game, with a zero-possession stint in the middle."""
    s1 = stint("HOM", "AWY", HOME[:5], AWAY[:5], 4, 4, 5, 3)
    s2 = stint("HOM", "AWY", HOME[1:6], AWAY[:5], 0, 1, 0, 2)
    s3 = stint("HOM", "AWY", HOME[2:7], AWAY[2:7], 6, 5, 7, 6)
    return [r for s in (s1, s2, s3) for r in mirrored_pair(s)]


@pytest.fixture
def tiny_dataset(tiny_records):
    return dataset_from_records(tiny_records)


def to_csv_text(records):
    buf = io.StringIO()
    write_stint_file(records, buf)
    return buf.getvalue()


@pytest.fixture(scope="session")
def small_season():
    """A quick synthetic season: 6 teams, 60 games."""
    return generate_season(SynthConfig(teams=6, players_per_team=7, games=60, seed=3))


def random_system(rng, n_rows, n_cols):
    X = rng.normal(size=(n_rows, n_cols))
    w = rng.uniform(0.5, 5.0, size=n_rows)
    y = rng.normal(100.0, 10.0, size=n_rows)
    return X, y, w


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
        terminalreporter.write_line(line)
