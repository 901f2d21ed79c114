import csv
import io
import math
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import DATA
from stintrapm.exceptions import EstimationError, ParameterError, ParseError
from stintrapm.ridge import RapmRow
from stintrapm.validation import (
    TeamRatingPair,
    TeamSeasonRecord,
    aggregate_franchise_errors,
    bayes_wins,
    bundled_seasons,
    calibration_regression,
    format_validation_report,
    load_appendix_c,
    mle_wins,
    read_fixture,
    score_estimators,
    team_rating_prediction,
)


def row(player, team, poss, rapm):
    return RapmRow(0, player, team, poss / 2, 0, poss / 2, 0, rapm / 2, rapm / 2, rapm, rapm - 1, rapm + 1)


@pytest.mark.parametrize("w, n, expected", [(17, 26, 53.6), (1, 1, 82.0), (0, 5, 0.0)])
def test_mle_examples(w, n, expected):
    assert round(mle_wins(w, n), 1) == expected


@pytest.mark.parametrize("w, n, expected", [(17, 26, 50.1), (0, 0, 41.0), (1, 1, 44.7)])
def test_bayes_examples(w, n, expected):
    assert round(bayes_wins(w, n), 1) == expected


def test_estimator_errors():
    with pytest.raises(ParameterError, match="undefined"):
        mle_wins(0, 0)
    with pytest.raises(ParameterError):
        bayes_wins(3, 2)
    with pytest.raises(ParameterError):
        TeamSeasonRecord("X", 1, 1, truth_wins=90)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 82).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))))
def test_bayes_contracts_toward_41(wn):
    w, n = wn
    assert abs(bayes_wins(w, n) - 41.0) <= abs(mle_wins(w, n) - 41.0) + 1e-12


def test_bayes_approaches_mle():
    gaps = [abs(bayes_wins(3 * k, 4 * k) - mle_wins(3 * k, 4 * k)) for k in (1, 10, 100, 1000)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    # |(3k+5)/(4k+10) - 3/4| * 82 = 82 * 2.5 / (4k + 10)
    for k, gap in zip((1, 10, 100, 1000), gaps):
        assert gap == pytest.approx(82 * 2.5 / (4 * k + 10), rel=1e-12)


def test_team_rating_examples():
    same = [row(f"p{i}", "T", 100 + i, 2.5) for i in range(5)]
    assert team_rating_prediction(same)["T"] == pytest.approx(2.5)
    two = [row("a", "T", 100, 4.0), row("b", "T", 300, 0.0)]
    assert team_rating_prediction(two)["T"] == pytest.approx(1.0)
    assert team_rating_prediction(two, team_of={"a": "U"}) == {"U": pytest.approx(4.0)}


def test_team_rating_zero_possessions_warns():
    with pytest.warns(UserWarning, match="no recorded possessions"):
        assert team_rating_prediction([row("a", "T", 0, 1.0)]) == {}


def test_team_rating_tracks_generator_truth(small_season):
    from stintrapm.design import build_system
    from stintrapm.ridge import extract_rapm, fit_ridge
    ds, truth = small_season
    table = extract_rapm(fit_ridge(build_system(ds), 30.0), ds.roster)
    pred = team_rating_prediction(table)
    true = truth.rapm()
    exposure = {r.player: r.poss for r in table.rows}
    actual = {}
    for team in pred:
        members = [p for p in true if truth.team_of[p] == team]
        actual[team] = sum(exposure[p] * true[p] for p in members) / sum(exposure[p] for p in members)
    teams = sorted(pred)
    assert np.corrcoef([pred[t] for t in teams], [actual[t] for t in teams])[0, 1] > 0.8


def test_calibration_constructed_lines():
    exact = calibration_regression([TeamRatingPair(x, x) for x in (-3.0, 0.5, 2.0, 7.0)])
    assert (exact.alpha, exact.gamma, exact.r_squared) == pytest.approx((0.0, 1.0, 1.0))
    line = calibration_regression([TeamRatingPair(x, 2 * x + 1) for x in (-1.0, 0.0, 3.0)])
    assert line.gamma == pytest.approx(2.0) and line.alpha == pytest.approx(1.0)


def test_calibration_matches_normal_equations():
    rng = np.random.default_rng(5)
    x = rng.normal(0, 4, 40)
    y = 0.3 + 0.8 * x + rng.normal(0, 2, 40)
    cal = calibration_regression([TeamRatingPair(a, b) for a, b in zip(x, y)])
    A = np.column_stack([np.ones_like(x), x])
    coef = np.linalg.solve(A.T @ A, A.T @ y)
    assert cal.alpha == pytest.approx(coef[0], abs=1e-10)
    assert cal.gamma == pytest.approx(coef[1], abs=1e-10)
    resid = y - A @ coef
    assert cal.r_squared == pytest.approx(1 - resid @ resid / np.sum((y - y.mean()) ** 2), abs=1e-10)


def test_calibration_errors():
    with pytest.raises(ParameterError):
        calibration_regression([TeamRatingPair(1, 1)] * 2)
    with pytest.raises(EstimationError, match="constant"):
        calibration_regression([TeamRatingPair(1.0, float(i)) for i in range(4)])


def test_perfect_estimator_scores_zero():
    recs = [TeamSeasonRecord("A", 41, 41, truth_wins=41), TeamSeasonRecord("B", 0, 0, truth_wins=41)]
    s = score_estimators(recs)
    assert s.mae_mle == 0 and s.rmse_mle == 0 and s.mae_bayes == 0 and s.n == 1
    with pytest.raises(ParameterError):
        score_estimators([TeamSeasonRecord("A", 3, 2)])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 20), st.integers(0, 82)), min_size=1, max_size=20))
def test_mae_never_exceeds_rmse(rows):
    recs = [TeamSeasonRecord(f"F{i}", w, l, truth_wins=t) for i, (w, l, t) in enumerate(rows)]
    if not any(r.games_logged for r in recs):
        return
    s = score_estimators(recs)
    assert s.mae_mle <= s.rmse_mle + 1e-12 and s.mae_bayes <= s.rmse_bayes + 1e-12


def test_bundled_tables_load():
    seasons = bundled_seasons()
    assert seasons[0] == "1984-85" and len(seasons) == 12
    boston = load_appendix_c("1984-85")[0]
    assert (boston.franchise, boston.wins_sampled, boston.losses_sampled, boston.truth_wins) == ("Boston", 17, 9, 63)
    with pytest.raises(ParameterError):
        load_appendix_c("2030-31")


def test_fixture_reader(tmp_path):
    path = tmp_path / "c1.csv"
    path.write_text("franchise,sampled_w,sampled_l,truth_wins,pct_sampled\nA,3,1,50,4.9\nB,0,0,,\n")
    recs = read_fixture(str(path))
    assert recs[1].truth_wins is None and recs[1].pct_sampled is None
    with pytest.raises(ParseError):
        read_fixture(io.StringIO("franchise,sampled_w\nA,x\n"))


def test_report_layout():
    text = format_validation_report(load_appendix_c("1984-85"), "1984-85")
    lines = text.splitlines()
    assert lines[0] == "1984-85"
    assert lines[1].split() == ["Franchise", "Sampled", "MLE", "Bayes", "Truth", "Error", "%Samp"]
    assert "Boston" in lines[2] and "53.6" in lines[2] and "50.1" in lines[2]
    assert lines[-2].split()[-2:] == ["9.5", "6.8"]


def test_franchise_totals_are_sums_of_row_errors():
    seasons = {s: load_appendix_c(s) for s in bundled_seasons()}
    totals = {t.franchise: t for t in aggregate_franchise_errors(seasons)}
    # oracle: sum the printed per-row errors from the golden file
    with open(os.path.join(DATA, "appendix_c_golden.csv"), encoding="utf-8") as fh:
        golden = list(csv.DictReader(fh))
    sums = {}
    for g in golden:
        if g["error"] not in ("", "-"):
            sums[g["franchise"]] = sums.get(g["franchise"], 0.0) + float(g["error"])
    for name, total in sums.items():
        n_rows = sum(1 for g in golden if g["franchise"] == name and g["error"] not in ("", "-"))
        # printed errors are rounded to 0.1 each
        assert totals[name].mle_error == pytest.approx(total, abs=0.05 * n_rows + 1e-9)
    assert all(0 < t.pct_sampled <= 100 for t in totals.values())
