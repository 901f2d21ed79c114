import json

import pytest
from hypothesis import given, settings, strategies as st

from conftest import AWAY, HOME, stint
from stintrapm.boxscore import BoxScore, TeamBox
from stintrapm.exceptions import ConfigError, IntegrityError
from stintrapm.qc import (
    CONVENTIONS,
    GameLog,
    SplitTag,
    Substitution,
    apportion_split_possessions,
    check_possession_balance,
    corrected_possession_totals,
    game_log_from_dataset,
    game_to_records,
    load_sidecar,
    run_qc,
)
from stintrapm.stint_io import dataset_from_records
from stintrapm.synth import SynthConfig, generate_game_logs


def lineups(i):
    return HOME[i:i + 5], AWAY[i:i + 5]


def make_log(tallies, splits=(), **kw):
    """Game log from ``[(home_poss, away_poss, home_pts, away_pts), ...]``."""
    stints = []
    for i, (hp, ap, hs, as_) in enumerate(tallies):
        h, a = lineups(i % 3)
        stints.append(stint("HOM", "AWY", h, a, hp, ap, hs, as_))
    home_splits = sum(1 for t in splits if t.team == "home")
    return GameLog("HOM", "AWY", stints, split_count_home=home_splits,
                   split_count_away=len(splits) - home_splits, split_tags=splits, **kw)


BOX = BoxScore(TeamBox("HOM", 10, 2, 3, 0), TeamBox("AWY", 10, 2, 2, 0))


def test_corrected_totals_examples():
    tallies = [(30, 30, 0, 0), (20, 24, 0, 0), (25, 20, 0, 0), (20, 20, 0, 0)]
    log = make_log(tallies, [SplitTag("home", b) for b in range(3)])
    assert corrected_possession_totals(log) == (92, 94)
    assert corrected_possession_totals(make_log([(5, 5, 0, 0), (4, 4, 0, 0)])) == (9, 9)


def test_split_count_exceeding_tallies():
    log = make_log([(0, 1, 0, 0), (0, 1, 0, 0)], [SplitTag("home", 0)])
    with pytest.raises(IntegrityError, match="exceeds"):
        corrected_possession_totals(log)


def test_split_count_bounded_by_boundaries():
    with pytest.raises(IntegrityError, match="split count"):
        make_log([(3, 3, 0, 0), (3, 3, 0, 0)], [SplitTag("home", 0), SplitTag("home", 0)])
    with pytest.raises(IntegrityError, match="bad split tag"):
        make_log([(3, 3, 0, 0), (3, 3, 0, 0)], [SplitTag("home", 1)])


@pytest.mark.parametrize("convention, closing, opening", [
    ("half_half", 2.5, 3.5),
    ("close_full", 3.0, 3.0),
    ("open_full", 2.0, 4.0),
])
def test_one_split_apportioned(convention, closing, opening):
    # raw tallies 3 and 4 both count the split possession
    log = make_log([(3, 3, 0, 0), (4, 3, 0, 0)], [SplitTag("home", 0)])
    out = apportion_split_possessions(log, convention)
    assert [s.o_poss for s in out.stints] == [closing, opening]
    assert [s.d_poss for s in out.stints] == [3, 3]
    assert out.split_count_home == 0 and out.split_tags == ()


def test_half_half_gives_each_stint_half():
    log = make_log([(1, 1, 0, 0), (1, 1, 0, 0)], [SplitTag("away", 0)])
    out = apportion_split_possessions(log)
    assert [s.d_poss for s in out.stints] == [0.5, 0.5]


def test_untagged_split_rejected():
    log = GameLog("HOM", "AWY", make_log([(3, 3, 0, 0), (3, 3, 0, 0)]).stints, split_count_home=1)
    with pytest.raises(IntegrityError, match="tagged"):
        apportion_split_possessions(log)
    with pytest.raises(ValueError):
        apportion_split_possessions(make_log([(1, 1, 0, 0)]), "thirds")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(CONVENTIONS))
def test_apportionment_conserves_corrected_totals(seed, convention):
    cfg = SynthConfig(teams=2, players_per_team=6, games=1, poss_per_game=40,
                      split_prob=0.4, seed=seed)
    (game,) = generate_game_logs(cfg)
    w = corrected_possession_totals(game.log)
    out = apportion_split_possessions(game.log, convention)
    assert sum(s.o_poss for s in out.stints) == pytest.approx(w[0], abs=1e-12)
    assert sum(s.d_poss for s in out.stints) == pytest.approx(w[1], abs=1e-12)
    assert corrected_possession_totals(out) == pytest.approx(w)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_corrected_totals_match_event_recount(seed):
    # independent oracle: count the possession stream directly
    cfg = SynthConfig(teams=3, players_per_team=6, games=1, poss_per_game=55,
                      split_prob=0.3, seed=seed)
    (game,) = generate_game_logs(cfg)
    recount = tuple(sum(1 for side, _ in game.events if side == s) for s in ("home", "away"))
    assert corrected_possession_totals(game.log) == recount
    w_home, w_away = recount
    assert check_possession_balance(w_home, w_away) == "pass"


def test_balance_examples():
    assert check_possession_balance(100, 100, False) == "pass"
    assert check_possession_balance(100, 101, False) == "pass"
    assert check_possession_balance(100, 102, False) == "review"
    assert check_possession_balance(100, 102, True) == "pass"
    assert check_possession_balance(100, 103, True) == "review"


def test_run_qc_clean_game():
    log = make_log([(5, 5, 6, 4), (4, 4, 3, 5)], official_final=(9, 9))
    rep = run_qc(log, BoxScore(TeamBox("HOM", 10, 2, 1, 0), TeamBox("AWY", 10, 2, 1, 0)))
    assert rep.score_ok and rep.lineup_ok and rep.verdict == "pass"
    assert not rep.minutes_evaluated
    assert rep.totals == (9, 9)


def test_score_mismatch_review_then_exclude():
    log = make_log([(5, 5, 6, 4)], official_final=(7, 4))
    rep = run_qc(log, BOX)
    assert not rep.score_ok and rep.verdict == "review"
    rep2 = run_qc(make_log([(5, 5, 6, 4)], official_final=(7, 4), rereviewed=True), BOX)
    assert rep2.verdict == "exclude"


def test_minutes_flag():
    log = make_log([(5, 5, 0, 0), (5, 5, 0, 0)], official_final=(0, 0),
                   stint_minutes=(12.0, 18.0), official_minutes={"H3": 33.5, "H1": 12.0})
    rep = run_qc(log, BOX)
    # H3 appears in both stints: implied 30.0 vs 33.5
    flags = dict(rep.minutes_flags)
    assert flags["H3"] == pytest.approx(3.5)
    assert "H1" not in flags
    assert rep.verdict == "review"


def test_possession_plausibility_flags_but_never_excludes():
    log = make_log([(95, 95, 0, 0)], official_final=(0, 0), rereviewed=True)
    box = BoxScore(TeamBox("HOM", 90, 5, 10, 27), TeamBox("AWY", 80, 0, 15, 0))
    rep = run_qc(log, box)
    team, delta = rep.poss_flags[0]
    assert team == "HOM" and delta == pytest.approx(abs(95 - (90 - 5 + 10 + 0.44 * 27)))
    assert rep.verdict == "review"


def test_w95_vs_oliver_107():
    log = make_log([(95, 95, 0, 0)], official_final=(0, 0))
    box = BoxScore(TeamBox("HOM", 97, 0, 10, 0), TeamBox("AWY", 85, 0, 10, 0))
    rep = run_qc(log, box)
    assert rep.poss_flags == (("HOM", pytest.approx(12.0)),)
    assert rep.verdict == "review"


def test_footage_failure_excludes():
    rep = run_qc(make_log([(1, 1, 0, 0)], official_final=(0, 0), footage_ok=False), BOX)
    assert rep.verdict == "exclude"


def test_missing_official_data_is_config_error():
    with pytest.raises(ConfigError):
        run_qc(make_log([(1, 1, 0, 0)]), BOX)
    with pytest.raises(ConfigError):
        run_qc(make_log([(1, 1, 0, 0)], official_final=(0, 0)), None)


def test_substitution_replay():
    log = make_log([(2, 2, 0, 0), (2, 2, 0, 0)], official_final=(0, 0),
                   substitutions=(Substitution(0, "home", "H1", "H6"),
                                  Substitution(0, "away", "A1", "A6")))
    assert run_qc(log, BOX).lineup_ok
    bad = make_log([(2, 2, 0, 0), (2, 2, 0, 0)], official_final=(0, 0),
                   substitutions=(Substitution(0, "home", "H2", "H6"),), rereviewed=True)
    rep = run_qc(bad, BOX)
    assert not rep.lineup_ok and rep.verdict == "exclude"


def test_no_substitution_list_flags_identity_gaps():
    h, a = lineups(0)
    log = GameLog("HOM", "AWY", [stint("HOM", "AWY", h, a, 1, 1, 0, 0)] * 2, official_final=(0, 0))
    rep = run_qc(log, BOX)
    assert rep.lineup_ok
    assert rep.lineup_notes and "no lineup change" in rep.lineup_notes[0]


def test_run_qc_deterministic_and_reports_render():
    log = make_log([(5, 5, 6, 4), (4, 4, 3, 5)], official_final=(9, 8))
    a, b = run_qc(log, BOX), run_qc(log, BOX)
    assert a == b
    assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)
    assert "verdict: review" in a.to_text()


def test_sidecar_and_game_log_from_dataset(tmp_path):
    h, a = lineups(0)
    rec = stint("AWY", "HOM", a, h, 3, 4, 2, 5)  # away-offense even row
    ds = dataset_from_records([rec, rec.mirrored()])
    side = {"home_team": "HOM", "official_final": [5, 2], "split_counts": {"home": 0, "away": 0},
            "rereviewed": True,
            "box": {"home": {"team": "HOM", "fga": 4, "oreb": 0, "to": 0, "fta": 0},
                    "away": {"team": "AWY", "fga": 3, "oreb": 0, "to": 0, "fta": 0}}}
    path = tmp_path / "g.json"
    path.write_text(json.dumps(side))
    kw = load_sidecar(path)
    box = kw.pop("box")
    log = game_log_from_dataset(ds, **kw)
    assert log.stints[0].o_team == "HOM" and log.stints[0].o_score == 5
    assert run_qc(log, box).verdict == "pass"
    assert game_to_records(log)[1] == log.stints[0].mirrored()
    with pytest.raises(IntegrityError):
        game_log_from_dataset(ds, home_team="XXX")
