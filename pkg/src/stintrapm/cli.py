"""Command-line driver: ``stintrapm <subcommand> ...``.

Exit codes: 0 ok, 1 usage or configuration, 2 data integrity, 3 numerical
failure. Errors are reported on stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .boxscore import audit_game, audit_player_steals, audit_steal_constraint, load_feb15_1988, read_box_scores, steal_discrepancies
from .design import build_system
from .diagnostics import emit_diagnostics
from .exceptions import ConfigError, RapmError
from .lambdas import FULL_SEASON_LAMBDA, compare_lambdas, coverage_scaled_lambda, cross_validated_lambda
from .pooling import aggregate_rapm, per_season_from_table, pool_seasons
from .qc import CONVENTIONS, apportion_split_possessions, game_log_from_dataset, game_to_records, load_sidecar, run_qc
from .ridge import CI_MODES, extract_rapm, fit_ridge, format_rapm_table, rapm_table_to_dict
from .stint_io import parse_stint_file, write_stint_file
from .synth import GroundTruth, SynthConfig, config_to_dict, generate_season, recovery_report, write_truth
from .validation import bundled_seasons, format_validation_report, load_appendix_c, read_fixture, score_estimators

OUTPUT_DIR_ENV = "STINTRAPM_OUTPUT_DIR"


class UsageError(RapmError):
    exit_code = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _output_dir(given: Optional[str]) -> str:
    return given or os.environ.get(OUTPUT_DIR_ENV) or "."


def _add_lambda_source(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--lambda", dest="lam", type=float, metavar="VALUE", help="explicit penalty")
    g.add_argument("--lambda-cs", nargs=2, type=int, metavar=("G_LOGGED", "G_SEASON"),
                   help="coverage-scaled penalty (G_LOGGED / G_SEASON) * 5000")
    g.add_argument("--lambda-cv", action="store_true", help="cross-validated penalty")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=42, help="seed for the CV split")
    p.add_argument("--weighted", action="store_true", help="possession-weighted CV error")
    p.add_argument("--penalize-intercept", action="store_true",
                   help="put the intercept under the ridge penalty too")


def _add_fit_options(p):
    p.add_argument("--ci-mode", choices=CI_MODES, default="diag_only")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--emit-diagnostics", metavar="DIR")
    p.add_argument("--max-dim", type=int, default=8000, help="largest dense covariance allowed")


def _resolve_lambda(args, system) -> tuple[float, dict]:
    if args.lam is not None:
        return args.lam, {"source": "explicit"}
    if args.lambda_cs is not None:
        g, s = args.lambda_cs
        return coverage_scaled_lambda(g, s), {"source": "coverage-scaled", "games_logged": g, "games_season": s}
    cv = cross_validated_lambda(system, folds=args.folds, seed=args.seed, weighted=args.weighted)
    return cv.lam, {"source": "cross-validated", "folds": args.folds, "seed": args.seed,
                    "weighted": args.weighted}


def _fit_and_report(args, dataset, out):
    system = build_system(dataset, penalize_intercept=args.penalize_intercept)
    lam, source = _resolve_lambda(args, system)
    fit = fit_ridge(system, lam, max_dim=args.max_dim)
    table = extract_rapm(fit, dataset.roster, args.ci_mode)
    if args.emit_diagnostics:
        emit_diagnostics(args.emit_diagnostics, system, table)
    return table, source


def cmd_rapm(args, out):
    dataset = parse_stint_file(args.stints, strict=args.strict)
    table, source = _fit_and_report(args, dataset, out)
    recovery = None
    if args.truth:
        with open(args.truth, encoding="utf-8") as fh:
            recovery = recovery_report(table, GroundTruth.from_json(fh.read()))
    if args.format == "json":
        doc = rapm_table_to_dict(table)
        doc["lambda_source"] = source
        doc["n_zero_poss"] = dataset.n_zero_poss
        if recovery is not None:
            doc["recovery"] = recovery.to_dict()
        out.write(_dump(doc))
    else:
        out.write(format_rapm_table(table))
        out.write(f"zero-possession rows={dataset.n_zero_poss} lambda source={source['source']}\n")
        if recovery is not None:
            out.write(f"recovery: pearson_r={recovery.pearson_r:.4f} coverage={recovery.coverage:.3f} "
                      f"({recovery.n_well_exposed} players with >= {recovery.min_poss:g} poss)\n")


def cmd_pool(args, out):
    seasons = []
    for item in args.stints:
        label, sep, path = item.partition("=")
        if not sep or not label or not path:
            raise UsageError(f"--stints expects SEASON=PATH, got {item!r}")
        seasons.append((label, parse_stint_file(path, strict=args.strict)))
    pooled = pool_seasons(seasons)
    table, source = _fit_and_report(args, pooled, out)
    aggregate = aggregate_rapm(per_season_from_table(table)) if args.aggregate else None
    if args.format == "json":
        doc = rapm_table_to_dict(table)
        doc["lambda_source"] = source
        if aggregate is not None:
            doc["aggregate"] = {str(k): v for k, v in sorted(aggregate.items(), key=lambda kv: str(kv[0]))}
        out.write(_dump(doc))
    else:
        out.write(format_rapm_table(table))
        if aggregate is not None:
            out.write("\nPossession-weighted career RAPM\n")
            for player, value in sorted(aggregate.items(), key=lambda kv: (-kv[1], str(kv[0]))):
                out.write(f"{str(player):<25} {value:8.2f}\n")


def cmd_lambda(args, out):
    lam_cs = coverage_scaled_lambda(args.games_logged, args.games_season, args.scale)
    cv = None
    if args.stints:
        system = build_system(parse_stint_file(args.stints, strict=args.strict),
                              penalize_intercept=args.penalize_intercept)
        cv = cross_validated_lambda(system, folds=args.folds, seed=args.seed, weighted=args.weighted)
    report = compare_lambdas(lam_cs, cv)
    if args.format == "json":
        out.write(_dump(report.to_dict()))
        return
    out.write(f"lambda_cs={report.lambda_cs:.2f}\n")
    if report.lambda_cv is not None:
        out.write(f"lambda_cv={report.lambda_cv:.6g}\nratio={report.ratio:.4f}\n")
    out.write(f"verdict={report.verdict}\n")


def cmd_validate(args, out):
    tables = []
    for path in args.fixtures or ():
        tables.append((os.path.basename(path), read_fixture(path)))
    seasons = bundled_seasons() if args.all else (args.season or [])
    for season in seasons:
        tables.append((season, load_appendix_c(season)))
    if not tables:
        raise UsageError("validate needs --fixtures, --season or --all")
    if args.format == "json":
        doc = {}
        for title, records in tables:
            s = score_estimators(records) if any(r.truth_wins is not None for r in records) else None
            doc[title] = {
                "teams": [{"franchise": r.franchise, "sampled": [r.wins_sampled, r.losses_sampled],
                           "mle": r.mle if r.games_logged else None, "bayes": r.bayes,
                           "truth": r.truth_wins} for r in records],
                "mae_mle": None if s is None else s.mae_mle,
                "mae_bayes": None if s is None else s.mae_bayes,
            }
        out.write(_dump(doc))
        return
    out.write("\n".join(format_validation_report(r, t) for t, r in tables))


def cmd_audit(args, out):
    if args.box:
        reports = [audit_game(b) for b in read_box_scores(args.box)]
        if args.format == "json":
            out.write(_dump(reports))
        else:
            for rep in reports:
                for side, entry in rep["teams"].items():
                    out.write(f"{rep['game']} {side} {entry['team']}: steals {entry['steal_audit']}, "
                              f"oliver possessions {entry['oliver_poss']:.2f}\n")
        return
    fx = load_feb15_1988()
    reported = fx["reported_steals"]
    verdict = audit_steal_constraint(sum(reported.values()), fx["live_turnovers"])
    player = audit_player_steals(reported, fx["live_turnovers"])
    diffs = steal_discrepancies(fx["film_steals"], reported)
    doc = {"game": fx["game"], "team_steals": sum(reported.values()),
           "opp_live_turnovers": fx["live_turnovers"], "opp_dead_turnovers": fx["dead_turnovers"],
           "verdict": str(verdict), "player_verdict": str(player), "discrepancies": diffs}
    if args.format == "json":
        out.write(_dump(doc))
        return
    out.write(f"{fx['game']}\n{fx['defense']} steals credited: {doc['team_steals']}; "
              f"{fx['offense']} live-ball turnovers: {doc['opp_live_turnovers']} "
              f"(dead-ball {doc['opp_dead_turnovers']})\n")
    out.write(f"steal constraint: {verdict}\nper-player audit: {player}\n")
    for p, d in diffs.items():
        if p != "total":
            out.write(f"  {p:<18} reported {reported.get(p, 0)} film {fx['film_steals'].get(p, 0)} ({d:+d})\n")
    out.write(f"  {'total':<18} {diffs['total']:+d}\n")


def cmd_qc(args, out):
    kwargs = load_sidecar(args.sidecar)
    box = kwargs.pop("box")
    log = game_log_from_dataset(parse_stint_file(args.stints, strict=args.strict), **kwargs)
    report = run_qc(log, box)
    if args.export:
        if report.verdict != "pass":
            raise ConfigError(f"refusing to export a game with verdict {report.verdict!r}")
        write_stint_file(game_to_records(apportion_split_possessions(log, args.convention)), args.export)
    out.write(_dump(report.to_dict()) if args.format == "json" else report.to_text())


def cmd_synth(args, out):
    cfg = SynthConfig(teams=args.teams, players_per_team=args.players_per_team, tau=args.tau,
                      sigma=args.sigma, games=args.games, split_prob=args.split_prob,
                      modal_prob=args.modal_prob, rounding=args.rounding, seed=args.seed)
    dataset, truth = generate_season(cfg, args.convention)
    directory = _output_dir(args.out_dir)
    os.makedirs(directory, exist_ok=True)
    stints = os.path.join(directory, f"{args.prefix}_stints.csv")
    truth_path = os.path.join(directory, f"{args.prefix}_truth.json")
    write_stint_file(dataset.records, stints)
    write_truth(truth, truth_path)
    summary = {"config": config_to_dict(cfg), "convention": args.convention, "rows": dataset.n_total_rows,
               "players": dataset.roster.n_players, "stints_path": stints, "truth_path": truth_path}
    out.write(_dump(summary) if args.format == "json" else
              f"wrote {dataset.n_total_rows} rows ({dataset.roster.n_players} players) to {stints}\n"
              f"ground truth in {truth_path}\n")


def cmd_diagnose(args, out):
    dataset = parse_stint_file(args.stints, strict=args.strict)
    system = build_system(dataset, penalize_intercept=args.penalize_intercept)
    lam, _ = _resolve_lambda(args, system)
    table = extract_rapm(fit_ridge(system, lam), dataset.roster)
    for path in emit_diagnostics(_output_dir(args.out_dir), system, table):
        out.write(path + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stintrapm", description="Stint-level RAPM estimation and audit tools")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rapm", help="fit one season")
    p.add_argument("--stints", required=True)
    p.add_argument("--strict", action="store_true", help="require mirrored row pairs")
    p.add_argument("--truth", help="ground-truth JSON from `synth` for a recovery report")
    _add_lambda_source(p)
    _add_fit_options(p)
    p.set_defaults(func=cmd_rapm)

    p = sub.add_parser("pool", help="fit several seasons with player-season entities")
    p.add_argument("--stints", action="append", required=True, metavar="SEASON=PATH")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--aggregate", action="store_true", help="possession-weighted career RAPM")
    _add_lambda_source(p)
    _add_fit_options(p)
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("lambda", help="coverage-scaled vs cross-validated penalty")
    p.add_argument("--games-logged", type=int, required=True)
    p.add_argument("--games-season", type=int, required=True)
    p.add_argument("--scale", type=float, default=FULL_SEASON_LAMBDA)
    p.add_argument("--stints", help="stint file for the CV comparison")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--penalize-intercept", action="store_true")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_lambda)

    p = sub.add_parser("validate", help="win-loss projections from sampled records")
    p.add_argument("--fixtures", nargs="+")
    p.add_argument("--season", action="append", help="bundled season, e.g. 1984-85")
    p.add_argument("--all", action="store_true", help="every bundled season")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("audit", help="box-score steal constraint audit")
    p.add_argument("--box", help="box scores (JSON or CSV); default is the bundled 1988-02-15 game")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("qc", help="quality-control one reconstructed game")
    p.add_argument("--stints", required=True, help="one-game stint file")
    p.add_argument("--sidecar", required=True, help="official score, minutes, splits, box score")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--convention", choices=CONVENTIONS, default="half_half")
    p.add_argument("--export", help="write the apportioned stint file when the game passes")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_qc)

    p = sub.add_parser("synth", help="generate a synthetic season with known truth")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--games", type=int, default=200)
    p.add_argument("--teams", type=int, default=10)
    p.add_argument("--players-per-team", type=int, default=9)
    p.add_argument("--tau", type=float, default=3.0)
    p.add_argument("--sigma", type=float, default=9.5)
    p.add_argument("--split-prob", type=float, default=0.0)
    p.add_argument("--modal-prob", type=float, default=0.0)
    p.add_argument("--rounding", choices=("stochastic", "nearest"), default="stochastic")
    p.add_argument("--convention", choices=CONVENTIONS, default="half_half")
    p.add_argument("--out-dir", help=f"defaults to ${OUTPUT_DIR_ENV} or the current directory")
    p.add_argument("--prefix", default="synth")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("diagnose", help="write histogram and density datasets")
    p.add_argument("--stints", required=True)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out-dir", help=f"defaults to ${OUTPUT_DIR_ENV} or the current directory")
    _add_lambda_source(p)
    p.set_defaults(func=cmd_diagnose)
    return parser


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            args.func(args, stdout)
        for w in caught:
            stderr.write(f"warning: {w.message}\n")
        return 0
    except RapmError as exc:
        code = exc.exit_code
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    except FileNotFoundError as exc:
        code = 1
        err = {"error": "FileNotFoundError", "message": f"no such file: {exc.filename}", "exit_code": code}
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        code = 2
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
