"""Command-line interface: ``medsolve {solve,diagnose,sweep,check,improve,fixtures}``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Sequence

import numpy as np

from . import diagnose, moment, papercases
from .errors import InvalidInput, MedsolveError, SolverFailure
from .families import game_from_dict, game_to_dict
from .geom import BeliefGrid
from .model import BeliefPlan, Game, MomentGame, as_belief
from .solve import solve

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_NOT_IMPROVABLE = 4

SIG_DIGITS = 12


def _round(x: Any) -> Any:
    """Recursively fix floats to 12 significant digits; non-finite floats become null."""
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if not math.isfinite(v):
            return None
        v = float(f"{v:.{SIG_DIGITS}g}")
        return 0.0 if v == 0 else v
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.ndarray):
        return _round(x.tolist())
    if isinstance(x, dict):
        return {str(k): _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    return x


def emit(obj: Any, stream=None) -> None:
    stream = stream or sys.stdout
    stream.write(json.dumps(_round(obj), indent=2))
    stream.write("\n")


def fmt(v: float) -> str:
    return "" if v is None or not math.isfinite(v) else f"{v:.{SIG_DIGITS}g}"


# ------------------------------------------------------------ input helpers


def _read_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc


def game_spec(args) -> dict:
    if getattr(args, "family", None):
        params = json.loads(args.params) if args.params else {}
        if not isinstance(params, dict):
            raise InvalidInput("--params must be a JSON object")
        return {"family": args.family, "params": params}
    if not getattr(args, "game", None):
        raise InvalidInput("one of --game or --family is required")
    return _read_json(args.game)


def parse_prior(text: str | None, game: Game) -> np.ndarray | None:
    if text is None:
        return None
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InvalidInput(f"bad prior {text!r}") from exc
    return as_belief(vals, game.n)


def _add_game_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--game", help="game JSON file")
    g.add_argument("--family", help="built-in family tag instead of a file")
    p.add_argument("--params", help="JSON object of family parameters (with --family)")


def _grid_arg(value: str) -> int:
    k = int(value)
    if k < 1:
        raise argparse.ArgumentTypeError("grid resolution must be positive")
    return k


# ------------------------------------------------------------ commands


def cmd_solve(args) -> int:
    game = game_from_dict(game_spec(args))
    p = parse_prior(args.prior, game)
    rep = solve(game, args.protocol, p, args.grid, args.method, args.exact_lp)
    emit(rep.to_dict())
    return EXIT_OK


def _safe(fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except (InvalidInput, SolverFailure):
        return None


def cmd_diagnose(args) -> int:
    game = game_from_dict(game_spec(args))
    p = parse_prior(args.prior, game)
    p = game.prior.copy() if p is None else p
    grid = args.grid
    bp, md, ct = diagnose.protocol_values(game, p, grid)
    report: dict[str, Any] = {"prior": p, "values": {"BP": bp, "MD": md, "CT": ct}}
    report["trichotomy"] = _safe(diagnose.label_values, bp, md, ct)
    fd = diagnose.is_full_dimensional(game, p, grid)
    report["full_dimensionality"] = fd.to_dict()
    st = diagnose.improvement_status(game, p, ct, grid)
    report["improvability"] = st.to_dict()
    report["full_disclosure_optimal"] = _safe(diagnose.full_disclosure_optimal, game, p, grid)
    report["mono_crossing"] = None
    report["single_crossing"] = None
    report["mean_classifier"] = None
    if game.n == 2:
        report["mono_crossing"] = diagnose.mono_crossing(game, ct)
        report["single_crossing"] = _safe(diagnose.single_crossing_at, game, ct, float(p[1]))
    if isinstance(game, MomentGame) and game.k == 1:
        report["mean_classifier"] = moment.one_dim_mean_classifier(game, p).to_dict()
    emit(report)
    return EXIT_OK


def _sweep_row(job: tuple) -> list[str]:
    spec, prior, protocols, grid = job
    game = game_from_dict(spec)
    bp, md, ct = diagnose.protocol_values(game, prior, grid)
    known = {"bp": bp, "md": md, "ct-max": ct}
    row = [fmt(float(v)) for v in prior]
    for proto in protocols:
        v = known.get(proto)
        if v is None:
            v = solve(game, proto, prior, grid).value
        row.append(fmt(v))
    try:
        label = diagnose.label_values(bp, md, ct)
    except SolverFailure:
        label = "INCONSISTENT"
    row.append(label)
    return row


def cmd_sweep(args) -> int:
    spec = game_spec(args)
    game = game_from_dict(spec)
    if args.prior_grid < 2:
        raise InvalidInput("--prior-grid must be at least 2")
    protocols = [t.strip().lower() for t in args.protocols.split(",") if t.strip()]
    for proto in protocols:
        if proto not in ("bp", "md", "ct-max", "ct-min", "nd"):
            raise InvalidInput(f"unknown protocol {proto!r}")
    spec = game_to_dict(game)
    priors = sorted(BeliefGrid(game.n, args.prior_grid).points.tolist())
    jobs = [(spec, np.array(p), protocols, args.grid) for p in priors]
    workers = args.jobs or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        rows = [_sweep_row(j) for j in jobs]
    header = [f"p_{s}" for s in game.states] + protocols + ["trichotomy"]
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out != "-" else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_check(args) -> int:
    game = game_from_dict(game_spec(args))
    p = parse_prior(args.prior, game)
    plan = BeliefPlan.from_dict(_read_json(args.plan))
    rep = diagnose.check_implementable(game, p, plan)
    emit(rep.to_dict())
    return EXIT_OK


def cmd_improve(args) -> int:
    game = game_from_dict(game_spec(args))
    p = parse_prior(args.prior, game)
    p = game.prior.copy() if p is None else p
    grid = args.grid
    st = diagnose.improvement_status(game, p, args.level, grid)
    if st.status != diagnose.IMPROVABLE:
        emit({"status": st.status, **st.to_dict()})
        return EXIT_NOT_IMPROVABLE
    cert = diagnose.construct_improving_plan(game, p, st.s, st.local, grid)
    emit({"status": st.status, "certificate": cert.to_dict()})
    return EXIT_OK


def cmd_fixtures(args) -> int:
    names = [args.name] if args.name else papercases.fixture_names()
    reports = [papercases.run_fixture(n) for n in names]
    emit({"passed": all(r.passed for r in reports), "fixtures": [r.to_dict() for r in reports]})
    return EXIT_OK if all(r.passed for r in reports) else EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="medsolve", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one protocol at one prior")
    _add_game_args(p)
    p.add_argument("--protocol", required=True, choices=["bp", "md", "ct-max", "ct-min", "nd"])
    p.add_argument("--prior")
    p.add_argument("--grid", type=_grid_arg)
    p.add_argument("--method", choices=["outcome", "grid"])
    p.add_argument("--exact-lp", action="store_true", help="rational arithmetic for the outcome LP")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("diagnose", help="full diagnostic report at one prior")
    _add_game_args(p)
    p.add_argument("--prior")
    p.add_argument("--grid", type=_grid_arg)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("sweep", help="values over a grid of priors, as CSV")
    _add_game_args(p)
    p.add_argument("--protocols", default="bp,md,ct-max")
    p.add_argument("--prior-grid", type=int, required=True)
    p.add_argument("--grid", type=_grid_arg)
    p.add_argument("--out", default="-")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check", help="implementability of a plan")
    _add_game_args(p)
    p.add_argument("--plan", required=True)
    p.add_argument("--prior")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("improve", help="improvability test and improving plan")
    _add_game_args(p)
    p.add_argument("--prior")
    p.add_argument("--grid", type=_grid_arg)
    p.add_argument("--level", type=float, help="level to improve on (default: cheap-talk value)")
    p.set_defaults(func=cmd_improve)

    p = sub.add_parser("fixtures", help="run the worked-example fixtures")
    p.add_argument("--name")
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_INPUT
    try:
        return args.func(args)
    except InvalidInput as exc:
        emit({"error": type(exc).__name__, "detail": str(exc)}, sys.stderr)
        return EXIT_INPUT
    except (SolverFailure, MedsolveError) as exc:
        emit({"error": type(exc).__name__, "detail": str(exc)}, sys.stderr)
        return EXIT_SOLVER
    except json.JSONDecodeError as exc:
        emit({"error": "InvalidInput", "detail": str(exc)}, sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
