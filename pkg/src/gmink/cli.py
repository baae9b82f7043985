"""
Command-line front end.

Bodies, measures and solver reports are exchanged as JSON; continuity runs
write a CSV plus a JSON summary.  Exit status is 0 on success, 2 on domain
errors (hemisphere condition, branch violation, ...) and 1 on I/O or format
errors.
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import convex, lab
from .errors import DomainError
from .gaussian import SphereMeasure, default_context, gaussian_volume, lp_surface_measure, minkowski_gap
from .solver import SolverConfig, SolverReport, solve_discrete, verify_solution
from .sphere import build_grid

log = logging.getLogger("gmink")


class InputError(Exception):
    """Unreadable or malformed input file."""


# --------------------------------------------------------------------------
# file helpers


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _write_text(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def body_from_spec(data, dim=None, resolution=None):
    """
    Build a body from a JSON record.

    Besides the explicit ``{"dim", "normals", "support_numbers"}`` layout a
    few named bodies are accepted through ``"kind"``: ``ball`` (``radius``),
    ``square`` / ``cube`` (``half_width``) and ``box`` (``lower``, ``upper``).
    """
    if not isinstance(data, dict):
        raise InputError("body record must be a JSON object")
    kind = data.get("kind", "polytope")
    try:
        if kind == "polytope":
            return convex.body_from_dict(data)
        d = int(data.get("dim", dim or 2))
        res = data.get("resolution", resolution)
        if kind == "ball":
            r = float(data.get("radius", 1.0))
            if d == 2 and not data.get("polytope", False):
                return convex.ball_support(r, res)
            return convex.ball_polytope(d, r, res)
        if kind == "square":
            return convex.square(float(data.get("half_width", 1.0)))
        if kind == "cube":
            return convex.cube(float(data.get("half_width", 1.0)), d)
        if kind == "box":
            return convex.box(data["lower"], data["upper"])
    except DomainError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed body record: {exc}") from exc
    raise InputError(f"unknown body kind {kind!r}")


def _load_body(path, args):
    return body_from_spec(_read_json(path), args.dim, args.resolution)


def _load_measure(path):
    try:
        return SphereMeasure.from_dict(_read_json(path))
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _solver_config(args, extra=None):
    opts = dict(extra or {})
    if args.tol is not None:
        opts["residual_tol"] = args.tol
    try:
        return SolverConfig(**opts)
    except TypeError as exc:
        raise InputError(f"unknown solver option: {exc}") from exc


# --------------------------------------------------------------------------
# subcommands


def cmd_measure(args):
    body = _load_body(args.body, args)
    ctx = default_context(body.dim)
    mu = lp_surface_measure(ctx, body, args.p)
    _write_text(args.output, _dump(mu.to_dict()))


def cmd_volume(args):
    body = _load_body(args.body, args)
    gam = gaussian_volume(default_context(body.dim), body)
    _write_text(args.output, f"{gam:.12f}\n")


def cmd_solve(args):
    mu = _load_measure(args.measure)
    ctx = default_context(mu.dim)
    report = solve_discrete(ctx, mu, args.p, _solver_config(args))
    _write_text(args.output, _dump(report.to_dict()))


def cmd_verify(args):
    data = _read_json(args.report)
    try:
        report = SolverReport.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed report: {exc}") from exc
    mu = _load_measure(args.measure)
    p = report.p if args.p is None else args.p
    summary = verify_solution(default_context(mu.dim), report, mu, p)
    summary["p"] = p
    _write_text(args.output, _dump(summary))


def cmd_inequality(args):
    K = _load_body(args.first, args)
    L = _load_body(args.second, args)
    if K.dim != L.dim:
        raise InputError("bodies have different dimensions")
    gap = minkowski_gap(default_context(K.dim), K, L, args.p)
    _write_text(args.output, f"{gap:.12e}\n")


def _continuity_common(cfg, args):
    body = body_from_spec(cfg.get("body", {"kind": "square", "half_width": 1.25}), args.dim, args.resolution)
    ctx = default_context(body.dim)
    rule = lab.WeakDistanceRule(body.dim, **cfg.get("weak_rule", {}))
    solver = _solver_config(args, cfg.get("solver"))
    grid = build_grid(body.dim, args.resolution)
    return body, ctx, rule, solver, grid


def _schedule(cfg, key):
    sched = cfg.get(key)
    if isinstance(sched, dict):
        return lab.halving_schedule(sched.get("start", 0.1), sched.get("stop", 1e-4))
    if not isinstance(sched, list) or not sched:
        raise InputError(f"config needs a nonempty {key!r} list")
    return [float(x) for x in sched]


def cmd_continuity(args):
    cfg = _read_json(args.config)
    body, ctx, rule, solver, grid = _continuity_common(cfg, args)
    p = float(cfg.get("p", args.p))
    seed = int(cfg.get("seed", args.seed))
    schedule = _schedule(cfg, "schedule")
    records = lab.run_measure_continuity(ctx, body, p, schedule, solver, seed=seed, rule=rule, grid=grid)
    extra = {"family": "measure", "p": p, "seed": seed, "weak_rule": rule.to_dict()}
    paths = lab.emit_report(records, args.output or "continuity.csv", extra)
    print(f"wrote {paths[0]} and {paths[1]}")


def cmd_pcontinuity(args):
    cfg = _read_json(args.config)
    body, ctx, rule, solver, grid = _continuity_common(cfg, args)
    p0 = float(cfg.get("p0", args.p))
    schedule = _schedule(cfg, "schedule")
    records = lab.run_p_continuity(ctx, body, p0, schedule, solver, rule=rule, grid=grid)
    extra = {"family": "exponent", "p0": p0, "weak_rule": rule.to_dict()}
    paths = lab.emit_report(records, args.output or "pcontinuity.csv", extra)
    print(f"wrote {paths[0]} and {paths[1]}")


# --------------------------------------------------------------------------
# argument parsing


def _positive_int(text):
    value = int(text)
    if value < 4:
        raise argparse.ArgumentTypeError("must be an integer >= 4")
    return value


def _exponent(text):
    value = float(text)
    if not (np.isfinite(value) and value >= 1.0):
        raise argparse.ArgumentTypeError("p must be a finite number >= 1")
    return value


def _tolerance(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return value


def _dimension(text):
    value = int(text)
    if value not in (2, 3):
        raise argparse.ArgumentTypeError("dimension must be 2 or 3")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=_exponent, default=None, help="exponent p >= 1")
    common.add_argument("--dim", type=_dimension, default=None, help="dimension for named bodies")
    common.add_argument("--resolution", type=_positive_int, default=None, help="sphere grid size")
    common.add_argument("--tol", type=_tolerance, default=None, help="solver residual tolerance")
    common.add_argument("--seed", type=int, default=0, help="seed for perturbations")
    common.add_argument("-o", "--output", default=None, help="output path (default: stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="gmink", description="L_p Gaussian Minkowski toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, *positionals):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        for pos in positionals:
            sp.add_argument(pos)
        sp.set_defaults(func=func)
        return sp

    add("measure", cmd_measure, "L_p Gaussian surface measure of a body", "body")
    add("volume", cmd_volume, "Gaussian volume of a body", "body")
    add("solve", cmd_solve, "solve the discrete Minkowski problem", "measure")
    add("verify", cmd_verify, "check a solver report against a measure", "report", "measure")
    add("inequality", cmd_inequality, "Minkowski-type inequality gap", "first", "second")
    add("continuity", cmd_continuity, "measure-continuity experiment", "config")
    add("pcontinuity", cmd_pcontinuity, "exponent-continuity experiment", "config")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.p is None and args.command != "verify":
        args.p = 1.0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except DomainError as exc:
        print(f"gmink: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (InputError, OSError, ValueError) as exc:
        # ValueError here means malformed configuration values
        print(f"gmink: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
