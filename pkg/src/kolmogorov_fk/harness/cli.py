"""Command-line entry point ``kolmogorov-fk``."""

from __future__ import annotations

import argparse
import json
import sys

from .. import fd, fk, sde, spaces
from ..grid import Box, read_field_csv, write_field_csv
from ..problem.families import FAMILIES, build_family
from ..problem.io import ProblemFileError, load_problem


def _value(text):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _spec(args):
    if args.problem:
        return load_problem(args.problem)
    if args.family:
        params = {}
        for item in args.param or []:
            key, _, val = item.partition("=")
            if not _:
                raise SystemExit(f"bad --param {item!r}; use key=value")
            params[key] = _value(val)
        return build_family(args.family, **params)
    raise SystemExit("give --problem FILE or --family NAME")


def _box(args, spec):
    lower, upper = _floats(args.lower), _floats(args.upper)
    counts = _ints(args.counts)
    if len(counts) == 1:
        counts = counts * len(lower)
    t1 = spec.t0 if args.t1 is None else args.t1
    t2 = spec.T if args.t2 is None else args.t2
    return Box(tuple(lower), tuple(upper), tuple(counts), t1, t2, args.n_t)


def _emit(obj, path):
    text = json.dumps(obj, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _add_problem(p):
    p.add_argument("--problem", help="problem TOML file")
    p.add_argument("--family", choices=sorted(FAMILIES), help="built-in problem family")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="family parameter (repeatable)")


def _add_mc(p, paths=100_000, steps=200):
    p.add_argument("--paths", type=int, default=paths)
    p.add_argument("--steps", type=int, default=steps)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--antithetic", action="store_true")
    p.add_argument("--workers", type=int, default=1)


def _add_box(p, required=True):
    p.add_argument("--lower", required=required, help="comma-separated lower corner")
    p.add_argument("--upper", required=required, help="comma-separated upper corner")
    p.add_argument("--counts", required=required, help="nodes per axis (one value or one per axis)")
    p.add_argument("--n-t", type=int, default=100, dest="n_t")
    p.add_argument("--t1", type=float)
    p.add_argument("--t2", type=float)


def cmd_estimate(args):
    spec = _spec(args)
    if args.lower:
        box = _box(args, spec)
        fld = fk.estimate_on_grid(spec, box, args.paths, args.steps, args.seed, args.antithetic, args.workers)
        write_field_csv(fld, args.out or sys.stdout)
        return 0
    t = spec.t0 if args.t is None else args.t
    est = fk.estimate_value(spec, t, _floats(args.x), args.paths, args.steps, args.seed, args.antithetic, n_workers=args.workers)
    _emit(est.to_dict(), args.out)
    return 0


def cmd_gradient(args):
    spec = _spec(args)
    t = spec.t0 if args.t is None else args.t
    est = fk.estimate_gradient(spec, t, _floats(args.x), args.paths, args.steps, args.seed, args.antithetic, n_workers=args.workers)
    _emit(est.to_dict(), args.out)
    return 0


def cmd_solve(args):
    from .checks import localized_field

    spec = _spec(args)
    box = _box(args, spec)
    fld = localized_field(spec, box, args.paths, args.steps, args.seed, args.theta, args.ladder, args.antithetic)
    write_field_csv(fld, args.out or sys.stdout)
    return 0


def cmd_norms(args):
    fld = read_field_csv(args.field)
    k = args.slice if args.slice >= 0 else fld.box.n_t + 1 + args.slice
    X, derivs = spaces.grid_derivatives(fld.values[k], fld.box, args.p)
    beta = None if args.beta <= 0 else args.beta
    out = [spaces.weighted_norm(X, derivs, args.q, args.p, beta, v, {"field": args.field, "slice": k, "box": fld.box.describe()})
           for v in spaces.Variant]
    _emit([r.to_dict() for r in out], args.out)
    return 0


def cmd_verify(args):
    from .suite import SuiteConfigError, run_suite

    try:
        res = run_suite(args.config, args.report, args.negative_controls, args.workers, args.summary)
    except (SuiteConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(res.summary())
    return res.exit_status


def cmd_convergence(args):
    spec = _spec(args)
    t = spec.t0 if args.t is None else args.t
    rep = sde.strong_error(spec, t, _floats(args.x), _ints(args.ladder), args.paths, args.seed)
    _emit(rep.to_dict(), args.out)
    return 0


def cmd_calibrate(args):
    from .checks import calibrate

    _emit(calibrate(args.seed, args.paths, args.out), None)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="kolmogorov-fk", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="Monte Carlo value at a point or on a grid")
    _add_problem(p)
    _add_mc(p)
    p.add_argument("--t", type=float)
    p.add_argument("--x", default="0", help="comma-separated start point")
    _add_box(p, required=False)
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("gradient", help="pathwise Monte Carlo gradient at a point")
    _add_problem(p)
    _add_mc(p, 20_000, 100)
    p.add_argument("--t", type=float)
    p.add_argument("--x", default="0")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gradient)

    p = sub.add_parser("solve", help="finite differences on a box with Monte Carlo boundary data")
    _add_problem(p)
    _add_mc(p, 20_000, 20)
    _add_box(p)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--ladder", type=int, default=11, help="boundary times estimated by Monte Carlo")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("norms", help="weighted norms of one slice of a field CSV")
    p.add_argument("--field", required=True)
    p.add_argument("--slice", type=int, default=0, help="time slice (negative counts from the end)")
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--p", type=int, default=0)
    p.add_argument("--beta", type=float, default=0.5, help="Hölder exponent; 0 for the sup norm only")
    p.add_argument("--out")
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--config", help="suite TOML (default: the shipped suite)")
    p.add_argument("--report", help="JSON report path")
    p.add_argument("--summary", help="text summary path")
    p.add_argument("--negative-controls", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("convergence", help="strong error on a nested step ladder")
    _add_problem(p)
    p.add_argument("--t", type=float)
    p.add_argument("--x", default="1")
    p.add_argument("--ladder", default="8,16,32,64,128,256,512,1024")
    p.add_argument("--paths", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("calibrate", help="recompute the frozen Schauder and Bernstein constants")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paths", type=int, default=20_000)
    p.add_argument("--out", help="write the calibration JSON here")
    p.set_defaults(func=cmd_calibrate)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ProblemFileError, ValueError, fd.FDSolveError, sde.SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
