"""Command-line front end.

Subcommands:
    cone info          --spec cone.json           cone invariants as JSON
    op report          --spec op.json --sigma S   ellipticity report as JSON
    transform report   --spec cone.json --rho R   base vs transformed invariants
    solve              --spec problem.json --out BASE   profile CSV + summary JSON
    verify             [--full] [--seed] [--samples] [--checks] [--out]

Exit codes: 0 ok, 1 verify failure, 2 infeasible configuration,
3 nonconvergence or sampler starvation, 4 bad configuration.
Outputs are byte-identical for identical configuration and seed.
"""

import argparse
import json
import sys

import numpy as np

from . import cones, ellipticity, radial, symops, verify
from .errors import (
    ConfigError,
    DomainError,
    InfeasiblePointError,
    NonconvergenceError,
    RangeError,
    SamplerStarvedError,
    SymconeError,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INFEASIBLE = 2
EXIT_NONCONVERGENCE = 3
EXIT_BAD_CONFIG = 4


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _emit(obj, out_path):
    text = json.dumps(obj, sort_keys=True, indent=2)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    print(text)


def cmd_cone_info(args):
    cone = cones.from_json(_load_json(args.spec))
    info = {
        "kappa": cones.kappa(cone),
        "rho": cones.rho(cone),
        "type": str(cones.type_of(cone)),
    }
    _emit(info, args.out)
    return EXIT_OK


def cmd_op_report(args):
    op = symops.from_json(_load_json(args.spec))
    m = args.m if args.m is not None else op.n
    sampler = ellipticity.LevelSetSampler(op, args.sigma, args.seed, args.samples)
    report = ellipticity.pue_report(op, args.sigma, m, sampler)
    _emit(report.to_json(), args.out)
    return EXIT_OK


def cmd_transform_report(args):
    base = cones.from_json(_load_json(args.spec))
    transformed = cones.transform(base, args.rho)
    out = {
        "base": {
            "kappa": cones.kappa(base),
            "rho": cones.rho(base),
            "type": str(cones.type_of(base)),
        },
        "transformed": {
            "kappa": cones.kappa(transformed),
            "rho": cones.rho(transformed),
            "type": str(cones.type_of(transformed)),
        },
        "rho_param": args.rho,
    }
    _emit(out, args.out)
    return EXIT_OK


def cmd_solve(args):
    problem = radial.problem_from_json(_load_json(args.spec))
    radial.validate_problem(problem)
    base = args.out or "solution"
    code = EXIT_OK
    if isinstance(problem.boundary, radial.Exhaustion):
        try:
            sols = radial.exhaustion_solve(problem)
            sol = sols[-1]
        except NonconvergenceError as exc:
            sol = exc.last_solution
            code = EXIT_NONCONVERGENCE
    else:
        init = radial.exhaustion_init(problem, 2.0)
        init += problem.boundary.phi - init[-1]
        try:
            sol = radial.newton_solve(problem, init)
        except NonconvergenceError as exc:
            sol = exc.last_solution
            code = EXIT_NONCONVERGENCE
    radial.write_profile_csv(sol, base + ".csv")
    summary = radial.summary_dict(sol)
    summary["K0"] = _measured_k0(problem)
    with open(base + ".json", "w") as fh:
        fh.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    print(json.dumps(summary, sort_keys=True, indent=2))
    return code


def _measured_k0(problem):
    """The solver never enforces the K0 lower bound on sum f_i lam_i; it
    is measured on the level set of the psi floor and reported."""
    sigma = float(np.min(problem.psi(problem.grid())))
    sampler = ellipticity.LevelSetSampler(problem.op, sigma, ellipticity.DEFAULT_SEED, 1000)
    try:
        report = ellipticity.pue_report(problem.op, sigma, 1, sampler)
    except SymconeError:
        return None
    return report.K0


def cmd_verify(args):
    check_ids = args.checks.split(",") if args.checks else None
    try:
        results = verify.run_checks(
            check_ids, full=args.full, seed=args.seed, samples=args.samples
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.check_id}")
    text = verify.report_json(results)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    if all(r.passed for r in results):
        return EXIT_OK
    failed = [r.check_id for r in results if not r.passed]
    print("failed checks: " + ",".join(failed), file=sys.stderr)
    return EXIT_VERIFY_FAILED


def build_parser():
    parser = argparse.ArgumentParser(prog="symcone", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    cone = sub.add_parser("cone", help="cone invariant reports")
    cone_sub = cone.add_subparsers(dest="subcommand", required=True)
    info = cone_sub.add_parser("info", help="kappa, rho, and type of a cone")
    info.add_argument("--spec", required=True, help="cone descriptor JSON file")
    info.add_argument("--out", help="also write the JSON report here")
    info.set_defaults(fn=cmd_cone_info)

    op = sub.add_parser("op", help="operator reports")
    op_sub = op.add_subparsers(dest="subcommand", required=True)
    report = op_sub.add_parser("report", help="ellipticity report on a level set")
    report.add_argument("--spec", required=True, help="operator JSON file")
    report.add_argument("--sigma", type=float, required=True, help="level value")
    report.add_argument("--samples", type=int, default=ellipticity.DEFAULT_COUNT)
    report.add_argument("--seed", type=int, default=ellipticity.DEFAULT_SEED)
    report.add_argument("--m", type=int, default=None, help="ellipticity index (default n)")
    report.add_argument("--out", help="also write the JSON report here")
    report.set_defaults(fn=cmd_op_report)

    tr = sub.add_parser("transform", help="transformed-cone reports")
    tr_sub = tr.add_subparsers(dest="subcommand", required=True)
    tr_report = tr_sub.add_parser("report", help="invariants of a cone and its transform")
    tr_report.add_argument("--spec", required=True, help="base cone JSON file")
    tr_report.add_argument("--rho", type=float, required=True, help="transform parameter")
    tr_report.add_argument("--out", help="also write the JSON report here")
    tr_report.set_defaults(fn=cmd_transform_report)

    solve = sub.add_parser("solve", help="solve a radial problem")
    solve.add_argument("--spec", required=True, help="problem JSON file")
    solve.add_argument("--out", help="output basename (writes BASE.csv and BASE.json)")
    solve.set_defaults(fn=cmd_solve)

    ver = sub.add_parser("verify", help="run the built-in verification suite")
    ver.add_argument("--full", action="store_true", help="acceptance-scale settings")
    ver.add_argument("--seed", type=int, default=1)
    ver.add_argument("--samples", type=int, default=None, help="override sample counts")
    ver.add_argument("--checks", help="comma-separated subset of check ids")
    ver.add_argument("--out", help="also write the JSON table here")
    ver.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_BAD_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except (RangeError, InfeasiblePointError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NonconvergenceError, SamplerStarvedError) as exc:
        print(f"nonconvergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except SymconeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
