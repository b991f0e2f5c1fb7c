"""Command-line entry point ``teamrelax``.

Exit codes: 0 success, 2 invalid input, 3 solver did not converge,
4 enumeration or grid budget refused. Diagnostics go to standard error;
reports go to standard output (or ``--output``). Every instance argument
accepts "-" for standard input.
"""
from __future__ import annotations

import argparse
import csv
import io as _stdio
import math
import sys
import time

import numpy as np

from . import gaussian as gs
from .core import InvalidInstance, det_code_to_random
from .exact import BudgetExceeded, alternating_best_response, enumerate_optimal
from .info import (blahut_arimoto_cc, blahut_arimoto_rd, get_generator, input_information,
                   kernel_information, kl_divergence, f_mutual_information, mutual_information)
from .inverse import (SynthesisRefused, SynthesisSpec, candidate_pair, instance_with_costs,
                      lossless_code, synthesize_costs, verify_inverse_optimality)
from .io import (code_from_json, code_to_json, dumps, instance_from_json, instance_to_json,
                 pair_from_json, read_json, solution_to_json)
from .relax import (MAX_ITER, Multipliers, UncertifiedGenerator, bound_report, kkt_residual_general,
                    kkt_residual_separable, separable_parts, solve_relaxation_bansal,
                    solve_relaxation_general, solve_relaxation_separable)

EXIT_OK, EXIT_INVALID, EXIT_NOT_CONVERGED, EXIT_BUDGET = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _emit(args, text):
    if args.output and args.output != "-":
        with open(args.output, "w") as fh:
            fh.write(text + ("" if text.endswith("\n") else "\n"))
    else:
        sys.stdout.write(text + ("" if text.endswith("\n") else "\n"))


def _load_instance(path):
    return instance_from_json(read_json(path))


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError(f"expected a comma-separated list of numbers, got {text!r}", EXIT_INVALID)


def _array(text):
    """Numeric array from inline JSON or a JSON file path."""
    import json
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = read_json(text)
    return np.asarray(data, dtype=float)


# --------------------------------------------------------------------------
# commands

def cmd_solve(args):
    inst = _load_instance(args.instance)
    try:
        res = enumerate_optimal(inst)
    except BudgetExceeded as exc:
        if not args.heuristic:
            raise CliError(f"{exc}; rerun with --heuristic for alternating best responses",
                           EXIT_BUDGET)
        res = alternating_best_response(inst, restarts=args.restarts, seed=args.seed)
    out = {"value": res.value, "code": code_to_json(res.best_code), "evaluated": res.evaluated,
           "heuristic": res.heuristic}
    _emit(args, dumps(out))
    return EXIT_OK


def _relax(inst, mode, f, tol):
    parts = separable_parts(inst)
    sep = inst.separable
    if mode == "auto":
        if sep is not None and sep.has_cross:
            mode = "bansal"
        elif parts is not None:
            mode = "separable"
        else:
            mode = "general"
    if mode == "separable":
        if parts is None:
            raise CliError("instance cost is not delta(s, shat) + rho(x); use --mode general",
                           EXIT_INVALID)
        return mode, solve_relaxation_separable(inst, f, tol)
    if mode == "bansal":
        if sep is None or not sep.has_cross:
            raise CliError("--mode bansal needs a separable cost with a cross term", EXIT_INVALID)
        if f.kind != "negLog":
            raise CliError("--mode bansal supports only f = negLog", EXIT_INVALID)
        return mode, solve_relaxation_bansal(inst, tol)
    return "general", solve_relaxation_general(inst, f, tol)


def cmd_relax(args):
    inst = _load_instance(args.instance)
    mode, sol = _relax(inst, args.mode, get_generator(args.f), args.tol)
    out = solution_to_json(sol)
    out["mode"] = mode
    _emit(args, dumps(out))
    return EXIT_NOT_CONVERGED if sol.status == MAX_ITER else EXIT_OK


def cmd_bound(args):
    inst = _load_instance(args.instance)
    rep = bound_report(inst, get_generator(args.f), args.tol, seed=args.seed)
    out = {"lb": rep.lb, "ub": rep.ub, "gap": rep.gap,
           "multiplierIdentityResidual": rep.multiplier_identity_residual,
           "dpiEqualitySlack": rep.dpi_equality_slack, "ubHeuristic": rep.ub_heuristic,
           "relaxStatus": rep.relax_status, "primalValue": rep.primal_value}
    _emit(args, dumps(out))
    return EXIT_OK


def cmd_inverse(args):
    inst = _load_instance(args.instance)
    f = get_generator(args.f)
    code = code_from_json(read_json(args.code)) if args.code else lossless_code(inst, args.seed)
    code.validate(inst)
    pair = candidate_pair(inst, code)
    mu_a = _floats(args.mu_a) if args.mu_a else [0.0] * inst.n_s
    spec = SynthesisSpec(f, args.lam, np.asarray(mu_a), args.mu_b)
    delta, rho = synthesize_costs(inst, pair, spec)
    synth = instance_with_costs(inst, delta, rho)
    if args.emit_instance:
        _emit(args, dumps(instance_to_json(synth)))
        return EXIT_OK
    rep = verify_inverse_optimality(synth, code)
    out = {"code": code_to_json(code), "delta": delta, "rho": rho, "lambda": args.lam,
           "verify": {"candidateValue": rep.candidate_value, "globalMin": rep.global_min,
                      "optimal": rep.optimal, "heuristic": rep.heuristic},
           "instance": instance_to_json(synth)}
    _emit(args, dumps(out))
    return EXIT_OK


def _multipliers_from_json(obj, inst):
    ns, nx, ny, nshat = inst.shape
    m = obj.get("multipliers")
    if not isinstance(m, dict):
        raise CliError('solution needs a "multipliers" object for a general instance', EXIT_INVALID)

    def get(key, shape, required=True):
        if key not in m:
            if required:
                raise CliError(f'multipliers lack "{key}"', EXIT_INVALID)
            return None
        v = np.asarray(m[key], dtype=float)
        if v.size != int(np.prod(shape)):
            raise CliError(f'multiplier "{key}" has the wrong size', EXIT_INVALID)
        return v.reshape(shape)

    nu = get("nu", (ns, nx, ny, nshat), required=False)
    return Multipliers(get("lambdaA", (ns, nshat), False), get("lambdaB", (nx,), False),
                       float(m.get("lambda", obj.get("lambda", 0.0))),
                       get("lambdaP", (nx, ny), False), get("muA", (ns,)),
                       float(m.get("muB", 0.0)), get("nuA", (ns, nshat)), get("nuB", (nx,)), nu)


def cmd_kkt(args):
    inst = _load_instance(args.instance)
    sol = read_json(args.solution)
    if not isinstance(sol, dict):
        raise InvalidInstance("solution JSON must be an object")
    f = get_generator(args.f)
    if separable_parts(inst) is not None:
        pair = pair_from_json(sol, inst)
        lam = sol.get("lambda") if args.lam is None else args.lam
        mult, rep = kkt_residual_separable(inst, pair, f, lam=lam)
        out = {"lambda": mult.lam, "kkt": rep.as_dict()}
    else:
        if "q" not in sol:
            raise CliError('solution for a general instance needs the joint "q"', EXIT_INVALID)
        q = np.asarray(sol["q"], dtype=float).reshape(inst.shape)
        mult = _multipliers_from_json(sol, inst)
        rep = kkt_residual_general(inst, q, f, mult)
        out = {"lambda": mult.lam, "kkt": rep.as_dict()}
    _emit(args, dumps(out))
    return EXIT_OK


def _spec_from_args(args, grid=None):
    problem = gs.PRESET_NAMES[args.preset]
    try:
        return gs.GaussianSpec(sigma0=args.sigma0, sigma_w=args.sigmaw, k0=args.k0, s01=args.s01,
                               grid_points=args.grid if grid is None else grid,
                               half_width=args.halfwidth, problem=problem)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INVALID)


def cmd_gaussian(args):
    inst = gs.build_instance(_spec_from_args(args))
    _emit(args, dumps(instance_to_json(inst)))
    return EXIT_OK


def _sweep_row(args, grid):
    spec = _spec_from_args(args, grid)
    inst = gs.build_instance(spec)
    t0 = time.perf_counter()
    f = get_generator("negLog")
    _, sol = _relax(inst, "auto", f, args.tol)
    if spec.problem == "witsenhausen":
        closed = math.nan
        init = None
    else:
        cf = gs.gamma_star(spec)
        closed = cf.opt_b
        init = det_code_to_random(gs.linear_code_on_grid(inst, cf.gamma0_signed, cf.gamma1_signed), inst)
    heur = alternating_best_response(inst, init=init, restarts=args.restarts, seed=args.seed)
    seconds = time.perf_counter() - t0
    slack = (input_information(f, inst.channel, sol.pair.b)
             - kernel_information(f, inst.p_s, sol.pair.a))
    ns, nx, ny, nshat = inst.shape
    gap = abs(sol.value - closed) if math.isfinite(closed) else math.nan
    return [grid, ns, nx, ny, nshat, sol.value, heur.value, closed, gap, slack, seconds], sol.status


SWEEP_COLUMNS = ["grid", "nS", "nX", "nY", "nShat", "relaxValue", "heuristicExactValue",
                 "closedForm", "gap", "dpiSlack", "seconds"]


def cmd_sweep(args):
    grids = [int(g) for g in _floats(args.grids)]
    rows, statuses = [], []
    for g in sorted(grids):
        row, status = _sweep_row(args, g)
        rows.append(row)
        statuses.append(status)
    if args.format == "json":
        _emit(args, dumps([dict(zip(SWEEP_COLUMNS, r)) for r in rows]))
    else:
        buf = _stdio.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for r in rows:
            writer.writerow([v if isinstance(v, int) else format(v, ".17g") for v in r])
        _emit(args, buf.getvalue())
    return EXIT_NOT_CONVERGED if MAX_ITER in statuses else EXIT_OK


def cmd_info(args):
    what = args.what
    if what == "mi":
        joint = _array(args.joint)
        f = get_generator(args.f)
        out = {"shannon": mutual_information(joint), "fInformation": f_mutual_information(f, joint),
               "f": f.kind}
    elif what == "kl":
        out = {"kl": kl_divergence(_array(args.p), _array(args.q))}
    elif what == "rd":
        res = blahut_arimoto_rd(_array(args.p), _array(args.delta), slope=args.slope,
                                target=args.target, tol=args.tol)
        out = {"rate": res.value, "distortion": res.expected_cost, "slope": res.lagrange_slope,
               "kernel": res.kernel_or_marginal, "converged": res.converged}
    else:
        channel = _array(args.channel)
        rho = _array(args.rho) if args.rho else None
        res = blahut_arimoto_cc(channel, rho, slope=args.slope, target=args.target, tol=args.tol)
        out = {"capacity": res.value, "cost": res.expected_cost, "slope": res.lagrange_slope,
               "input": res.kernel_or_marginal, "converged": res.converged}
    _emit(args, dumps(out))
    return EXIT_OK


# --------------------------------------------------------------------------
# parser

def _add_common(p):
    p.add_argument("--f", default="negLog", help="f-information kind (default negLog)")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", default=None, help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def _add_preset(p, grid_default=17):
    p.add_argument("--preset", choices=sorted(gs.PRESET_NAMES), default="test-channel")
    p.add_argument("--sigma0", type=float, default=1.0)
    p.add_argument("--sigmaw", type=float, default=1.0)
    p.add_argument("--k0", type=float, default=0.25)
    p.add_argument("--s01", type=float, default=0.0)
    p.add_argument("--grid", type=int, default=grid_default)
    p.add_argument("--halfwidth", type=float, default=5.0)


def build_parser():
    parser = argparse.ArgumentParser(prog="teamrelax", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="best deterministic code by enumeration")
    p.add_argument("instance")
    p.add_argument("--heuristic", action="store_true",
                   help="fall back to alternating best responses over budget")
    p.add_argument("--restarts", type=int, default=10)
    p.set_defaults(run=cmd_solve)

    p = sub.add_parser("relax", help="information-constrained relaxation")
    p.add_argument("instance")
    p.add_argument("--mode", choices=("auto", "separable", "bansal", "general"), default="auto")
    p.set_defaults(run=cmd_relax)

    p = sub.add_parser("bound", help="relaxation lower bound against the exact or heuristic value")
    p.add_argument("instance")
    p.set_defaults(run=cmd_bound)

    p = sub.add_parser("inverse", help="synthesize costs that make a code optimal, then verify")
    p.add_argument("instance")
    p.add_argument("--code", help='code JSON {"f": [...], "g": [...]} (default: random injective)')
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--mu-a", default=None, help="comma-separated mu_a(s)")
    p.add_argument("--mu-b", type=float, default=0.0)
    p.add_argument("--emit-instance", action="store_true",
                   help="print only the synthesized instance JSON")
    p.set_defaults(run=cmd_inverse)

    p = sub.add_parser("kkt", help="KKT residuals of a supplied solution")
    p.add_argument("instance")
    p.add_argument("solution")
    p.add_argument("--lam", type=float, default=None)
    p.set_defaults(run=cmd_kkt)

    p = sub.add_parser("gaussian", help="discretized Gaussian instance JSON")
    _add_preset(p)
    p.set_defaults(run=cmd_gaussian)

    p = sub.add_parser("sweep", help="grid-refinement study, one row per grid size")
    _add_preset(p)
    p.add_argument("--grids", default="17,33,65")
    p.add_argument("--restarts", type=int, default=3)
    p.set_defaults(run=cmd_sweep)

    p = sub.add_parser("info", help="information utilities")
    p.add_argument("what", choices=("mi", "kl", "rd", "cc"))
    p.add_argument("--joint", help="joint distribution (inline JSON or file)")
    p.add_argument("--p", help="distribution p / source law")
    p.add_argument("--q", help="distribution q")
    p.add_argument("--delta", help="distortion matrix")
    p.add_argument("--channel", help="channel matrix")
    p.add_argument("--rho", help="input cost vector")
    p.add_argument("--slope", type=float, default=None)
    p.add_argument("--target", type=float, default=None)
    p.set_defaults(run=cmd_info)

    for sp in sub.choices.values():
        _add_common(sp)
    sub.choices["sweep"].set_defaults(format="csv")
    return parser


def _check_info_args(args):
    need = {"mi": ["joint"], "kl": ["p", "q"], "rd": ["p", "delta"], "cc": ["channel"]}[args.what]
    missing = [n for n in need if getattr(args, n) is None]
    if missing:
        raise CliError(f"info {args.what} needs --{', --'.join(missing)}", EXIT_INVALID)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        if args.tol <= 0:
            raise CliError("--tol must be positive", EXIT_INVALID)
        get_generator(args.f)
        if args.command == "info":
            _check_info_args(args)
        return args.run(args)
    except CliError as exc:
        print(f"teamrelax: {exc}", file=sys.stderr)
        return exc.code
    except (BudgetExceeded, gs.GridBudgetExceeded) as exc:
        print(f"teamrelax: budget refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InvalidInstance, SynthesisRefused, UncertifiedGenerator, ValueError, OSError) as exc:
        print(f"teamrelax: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
