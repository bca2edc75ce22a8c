"""Command-line entry point.

Exit status: 0 on success, 1 on invalid input or usage, 2 on a numerical
failure (contraction violation, blow-up, singular system, non-convergence).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from . import analysis
from .config import RunConfig, load_config, parse_config
from .errors import BoussinesqError, NumericalFailure
from .grid import build_grid
from .operators import build_matrices, coefficient_set, inf_norm
from .profiles import cosine_decay
from .report import Report
from .snapshot import write_snapshot
from .solver import solvability_check
from .stepper import initialize, run

_DEFAULT_DOC = {"domain": {"L0": 0.0, "L1": 1.0}, "grid": {"J": 16},
                "initial": {"profile": "cosine"}}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parser():
    p = _Parser(prog="lyapboussinesq",
                description="Lyapunov-operator scheme for the 2D Boussinesq equation")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("-c", "--config", help="JSON run configuration")
        sp.add_argument("--out", help="output directory (reports go to stdout if omitted)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--J", type=int, help="override grid.J")
        return sp

    sp = add("run", "simulate per the configuration")
    sp.add_argument("--steps", type=int, help="override run.n_steps")
    sp = add("converge", "consistency and self-convergence studies")
    sp.add_argument("--levels", type=int, default=3)
    sp = add("stability", "Lyapunov stability probe")
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.add_argument("--steps", type=int, default=100)
    sp.add_argument("--trials", type=int, default=4)
    sp = add("operators", "sampled operator-norm bounds")
    sp.add_argument("--samples", type=int, default=100)
    add("solvability", "pivoted elimination on the vectorized step operator")
    sp = add("oracle", "fixed-point versus Kronecker cross-check")
    sp.add_argument("--samples", type=int, default=20)
    sp = add("eta", "admissible radii from the stability quadratics")
    sp.add_argument("--epsilon", type=float, default=1.0)
    sp.add_argument("--l", type=float, default=0.0, help="time step")
    sp.add_argument("--phi-norm", type=float, default=0.0)
    sp.add_argument("--alpha", type=float, default=0.25)
    return p


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else parse_config(json.dumps(_DEFAULT_DOC))
    if args.J is not None:
        doc = cfg.to_dict()
        doc["grid"]["J"] = args.J
        if doc["coupling"]["mode"] == "coupled":
            doc["coupling"]["l"] = None
        cfg = parse_config(json.dumps(doc))
    return cfg


def _emit(reports, args, names):
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        for report, name in zip(reports, names):
            report.save(os.path.join(args.out, name))
    else:
        for report in reports:
            sys.stdout.write(report.to_json())


def cmd_run(args):
    cfg = _config(args)
    if args.steps is not None:
        cfg.run.n_steps = args.steps
    out = args.out or cfg.output.directory
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.json"), "w", encoding="utf-8") as fh:
        fh.write(cfg.echo())
    grid = cfg.build_grid()
    mats = build_matrices(grid, cfg.scheme.right_transpose)
    opts = cfg.solver_options()
    profile = cfg.profile()
    every = cfg.run.snapshot_every
    digits = cfg.output.precision
    meta = {"config": cfg.to_dict(), "seed": args.seed}

    def snap(name, field, t):
        write_snapshot(field, t, grid, os.path.join(out, name), digits)

    with open(os.path.join(out, "norms.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "t", "normU", "normV"])

        def record(n, t, nu, nv, state):
            writer.writerow([n, format(t, ".17g"), format(nu, ".17g"), format(nv, ".17g")])
            if every and n % every == 0:
                snap(f"U_{n:06d}.csv", state.U_curr, t)
                snap(f"V_{n:06d}.csv", state.V_curr, t)

        try:
            start = initialize(grid, profile, mats, cfg.scheme.legacy_cid2)
            writer.writerow([0, format(grid.t0, ".17g"), format(inf_norm(start.U_prev), ".17g"),
                             format(inf_norm(start.V_prev), ".17g")])
            if every:
                snap("U_000000.csv", start.U_prev, grid.t0)
                snap("V_000000.csv", start.V_prev, grid.t0)
            record(1, start.t, inf_norm(start.U_curr), inf_norm(start.V_curr), start)
            final = run(grid, profile, mats, opts, cfg.run.n_steps, observer=record,
                        legacy_cid2=cfg.scheme.legacy_cid2)
        except NumericalFailure as err:
            payload = {"error": {"type": type(err).__name__, "message": str(err),
                                 "step": getattr(err, "step", None)}}
            Report("run", payload, meta).save(os.path.join(out, "report.json"))
            raise
    snap("U_final.csv", final.U_curr, final.t)
    snap("V_final.csv", final.V_curr, final.t)
    payload = {"n": final.n, "t": final.t, "normU": inf_norm(final.U_curr),
               "normV": inf_norm(final.V_curr), "h": grid.h, "l": grid.l,
               "sigma": grid.sigma, "coupled": grid.coupled, "error": None}
    Report("run", payload, meta).save(os.path.join(out, "report.json"))
    return 0


def cmd_converge(args):
    cfg = _config(args)
    grid = cfg.build_grid()
    params = {k: v for k, v in cfg.initial.parameters.items() if k in ("kx", "ky")}
    exact = cosine_decay(cfg.domain.L0, cfg.domain.L1, **params).scaled(cfg.initial.amplitude)
    cons = analysis.consistency_study(exact, grid, max(args.levels, 2))
    conv = analysis.convergence_study(cfg.profile(), grid, max(args.levels, 3),
                                      opts=cfg.solver_options(),
                                      right_transpose=cfg.scheme.right_transpose)
    echo = cfg.to_dict()
    r1 = analysis.study_report("consistency", cons, {"profile": exact.name})
    r2 = analysis.study_report("convergence", conv, {"profile": cfg.initial.profile})
    for r in (r1, r2):
        r.metadata.update(config=echo, seed=args.seed)
    _emit([r1, r2], args, ["consistency.json", "convergence.json"])
    return 0


def cmd_stability(args):
    cfg = _config(args)
    grid = cfg.build_grid()
    mats = build_matrices(grid, cfg.scheme.right_transpose)
    res = analysis.stability_probe(grid, mats, cfg.solver_options(), args.epsilon,
                                   args.steps, args.trials, seed=args.seed)
    r = analysis.stability_report(res, grid, args.seed)
    r.metadata["config"] = cfg.to_dict()
    _emit([r], args, ["stability.json"])
    return 0


def cmd_operators(args):
    cfg = _config(args)
    grid = cfg.build_grid()
    mats = build_matrices(grid, cfg.scheme.right_transpose)
    r = analysis.operator_report(grid, mats, args.samples, args.seed)
    r.metadata["config"] = cfg.to_dict()
    _emit([r], args, ["operators.json"])
    return 0


def cmd_solvability(args):
    cfg = _config(args)
    grid = cfg.build_grid()
    rows = []
    for rt in (False, True):
        ok, pivot = solvability_check(grid, rt)
        rows.append({"right_transpose": rt, "invertible": ok, "min_pivot": pivot})
    payload = {"J": grid.J, "alpha": grid.alpha, "h": grid.h, "l": grid.l,
               "sigma": grid.sigma, "results": rows}
    _emit([Report("solvability", payload, {"config": cfg.to_dict(), "seed": args.seed})],
          args, ["solvability.json"])
    return 0


def cmd_oracle(args):
    cfg = _config(args)
    Js = range(2, (args.J if args.J is not None else 8) + 1)
    rows = analysis.oracle_crosscheck(Js, samples=args.samples, seed=args.seed,
                                      s=cfg.coupling.s, eps=cfg.coupling.eps,
                                      L0=cfg.domain.L0, L1=cfg.domain.L1,
                                      tol=cfg.solver.tol)
    checked = [r for r in rows if not r["skipped"]]
    payload = {"combinations": rows,
               "max_difference": max(r["max_difference"] for r in checked) if checked else None}
    _emit([Report("oracle", payload, {"seed": args.seed})], args, ["oracle.json"])
    return 0


def cmd_eta(args):
    J = args.J if args.J is not None else 10
    grid = build_grid(0.0, 1.0, J, args.alpha)
    coeffs = coefficient_set(args.alpha, args.l ** 2 * grid.delta, grid.delta)
    eta = analysis.theoretical_eta(args.epsilon, args.l, args.phi_norm, coeffs, grid.h)
    payload = {"epsilon": args.epsilon, "l": args.l, "phi_norm": args.phi_norm,
               "J": J, "alpha": args.alpha, "h": grid.h,
               "eta1": eta.eta1, "eta1_prime": eta.eta1_prime, "eta0": eta.eta0,
               "eps1": eta.eps1, "eps1_prime": eta.eps1_prime, "eps0": eta.eps0,
               "back_substitution": eta.back_substitution, "degenerate": eta.degenerate}
    _emit([Report("eta", payload)], args, ["eta.json"])
    return 0


COMMANDS = {
    "run": cmd_run, "converge": cmd_converge, "stability": cmd_stability,
    "operators": cmd_operators, "solvability": cmd_solvability,
    "oracle": cmd_oracle, "eta": cmd_eta,
}


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except NumericalFailure as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 2
    except (BoussinesqError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
