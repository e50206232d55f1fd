"""Command-line front end.

Subcommands: validate (standing-assumption report), sets (derived-set dump),
synthesize (joint controller/set design), verify (full condition report),
analyze (certified scalars alpha, beta, mu, T_max), simulate (closed-loop
trace + timing summary).  Parse failures exit with code 2, failed checks
with 3, solver trouble with 4; machine-readable detail goes to stderr as
JSON.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import simulate as sim
from .conditions import InvariantSets, verify_all
from .controller import ControllerRealization, assemble_closed_loop, is_schur
from .model import derive_sets, load_model, validate
from .polytope import polytope_to_json
from .synthesis import (InitializationFailedError, SynthesisParams,
                        RecursiveFeasibilityBrokenError, extract, initialize,
                        iterate)
from .tolerances import DEFAULT_TOL

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_CHECK_FAILED = 3
EXIT_SOLVER = 4


def _fail(code: int, kind: str, detail) -> int:
    json.dump({"error": kind, "detail": detail}, sys.stderr)
    sys.stderr.write("\n")
    return code


def _load_inputs(args, need_controller=False, need_sets=False):
    model = load_model(args.model)
    controller = sets = None
    if need_controller:
        controller = ControllerRealization.load(args.controller)
    if need_sets:
        sets = InvariantSets.load(args.sets)
    return model, controller, sets


def _tol_from(args):
    tol = DEFAULT_TOL
    if getattr(args, "tol_set", None) is not None:
        tol = tol.with_(set_containment=args.tol_set)
    if getattr(args, "tol_published", None) is not None:
        tol = tol.with_(published=args.tol_published)
    return tol


def cmd_validate(args) -> int:
    model = load_model(args.model)
    report = validate(model, _tol_from(args))
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<32} "
              f"margin={c.margin:+.3e}  {c.detail}")
    for note in report.notes:
        print(f"note: {note}")
    if not report.ok:
        return _fail(EXIT_CHECK_FAILED, "validation_failed", report.to_json())
    return EXIT_OK


def cmd_sets(args) -> int:
    model = load_model(args.model)
    derived = derive_sets(model, _tol_from(args))
    out = {
        "S_plus": polytope_to_json(derived.S_plus),
        "S_c": polytope_to_json(derived.S_c),
        "N": polytope_to_json(derived.N),
        "Z": polytope_to_json(derived.Z),
        "S_monitor": polytope_to_json(derived.S_monitor),
    }
    text = json.dumps(out, indent=2)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    tol = _tol_from(args)
    model, controller, sets = _load_inputs(args, True, True)
    derived = derive_sets(model, tol)
    facet_tol = tol.published if args.published else tol.set_containment
    report = verify_all(model, derived, controller, sets, eta=args.eta,
                        facet_tol=facet_tol, tol=tol)
    _print_report(report)
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_json(), indent=2))
    if not report.all_ok:
        return _fail(EXIT_CHECK_FAILED, "conditions_failed",
                     {"failed": report.failed()})
    return EXIT_OK


def _print_report(report) -> None:
    print(f"{'condition':<6}{'result':<8}{'margin':>14}  note")
    for c in report.condition_checks():
        flag = "PASS" if c.passed else "FAIL"
        if c.rounding_marginal:
            flag = "PASS*"  # rounding-marginal: violation within allowance
        print(f"{c.name:<6}{flag:<8}{c.margin:>+14.3e}  {c.detail}")
    print(f"Schur: {report.schur} (spectral radius {report.spectral_radius:.6f})")
    print(f"alpha={report.alpha:.6g} beta={report.beta:.6g} "
          f"mu={report.mu:.6g} T_max={report.T_max}")
    for note in report.notes:
        print(f"note: {note}")


def cmd_analyze(args) -> int:
    tol = _tol_from(args)
    model, controller, sets = _load_inputs(args, True, True)
    derived = derive_sets(model, tol)
    report = verify_all(model, derived, controller, sets, eta=args.eta,
                        facet_tol=tol.published if args.published
                        else tol.set_containment, tol=tol)
    CL = assemble_closed_loop(model, controller)
    schur, rho = is_schur(CL, tol.schur)
    out = {"alpha": report.alpha, "beta": report.beta, "mu": report.mu,
           "T_max": report.T_max, "spectral_radius": rho, "schur": schur}
    print(json.dumps(out, indent=2))
    if args.out:
        Path(args.out).write_text(json.dumps(out, indent=2))
    if report.T_max is None:
        return _fail(EXIT_CHECK_FAILED, "analysis_incomplete", report.failed())
    return EXIT_OK


def cmd_synthesize(args) -> int:
    tol = _tol_from(args)
    model = load_model(args.model)
    derived = derive_sets(model, tol)
    params = SynthesisParams(n_K=args.nk, eta=args.eta, eps_s=args.eps_s,
                             eps_c=args.eps_c, max_iters=args.max_iters)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    log_path = outdir / "iterations.log"
    try:
        with open(log_path, "w") as logf:
            def log(line):
                print(line)
                logf.write(line + "\n")
                logf.flush()
            state = initialize(model, derived, params, tol=tol)
            result = iterate(state, log=log, tol=tol)
    except InitializationFailedError as exc:
        return _fail(EXIT_SOLVER, "initialization_failed", str(exc))
    except RecursiveFeasibilityBrokenError as exc:
        return _fail(EXIT_SOLVER, "recursive_feasibility_broken", str(exc))
    print(f"verdict: {result.verdict}  final cost {result.final_cost:.3e}")
    if not result.certified:
        return _fail(EXIT_CHECK_FAILED, "not_certified",
                     {"verdict": result.verdict,
                      "final_cost": result.final_cost})
    controller, sets, report = extract(result, tol=tol)
    controller.save(outdir / "controller.json")
    sets.save(outdir / "sets.json")
    (outdir / "report.json").write_text(json.dumps(report.to_json(), indent=2))
    print(f"wrote {outdir}/controller.json, sets.json, report.json")
    return EXIT_OK


def cmd_simulate(args) -> int:
    tol = _tol_from(args)
    model, controller, sets = _load_inputs(args, True, True)
    derived = derive_sets(model, tol)
    report = verify_all(model, derived, controller, sets, eta=args.eta,
                        facet_tol=tol.published if args.published
                        else tol.set_containment, tol=tol)
    if not report.all_ok and not args.allow_uncertified:
        return _fail(EXIT_CHECK_FAILED, "conditions_failed",
                     {"failed": report.failed()})
    if args.scenario:
        with open(args.scenario) as fh:
            scenario = sim.scripted_scenario_builder(json.load(fh), model, tol)
    else:
        scenario = sim.uniform_scenario(derived, args.steps, args.seed)
    trace = sim.run(model, derived, controller, sets, scenario,
                    report=report if report.all_ok else None,
                    allow_uncertified=args.allow_uncertified,
                    T_max=report.T_max, tol=tol)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    trace.to_csv(outdir / "trace.csv")
    summary = trace.summary()
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2))
    print(sim.timing_stats([trace]).table())
    print(f"wrote {outdir}/trace.csv, summary.json")
    if any(summary["violations"].values()):
        return _fail(EXIT_CHECK_FAILED, "guarantee_violations",
                     summary["violations"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="handsoff",
        description="set-based hands-off control: validate, synthesize, "
                    "verify, analyze, simulate")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, controller=False, sets=False):
        p.add_argument("--model", required=True, help="plant model JSON")
        if controller:
            p.add_argument("--controller", required=True,
                           help="controller realization JSON")
        if sets:
            p.add_argument("--sets", required=True, help="invariant sets JSON")
        p.add_argument("--tol-set", type=float, default=None,
                       help="containment tolerance override")
        p.add_argument("--tol-published", type=float, default=None,
                       help="published-data facet allowance override")
        p.add_argument("--eta", type=float, default=0.99,
                       help="contraction factor certified by the sets")
        p.add_argument("--published", action="store_true",
                       help="verify at the published-data allowance")

    p = sub.add_parser("validate", help="check the standing assumptions")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sets", help="dump derived sets as JSON")
    common(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sets)

    p = sub.add_parser("verify", help="verify all invariance conditions")
    common(p, controller=True, sets=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("analyze", help="report certified scalars")
    common(p, controller=True, sets=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synthesize", help="jointly design controller and sets")
    common(p)
    p.add_argument("--nk", type=int, required=True, help="controller order")
    p.add_argument("--eps-s", dest="eps_s", type=float, required=True)
    p.add_argument("--eps-c", dest="eps_c", type=float, default=1e-9)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--out", default="synth_out")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", help="run a closed-loop scenario")
    common(p, controller=True, sets=True)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenario", default=None,
                   help="scripted scenario JSON (overrides --steps/--seed)")
    p.add_argument("--allow-uncertified", action="store_true")
    p.add_argument("--out", default="sim_out")
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse's own exit; normalize parse errors
        return EXIT_PARSE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (FileNotFoundError, json.JSONDecodeError, KeyError, ValueError) as exc:
        return _fail(EXIT_PARSE, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
