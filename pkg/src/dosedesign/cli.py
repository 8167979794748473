"""Command line interface.

Subcommands::

    construct  write a named closed-form design to a file
    evaluate   criterion report plus feasibility/membership flags
    certify    equivalence-theorem certificate for an E- or c-claim
    optimize   Frank-Wolfe criterion maximization over a design polytope
    oracle     brute-force grid search (small n) for the best E-value

Exit codes: 0 success (and certified/converged), 2 for a violated
certificate or a non-converged run, 3 for input errors.  Every command
writes a ``<output>.manifest.json`` recording how to reproduce the output.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .constructors import (
    highest_dose_extended_senn,
    is_e_optimal_extended,
    is_e_optimal_standard,
    senn_design,
    uniformly_extended_senn,
)
from .core import EXTENDED, STANDARD, Design, ModelSpec
from .criteria import criterion_report
from .errors import DesignError, InfeasibleDesign, ParseError, SingularIterate
from .io import (
    RunManifest,
    certificate_to_dict,
    load_design,
    parse_weight,
    report_to_csv,
    report_to_dict,
    save_design,
    write_manifest,
)
from .optimizer import DesignPolytope, SolverConfig, e_optimal_class, maximize
from .verification import brute_force_best_e, certify_c_optimality, certify_e_optimality

CONSTRUCTORS = {
    "senn": senn_design,
    "uniform-extended": uniformly_extended_senn,
    "highest-dose-extended": highest_dose_extended_senn,
}

EXIT_OK = 0
EXIT_VIOLATED = 2
EXIT_INPUT = 3


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _manifest(args, command: str, inputs: dict, outputs: list[str]) -> None:
    manifest = RunManifest(
        command=command,
        argv=list(args._argv),
        inputs=inputs,
        outputs=[str(o) for o in outputs],
        seed=getattr(args, "seed", None),
    )
    write_manifest(manifest, outputs[0])


def cmd_construct(args) -> int:
    design = CONSTRUCTORS[args.name](args.n)
    save_design(design, args.out)
    _manifest(args, "construct", {"name": args.name, "n": args.n}, [args.out])
    print(f"wrote {args.name} design (n={args.n}, {design.kind}) to {args.out}")
    return EXIT_OK


def _membership(design: Design):
    if design.kind == STANDARD:
        return is_e_optimal_standard(design), None
    return None, is_e_optimal_extended(design)


def cmd_evaluate(args) -> int:
    design = load_design(args.design)
    std_member, ext_member = _membership(design)
    try:
        report = criterion_report(design)
        payload = {"feasible": True, **report_to_dict(report)}
    except InfeasibleDesign:
        report = None
        payload = {"feasible": False, "e": None, "a": None, "d": None,
                   "mv": None, "avg_contrast": None, "lv": None}
    payload["is_e_optimal_standard"] = std_member
    payload["is_e_optimal_extended"] = ext_member
    if args.format == "csv":
        if report is None:
            raise InfeasibleDesign("CSV reports need a feasible design")
        Path(args.out).write_text(report_to_csv(report))
    else:
        _write_json(args.out, payload)
    _manifest(args, "evaluate", {"design": str(args.design)}, [args.out])
    print(f"evaluated {args.design}: feasible={payload['feasible']}")
    return EXIT_OK


def _parse_contrast(design: Design, text: str) -> np.ndarray:
    n, dim = design.n, design.spec.dim
    c = np.zeros(dim)
    if text == "latest":
        c[0], c[n] = -1.0, 1.0
        return c
    if text == "average":
        c[0] = -1.0
        c[1:n + 1] = 1.0 / n
        return c
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != dim:
        raise ParseError(f"contrast needs {dim} entries (or 'latest'/'average')")
    return np.array([float(parse_weight(p)) for p in parts])


def cmd_certify(args) -> int:
    design = load_design(args.design)
    label = Path(args.design).name
    if args.claim == "e":
        result = certify_e_optimality(design, tol=args.tolerance, label=label)
    else:
        contrast = _parse_contrast(design, args.contrast)
        result = certify_c_optimality(design, contrast, tol=args.tolerance, label=label)
    _write_json(args.out, certificate_to_dict(result))
    _manifest(args, "certify",
              {"design": str(args.design), "claim": args.claim,
               "contrast": args.contrast, "tolerance": args.tolerance},
              [args.out])
    print(f"{result.claim}: {result.status} (worst gap {result.worst_gap:.3e})")
    return EXIT_OK if result.certified else EXIT_VIOLATED


def _polytope_from_args(args) -> DesignPolytope:
    if args.polytope:
        try:
            payload = json.loads(Path(args.polytope).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read polytope spec: {exc}") from exc
        spec = ModelSpec(payload["n"], payload.get("kind", STANDARD))
        polytope = e_optimal_class(spec) if payload.get("e_class") else DesignPolytope.base(spec)
        equalities = payload.get("equalities", [])
        rows = []
        for eq in equalities:
            coeffs = {(int(i), int(k) - 1): float(v) for i, k, v in eq["coeffs"]}
            rows.append((coeffs, float(eq["rhs"])))
        if rows:
            polytope = polytope.with_equalities(rows, label="custom")
        return polytope
    spec = ModelSpec(args.n, args.kind)
    return e_optimal_class(spec) if args.e_class else DesignPolytope.base(spec)


def _solver_config(args) -> SolverConfig:
    options = {}
    if args.solver_config:
        try:
            options = json.loads(Path(args.solver_config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read solver config: {exc}") from exc
        if "multistart_seeds" in options:
            options["multistart_seeds"] = tuple(options["multistart_seeds"])
    if args.gap is not None:
        options["stopping_gap"] = args.gap
    if args.max_iters is not None:
        options["max_iters"] = args.max_iters
    if args.seed is not None and "multistart_seeds" not in options:
        options["multistart_seeds"] = (args.seed,)
    try:
        return SolverConfig(**options)
    except TypeError as exc:
        raise ParseError(f"bad solver config: {exc}") from exc


def cmd_optimize(args) -> int:
    polytope = _polytope_from_args(args)
    config = _solver_config(args)
    result = maximize(polytope, args.objective, config)
    save_design(result.design, args.out)
    outputs = [args.out]
    if args.log:
        with open(args.log, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["iteration", "objective", "gap"])
            writer.writerows(result.log)
        outputs.append(args.log)
    _manifest(args, "optimize",
              {"polytope": polytope.label, "n": polytope.spec.n,
               "kind": polytope.spec.kind, "objective": result.objective,
               "stopping_gap": config.stopping_gap, "value": result.value,
               "gap": result.gap},
              outputs)
    status = "converged" if result.converged else "not converged"
    print(f"{result.objective}-objective {status}: value {result.value:.9g}, "
          f"gap {result.gap:.3e}, {result.iterations} iterations")
    return EXIT_OK if result.converged else EXIT_VIOLATED


def cmd_oracle(args) -> int:
    spec = ModelSpec(args.n, args.kind)
    design, value = brute_force_best_e(spec, args.resolution, args.refine_iters)
    payload = {
        "n": design.n,
        "kind": design.kind,
        "weights": [[float(w) for w in row] for row in design.weights],
        "value": value,
    }
    _write_json(args.out, payload)
    _manifest(args, "oracle",
              {"n": args.n, "kind": args.kind, "resolution": args.resolution,
               "refine_iters": args.refine_iters, "value": value},
              [args.out])
    print(f"best E-value on the grid: {value:.9g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dosedesign",
        description="Optimal approximate designs for dose-escalation cohort studies.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="write a named closed-form design")
    p.add_argument("--name", choices=sorted(CONSTRUCTORS), required=True)
    p.add_argument("--n", type=int, required=True, help="number of dose levels")
    p.add_argument("--out", required=True, help="output file (.json or .csv)")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("evaluate", help="criterion report for a design file")
    p.add_argument("--design", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("certify", help="equivalence-theorem certificate")
    p.add_argument("--design", required=True)
    p.add_argument("--claim", choices=["e", "c"], required=True)
    p.add_argument("--contrast", default="latest",
                   help="for c-claims: 'latest', 'average', or comma-separated entries")
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("optimize", help="maximize a criterion over a polytope")
    p.add_argument("--n", type=int)
    p.add_argument("--kind", choices=[STANDARD, EXTENDED], default=STANDARD)
    p.add_argument("--e-class", action="store_true",
                   help="restrict to the E-optimal class")
    p.add_argument("--polytope", help="JSON polytope spec (overrides --n/--kind)")
    p.add_argument("--objective", choices=["A", "D", "E"], default="A")
    p.add_argument("--gap", type=float, default=None, help="stopping duality gap")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--seed", type=int, default=None,
                   help="adds one multistart run from a seeded interior point")
    p.add_argument("--solver-config", help="JSON file with SolverConfig fields")
    p.add_argument("--log", help="CSV file for per-iteration objective and gap")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("oracle", help="brute-force best E-value (n <= 3)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kind", choices=[STANDARD, EXTENDED], default=STANDARD)
    p.add_argument("--resolution", type=int, required=True,
                   help="grid steps per cohort weight")
    p.add_argument("--refine-iters", type=int, default=6)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "optimize" and not args.polytope and args.n is None:
            parser.error("optimize needs --n or --polytope")
    except SystemExit as exc:
        # argparse exits itself; keep --help at 0, map usage errors to 3
        code = exc.code if isinstance(exc.code, int) else 1
        return EXIT_OK if code == 0 else EXIT_INPUT
    args._argv = [args.command] + [a for a in argv if a != args.command]
    try:
        return args.func(args)
    except SingularIterate as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATED
    except (DesignError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
