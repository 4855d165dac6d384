"""Command-line front end.

Exit codes: 0 success, 1 a check failed, 2 bad input or usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import acceptance, archimedean
from .bounds import envelope_bound, envelope_extract, table2_bound, theorem3_bound
from .core import fold, validate_copula
from .ergodicity import drift_check, frechet_drift_spec, minorization_check
from .errors import CopulaError, InputError, NotApplicableError
from .families import FAMILIES, build
from .grid import make_grid
from .simulate import sample_chain
from .spectral import assemble_operator, mixing_report, rho1_estimate

SCHEMA_VERSION = 1
OUT_ENV = "COPULAMIX_OUT"

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _emit(payload, stream=None):
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    (stream or sys.stdout).write(json.dumps(payload, sort_keys=True, indent=2, default=float) + "\n")


def _grid(args):
    if args.n < 16:
        raise InputError(f"grid size must be at least 16, got {args.n}")
    return make_grid(args.n, args.scheme)


def _family(name, params):
    if name not in FAMILIES:
        raise InputError(f"unknown family {name!r}; known: {', '.join(sorted(FAMILIES))}")
    return build(name, params)


def _family_token(token):
    """``name`` or ``name:p1,p2``."""
    name, _, rest = token.partition(":")
    params = [float(p) for p in rest.split(",") if p] if rest else []
    return _family(name, params)


# --- commands ------------------------------------------------------------------------

def cmd_validate(args):
    model = _family(args.family, args.params)
    rep = validate_copula(model, _grid(args), tol=args.tol)
    _emit({"model": model.label, "ok": rep.ok, **rep.to_dict()})
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_rho1(args):
    model = _family(args.family, args.params)
    op = assemble_operator(model, _grid(args))
    _emit({"model": model.label, "rho1": rho1_estimate(op), "symmetric": op.symmetric})
    return EXIT_OK


def cmd_mix(args):
    model = _family(args.family, args.params)
    rep = mixing_report(model, _grid(args), nmax=args.nmax, rho_steps=min(args.nmax, 3))
    if args.json:
        sys.stdout.write(rep.to_json() + "\n")
    else:
        sys.stdout.write(rep.to_csv())
    return EXIT_OK


def cmd_bound(args):
    model = _family(args.family, args.params)
    grid = _grid(args)
    if args.name == "theorem3":
        rep = theorem3_bound(model, grid)
    elif args.name == "envelope":
        rep = envelope_bound(*envelope_extract(model, grid), grid)
    else:
        spec = model.extras.get("spec")
        if spec is None:
            raise NotApplicableError(f"table2 applies to m1..m4, not {args.family}")
        rep = table2_bound(spec)
    payload = rep.to_dict()
    payload["rho1"] = rho1_estimate(assemble_operator(model, grid))
    payload["model"] = model.label
    _emit(payload)
    return EXIT_OK if rep.satisfied else EXIT_FAIL


def cmd_arch_root(args):
    theta0 = archimedean.theorem4_critical_parameter(args.family, tuple(args.bracket),
                                                      tol=args.tol, grid=_grid(args))
    _emit({"family": args.family, "bracket": list(args.bracket), "theta0": theta0})
    return EXIT_OK


def cmd_fold(args):
    grid = _grid(args)
    first, second = _family_token(args.first), _family_token(args.second)
    out = fold(first, second, grid)
    rep = validate_copula(out, grid)
    dens = out.density_matrix(grid)
    atoms = [{"kind": a.kind, "mean_weight": float(grid.integrate(a.weight_at(grid.nodes)))}
             for a in out.atoms]
    _emit({"model": out.label, "atoms": atoms, "density_min": float(dens.min()),
           "density_max": float(dens.max()),
           "rho1": rho1_estimate(assemble_operator(out, grid)), "validation": rep.to_dict()})
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_simulate(args):
    model = _family(args.family, args.params)
    traj = sample_chain(model, args.length, args.seed)
    text = traj.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_drift(args):
    grid = _grid(args)
    spec = frechet_drift_spec(args.a, args.b, grid)
    model = build("frechet", (args.a, args.b))
    drift = drift_check(model, spec, grid)
    cert = minorization_check(model, spec.S, 1.0 - args.a - args.b, grid)
    _emit({"model": model.label, "r": spec.r, "gamma": spec.gamma, "K": spec.K,
           "drift": drift.to_dict(), "minorization": cert.to_dict()})
    return EXIT_OK if drift.ok and cert.valid else EXIT_FAIL


def cmd_reproduce(args):
    out = Path(args.out or os.environ.get(OUT_ENV, "reproduce-out"))
    out.mkdir(parents=True, exist_ok=True)
    grid = _grid(args)
    results = acceptance.run_all(seed=args.seed, grid=grid)
    payload = {"schema_version": SCHEMA_VERSION, "seed": args.seed, "grid": grid.size,
               "scheme": grid.scheme, "criteria": [c.to_dict() for c in results]}
    (out / "results.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    series = acceptance.series_for_report(grid)
    for name, rep in series.items():
        (out / f"mixing_{name}.csv").write_text(rep.to_csv())
    lines = ["# Reproduction summary", "",
             f"Seed {args.seed}, grid {grid.scheme} N={grid.size}.", "",
             "| criterion | status | failed checks |", "|---|---|---|"]
    for c in results:
        failed = ", ".join(ch.name for ch in c.checks if not ch.passed) or "-"
        lines.append(f"| {c.number}. {c.title} | {'PASS' if c.passed else 'FAIL'} | {failed} |")
    lines += ["", "Mixing series: " + ", ".join(f"mixing_{n}.csv" for n in series), ""]
    (out / "summary.md").write_text("\n".join(lines))
    for c in results:
        print(c.line())
    return EXIT_OK if all(c.passed for c in results) else EXIT_FAIL


# --- parser --------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="copulamix", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=512, help="grid size (>= 16)")
    common.add_argument("--scheme", default="midpoint", choices=["midpoint", "gauss-legendre"])
    sub = parser.add_subparsers(dest="command", required=True)

    def family_cmd(name, fn, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("family")
        p.add_argument("params", nargs="*", type=float)
        p.set_defaults(func=fn)
        return p

    p = family_cmd("validate", cmd_validate, "check the copula axioms")
    p.add_argument("--tol", type=float, default=None)
    family_cmd("rho1", cmd_rho1, "estimate the maximal correlation rho_1")
    p = family_cmd("mix", cmd_mix, "beta_n, phi_n and rho_1^n series as CSV")
    p.add_argument("--nmax", type=int, default=5)
    p.add_argument("--json", action="store_true", help="full report as JSON instead of CSV")

    p = sub.add_parser("bound", parents=[common], help="closed-form rho_1 bounds")
    p.add_argument("name", choices=["theorem3", "envelope", "table2"])
    p.add_argument("family")
    p.add_argument("params", nargs="*", type=float)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("arch-root", parents=[common], help="critical parameter of the integral test")
    p.add_argument("family", choices=sorted(archimedean.GENERATOR_FAMILIES))
    p.add_argument("--bracket", nargs=2, type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_arch_root)

    p = sub.add_parser("fold", parents=[common], help="fold product of two families (name:p1,p2)")
    p.add_argument("first")
    p.add_argument("second")
    p.set_defaults(func=cmd_fold)

    p = family_cmd("simulate", cmd_simulate, "sample a stationary trajectory")
    p.add_argument("--length", type=int, default=1000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default=None)

    p = sub.add_parser("drift", parents=[common], help="Frechet drift and small-set certificates")
    p.add_argument("a", type=float)
    p.add_argument("b", type=float)
    p.set_defaults(func=cmd_drift)

    p = sub.add_parser("reproduce", parents=[common], help="run the acceptance matrix")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./reproduce-out)")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, NotApplicableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CopulaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
