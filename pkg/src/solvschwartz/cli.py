"""Command-line entry point ``solvschwartz``.

Every command prints a JSON report::

    {"command", "inputs", "inputs_digest", "seed", "tool_version",
     "results", "ok", "timestamp"}

``inputs_digest`` is the SHA-256 of the canonical inputs (group definition
text, arguments, seed and version); the timestamp is excluded from it, so
identical inputs give identical reports apart from that field.  Numerical
results carry a ``tolerance`` or a ``tail_bound``.

Exit codes: 0 all checks passed, 1 a check failed (the report carries a
witness), 2 invalid input.  The default seed comes from
``SOLVSCHWARTZ_SEED`` (0 when unset).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from . import algebra as alg
from .definitions import GroupDefinition, load_definition
from .errors import CheckFailed, InputError, SolvSchwartzError
from .numerics import Box
from .realization import Realization, group_law_report
from .weights import CONSTANT_CAP, SAMPLE_SCALES, Weight, property_report

__all__ = ["main", "build_parser", "make_report", "jsonable", "SEED_ENV"]

SEED_ENV = "SOLVSCHWARTZ_SEED"
EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2


# ---------------------------------------------------------------------------
# reports


def jsonable(obj):
    """Recursively convert numpy scalars/arrays, tuples and complex numbers."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"real": jsonable(float(obj.real)), "imag": jsonable(float(obj.imag))}
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def _canonical(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def make_report(command: str, inputs: dict, results: dict, seed: int, ok: bool) -> dict:
    digest = hashlib.sha256(_canonical({"command": command, "inputs": inputs, "seed": seed,
                                        "tool_version": __version__}).encode()).hexdigest()
    return {
        "command": command,
        "inputs": jsonable(inputs),
        "inputs_digest": digest,
        "seed": seed,
        "tool_version": __version__,
        "results": jsonable(results),
        "ok": bool(ok),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


# ---------------------------------------------------------------------------
# argument helpers


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]
    except ValueError:
        raise InputError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise InputError(f"{what}: empty list")
    return vals


def _alpha(text: str | None, dim: int) -> tuple[int, ...]:
    """Multi-index from ``"a1,...,am"``; a single integer ``a`` means ``a·e₁``."""
    if text is None:
        return (0,) * dim
    vals = _floats(text, "--alpha")
    if any(v != int(v) or v < 0 for v in vals):
        raise InputError(f"--alpha entries must be nonnegative integers: {text!r}")
    if len(vals) == 1 and dim > 1:
        return (int(vals[0]),) + (0,) * (dim - 1)
    if len(vals) != dim:
        raise InputError(f"--alpha needs 1 or {dim} entries, got {len(vals)}")
    return tuple(int(v) for v in vals)


def _box(text: str | None, dim: int) -> Box | None:
    if text is None:
        return None
    hw = _floats(text, "--box")
    if len(hw) == 1:
        hw = hw * dim
    if len(hw) != dim:
        raise InputError(f"--box needs 1 or {dim} half-widths")
    return Box(tuple(hw))


def _q(text: str) -> float:
    if str(text).lower() in ("inf", "infinity", "oo"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise InputError(f"--q must be a number >= 1 or 'inf', got {text!r}") from None


def _group(name: str, seed: int) -> tuple[GroupDefinition, Realization, dict]:
    definition = load_definition(name)
    r = definition.realize(seed)
    info = {"group": definition.name,
            "definition_sha256": hashlib.sha256(definition.canonical_json().encode()).hexdigest()}
    return definition, r, info


def _probe(r: Realization, label: str | None):
    from .schwartz.functions import probe

    if not label:
        raise InputError("a probe label is required (--probe)")
    return probe(r, label)


# ---------------------------------------------------------------------------
# commands; each returns (inputs, results, ok)


def cmd_check_algebra(args) -> tuple[dict, dict, bool]:
    definition = load_definition(args.file)
    a = definition.algebra()
    resid, witness = a.jacobi_residual()
    solvable = alg.is_solvable(a)
    nil = definition.check()
    results = {
        "dim": a.dim,
        "jacobi_residual": resid,
        "jacobi_witness": witness,
        "solvable": solvable,
        "nilradical": nil.to_dict(),
        "tolerance": {"jacobi": alg.JACOBI_TOL, "rank": alg.RANK_TOL},
    }
    ok = solvable and nil.valid
    if not ok:
        results["witness"] = nil.to_dict() if solvable else {"derived_series_dims": [
            s.dim for s in alg.derived_series(a)]}
    inputs = {"file": definition.name,
              "definition_sha256": hashlib.sha256(definition.canonical_json().encode()).hexdigest()}
    return inputs, results, ok


def _spot_checks(r: Realization, n: int, seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    g = np.round(rng.uniform(-1.0, 1.0, (n, r.dim)), 3)
    h = np.round(rng.uniform(-1.0, 1.0, (n, r.dim)), 3)
    gh = r.multiply(g, h)
    return [{"g": g[i], "h": h[i], "product": gh[i], "inverse_g": r.inverse(g[i]),
             "modular_g": float(r.modular(g[i]))} for i in range(n)]


def cmd_realize(args) -> tuple[dict, dict, bool]:
    _, r, info = _group(args.file, args.seed)
    law = group_law_report(r, n=args.samples, seed=args.seed)
    summary = r.summary()
    summary["complement_labels"] = list(r.labels[: r.k])
    results = {
        "realization": summary,
        "spot_checks": _spot_checks(r, args.spot, args.seed),
        "group_law": law,
        "tolerance": law["tolerances"],
    }
    return {**info, "samples": args.samples, "spot": args.spot}, results, law["ok"]


def cmd_verify_properties(args) -> tuple[dict, dict, bool]:
    _, r, info = _group(args.file, args.seed)
    scales = tuple(_floats(args.scales, "--scales"))
    if args.samples < 1000:
        raise InputError("--samples must be at least 1000")
    w = Weight(r)
    props = property_report(w, scales, n_samples=args.samples, n_pairs=args.pairs, seed=args.seed)
    law = group_law_report(r, n=1000, seed=args.seed)
    ok = props["ok"] and law["ok"]
    results = {"properties": props, "group_law": law,
               "tolerance": {"constant_cap": CONSTANT_CAP, **law["tolerances"]}}
    if not ok:
        results["witness"] = {"violations": props["modular_domination"]["violations"],
                              "group_law_errors": law["errors"]}
    return {**info, "scales": list(scales), "samples": args.samples, "pairs": args.pairs}, results, ok


def cmd_seminorm(args) -> tuple[dict, dict, bool]:
    from .schwartz.seminorms import FLAG_RATIO, SeminormSpec, seminorm

    _, r, info = _group(args.group, args.seed)
    f = _probe(r, args.probe)
    spec = SeminormSpec(_q(args.q), args.k, _alpha(args.alpha, r.dim))
    box = _box(args.box, r.dim)
    res = seminorm(r, Weight(r), f, spec, box=box, side=args.side, seed=args.seed,
                   budget=args.budget)
    ok = math.isfinite(res.value) and not res.flagged
    results = {"seminorm": res.to_dict(), "value": res.value, "tail_bound": res.tail_bound,
               "tolerance": {"tail_flag_ratio": FLAG_RATIO}}
    if not ok:
        results["witness"] = {"flagged": res.flagged, "box": res.box}
    inputs = {**info, "probe": args.probe, "q": args.q, "k": args.k, "alpha": list(spec.alpha),
              "box": args.box, "budget": args.budget, "side": args.side}
    return inputs, results, ok


def cmd_convolve(args) -> tuple[dict, dict, bool]:
    from .schwartz.convolution import convolve

    _, r, info = _group(args.group, args.seed)
    phi, psi = _probe(r, args.phi), _probe(r, args.psi)
    pts = [_floats(p, "--at") for p in (args.at or ["0"])]
    pts = [p * r.dim if len(p) == 1 else p for p in pts]
    if any(len(p) != r.dim for p in pts):
        raise InputError(f"--at points need {r.dim} coordinates")
    res = convolve(r, phi, psi, np.array(pts), budget=args.budget, form=args.form, seed=args.seed)
    ok = math.isfinite(res.tail_bound)
    results = {"convolution": res.to_dict(), "points": pts, "tail_bound": res.tail_bound}
    inputs = {**info, "phi": args.phi, "psi": args.psi, "at": pts, "budget": args.budget,
              "form": args.form}
    return inputs, results, ok


def cmd_membership(args) -> tuple[dict, dict, bool]:
    from .schwartz.seminorms import STABILITY_TOL, membership_report

    _, r, info = _group(args.group, args.seed)
    f = _probe(r, args.probe)
    k_max = 6 if args.k is None else args.k
    alpha_max = 3 if args.alpha is None else int(args.alpha)
    rep = membership_report(r, Weight(r), f, k_max=k_max, alpha_max=alpha_max,
                            box=_box(args.box, r.dim), n_samples=args.samples, seed=args.seed)
    results = {"membership": rep, "tolerance": {"relative_change": STABILITY_TOL}}
    if not rep["member"]:
        results["witness"] = [row for row in rep["table"] if not row["stable"]][:5]
    inputs = {**info, "probe": args.probe, "k_max": k_max, "alpha_max": alpha_max,
              "box": args.box, "samples": args.samples}
    return inputs, results, rep["member"]


def _load_decomposition(path: str, r: Realization, w: Weight):
    from .distributions import load_decomposition

    p = Path(path)
    if not p.exists():
        raise InputError(f"decomposition file not found: {path}")
    return load_decomposition(p, r, w)


def cmd_pair(args) -> tuple[dict, dict, bool]:
    from .distributions import derivative, embed, growth_order, slow_function

    _, r, info = _group(args.group, args.seed)
    w = Weight(r)
    phi = _probe(r, args.probe)
    if (args.function is None) == (args.decomposition is None):
        raise InputError("give exactly one of --function or --decomposition")
    if args.decomposition:
        dec = _load_decomposition(args.decomposition, r, w)
        T = dec.distribution(r)
        described = {"decomposition": dec.to_dict()}
    else:
        f, label = slow_function(r, w, args.function)
        k = growth_order(r, w, f, seed=args.seed) if args.k is None else args.k
        T = embed(r, w, f, k, label, seed=args.seed)
        described = {"function": label, "growth_order": k}
    alpha = _alpha(args.alpha, r.dim)
    if any(alpha):
        T = derivative(T, alpha=alpha)
    res = T.pair(phi, args.budget)
    results = {"pairing": res.to_dict(), "distribution": described, "alpha": list(alpha),
               "tail_bound": res.tail_bound}
    if res.flagged:
        results["witness"] = {"tail_bound": res.tail_bound, "value": res.to_dict()["value"]}
    inputs = {**info, "probe": args.probe, "function": args.function,
              "decomposition": None if args.decomposition is None
              else hashlib.sha256(Path(args.decomposition).read_bytes()).hexdigest(),
              "k": args.k, "alpha": list(alpha), "budget": args.budget}
    return inputs, results, not res.flagged


_FLAT_TOL = {1: 1e-5}
_FLAT_TOL_DEFAULT = 1e-3


def cmd_verify_structure(args) -> tuple[dict, dict, bool]:
    from .distributions import slow_function, verify_flat_identity
    from .schwartz.functions import tensor_bump

    _, r, info = _group(args.group, args.seed)
    w = Weight(r)
    results: dict = {}
    ok = True
    if args.decomposition:
        dec = _load_decomposition(args.decomposition, r, w)
        T = dec.distribution(r)
        rows = []
        for label in args.probe or ["gauss-1"]:
            res = T.pair(_probe(r, label), args.budget)
            rows.append({"probe": label, **res.to_dict()})
            ok &= not res.flagged
        results["decomposition"] = dec.to_dict()
        results["pairings"] = rows
    if args.flat:
        h, label = slow_function(r, w, args.flat)
        phi = tensor_bump(r, radius=args.radius)
        tol = _FLAT_TOL.get(r.dim, _FLAT_TOL_DEFAULT)
        rep = verify_flat_identity(r, w, h, args.j, phi, points=args.points, panels=args.panels)
        rep["tolerance"] = tol
        rep["ok"] = bool(rep["residual"] < tol)
        results["flat_identity"] = {"h": label, "j": args.j, **rep}
        ok &= rep["ok"]
        if not rep["ok"]:
            results["witness"] = {"residual": rep["residual"], "lhs": rep["lhs"], "rhs": rep["rhs"]}
    if not results:
        raise InputError("nothing to verify: give --decomposition and/or --flat")
    inputs = {**info, "decomposition": None if args.decomposition is None
              else hashlib.sha256(Path(args.decomposition).read_bytes()).hexdigest(),
              "probes": args.probe, "flat": args.flat, "j": args.j, "points": args.points,
              "panels": args.panels, "radius": args.radius, "budget": args.budget}
    return inputs, results, ok


def cmd_product(args) -> tuple[dict, dict, bool]:
    from .distributions import growth_order, slow_function
    from .products import (check_block_structure, check_sigma_product, direct_product,
                           separable_kernel_check)

    _, r1, info1 = _group(args.group1, args.seed)
    _, r2, info2 = _group(args.group2, args.seed)
    pr = direct_product(r1, r2, seed=args.seed)
    w, w1, w2 = Weight(pr.r), Weight(r1), Weight(r2)
    blocks = check_block_structure(pr, seed=args.seed)
    sig = check_sigma_product(pr, w, w1, w2, n=args.samples, seed=args.seed)
    f1, l1 = slow_function(r1, w1, args.kernel[0])
    f2, l2 = slow_function(r2, w2, args.kernel[1])
    phi1, phi2 = _probe(r1, args.phi), _probe(r2, args.psi)
    k1, k2 = growth_order(r1, w1, f1, seed=args.seed), growth_order(r2, w2, f2, seed=args.seed)
    kernel = separable_kernel_check(pr, w1, w2, f1, f2, k1, k2, phi1, phi2, args.budget)
    tol = max(1e-4, 10.0 * kernel["tail_bound"])
    kernel["tolerance"] = tol
    kernel["ok"] = bool(kernel["difference"] <= tol)
    ok = blocks["ok"] and sig["ok"] and kernel["ok"]
    results = {
        "product": pr.summary(),
        "block_structure": {**blocks, "tolerance": {"multiply": 1e-10, "modular": 1e-9}},
        "sigma_product": {**sig, "tolerance": {"constant_cap": CONSTANT_CAP,
                                               "stability_ratio": 2.0}},
        "kernel": {"functions": [l1, l2], "growth_orders": [k1, k2], "probes": [args.phi, args.psi],
                   **kernel},
    }
    if not ok:
        results["witness"] = {"blocks": blocks["ok"], "sigma": sig["stability_ratio"],
                              "kernel_difference": kernel["difference"]}
    inputs = {"group1": info1, "group2": info2, "kernel": list(args.kernel), "phi": args.phi,
              "psi": args.psi, "samples": args.samples, "budget": args.budget}
    return inputs, results, ok


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help=f"random seed (default: ${SEED_ENV} or 0)")
    out = common.add_mutually_exclusive_group()
    out.add_argument("--json", action="store_true", help="compact single-line JSON")
    out.add_argument("--pretty", action="store_true", help="indented JSON (default)")

    p = argparse.ArgumentParser(prog="solvschwartz",
                                description="Weighted Schwartz spaces on solvable Lie groups.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check-algebra", parents=[common],
                       help="Jacobi identity, solvability and nilradical validation")
    s.add_argument("file", help="group-definition JSON file or bundled name")
    s.set_defaults(func=cmd_check_algebra)

    s = sub.add_parser("realize", parents=[common], help="realization summary and spot checks")
    s.add_argument("file")
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--spot", type=int, default=3)
    s.set_defaults(func=cmd_realize)

    s = sub.add_parser("verify-properties", parents=[common],
                       help="weight properties and the group-axiom suite")
    s.add_argument("file")
    s.add_argument("--scales", default=",".join(f"{x:g}" for x in SAMPLE_SCALES))
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--pairs", type=int, default=2000)
    s.set_defaults(func=cmd_verify_properties)

    def group_args(s):
        s.add_argument("--group", required=True, help="bundled name or definition file")

    s = sub.add_parser("seminorm", parents=[common], help="one seminorm of a probe function")
    group_args(s)
    s.add_argument("--probe")
    s.add_argument("--k", type=int, default=0)
    s.add_argument("--alpha", help="multi-index a1,...,am (a single integer a means a*e1)")
    s.add_argument("--q", default="inf")
    s.add_argument("--box", help="half-width (or comma-separated half-widths)")
    s.add_argument("--budget", type=int, default=200_000)
    s.add_argument("--side", choices=("left", "right"), default="left")
    s.set_defaults(func=cmd_seminorm)

    s = sub.add_parser("convolve", parents=[common], help="convolution of two probes at points")
    group_args(s)
    s.add_argument("--phi", required=True)
    s.add_argument("--psi", required=True)
    s.add_argument("--at", action="append", help="evaluation point (repeatable)")
    s.add_argument("--budget", type=int, default=120_000)
    s.add_argument("--form", choices=("auto", "left", "right"), default="auto")
    s.set_defaults(func=cmd_convolve)

    s = sub.add_parser("membership", parents=[common], help="stabilized seminorm table")
    group_args(s)
    s.add_argument("--probe")
    s.add_argument("--k", type=int, default=None, help="largest weight power (default 6)")
    s.add_argument("--alpha", type=int, default=None, help="largest |alpha| (default 3)")
    s.add_argument("--box")
    s.add_argument("--samples", type=int, default=1024)
    s.set_defaults(func=cmd_membership)

    s = sub.add_parser("pair", parents=[common], help="pair a distribution with a probe")
    group_args(s)
    s.add_argument("--probe")
    s.add_argument("--function", help="slowly increasing function label")
    s.add_argument("--decomposition", help="decomposition JSON file")
    s.add_argument("--k", type=int, default=None, help="growth order (default: fitted)")
    s.add_argument("--alpha", help="derivative multi-index applied to the distribution")
    s.add_argument("--budget", type=int, default=1 << 16)
    s.set_defaults(func=cmd_pair)

    s = sub.add_parser("verify-structure", parents=[common],
                       help="evaluate a decomposition and check the antiderivative identity")
    group_args(s)
    s.add_argument("--decomposition")
    s.add_argument("--probe", action="append")
    s.add_argument("--flat", help="bounded function h for the antiderivative identity")
    s.add_argument("--j", type=int, default=1)
    s.add_argument("--points", type=int, default=12)
    s.add_argument("--panels", type=int, default=2)
    s.add_argument("--radius", type=float, default=1.0)
    s.add_argument("--budget", type=int, default=1 << 16)
    s.set_defaults(func=cmd_verify_structure)

    s = sub.add_parser("product", parents=[common], help="direct product of two groups")
    s.add_argument("group1")
    s.add_argument("group2")
    s.add_argument("--kernel", nargs=2, default=("one", "one"), metavar=("F1", "F2"),
                   help="slowly increasing factors of a separable kernel")
    s.add_argument("--phi", default="gauss-1")
    s.add_argument("--psi", default="gauss-1")
    s.add_argument("--samples", type=int, default=2000)
    s.add_argument("--budget", type=int, default=1 << 18)
    s.set_defaults(func=cmd_product)
    return p


def _emit(report: dict, args) -> None:
    if getattr(args, "json", False):
        text = json.dumps(report, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    else:
        text = json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False)
    sys.stdout.write(text + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits with 2 on usage errors
        return int(exc.code or 0)
    try:
        if args.seed is None:
            args.seed = _default_seed()
        inputs, results, ok = args.func(args)
    except InputError as exc:
        _emit(make_report(args.command, {"argv": list(argv or sys.argv[1:])},
                          {"error": {"type": type(exc).__name__, "message": str(exc)}},
                          args.seed or 0, False), args)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CheckFailed as exc:
        _emit(make_report(args.command, {"argv": list(argv or sys.argv[1:])},
                          {"error": {"type": type(exc).__name__, "message": str(exc)},
                           "witness": jsonable(exc.witness)}, args.seed, False), args)
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except SolvSchwartzError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    report = make_report(args.command, inputs, results, args.seed, ok)
    _emit(report, args)
    return EXIT_OK if ok else EXIT_FAILED


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
