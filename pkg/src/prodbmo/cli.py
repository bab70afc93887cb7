"""Command-line entry point ``pbmo``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import fileio
from .geometry import Grid
from .haar import GridFunction, HaarSpectrum, forward_haar, inverse_haar
from .norms import (bmo_m_norm, bmo_norm, intersection_norm, lmo_norm, product_bmo_norm,
                    slice_bmo_max, stegenga_functional)
from .operators import (OperatorHandle, Signature, apply_B, assemble_matrix,
                        decomposition_residual, enumerate_signatures, is_band_limited,
                        l2_operator_norm, named_operator)
from .experiments import ExperimentConfig, emit_report, run_experiment
from .testfns import FunctionRecipe, sample


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--grid", help="grid as N:k1,..,kN (used when a function is generated)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=["json", "csv"], default=None)
    p.add_argument("--exact-cap", type=int, help="cell cap for exhaustive open-set search")
    return p


def load_input(spec: str, args) -> GridFunction:
    """A PBMO1 file, a recipe JSON file, or the word ``random`` (needs ``--grid``)."""
    if spec == "random" or spec.endswith(".json"):
        if not args.grid:
            raise SystemExit("--grid is required to materialise a recipe")
        recipe = FunctionRecipe.random() if spec == "random" else FunctionRecipe.from_json(Path(spec).read_text())
        return sample(recipe, Grid.parse(args.grid), args.seed)
    return fileio.load_function(spec)


def _write(args, text: str | bytes):
    if args.out:
        mode = "wb" if isinstance(text, bytes) else "w"
        with open(args.out, mode) as fh:
            fh.write(text)
    elif isinstance(text, bytes):
        sys.stdout.buffer.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------- commands

def cmd_haar(args):
    if args.direction == "fwd":
        f = load_input(args.file, args)
        s = forward_haar(f)
        _write(args, fileio.dumps_values(f.grid, s.coeffs, args.binary))
    else:
        grid, coeffs = fileio.loads_values(Path(args.file).read_bytes())
        f = inverse_haar(HaarSpectrum(grid, coeffs))
        _write(args, fileio.dumps_values(grid, f.values, args.binary))
    return 0


def cmd_norm(args):
    f = load_input(args.file, args)
    kw = {"cap": args.exact_cap}
    which = args.which
    if args.alpha:
        alphas = [tuple(a.split(",")) if "," in a else a for a in args.alpha]
        if which == "LMO":
            rep = intersection_norm(f, "LMO", alphas, mode=args.lmo_mode, search=args.mode, **kw)
        elif which == "BMO":
            rep = intersection_norm(f, "BMO", alphas, mode=args.mode, **kw)
        else:
            rep = intersection_norm(f, which, alphas)
    elif which == "bmo":
        rep = bmo_norm(f)
    elif which == "BMO":
        rep = product_bmo_norm(f, mode=args.mode, **kw)
    elif which == "BMO_m":
        rep = bmo_m_norm(f, mode=args.mode, **kw)
    elif which == "LMO":
        rep = lmo_norm(f, args.lmo_mode, search=args.mode, **kw)
    elif which == "stegenga":
        rep = stegenga_functional(f)
    else:
        if not args.split:
            raise SystemExit("slice needs --split N1,N2")
        _write(args, _json({"norm": "slice_bmo_max", "value": slice_bmo_max(f, _ints(args.split))}))
        return 0
    _write(args, _json(rep.to_json()))
    return 0


def _operator(args, phi) -> OperatorHandle:
    name = args.operator
    if ":" in name:
        sig = Signature.parse(name)
        return OperatorHandle(str(sig), phi, sig)
    split = None
    if args.split:
        split = _ints(args.split)
    beta = _ints(args.beta) if args.beta else None
    return named_operator(name, phi, split=split, beta=beta)


def cmd_op(args):
    phi = load_input(args.phi, args)
    op = _operator(args, phi)
    if args.action == "apply":
        if not args.f:
            raise SystemExit("op apply needs a function argument")
        f = load_input(args.f, args)
        out = op(f)
        _write(args, fileio.dumps_values(out.grid, out.values))
        return 0
    m = assemble_matrix(op)
    if args.export:
        fileio.save_matrix(m.entries, args.export)
    value = l2_operator_norm(m, tol=args.tol)
    _write(args, _json({"operator": op.name, "l2_norm": value, "rows": m.shape[0], "cols": m.shape[1]}))
    return 0


def cmd_decompose(args):
    phi = load_input(args.phi, args)
    f = load_input(args.f, args)
    res = decomposition_residual(phi, f)
    band = is_band_limited(phi) or is_band_limited(f)
    ok = res <= 1e-10 or not band
    _write(args, _json({"residual": res, "band_limited": band, "tolerance": 1e-10,
                        "signatures": len(enumerate_signatures(f.grid.N)), "passed": ok}))
    return 0 if ok else 1


PROBES = {"necessity": "necessity_probe", "lmo-scaling": "lmo_scaling", "haar-multiplier": "haar_multiplier"}


def cmd_probe(args):
    cfg = {"scenario": PROBES[args.probe]}
    if args.grid:
        cfg["grid"] = args.grid
    if args.seeds is not None:
        cfg["seeds"] = list(range(args.seed, args.seed + args.seeds))
    if args.resolutions:
        cfg["resolutions"] = _ints(args.resolutions)
    report = run_experiment(ExperimentConfig.from_dict(cfg))
    _write(args, emit_report(report, None, args.format or "json"))
    return 0 if report.ok else 1


def cmd_experiment(args):
    cfg = ExperimentConfig.load(args.config)
    if args.workers:
        cfg.workers = args.workers
    fmt = args.format or cfg.output.get("format", "json")
    path = args.out or cfg.output.get("path")
    if path:
        parent = Path(path).resolve().parent
        if not parent.is_dir():
            print(f"output directory {parent} does not exist", file=sys.stderr)
            return 2
    report = run_experiment(cfg)
    text = emit_report(report, path, fmt)
    if not path:
        sys.stdout.write(text)
    n_fail = len(report.failed)
    print(f"{report.scenario}: {len(report.rows)} rows, {len(report.asserted)} asserted, {n_fail} failed",
          file=sys.stderr)
    return 1 if n_fail else 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = _common()
    p = argparse.ArgumentParser(prog="pbmo", description="Dyadic product BMO toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    h = sub.add_parser("haar", parents=[common], help="Haar analysis or synthesis of a PBMO1 file")
    h.add_argument("direction", choices=["fwd", "inv"])
    h.add_argument("file")
    h.add_argument("--binary", action="store_true", help="write the binary PBMO1 variant")
    h.set_defaults(func=cmd_haar)

    n = sub.add_parser("norm", parents=[common], help="evaluate a norm")
    n.add_argument("which", choices=["bmo", "BMO", "BMO_m", "LMO", "stegenga", "slice"])
    n.add_argument("file")
    n.add_argument("--mode", choices=["auto", "exact", "heuristic"], default="auto")
    n.add_argument("--lmo-mode", choices=["tail", "carleson"], default="tail")
    n.add_argument("--alpha", action="append", help="grid translation (repeatable; comma-separated per axis)")
    n.add_argument("--split", help="N1,N2 for the slice functional")
    n.set_defaults(func=cmd_norm)

    o = sub.add_parser("op", parents=[common], help="apply an operator or estimate its L2 norm")
    o.add_argument("action", choices=["apply", "matrix-norm"])
    o.add_argument("operator", help="PI, DELTA, PI_BETA, T1..T4, M, or eps:delta:beta")
    o.add_argument("phi")
    o.add_argument("f", nargs="?")
    o.add_argument("--split", help="axis group sizes for T2/T3/T4")
    o.add_argument("--beta", help="beta vector for PI_BETA")
    o.add_argument("--tol", type=float, default=1e-10)
    o.add_argument("--export", help="write the matrix in PBMOMAT format")
    o.set_defaults(func=cmd_op)

    d = sub.add_parser("decompose-check", parents=[common], help="check the product expansion")
    d.add_argument("phi")
    d.add_argument("f")
    d.set_defaults(func=cmd_decompose)

    pr = sub.add_parser("probe", parents=[common], help="run one of the probe scenarios")
    pr.add_argument("probe", choices=sorted(PROBES))
    pr.add_argument("--seeds", type=int, help="number of seeds starting at --seed")
    pr.add_argument("--resolutions", help="comma-separated sweep values")
    pr.set_defaults(func=cmd_probe)

    e = sub.add_parser("experiment", parents=[common], help="run a configured experiment")
    e.add_argument("action", choices=["run"])
    e.add_argument("config")
    e.add_argument("--workers", type=int)
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.exact_cap is None:
        return args.func(args)
    # scoped so in-process callers do not inherit the override
    saved = os.environ.get("PBMO_EXACT_CAP")
    os.environ["PBMO_EXACT_CAP"] = str(args.exact_cap)
    try:
        return args.func(args)
    finally:
        if saved is None:
            del os.environ["PBMO_EXACT_CAP"]
        else:
            os.environ["PBMO_EXACT_CAP"] = saved


if __name__ == "__main__":
    sys.exit(main())
