"""Command-line front end.

Subcommands: gen-lattice, gen-function, analyze, decompose-bmo, maximal-dual,
duality, verify, fuzz, sharpness.  All outputs are canonical JSON (sorted
keys, 17-significant-digit floats) or CSV, so identical flags and inputs
yield byte-identical files.

Exit status: 0 when every check passes (numerically-flagged blips within 10x
tolerance do not fail the run), 1 on a logical inequality violation, 2 on
unreadable or invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from . import harness, operators, serialize
from .decompositions import bmo_decompose, duality_witness, maximal_dual
from .functions import CoefSequence, StepFunction
from .lattice import Lattice, LatticeError, dyadic_lattice, random_lattice

__all__ = ["main"]


class _InputError(Exception):
    """Wraps anything that should exit with status 2."""


def _load_lattice(path: str) -> Lattice:
    return serialize.lattice_from_doc(serialize.load_json(path))


def _load_function(path: str, lattice: Lattice | None) -> StepFunction:
    return serialize.function_from_doc(serialize.load_json(path), lattice)


def _emit(args, doc, text: str | None = None) -> None:
    payload = text if text is not None else serialize.dumps_canonical(doc)
    if args.out:
        serialize.write_text(args.out, payload)
    else:
        sys.stdout.write(payload)


def _checks_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["instance", "name", "lhs", "rhs", "constant", "margin", "pass", "flag"]
    )
    for instance, check in rows:
        writer.writerow(
            [
                instance,
                check["name"],
                format(check["lhs"], ".17g"),
                format(check["rhs"], ".17g"),
                "" if check["constant"] is None else format(check["constant"], ".17g"),
                format(check["margin"], ".17g"),
                str(check["pass"]).lower(),
                check["flag"],
            ]
        )
    return buf.getvalue()


# -- subcommands -----------------------------------------------------------------

def _cmd_gen_lattice(args) -> int:
    if args.dyadic:
        lat = dyadic_lattice(args.depth)
    else:
        if args.seed is None:
            raise _InputError("gen-lattice needs --dyadic or --seed")
        lat = random_lattice(args.seed, args.depth, args.children, args.roots)
    _emit(args, serialize.lattice_to_doc(lat))
    return 0


def _cmd_gen_function(args) -> int:
    lat = _load_lattice(args.lattice)
    f = harness.random_function(lat, args.seed, args.dist)
    _emit(args, serialize.function_to_doc(f))
    return 0


def _cmd_analyze(args) -> int:
    lat = _load_lattice(args.lattice) if args.lattice else None
    f = _load_function(args.function, lat)
    mf, _ = operators.maximal(f)
    sf = operators.square(f)
    nb = operators.bmo_norm(f)
    doc = {
        "integral_maximal": operators.integral(mf),
        "integral_square": operators.integral(sf),
        "bmo": {"c1": nb.c1, "c2": nb.c2, "value": nb.value},
        "maximal_leaf_values": [float(v) for v in mf.values],
        "square_leaf_values": [float(v) for v in sf.values],
    }
    _emit(args, doc)
    return 0


def _cmd_decompose_bmo(args) -> int:
    lat = _load_lattice(args.lattice) if args.lattice else None
    g = _load_function(args.function, lat)
    _emit(args, serialize.bmo_decomposition_to_doc(bmo_decompose(g)))
    return 0


def _cmd_maximal_dual(args) -> int:
    lat = _load_lattice(args.lattice) if args.lattice else None
    f = _load_function(args.function, lat)
    md = maximal_dual(f)
    doc = serialize.maximal_dual_to_doc(md)
    doc["certificates"]["integral_maximal"] = operators.integral(
        operators.maximal(f)[0]
    )
    _emit(args, doc)
    return 0


def _cmd_duality(args) -> int:
    lat = _load_lattice(args.lattice) if args.lattice else None
    f = _load_function(args.function, lat)
    w = duality_witness(f)
    doc = {
        "witness": {"leaf_values": [float(v) for v in w.values]},
        "certificates": {
            "integral_square": operators.integral(operators.square(f)),
            "pairing": float(
                (f.values * f.lattice._leaf_len_f * w.values).sum()
            ),
            "max_diff_sup": operators.bmo_norm(w).c2,
        },
    }
    _emit(args, doc)
    return 0


def _cmd_verify(args) -> int:
    lat = _load_lattice(args.lattice) if args.lattice else None
    f = _load_function(args.function, lat)
    lat = f.lattice
    g = _load_function(args.g, lat) if args.g else duality_witness(f)
    if args.coeffs:
        a = serialize.coefs_from_doc(serialize.load_json(args.coeffs), lat)
    else:
        a = maximal_dual(f).coeffs
    descriptor = {
        "function": args.function,
        "g": args.g or "duality_witness(f)",
        "coeffs": args.coeffs or "maximal_dual(f)",
    }
    report = harness.check_instance(lat, f, g, a, tol=args.tol, descriptor=descriptor)
    doc = report.to_doc()
    if args.format == "csv":
        _emit(args, None, _checks_csv([("0", c) for c in doc["checks"]]))
    else:
        _emit(args, doc)
    return 1 if any(c["flag"] == "logical" for c in doc["checks"]) else 0


def _cmd_fuzz(args) -> int:
    config = harness.FuzzConfig(
        seed=args.seed,
        trials=args.trials,
        max_depth=args.depth,
        max_children=args.children,
        max_roots=args.roots,
        dist=args.dist,
        tol=args.tol,
    )
    csv_rows: list[tuple[str, dict]] = []
    on_report = None
    if args.format == "csv":
        def on_report(trial, report):
            for c in report.checks:
                csv_rows.append((str(trial), c.to_doc()))
    result = harness.fuzz(config, on_report=on_report)
    if args.format == "csv":
        _emit(args, None, _checks_csv(csv_rows))
    else:
        _emit(args, result.to_doc())
    if args.artifacts_dir and result.failures:
        os.makedirs(args.artifacts_dir, exist_ok=True)
        for art in result.failures:
            path = os.path.join(
                args.artifacts_dir, f"failure-{art['trial']:06d}.json"
            )
            serialize.write_text(path, serialize.dumps_canonical(art))
    return 1 if result.logical_failures else 0


def _cmd_sharpness(args) -> int:
    lat = _load_lattice(args.lattice) if args.lattice else dyadic_lattice(2)
    start = None
    if args.function:
        start = _load_function(args.function, lat)
    result = harness.sharpness_search(
        args.objective, args.budget, args.seed, lattice=lat, start=start
    )
    _emit(args, result.to_doc())
    return 0


# -- argument wiring -----------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="martlat",
        description="Martingale analysis on finite interval lattices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, lattice=True, function=False):
        if lattice:
            p.add_argument("--lattice", metavar="PATH", help="lattice JSON file")
        if function:
            p.add_argument(
                "--function", metavar="PATH", required=True,
                help="step-function JSON file",
            )
        p.add_argument("--out", metavar="PATH", help="output file (default stdout)")

    p = sub.add_parser("gen-lattice", help="emit a lattice JSON file")
    p.add_argument("--dyadic", action="store_true", help="dyadic tower over [0, 1)")
    p.add_argument("--depth", type=int, default=2,
                   help="depth (dyadic) or max depth (random)")
    p.add_argument("--seed", type=int, help="seed for a random lattice")
    p.add_argument("--children", type=int, default=4, help="max children per split")
    p.add_argument("--roots", type=int, default=3, help="max root count")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=_cmd_gen_lattice)

    p = sub.add_parser("gen-function", help="emit a random step function")
    p.add_argument("--lattice", metavar="PATH", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--dist", choices=harness.DISTRIBUTIONS, default="uniform")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=_cmd_gen_function)

    p = sub.add_parser("analyze", help="maximal/square integrals and BMO norm")
    add_common(p, function=True)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser(
        "decompose-bmo", help="bounded part + balayage decomposition"
    )
    add_common(p, function=True)
    p.set_defaults(func=_cmd_decompose_bmo)

    p = sub.add_parser("maximal-dual", help="dual sequence of the maximal function")
    add_common(p, function=True)
    p.set_defaults(func=_cmd_maximal_dual)

    p = sub.add_parser("duality", help="square-function duality witness")
    add_common(p, function=True)
    p.set_defaults(func=_cmd_duality)

    p = sub.add_parser("verify", help="run every check on one instance")
    add_common(p, function=True)
    p.add_argument("--g", metavar="PATH", help="BMO-side function (default: witness)")
    p.add_argument("--coeffs", metavar="PATH",
                   help="coefficient sequence (default: maximal dual)")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("fuzz", help="randomized verification over many instances")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--children", type=int, default=4)
    p.add_argument("--roots", type=int, default=3)
    p.add_argument("--dist", choices=harness.DISTRIBUTIONS + ("mixed",),
                   default="mixed")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--artifacts-dir", metavar="DIR",
                   help="where to write failure artifacts")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=_cmd_fuzz)

    p = sub.add_parser("sharpness", help="hill-climb a ratio on a fixed lattice")
    p.add_argument("--objective", required=True, metavar="TAG",
                   help="one of: " + ", ".join(harness.OBJECTIVES))
    p.add_argument("--budget", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--lattice", metavar="PATH")
    p.add_argument("--function", metavar="PATH", help="start instance")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=_cmd_sharpness)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        _InputError,
        LatticeError,
        serialize.FormatError,
        harness.UnknownDistributionError,
        harness.UnknownObjectiveError,
        harness.LatticeMismatchError,
        OSError,
        json.JSONDecodeError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
