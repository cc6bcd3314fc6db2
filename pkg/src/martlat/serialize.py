"""JSON wire formats and a canonical writer.

Formats:

* lattice:       ``{"generations": [["0", "1/2", "1"], ...]}`` — breakpoint
  strings, each an integer or "p/q"; parsed and emitted bit-exactly.
* step function: ``{"lattice": <lattice doc or file path>, "leaf_values":
  [...]}`` with values in leaf order.
* coefficients:  ``{"entries": [{"interval": [left, right, generation],
  "value": v}, ...]}`` keyed by span plus a generation containing it.

Floats are written with 17 significant digits (lossless for IEEE doubles);
object keys are sorted; output carries no locale- or insertion-order
dependence, so fixed inputs produce byte-identical documents.  Rationals are
strings to keep the lattice geometry exact across round trips.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Any

from .decompositions import BmoDecomposition, MaximalDual
from .functions import CoefSequence, StepFunction
from .lattice import Interval, Lattice, as_fraction, build_lattice

__all__ = [
    "FormatError",
    "dumps_canonical",
    "rational_str",
    "parse_rational",
    "lattice_to_doc",
    "lattice_from_doc",
    "function_to_doc",
    "function_from_doc",
    "coefs_to_doc",
    "coefs_from_doc",
    "maximal_dual_to_doc",
    "bmo_decomposition_to_doc",
    "load_json",
    "write_text",
]


class FormatError(ValueError):
    """A document does not match its wire format."""


# -- canonical text ------------------------------------------------------------

def _render(obj: Any, out: list[str]) -> None:
    if obj is None or isinstance(obj, bool):
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"cannot serialize non-finite float {obj!r}")
        out.append("0" if obj == 0.0 else format(obj, ".17g"))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=True))
    elif isinstance(obj, Fraction):
        out.append(json.dumps(str(obj)))
    elif isinstance(obj, dict):
        out.append("{")
        for n, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"object keys must be strings, got {key!r}")
            if n:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=True))
            out.append(":")
            _render(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for n, item in enumerate(obj):
            if n:
                out.append(",")
            _render(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_canonical(obj: Any) -> str:
    """Deterministic JSON text: sorted keys, 17-significant-digit floats."""
    out: list[str] = []
    _render(obj, out)
    out.append("\n")
    return "".join(out)


def rational_str(x: Fraction) -> str:
    return str(x)


def parse_rational(s) -> Fraction:
    try:
        return as_fraction(s)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad rational {s!r}: {exc}") from exc


# -- lattice --------------------------------------------------------------------

def lattice_to_doc(lattice: Lattice) -> dict:
    return {
        "generations": [
            [rational_str(b) for b in lattice.generation_breakpoints(k)]
            for k in range(lattice.depth + 1)
        ]
    }


def lattice_from_doc(doc: Any) -> Lattice:
    if not isinstance(doc, dict) or "generations" not in doc:
        raise FormatError("lattice document needs a 'generations' field")
    gens = doc["generations"]
    if not isinstance(gens, list):
        raise FormatError("'generations' must be a list of breakpoint lists")
    return build_lattice([[parse_rational(b) for b in g] for g in gens])


# -- step functions ---------------------------------------------------------------

def function_to_doc(f: StepFunction, lattice_ref: str | None = None) -> dict:
    """``lattice_ref`` embeds a file path instead of the inline lattice."""
    lattice: Any = lattice_ref if lattice_ref else lattice_to_doc(f.lattice)
    return {"lattice": lattice, "leaf_values": [float(v) for v in f.values]}


def function_from_doc(doc: Any, lattice: Lattice | None = None) -> StepFunction:
    """Parse a step function; resolves an inline lattice, a file-path lattice
    reference, or the explicitly supplied `lattice`."""
    if not isinstance(doc, dict) or "leaf_values" not in doc:
        raise FormatError("function document needs a 'leaf_values' field")
    ref = doc.get("lattice")
    if lattice is None:
        if isinstance(ref, str):
            lattice = lattice_from_doc(load_json(ref))
        elif ref is not None:
            lattice = lattice_from_doc(ref)
        else:
            raise FormatError("function document has no lattice and none was supplied")
    values = doc["leaf_values"]
    if not isinstance(values, list):
        raise FormatError("'leaf_values' must be a list of numbers")
    try:
        return StepFunction(lattice, values)
    except ValueError as exc:
        raise FormatError(f"bad 'leaf_values': {exc}") from exc


# -- coefficient sequences ---------------------------------------------------------

def coefs_to_doc(a: CoefSequence) -> dict:
    entries = []
    for i, v in a.items():
        iv = a.lattice.intervals[i]
        entries.append(
            {
                "interval": [rational_str(iv.left), rational_str(iv.right), iv.birth],
                "value": float(v),
            }
        )
    return {"entries": entries}


def coefs_from_doc(doc: Any, lattice: Lattice) -> CoefSequence:
    if not isinstance(doc, dict) or "entries" not in doc:
        raise FormatError("coefficient document needs an 'entries' field")
    data: dict[int, float] = {}
    for n, entry in enumerate(doc["entries"]):
        try:
            left, right, gen = entry["interval"]
            value = float(entry["value"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"entries[{n}] is malformed: {exc}") from exc
        iv = lattice.find(parse_rational(left), parse_rational(right))
        if iv is None:
            raise FormatError(
                f"entries[{n}]: no lattice interval [{left}, {right})"
            )
        if not iv.birth <= int(gen) <= iv.rank:
            raise FormatError(
                f"entries[{n}]: interval [{left}, {right}) is not in "
                f"generation {gen}"
            )
        data[iv.index] = data.get(iv.index, 0.0) + value
    return CoefSequence(lattice, data)


# -- decomposition artifacts --------------------------------------------------------

def _interval_ref(iv: Interval) -> list:
    return [rational_str(iv.left), rational_str(iv.right), iv.birth]


def maximal_dual_to_doc(md: MaximalDual) -> dict:
    from .operators import carleson_constant, integral

    carl, _ = carleson_constant(md.coeffs)
    return {
        "coeffs": coefs_to_doc(md.coeffs),
        "pairing": md.pairing,
        "leaf_assignments": [
            None if iv is None else _interval_ref(iv) for iv in md.leaf_assignments
        ],
        "certificates": {"carleson": carl},
    }


def bmo_decomposition_to_doc(d: BmoDecomposition) -> dict:
    from .operators import carleson_constant

    carl, _ = carleson_constant(d.coeffs)
    phi_sup = float(max(abs(v) for v in d.phi.values)) if len(d.phi.values) else 0.0
    return {
        "root_means": list(d.root_means),
        "phi": {"leaf_values": [float(v) for v in d.phi.values]},
        "coeffs": coefs_to_doc(d.coeffs),
        "stages": [[_interval_ref(iv) for iv in stage] for stage in d.stages],
        "certificates": {
            "bmo": d.bmo_value,
            "height": d.height,
            "phi_sup": phi_sup,
            "carleson": carl,
        },
    }


# -- file helpers ---------------------------------------------------------------------

def load_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
