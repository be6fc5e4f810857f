"""JSON documents for matrices, subspaces, patterns, lattices and CSL pairs.

Indices in patterns and lattices are 1-based in documents and 0-based in
memory.  :func:`dumps` writes a canonical form (sorted keys, floats with 17
significant digits) so documents round-trip bit-exactly.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .masa import DiagonalLattice, SupportPattern
from .numkernel import OperatorSubspace, Tolerance, hs_orthonormalize

__all__ = [
    "SchemaError",
    "KINDS",
    "dumps",
    "loads",
    "load",
    "matrix_to_doc",
    "matrix_from_doc",
    "subspace_to_doc",
    "subspace_generators",
    "subspace_from_doc",
    "pattern_to_doc",
    "pattern_from_doc",
    "lattice_to_doc",
    "lattice_from_doc",
    "csl_pair_to_doc",
    "csl_pair_from_doc",
    "tolerance_from_doc",
]

KINDS = ("matrix", "subspace", "pattern", "lattice", "csl_pair")


class SchemaError(ValueError):
    pass


def _encode(v) -> str:
    if isinstance(v, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_encode(v[k])}" for k in sorted(v)) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_encode(x) for x in v) + "]"
    if isinstance(v, (bool, np.bool_)) or v is None:
        return json.dumps(bool(v) if v is not None else None)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if not math.isfinite(x):
            raise SchemaError("non-finite float")
        s = format(x, ".17g")
        return s if any(c in s for c in ".en") else s + ".0"
    if isinstance(v, str):
        return json.dumps(v)
    raise SchemaError(f"cannot serialise {type(v).__name__}")


def dumps(doc) -> str:
    """Canonical JSON text of ``doc``."""
    return _encode(doc)


def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc


def load(path: str):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def _require(doc, keys, kind):
    if not isinstance(doc, dict):
        raise SchemaError(f"{kind} document must be an object")
    missing = [k for k in keys if k not in doc]
    if missing:
        raise SchemaError(f"{kind} document lacks {missing}")
    if "kind" in doc and doc["kind"] != kind:
        raise SchemaError(f"expected kind {kind!r}, got {doc['kind']!r}")


def _posint(v, name):
    if not isinstance(v, int) or isinstance(v, bool) or v < 0:
        raise SchemaError(f"{name} must be a nonnegative integer")
    return v


def matrix_to_doc(a, *, kind: bool = True) -> dict:
    a = np.asarray(a, dtype=complex)
    doc = {"rows": a.shape[0], "cols": a.shape[1],
           "entries": [[float(z.real), float(z.imag)] for z in a.ravel()]}
    if kind:
        doc["kind"] = "matrix"
    return doc


def matrix_from_doc(doc) -> np.ndarray:
    _require(doc, ("rows", "cols", "entries"), "matrix")
    r, c = _posint(doc["rows"], "rows"), _posint(doc["cols"], "cols")
    ent = doc["entries"]
    if not isinstance(ent, list) or len(ent) != r * c:
        raise SchemaError(f"matrix needs {r * c} entries")
    vals = []
    for e in ent:
        if (not isinstance(e, list) or len(e) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in e)):
            raise SchemaError("entries must be [re, im] pairs of numbers")
        if not all(math.isfinite(x) for x in e):
            raise SchemaError("entries must be finite")
        vals.append(complex(e[0], e[1]))
    return np.array(vals, dtype=complex).reshape(r, c)


def subspace_to_doc(u, *, shape=None) -> dict:
    """``u`` is an :class:`OperatorSubspace` or a list of generators (with ``shape``)."""
    if isinstance(u, OperatorSubspace):
        gens, (n, m) = list(u.basis), u.shape
    else:
        gens = [np.asarray(g) for g in u]
        n, m = shape if shape is not None else gens[0].shape
    return {"kind": "subspace", "m": m, "n": n,
            "generators": [matrix_to_doc(g, kind=False) for g in gens]}


def subspace_generators(doc) -> tuple[list[np.ndarray], tuple[int, int]]:
    _require(doc, ("m", "n", "generators"), "subspace")
    m, n = _posint(doc["m"], "m"), _posint(doc["n"], "n")
    gens = [matrix_from_doc(g) for g in doc["generators"]]
    for g in gens:
        if g.shape != (n, m):
            raise SchemaError(f"generator of shape {g.shape} in a {n}x{m} subspace")
    return gens, (n, m)


def subspace_from_doc(doc, tol: Tolerance | None = None) -> OperatorSubspace:
    gens, shape = subspace_generators(doc)
    return hs_orthonormalize(gens, tol, shape=shape)


def pattern_to_doc(kappa: SupportPattern) -> dict:
    return {"kind": "pattern", "m": kappa.m, "n": kappa.n,
            "pairs": [[x + 1, y + 1] for x, y in kappa.sorted_pairs()]}


def pattern_from_doc(doc) -> SupportPattern:
    _require(doc, ("m", "n", "pairs"), "pattern")
    m, n = _posint(doc["m"], "m"), _posint(doc["n"], "n")
    pairs = []
    for p in doc["pairs"]:
        if not isinstance(p, list) or len(p) != 2 or not all(isinstance(v, int) for v in p):
            raise SchemaError("pairs must be [x, y] integer pairs")
        x, y = p
        if not (1 <= x <= m and 1 <= y <= n):
            raise SchemaError(f"pair {p} out of range for a {m}x{n} pattern")
        pairs.append((x - 1, y - 1))
    return SupportPattern(m, n, frozenset(pairs))


def lattice_to_doc(lat: DiagonalLattice) -> dict:
    return {"kind": "lattice", "dim": lat.dim,
            "members": [[i + 1 for i in sorted(s)] for s in lat.sorted_members()]}


def lattice_from_doc(doc) -> DiagonalLattice:
    _require(doc, ("dim", "members"), "lattice")
    d = _posint(doc["dim"], "dim")
    members = []
    for s in doc["members"]:
        if not isinstance(s, list) or not all(isinstance(i, int) and 1 <= i <= d for i in s):
            raise SchemaError(f"member {s} must list indices in 1..{d}")
        members.append(frozenset(i - 1 for i in s))
    return DiagonalLattice(d, frozenset(members))


def csl_pair_to_doc(lat_a: DiagonalLattice, lat_b: DiagonalLattice) -> dict:
    a = lattice_to_doc(lat_a)
    b = lattice_to_doc(lat_b)
    a.pop("kind")
    b.pop("kind")
    return {"kind": "csl_pair", "A": a, "B": b}


def csl_pair_from_doc(doc) -> tuple[DiagonalLattice, DiagonalLattice]:
    _require(doc, ("A", "B"), "csl_pair")
    return lattice_from_doc(doc["A"]), lattice_from_doc(doc["B"])


def tolerance_from_doc(doc, base: Tolerance | None = None) -> Tolerance:
    """Apply an optional ``tol`` object of overrides from an instance document."""
    base = base or Tolerance()
    over = doc.get("tol") if isinstance(doc, dict) else None
    if not over:
        return base
    if not isinstance(over, dict) or not set(over) <= {"rank_tol", "eq_tol", "gap_tol"}:
        raise SchemaError("tol must be an object with rank_tol, eq_tol or gap_tol")
    try:
        return base.with_(**{k: float(v) for k, v in over.items()})
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
