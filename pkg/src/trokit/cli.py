"""``trokit`` command line: JSON in, JSON out.

Exit status is 0 for a computed answer (including negative verdicts), 1 when
a verification suite records failures, and 2 for malformed input, size-cap
violations and other usage errors.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import generate as gen
from .io import (
    SchemaError,
    csl_pair_from_doc,
    csl_pair_to_doc,
    dumps,
    lattice_to_doc,
    loads,
    matrix_from_doc,
    matrix_to_doc,
    pattern_from_doc,
    pattern_to_doc,
    subspace_generators,
    subspace_to_doc,
    tolerance_from_doc,
)
from .maps import map_of
from .masa import DiagonalLattice, PatternError, diagonal_projection, is_normalizing_pattern
from .normalizers import (
    NotSemiNormalizerError,
    alg_of_lattice,
    n_check,
    n_cover,
    sn_check,
    sn_cover,
    sum_check,
)
from .numkernel import DEFAULT_TOL, DimensionMismatch, Tolerance, hs_orthonormalize
from .suites import SUITES, run_suite
from .tro import block_decompose, is_normalizing, triple_closure


class UsageError(Exception):
    pass


def max_dim() -> int:
    raw = os.environ.get("TROKIT_MAX_DIM", "16")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"TROKIT_MAX_DIM must be an integer, got {raw!r}") from None


def _cap(*sizes):
    cap = max_dim()
    if any(s > cap for s in sizes):
        raise UsageError(f"size {max(sizes)} exceeds the cap {cap} (set TROKIT_MAX_DIM to raise it)")


def _read(path):
    if path == "-":
        return loads(sys.stdin.read())
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _tolerance(args, *docs) -> Tolerance:
    tol = DEFAULT_TOL if args.tol is None else DEFAULT_TOL.with_(eq_tol=args.tol)
    for d in docs:
        tol = tolerance_from_doc(d, tol)
    return tol


def _subspace(doc, tol):
    gens, (n, m) = subspace_generators(doc)
    _cap(n, m)
    return hs_orthonormalize(gens, tol, shape=(n, m))


def _pair(doc):
    la, lb = csl_pair_from_doc(doc)
    _cap(la.dim, lb.dim)
    if not la.is_lattice() or not lb.is_lattice():
        raise UsageError("A and B must be lattices (closed under union and intersection, with 0 and I)")
    return alg_of_lattice(lb), alg_of_lattice(la)


def _witness_docs(witnesses):
    return [{"side": w.side, "index": w.index, "residual": w.residual} for w in witnesses]


def cmd_closure(args):
    doc = _read(args.input)
    tol = _tolerance(args, doc)
    gens, (n, m) = subspace_generators(doc)
    _cap(n, m)
    u = triple_closure(gens, tol, shape=(n, m))
    out = subspace_to_doc(u)
    out.update(dim=u.dim, is_normalizing=is_normalizing(u, tol))
    return out


def cmd_map(args):
    doc = _read(args.input)
    tol = _tolerance(args, doc)
    u = _subspace(doc, tol)
    if args.projection is not None:
        p = matrix_from_doc(_read(args.projection))
    else:
        idx = [int(i) - 1 for i in args.indices.split(",") if i.strip()] if args.indices else []
        if any(not 0 <= i < u.m for i in idx):
            raise UsageError(f"indices must lie in 1..{u.m}")
        p = diagonal_projection(idx, u.m)
    try:
        image = map_of(u, p, tol)
    except DimensionMismatch as exc:
        raise SchemaError(str(exc)) from exc
    out = matrix_to_doc(image)
    out["rank"] = int(round(float(np.real(np.trace(image)))))
    return out


def cmd_pattern_check(args):
    doc = _read(args.input)
    kappa = pattern_from_doc(doc)
    _cap(kappa.m, kappa.n)
    ok, res = is_normalizing_pattern(kappa)
    out = {"kind": "report", "pattern": pattern_to_doc(kappa), "normalizing": ok}
    if ok:
        out["f"] = list(res.f)
        out["g"] = list(res.g)
    else:
        out["witness"] = [res[0] + 1, res[1] + 1]
    return out


def cmd_decompose(args):
    doc = _read(args.input)
    tol = _tolerance(args, doc)
    u = _subspace(doc, tol)
    try:
        dec = block_decompose(u, tol)
    except PatternError as exc:
        x, y = exc.witness
        raise UsageError(f"{str(exc).split(';')[0]} (witness pair x={x + 1}, y={y + 1})") from exc
    return {"kind": "report", "m": dec.m, "n": dec.n,
            "blocks": [{"columns": [x + 1 for x in c], "rows": [y + 1 for y in r]}
                       for c, r in zip(dec.columns, dec.rows)]}


def _operator(path, b, a):
    t = matrix_from_doc(_read(path))
    if t.shape != (b.dim, a.dim):
        raise SchemaError(f"operator of shape {t.shape}; the pair needs ({b.dim}, {a.dim})")
    return t


def _normalizer_report(args, with_cover):
    pair_doc = _read(args.pair)
    tol = _tolerance(args, pair_doc)
    b, a = _pair(pair_doc)
    t = _operator(args.matrix, b, a)
    if with_cover:
        rep = (sn_cover if args.mode == "sn" else n_cover)(t, b, a, tol)
    else:
        rep = (sn_check if args.mode == "sn" else n_check)(t, b, a, tol)
    out = {"kind": "report", "mode": args.mode, "verdict": bool(rep.verdict),
           "witnesses": _witness_docs(rep.witnesses)}
    if rep.cover is not None:
        u = rep.cover[1]
        out["cover"] = subspace_to_doc(u)
        out["cover_dim"] = u.dim
        out["contains"] = bool(rep.details["contains"])
        out["failing_basis"] = list(rep.details["failing_basis"])
    return out


def cmd_sn(args):
    return _normalizer_report(args, args.cover)


def cmd_cover(args):
    return _normalizer_report(args, True)


def cmd_sum(args):
    pair_doc = _read(args.pair)
    tol = _tolerance(args, pair_doc)
    b, a = _pair(pair_doc)
    t = _operator(args.t, b, a)
    s = _operator(args.s, b, a)
    rep = sum_check(t, s, b, a, args.mode, seed=args.seed, tol=tol)
    out = {"kind": "report", "mode": args.mode, "verdict": bool(rep.verdict),
           "witnesses": _witness_docs(rep.witnesses)}
    if rep.cover is not None:
        out.update(lam=rep.lam, cover=subspace_to_doc(rep.cover), cover_dim=rep.cover.dim,
                   pattern_ok=bool(rep.pattern_ok), members_ok=bool(rep.members_ok),
                   corollary_samples=rep.corollary_samples,
                   corollary_failures=rep.corollary_failures)
    return out


def cmd_gen(args):
    kind, seed = args.kind, args.seed
    if kind == "tro":
        _cap(args.m, args.n)
        gens = gen.random_generators(args.m, args.n, args.k, seed)
        u = triple_closure(gens, shape=(args.n, args.m))
        out = subspace_to_doc(u)
        out.update(dim=u.dim, is_normalizing=is_normalizing(u), source_generators=args.k)
    elif kind == "pattern":
        _cap(args.m, args.n)
        out = pattern_to_doc(gen.random_normalizing_pattern(args.m, args.n, seed))
    elif kind == "lattice":
        _cap(args.dim)
        if args.lattice_kind == "nest" and not args.shuffle:
            out = lattice_to_doc(DiagonalLattice.nest(args.dim))
        else:
            out = lattice_to_doc(gen.random_lattice(args.dim, seed, args.lattice_kind))
    elif kind == "csl_pair":
        _cap(args.dim)
        la, lb = gen.random_csl_pair(seed, max_dim=args.dim)
        out = csl_pair_to_doc(la, lb)
    else:
        _cap(args.m, args.n)
        out = matrix_to_doc(gen.random_generators(args.m, args.n, 1, seed)[0])
    out["seed"] = seed
    return out


def cmd_verify(args):
    name = args.suite_name or args.suite
    if name is None:
        raise UsageError("name a suite")
    if name != "all" and name not in SUITES:
        raise UsageError(f"unknown suite {name!r}; choose from {', '.join(sorted(SUITES))}, all")
    overrides = {}
    if args.instances is not None:
        overrides["instances"] = args.instances
    if args.no_budget:
        overrides["budget"] = None
    tol = DEFAULT_TOL if args.tol is None else DEFAULT_TOL.with_(eq_tol=args.tol)
    rep = run_suite(name, args.seed, tol, **overrides)
    print(rep.summary(), file=sys.stderr)
    for part in rep.parts:
        print("  " + part.summary(), file=sys.stderr)
    return rep.to_doc(timing=not args.no_timing), (0 if rep.ok else 1)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--tol", type=float, default=None, help="equality tolerance override")
    common.add_argument("--out", default=None, help="write the output document here instead of stdout")

    parser = argparse.ArgumentParser(prog="trokit", description="Normalizing spaces and semi-normalizers of CSL algebras.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("closure", parents=[common], help="triple closure of a subspace document")
    p.add_argument("input", help="subspace document ('-' for stdin)")
    p.set_defaults(func=cmd_closure)

    p = sub.add_parser("map", parents=[common], help="Map U applied to a projection")
    p.add_argument("input", help="subspace document")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--projection", help="matrix document of the projection")
    g.add_argument("--indices", help="comma-separated 1-based indices of a diagonal projection")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("pattern-check", parents=[common], help="normalizing test for a support pattern")
    p.add_argument("input", help="pattern document")
    p.set_defaults(func=cmd_pattern_check)

    p = sub.add_parser("decompose", parents=[common], help="block decomposition of a diagonal bimodule")
    p.add_argument("input", help="subspace document")
    p.set_defaults(func=cmd_decompose)

    for name, helptext in (("sn", "semi-normalizer / normalizer test"), ("cover", "certified cover of a semi-normalizer")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("pair", help="csl_pair document")
        p.add_argument("matrix", help="matrix document of T (n x m with n = dim B, m = dim A)")
        p.add_argument("--mode", choices=("sn", "n"), default="sn")
        if name == "sn":
            p.add_argument("--cover", action="store_true", help="also compute the cover")
            p.set_defaults(func=cmd_sn)
        else:
            p.set_defaults(func=cmd_cover)

    p = sub.add_parser("sum", parents=[common], help="analyse the sum of two semi-normalizers")
    p.add_argument("pair")
    p.add_argument("t")
    p.add_argument("s")
    p.add_argument("--mode", choices=("sn", "n"), default="sn")
    p.set_defaults(func=cmd_sum)

    p = sub.add_parser("gen", parents=[common], help="seeded random instance")
    p.add_argument("kind", choices=("tro", "pattern", "lattice", "csl_pair", "matrix"))
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--k", type=int, default=2, help="number of generators (tro)")
    p.add_argument("--dim", type=int, default=3, help="lattice dimension (lattice, csl_pair)")
    p.add_argument("--lattice-kind", choices=("nest", "boolean", "csl"), default="nest")
    p.add_argument("--shuffle", action="store_true", help="randomly reorder a nest")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("suite_name", nargs="?", help="suite name (or use --suite)")
    p.add_argument("--suite", default=None)
    p.add_argument("--instances", type=int, default=None, help="override the instance count")
    p.add_argument("--no-budget", action="store_true", help="ignore runtime budgets")
    p.add_argument("--no-timing", action="store_true", help="omit wall times from the report")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = args.func(args)
    except (SchemaError, UsageError, DimensionMismatch, PatternError, NotSemiNormalizerError) as exc:
        print(f"trokit: error: {exc}", file=sys.stderr)
        return 2
    status = 0
    if isinstance(result, tuple):
        result, status = result
    text = dumps(result) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
