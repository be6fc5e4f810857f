"""Bimodules over the diagonal masas: support patterns and their calculus.

Both masas are the diagonal algebras in the standard bases, so their atoms
are coordinate singletons.  A bimodule over them is determined by its support
pattern, a relation ``kappa`` of pairs ``(x, y)`` with ``x`` an input
coordinate (column) and ``y`` an output coordinate (row); indices are
0-based throughout the library (the JSON documents are 1-based).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .numkernel import (
    DEFAULT_TOL,
    OperatorSubspace,
    Tolerance,
    as_matrix,
    op_norm,
)

__all__ = [
    "PatternError",
    "SupportPattern",
    "LabelPair",
    "DiagonalLattice",
    "diagonal_projection",
    "support_of",
    "pattern_of",
    "pattern_space",
    "pattern_components",
    "is_normalizing_pattern",
    "labels_of",
    "family_pattern",
    "graph_check",
    "nest_generators",
    "boolean_closure",
    "rank_one_sum",
    "diag_core",
    "left_semilattice",
    "right_semilattice",
]

GRAPH = "graph"
REVERSE_GRAPH = "reverse_graph"
NEITHER = "neither"


class PatternError(ValueError):
    """A pattern (or lattice) violates a structural requirement.

    ``witness`` carries the offending pair, entry or component.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class SupportPattern:
    m: int
    n: int
    pairs: frozenset

    def __post_init__(self):
        pairs = frozenset((int(x), int(y)) for x, y in self.pairs)
        for x, y in pairs:
            if not (0 <= x < self.m and 0 <= y < self.n):
                raise PatternError(f"pair {(x, y)} outside [{self.m}] x [{self.n}]", (x, y))
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def full(cls, m, n):
        return cls(m, n, frozenset(itertools.product(range(m), range(n))))

    @classmethod
    def from_mask(cls, mask):
        """From a boolean ``(n, m)`` array indexed ``[y, x]``."""
        mask = np.asarray(mask, dtype=bool)
        ys, xs = np.nonzero(mask)
        return cls(mask.shape[1], mask.shape[0], frozenset(zip(xs.tolist(), ys.tolist())))

    def mask(self) -> np.ndarray:
        out = np.zeros((self.n, self.m), dtype=bool)
        for x, y in self.pairs:
            out[y, x] = True
        return out

    def __len__(self):
        return len(self.pairs)

    def __contains__(self, pair):
        return tuple(pair) in self.pairs

    def sorted_pairs(self) -> list[tuple[int, int]]:
        return sorted(self.pairs)


@dataclass(frozen=True)
class LabelPair:
    """Labels ``f`` on inputs and ``g`` on outputs; ``None`` is the off-support label."""

    f: tuple
    g: tuple

    def pattern(self) -> SupportPattern:
        return SupportPattern(len(self.f), len(self.g), frozenset(
            (x, y) for x, fx in enumerate(self.f) for y, gy in enumerate(self.g)
            if fx is not None and fx == gy))


def diagonal_projection(indices: Iterable[int], dim: int) -> np.ndarray:
    p = np.zeros((dim, dim), dtype=complex)
    for i in indices:
        p[i, i] = 1.0
    return p


def support_of(t, tol: Tolerance | None = None) -> SupportPattern:
    """Pattern of the entries of a single matrix above ``eq_tol``."""
    tol = tol or DEFAULT_TOL
    t = as_matrix(t)
    return SupportPattern.from_mask(np.abs(t) > tol.eq_tol)


def pattern_of(u: OperatorSubspace, tol: Tolerance | None = None) -> SupportPattern:
    """Pattern of the smallest pattern space containing ``u``."""
    tol = tol or DEFAULT_TOL
    if u.dim == 0:
        return SupportPattern(u.m, u.n, frozenset())
    return SupportPattern.from_mask(np.any(np.abs(u.basis) > tol.eq_tol, axis=0))


def pattern_space(kappa: SupportPattern) -> OperatorSubspace:
    """Span of the matrix units ``E_{y,x}`` for ``(x, y)`` in the pattern.

    The basis is the matrix units themselves, in row-major order.
    """
    n, m = kappa.n, kappa.m
    idx = sorted(y * m + x for x, y in kappa.pairs)
    return OperatorSubspace(np.eye(n * m, dtype=complex)[idx], (n, m))


def pattern_components(kappa: SupportPattern) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Connected components of the bipartite graph of the pattern.

    Returns ``(columns, rows)`` per component carrying at least one edge,
    ordered by smallest row index.  Isolated vertices are omitted.
    """
    m, n = kappa.m, kappa.n
    if not kappa.pairs:
        return []
    xs, ys = zip(*kappa.pairs)
    rows_ = np.array(xs)
    cols_ = np.array(ys) + m
    graph = coo_matrix((np.ones(len(xs)), (rows_, cols_)), shape=(m + n, m + n))
    _, labels = connected_components(graph, directed=False)
    comps = {}
    for x, y in kappa.pairs:
        cx, cy = comps.setdefault(labels[x], (set(), set()))
        cx.add(x)
        cy.add(y)
    out = [(tuple(sorted(cx)), tuple(sorted(cy))) for cx, cy in comps.values()]
    out.sort(key=lambda c: c[1][0])
    return out


def is_normalizing_pattern(kappa: SupportPattern):
    """Whether the pattern space of ``kappa`` is closed under the triple product.

    This holds exactly when every connected component of the bipartite graph
    is a complete bipartite block.  Returns ``(True, LabelPair)`` with one
    integer label per block, or ``(False, (x, y))`` where ``(x, y)`` is a
    missing pair inside some component.
    """
    comps = pattern_components(kappa)
    f = [None] * kappa.m
    g = [None] * kappa.n
    for label, (cols, rows) in enumerate(comps):
        if len(cols) * len(rows) != sum(1 for x, y in kappa.pairs if x in cols):
            missing = min((x, y) for x in cols for y in rows if (x, y) not in kappa.pairs)
            return False, missing
        for x in cols:
            f[x] = label
        for y in rows:
            g[y] = label
    return True, LabelPair(tuple(f), tuple(g))


def graph_check(kappa: SupportPattern) -> str:
    """``graph`` if each input in the pattern has exactly one output,
    ``reverse_graph`` if each output has exactly one input, else ``neither``.
    """
    out_deg = {}
    in_deg = {}
    for x, y in kappa.pairs:
        out_deg[x] = out_deg.get(x, 0) + 1
        in_deg[y] = in_deg.get(y, 0) + 1
    if all(v == 1 for v in out_deg.values()):
        return GRAPH
    if all(v == 1 for v in in_deg.values()):
        return REVERSE_GRAPH
    return NEITHER


@dataclass(frozen=True)
class DiagonalLattice:
    """A family of coordinate subsets of ``range(dim)``, read as diagonal projections."""

    dim: int
    members: frozenset

    def __post_init__(self):
        members = frozenset(frozenset(int(i) for i in s) for s in self.members)
        for s in members:
            if any(not 0 <= i < self.dim for i in s):
                raise PatternError(f"member {sorted(s)} outside range({self.dim})", sorted(s))
        object.__setattr__(self, "members", members)

    @classmethod
    def nest(cls, dim: int, order=None) -> "DiagonalLattice":
        """The chain of initial segments of ``order`` (default ascending)."""
        order = list(range(dim)) if order is None else list(order)
        return cls(dim, frozenset(frozenset(order[:k]) for k in range(dim + 1)))

    @classmethod
    def boolean(cls, atoms, dim: int | None = None) -> "DiagonalLattice":
        atoms = [frozenset(a) for a in atoms]
        if dim is None:
            dim = 1 + max(max(a) for a in atoms)
        members = {frozenset().union(*c) for r in range(len(atoms) + 1)
                   for c in itertools.combinations(atoms, r)}
        return cls(dim, frozenset(members))

    @classmethod
    def all_subsets(cls, dim: int) -> "DiagonalLattice":
        return cls.boolean([{i} for i in range(dim)], dim)

    @classmethod
    def generated(cls, dim: int, sets) -> "DiagonalLattice":
        """Smallest family containing ``sets``, the empty set and the full set,
        closed under union and intersection."""
        members = {frozenset(), frozenset(range(dim))} | {frozenset(s) for s in sets}
        while True:
            new = {a | b for a in members for b in members} | {a & b for a in members for b in members}
            if new <= members:
                return cls(dim, frozenset(members))
            members |= new

    @property
    def has_bottom(self) -> bool:
        return frozenset() in self.members

    @property
    def has_top(self) -> bool:
        return frozenset(range(self.dim)) in self.members

    def is_lattice(self) -> bool:
        ms = self.members
        return all(a | b in ms and a & b in ms for a in ms for b in ms)

    def is_boolean(self, ambient=None) -> bool:
        ambient = frozenset(range(self.dim)) if ambient is None else frozenset(ambient)
        return (self.is_lattice() and frozenset() in self.members and ambient in self.members
                and all(ambient - a in self.members for a in self.members))

    def atoms(self) -> list[frozenset]:
        nonempty = [s for s in self.members if s]
        return sorted((s for s in nonempty if not any(t < s for t in nonempty)), key=min)

    def sorted_members(self) -> list[frozenset]:
        return sorted(self.members, key=lambda s: (len(s), sorted(s)))

    def projections(self) -> list[np.ndarray]:
        return [diagonal_projection(s, self.dim) for s in self.sorted_members()]

    def __len__(self):
        return len(self.members)


def boolean_closure(sets, dim: int) -> frozenset:
    """Close a family of subsets of ``range(dim)`` under union, intersection and complement."""
    full = frozenset(range(dim))
    members = {frozenset(), full} | {frozenset(s) for s in sets}
    while True:
        new = ({a | b for a in members for b in members}
               | {a & b for a in members for b in members}
               | {full - a for a in members})
        if new <= members:
            return frozenset(members)
        members |= new


def nest_generators(lattice: DiagonalLattice, zero_plus=frozenset(),
                    tol: Tolerance | None = None) -> list[np.ndarray]:
    """A nest generating a Boolean lattice of diagonal projections.

    ``lattice`` must be a Boolean lattice on the complement ``K`` of
    ``zero_plus``.  With atoms ``a_1, ..., a_r`` taken in order of their
    smallest index, the returned chain is ``0`` followed by
    ``(a_1 + ... + a_k) + zero_plus`` for ``k = 1..r``; the last entry is the
    identity.
    """
    dim = lattice.dim
    zero_plus = frozenset(zero_plus)
    ambient = frozenset(range(dim)) - zero_plus
    if any(not s <= ambient for s in lattice.members):
        raise PatternError("lattice members must avoid the zero_plus atoms")
    if not lattice.is_boolean(ambient):
        raise PatternError("input is not a Boolean lattice on the complement of zero_plus")
    atoms = lattice.atoms()
    chain = [diagonal_projection((), dim)]
    acc = set(zero_plus)
    for a in atoms:
        acc |= a
        chain.append(diagonal_projection(sorted(acc), dim))
    if not atoms:
        # K is empty: the only nonzero member of the nest is the identity on zero_plus
        chain.append(diagonal_projection(sorted(zero_plus), dim))
    return chain


def rank_one_sum(t, kappa: SupportPattern, tol: Tolerance | None = None) -> list[np.ndarray]:
    """Write ``t`` as ``rank(t)`` rank-one operators, each inside the pattern space.

    ``kappa`` must be normalizing.  Each block of the pattern is split by its
    own SVD, so every dyad sits inside one block.
    """
    tol = tol or DEFAULT_TOL
    t = as_matrix(t)
    if t.shape != (kappa.n, kappa.m):
        raise PatternError(f"operator shape {t.shape} does not match pattern ({kappa.n}, {kappa.m})")
    off = np.abs(t) * ~kappa.mask()
    if off.size and off.max() > tol.eq_tol:
        y, x = np.unravel_index(int(np.argmax(off)), off.shape)
        raise PatternError(f"entry (x={x}, y={y}) lies outside the pattern", (int(x), int(y)))
    ok, labels = is_normalizing_pattern(kappa)
    if not ok:
        raise PatternError("pattern is not normalizing", labels)
    smax = op_norm(t)
    if smax == 0:
        return []
    dyads = []
    for cols, rows in pattern_components(kappa):
        block = t[np.ix_(rows, cols)]
        u, s, vh = np.linalg.svd(block, full_matrices=False)
        for k in np.flatnonzero(s > tol.rank_tol * smax):
            d = np.zeros_like(t)
            d[np.ix_(rows, cols)] = s[k] * np.outer(u[:, k], vh[k])
            dyads.append(d)
    return dyads


def diag_core(phi, tol: Tolerance | None = None) -> OperatorSubspace:
    """``Op phi`` intersected with ``Op phi-perp``, i.e. the intertwiners of the generators."""
    from .maps import op_space

    return op_space(phi.generators, "intertwiner", tol, shape=(phi.n, phi.m))


def _semilattice_from_adjoint_map(u: OperatorSubspace, tol) -> frozenset:
    # S1 = {I - Map(U*)(Q)}: U* is a bimodule, so coordinate Q on the output side suffice
    from .maps import map_of

    ustar = u.adjoint()
    out = set()
    for r in range(u.n + 1):
        for q in itertools.combinations(range(u.n), r):
            p = map_of(ustar, diagonal_projection(q, u.n), tol)
            d = np.real(np.diag(p))
            out.add(frozenset(np.flatnonzero(d < 0.5).tolist()))
    return frozenset(out)


def left_semilattice(u: OperatorSubspace, tol: Tolerance | None = None) -> frozenset:
    """The left semilattice of ``Map u`` for a diagonal bimodule, as coordinate sets.

    Computed from the map of the adjoint space over every diagonal projection
    on the output side, so it costs ``2**n`` map evaluations.
    """
    return _semilattice_from_adjoint_map(u, tol or DEFAULT_TOL)


def right_semilattice(u: OperatorSubspace, tol: Tolerance | None = None) -> frozenset:
    """The range ``Map(u)(P)`` over all diagonal ``P``, as coordinate sets."""
    from .maps import map_of

    out = set()
    for r in range(u.m + 1):
        for q in itertools.combinations(range(u.m), r):
            p = map_of(u, diagonal_projection(q, u.m), tol)
            out.add(frozenset(np.flatnonzero(np.real(np.diag(p)) > 0.5).tolist()))
    return frozenset(out)


def labels_of(kappa: SupportPattern) -> LabelPair:
    """The label pair of a normalizing pattern; raises :class:`PatternError` otherwise."""
    ok, res = is_normalizing_pattern(kappa)
    if not ok:
        raise PatternError(f"pattern is not normalizing; missing pair {res}", res)
    return res


def family_pattern(dim: int, members) -> SupportPattern:
    """Pairs ``(x, y)`` such that every member containing ``x`` also contains ``y``.

    Its pattern space is the algebra of matrices leaving each member invariant.
    """
    members = [frozenset(s) for s in members]
    return SupportPattern(dim, dim, frozenset(
        (x, y) for x in range(dim) for y in range(dim)
        if all(y in s for s in members if x in s)))
