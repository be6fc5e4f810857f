"""Projection-valued maps of operator spaces and the spaces they cut out.

For a space ``U`` of ``n x m`` matrices, ``Map U`` sends a projection ``P`` on
``C^m`` to the range projection of ``{B P : B in U}``.  Conversely a list of
pairs ``(L, M)`` determines the linear spaces

* ``op``:          ``{T : (I - M) T L = 0}``
* ``op_perp``:     ``{T : M T (I - L) = 0}``
* ``intertwiner``: ``{T : T L = M T}``

each computed as the null space of one stacked linear system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numkernel import (
    DEFAULT_TOL,
    DimensionMismatch,
    OperatorSubspace,
    Tolerance,
    adjoint,
    as_matrix,
    commutant,
    full_space,
    hs_orthonormalize,
    meet,
    null_space,
    op_norm,
    range_isometry,
    range_projection,
    rng_from,
    spectral_clusters,
    subspace_equal,
)

__all__ = [
    "SubspaceMap",
    "map_of",
    "op_space",
    "OrthoReport",
    "is_ortho_map_on",
    "probe_vectors",
    "ref_hull_sampled",
    "is_reflexive_certified",
    "rank_one_member",
]

MODES = ("op", "op_perp", "intertwiner")


def map_of(u: OperatorSubspace, p, tol: Tolerance | None = None) -> np.ndarray:
    """``(Map u)(p)``: projection onto the span of ``B p x`` over ``B`` in ``u``."""
    p = as_matrix(p)
    if p.shape != (u.m, u.m):
        raise DimensionMismatch(f"projection of shape {p.shape} for a space on C^{u.m}")
    return range_projection(list(u.basis @ p), tol, dim=u.n, scale=1.0)


@dataclass(frozen=True)
class SubspaceMap:
    """A 0-preserving monotone projection map from ``C^m`` to ``C^n``.

    ``generators`` holds pairs ``(L, phi(L))``.  With a ``carrier`` space the
    map is evaluated exactly as ``Map carrier``; otherwise ``phi(P)`` is the
    meet of ``phi(L)`` over generators with ``L >= P`` (the largest value
    consistent with monotonicity), and the identity if there is none.
    """

    m: int
    n: int
    generators: tuple = ()
    carrier: OperatorSubspace | None = None
    tol: Tolerance = field(default=DEFAULT_TOL, compare=False)

    @classmethod
    def from_subspace(cls, u: OperatorSubspace, ls=(), tol: Tolerance | None = None) -> "SubspaceMap":
        tol = tol or DEFAULT_TOL
        gens = tuple((as_matrix(ell), map_of(u, ell, tol)) for ell in ls)
        return cls(u.m, u.n, gens, u, tol)

    @property
    def ls(self) -> list[np.ndarray]:
        return [ell for ell, _ in self.generators]

    @property
    def ms(self) -> list[np.ndarray]:
        return [mm for _, mm in self.generators]

    def __call__(self, p) -> np.ndarray:
        p = as_matrix(p)
        if self.carrier is not None:
            return map_of(self.carrier, p, self.tol)
        if op_norm(p) <= self.tol.eq_tol:
            return np.zeros((self.n, self.n), dtype=complex)
        eq = self.tol.eq_tol
        above = [mm for ell, mm in self.generators if op_norm(p - ell @ p) <= eq]
        return meet(above, self.n, self.tol)

    def is_monotone(self) -> bool:
        """``L <= L'`` implies ``phi(L) <= phi(L')`` on the generator list."""
        eq = self.tol.eq_tol
        for l1, m1 in self.generators:
            for l2, m2 in self.generators:
                if op_norm(l1 - l2 @ l1) <= eq and op_norm(m1 - m2 @ m1) > eq:
                    return False
        return True


def _constraint_rows(ell, mm, mode, n, m):
    ell = as_matrix(ell)
    mm = as_matrix(mm)
    if ell.shape != (m, m) or mm.shape != (n, n):
        raise DimensionMismatch(f"constraint pair of shapes {ell.shape}, {mm.shape} for {n}x{m} operators")
    # row-major vec: vec(A T B) = kron(A, B^T) vec(T)
    if mode == "op":
        return np.kron(np.eye(n) - mm, ell.T)
    if mode == "op_perp":
        return np.kron(mm, (np.eye(m) - ell).T)
    return np.kron(np.eye(n), ell.T) - np.kron(mm, np.eye(m))


def op_space(constraints, mode: str = "op", tol: Tolerance | None = None, *, shape=None) -> OperatorSubspace:
    """Operators satisfying every pair constraint in the chosen ``mode``.

    ``constraints`` is a list of ``(L, M)`` pairs or a :class:`SubspaceMap`.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if isinstance(constraints, SubspaceMap):
        shape = shape or (constraints.n, constraints.m)
        constraints = constraints.generators
    constraints = list(constraints)
    if shape is None:
        if not constraints:
            raise DimensionMismatch("shape is required without constraints")
        shape = (as_matrix(constraints[0][1]).shape[0], as_matrix(constraints[0][0]).shape[0])
    n, m = shape
    if not constraints:
        return full_space(n, m)
    system = np.concatenate([_constraint_rows(ell, mm, mode, n, m) for ell, mm in constraints])
    return OperatorSubspace(null_space(system, tol, scale=1.0).T, (n, m))


@dataclass
class OrthoReport:
    tested: list
    failures: list

    @property
    def ok(self) -> bool:
        return not self.failures


def is_ortho_map_on(u: OperatorSubspace, ls, tol: Tolerance | None = None) -> OrthoReport:
    """Check ``(Map u)(L)`` against ``(Map u)(I - L)`` for orthogonality.

    Failures are ``(L, residual)`` with ``residual`` the operator norm of the
    product of the two images.
    """
    tol = tol or DEFAULT_TOL
    tested, failures = [], []
    eye = np.eye(u.m)
    for ell in ls:
        ell = as_matrix(ell)
        res = op_norm(map_of(u, ell, tol) @ map_of(u, eye - ell, tol))
        tested.append(ell)
        if res > tol.eq_tol:
            failures.append((ell, res))
    return OrthoReport(tested, failures)


def _structured_probes(u: OperatorSubspace, rng, tol) -> list[np.ndarray]:
    # eigenvectors of a random Hermitian element commuting with u^*u reach
    # the special subspaces (joint kernel, multiplicity slices) that Gaussian
    # vectors miss; a random unit vector from each eigenspace
    if u.dim == 0:
        return []
    prods = np.einsum("akj,bkl->abjl", np.conj(u.basis), u.basis).reshape(-1, u.m, u.m)
    gens = hs_orthonormalize(prods, tol, shape=(u.m, u.m), scale=1.0)
    comm = commutant(list(gens.basis), tol, dim=u.m)
    x = comm.random_element(rng)
    w, q = np.linalg.eigh(0.5 * (x + adjoint(x)))
    out = []
    for c in spectral_clusters(w, tol):
        z = rng.standard_normal(len(c)) + 1j * rng.standard_normal(len(c))
        out.append(q[:, c] @ z)
    return out


def probe_vectors(u: OperatorSubspace, count: int, rng, tol: Tolerance | None = None,
                  *, coordinates: bool = False) -> np.ndarray:
    """Unit probe vectors for the reflexive hull, as the rows of an array."""
    tol = tol or DEFAULT_TOL
    vecs = [rng.standard_normal(u.m) + 1j * rng.standard_normal(u.m) for _ in range(count)]
    vecs += _structured_probes(u, rng, tol)
    if coordinates:
        vecs += list(np.eye(u.m, dtype=complex))
    arr = np.array(vecs, dtype=complex)
    return arr / np.linalg.norm(arr, axis=1, keepdims=True)


def ref_hull_sampled(u: OperatorSubspace, batch: int | None = None, seed=None,
                     tol: Tolerance | None = None, *, window: int = 3, max_batches: int = 50,
                     history: list | None = None) -> OperatorSubspace:
    """Over-approximate ``Ref u = {T : T x in u x for all x}`` from sampled ``x``.

    Every probe ``x`` contributes the linear constraint ``(I - Q(x)) T x = 0``
    with ``Q(x)`` the projection onto ``u x``.  Batches are added until the
    dimension has not changed for ``window`` batches (or ``max_batches`` is
    reached).  The result always contains ``Ref u``, hence ``u``.
    The first batch also contains the standard basis vectors.
    """
    tol = tol or DEFAULT_TOL
    rng = rng_from(seed)
    n, m = u.shape
    batch = 4 * m if batch is None else batch
    hull = full_space(n, m)
    stable = 0
    for k in range(max_batches):
        xs = probe_vectors(u, batch, rng, tol, coordinates=(k == 0))
        rows = []
        for x in xs:
            q = range_isometry([(u.basis @ x).T], tol, dim=n, scale=1.0)
            rows.append(np.kron(np.eye(n) - q @ adjoint(q), x[None, :]))
        system = np.concatenate(rows) @ hull.vectors.T
        coeffs = null_space(system, tol, scale=1.0)
        new = OperatorSubspace(coeffs.T @ hull.vectors, (n, m))
        if history is not None:
            history.append(new.dim)
        stable = stable + 1 if new.dim == hull.dim else 0
        hull = new
        # the hull contains u, so equal dimension means equality
        if stable >= window or hull.dim == u.dim:
            break
    return hull


def is_reflexive_certified(u: OperatorSubspace, seed=None, tol: Tolerance | None = None,
                           *, return_excess: bool = False, **kwargs):
    """``True`` when the sampled hull collapses onto ``u``, which certifies reflexivity.

    ``False`` only means reflexivity was not certified.  With
    ``return_excess`` the pair ``(verdict, excess)`` is returned, ``excess``
    being the orthogonal complement of ``u`` inside the sampled hull.
    """
    tol = tol or DEFAULT_TOL
    hull = ref_hull_sampled(u, seed=seed, tol=tol, **kwargs)
    ok = subspace_equal(hull, u, tol)
    if not return_excess:
        return ok
    resid = hull.vectors - (hull.vectors @ np.conj(u.vectors).T) @ u.vectors if u.dim else hull.vectors
    excess = hs_orthonormalize(resid.reshape(-1, *u.shape), tol, shape=u.shape, scale=1.0)
    return ok, excess


def rank_one_member(x, y, chi: SubspaceMap, tol: Tolerance | None = None) -> bool:
    """Whether ``y x^*`` intertwines every generator pair ``(L, chi(L))``.

    Equivalently: for each generator ``x`` lies in ``L`` or in ``L^perp``,
    ``y`` lies in ``chi(L)`` or in its complement, on matching sides.
    """
    tol = tol or DEFAULT_TOL
    x = np.asarray(x, dtype=complex).ravel()
    y = np.asarray(y, dtype=complex).ravel()
    ex = tol.eq_tol * np.linalg.norm(x)
    ey = tol.eq_tol * np.linalg.norm(y)
    for ell, mm in chi.generators:
        flags = (
            np.linalg.norm(ell @ x) > ex,
            np.linalg.norm(x - ell @ x) <= ex,
            np.linalg.norm(y - mm @ y) <= ey,
            np.linalg.norm(mm @ y) > ey,
        )
        if len(set(flags)) != 1:
            return False
    return True
