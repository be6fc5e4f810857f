"""Dense complex linear algebra for spaces of operators.

Operators are plain ``numpy`` arrays of shape ``(n, m)`` acting from
``C^m`` (input) to ``C^n`` (output).  A linear space of such operators is an
:class:`OperatorSubspace`, stored as a basis that is orthonormal for the
Hilbert-Schmidt inner product ``<A, B> = trace(B^* A)``.

Every rank decision goes through one relative singular-value cutoff
(:attr:`Tolerance.rank_tol`) so that dimensions are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import numpy as np

__all__ = [
    "Tolerance",
    "DEFAULT_TOL",
    "DimensionMismatch",
    "OperatorSubspace",
    "as_matrix",
    "adjoint",
    "hs_norm",
    "op_norm",
    "hs_orthonormalize",
    "full_space",
    "zero_space",
    "span_sum",
    "intersect",
    "orthogonal_complement",
    "subspace_contains",
    "subspace_equal",
    "subspace_includes",
    "null_space",
    "commutant",
    "polar",
    "range_isometry",
    "range_projection",
    "kernel_projection",
    "meet",
    "join",
    "is_projection",
    "spectral_clusters",
    "sample_commuting_projection",
    "rng_from",
    "random_complex",
    "random_unitary",
]


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds shared by every routine in the package.

    rank_tol
        relative singular-value cutoff used for every rank decision
    eq_tol
        threshold for subspace membership / projection equality
    gap_tol
        relative gap separating eigenvalue clusters
    """

    rank_tol: float = 1e-10
    eq_tol: float = 1e-8
    gap_tol: float = 1e-6

    def __post_init__(self):
        for name in ("rank_tol", "eq_tol", "gap_tol"):
            value = getattr(self, name)
            if not (value > 0 and np.isfinite(value)):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")
        if self.rank_tol >= 1:
            raise ValueError("rank_tol must be < 1")

    def with_(self, **changes) -> "Tolerance":
        return replace(self, **changes)


DEFAULT_TOL = Tolerance()


def _tol(tol: Tolerance | None) -> Tolerance:
    return DEFAULT_TOL if tol is None else tol


class DimensionMismatch(ValueError):
    """Raised when operators or subspaces of incompatible shapes are combined."""


def as_matrix(a) -> np.ndarray:
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def adjoint(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hs_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a)))


def op_norm(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def rng_from(seed) -> np.random.Generator:
    """A generator from an explicit seed (int, sequence of ints, or Generator)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_complex(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    q, r = np.linalg.qr(random_complex(rng, (d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


class OperatorSubspace:
    """A linear space of ``n x m`` complex matrices with an HS-orthonormal basis.

    Use :func:`hs_orthonormalize` to build one from arbitrary spanning
    matrices; the constructor trusts that ``basis`` is already orthonormal.
    """

    __slots__ = ("_basis", "_shape")

    def __init__(self, basis, shape: tuple[int, int]):
        n, m = int(shape[0]), int(shape[1])
        b = np.asarray(basis, dtype=complex)
        b = b.reshape(-1, n, m) if n * m else np.zeros((0, n, m), dtype=complex)
        self._basis = b
        self._basis.setflags(write=False)
        self._shape = (n, m)

    @property
    def basis(self) -> np.ndarray:
        """Basis as an array of shape ``(dim, n, m)``."""
        return self._basis

    @property
    def shape(self) -> tuple[int, int]:
        return self._shape

    @property
    def n(self) -> int:
        return self._shape[0]

    @property
    def m(self) -> int:
        return self._shape[1]

    @property
    def dim(self) -> int:
        return self._basis.shape[0]

    @property
    def vectors(self) -> np.ndarray:
        """Row-major vectorised basis, shape ``(dim, n*m)``."""
        return self._basis.reshape(self.dim, self.n * self.m)

    def __len__(self):
        return self.dim

    def __iter__(self):
        return iter(self._basis)

    def __repr__(self):
        return f"<OperatorSubspace dim={self.dim} in B(C^{self.m}, C^{self.n})>"

    def project(self, t) -> np.ndarray:
        """Orthogonal (HS) projection of ``t`` onto the subspace."""
        t = self._check(t)
        if self.dim == 0:
            return np.zeros(self._shape, dtype=complex)
        v = self.vectors
        coeffs = np.conj(v) @ t.ravel()
        return (coeffs @ v).reshape(self._shape)

    def coordinates(self, t) -> np.ndarray:
        t = self._check(t)
        return np.conj(self.vectors) @ t.ravel()

    def element(self, coeffs) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=complex)
        if self.dim == 0:
            return np.zeros(self._shape, dtype=complex)
        return np.tensordot(coeffs, self._basis, axes=1)

    def random_element(self, rng) -> np.ndarray:
        return self.element(random_complex(rng_from(rng), self.dim))

    def adjoint(self) -> "OperatorSubspace":
        """The space ``{T^* : T in U}``; conjugate transposition is HS-unitary."""
        return OperatorSubspace(adjoint(self._basis), (self.m, self.n))

    def _check(self, t) -> np.ndarray:
        t = as_matrix(t)
        if t.shape != self._shape:
            raise DimensionMismatch(f"operator of shape {t.shape} vs subspace shape {self._shape}")
        return t


def _stack(mats, shape=None) -> tuple[np.ndarray, tuple[int, int]]:
    if isinstance(mats, OperatorSubspace):
        return mats.vectors, mats.shape
    if isinstance(mats, np.ndarray) and mats.ndim == 3:
        arrs = mats.astype(complex, copy=False)
        if shape is not None and arrs.shape[1:] != tuple(shape):
            raise DimensionMismatch(f"matrices of shape {arrs.shape[1:]} vs requested {tuple(shape)}")
        n, m = arrs.shape[1:]
        return arrs.reshape(arrs.shape[0], n * m), (n, m)
    mats = [as_matrix(a) for a in mats]
    if not mats:
        if shape is None:
            raise DimensionMismatch("cannot infer the shape of an empty generator list; pass shape=")
        n, m = shape
        return np.zeros((0, n * m), dtype=complex), (int(n), int(m))
    shapes = {a.shape for a in mats}
    if len(shapes) != 1 or (shape is not None and shapes != {tuple(shape)}):
        raise DimensionMismatch(f"generators have inconsistent shapes {sorted(shapes)}")
    shape = mats[0].shape
    return np.stack(mats).reshape(len(mats), -1), shape


def _row_space(rows: np.ndarray, tol: Tolerance, scale: float | None = None) -> np.ndarray:
    """Orthonormal basis (as rows) of the row space of ``rows``."""
    if rows.shape[0] == 0 or rows.shape[1] == 0:
        return np.zeros((0, rows.shape[1]), dtype=complex)
    # reduce tall stacks first; the row space is unchanged
    if rows.shape[0] > 2 * rows.shape[1]:
        rows = _reduce_rows(rows)
    _, s, vh = np.linalg.svd(rows, full_matrices=False)
    if s.size == 0:
        return np.zeros((0, rows.shape[1]), dtype=complex)
    ref = s[0] if scale is None else max(s[0], scale)
    r = int(np.sum(s > tol.rank_tol * ref)) if ref > 0 else 0
    return vh[:r]


def _reduce_rows(rows: np.ndarray) -> np.ndarray:
    # A = QR with Q isometric: R has the row space, kernel and singular values of A
    return np.linalg.qr(rows, mode="r")


def hs_orthonormalize(mats, tol: Tolerance | None = None, *, shape=None,
                      scale: float | None = None) -> OperatorSubspace:
    """Orthonormal basis of the span of ``mats`` (a list of equal-shape matrices).

    The dimension is the numerical rank of the vectorised stack, with singular
    values below ``rank_tol`` times the largest one (or ``scale`` when that is
    larger) discarded.  ``shape`` is required only for an empty list.
    """
    tol = _tol(tol)
    rows, shp = _stack(mats, shape)
    return OperatorSubspace(_row_space(rows, tol, scale), shp)


def full_space(n: int, m: int) -> OperatorSubspace:
    """All of ``B(C^m, C^n)`` with the matrix-unit basis."""
    return OperatorSubspace(np.eye(n * m, dtype=complex), (n, m))


def zero_space(n: int, m: int) -> OperatorSubspace:
    return OperatorSubspace(np.zeros((0, n, m), dtype=complex), (n, m))


def _same_shape(u: OperatorSubspace, v: OperatorSubspace):
    if u.shape != v.shape:
        raise DimensionMismatch(f"subspace shapes {u.shape} and {v.shape} differ")


def span_sum(*spaces: OperatorSubspace, tol: Tolerance | None = None) -> OperatorSubspace:
    if not spaces:
        raise ValueError("need at least one subspace")
    for s in spaces[1:]:
        _same_shape(spaces[0], s)
    rows = np.concatenate([s.vectors for s in spaces])
    return OperatorSubspace(_row_space(rows, _tol(tol), scale=1.0), spaces[0].shape)


def null_space(a: np.ndarray, tol: Tolerance | None = None, scale: float = 1.0) -> np.ndarray:
    """Orthonormal basis (columns) of ``ker a``.

    Singular values at most ``rank_tol * max(sigma_max, scale)`` count as zero;
    the absolute floor keeps numerically-zero systems from gaining rank.
    """
    tol = _tol(tol)
    a = np.asarray(a, dtype=complex)
    k = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(k, dtype=complex)
    if a.shape[0] > 2 * k:
        a = _reduce_rows(a)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    ref = max(s[0] if s.size else 0.0, scale)
    r = int(np.sum(s > tol.rank_tol * ref))
    return np.conj(vh[r:].T)


def orthogonal_complement(u: OperatorSubspace, tol: Tolerance | None = None) -> OperatorSubspace:
    n, m = u.shape
    if u.dim == 0:
        return full_space(n, m)
    ns = null_space(np.conj(u.vectors), tol)
    return OperatorSubspace(ns.T, (n, m))


def intersect(*spaces: OperatorSubspace, tol: Tolerance | None = None) -> OperatorSubspace:
    """Intersection of subspaces, computed by restricting successive constraints."""
    tol = _tol(tol)
    acc = spaces[0]
    for v in spaces[1:]:
        _same_shape(acc, v)
        if acc.dim == 0:
            break
        # coefficients c with (I - P_v) sum c_i a_i = 0
        a = acc.vectors
        resid = a - (a @ np.conj(v.vectors).T) @ v.vectors if v.dim else a
        ns = null_space(resid.T, tol)
        acc = hs_orthonormalize((ns.T @ a).reshape(-1, *acc.shape), tol, shape=acc.shape, scale=1.0)
    return acc


def subspace_contains(u: OperatorSubspace, t, tol: Tolerance | None = None) -> tuple[bool, float]:
    """Whether ``t`` lies in ``u``: returns ``(inside, distance)``.

    ``distance`` is the HS norm of the component of ``t`` orthogonal to ``u``;
    membership means ``distance <= eq_tol * max(1, ||t||_HS)``.
    """
    tol = _tol(tol)
    t = u._check(t)
    dist = hs_norm(t - u.project(t))
    return dist <= tol.eq_tol * max(1.0, hs_norm(t)), dist


def subspace_includes(u: OperatorSubspace, v: OperatorSubspace, tol: Tolerance | None = None) -> bool:
    """``v`` is contained in ``u``."""
    _same_shape(u, v)
    return all(subspace_contains(u, b, tol)[0] for b in v.basis)


def subspace_equal(u: OperatorSubspace, v: OperatorSubspace, tol: Tolerance | None = None) -> bool:
    _same_shape(u, v)
    return u.dim == v.dim and subspace_includes(u, v, tol) and subspace_includes(v, u, tol)


def commutant(gens, tol: Tolerance | None = None, *, dim: int | None = None) -> OperatorSubspace:
    """``{X : XG = GX and XG^* = G^*X for every generator G}``.

    This is the commutant of the *-algebra generated by ``gens``.  With no
    generators the full matrix algebra on ``C^dim`` is returned.
    """
    tol = _tol(tol)
    gens = [as_matrix(g) for g in gens]
    if not gens:
        if dim is None:
            raise DimensionMismatch("dim is required when there are no generators")
        return full_space(dim, dim)
    d = gens[0].shape[0]
    if any(g.shape != (d, d) for g in gens):
        raise DimensionMismatch("commutant generators must be square of one size")
    eye = np.eye(d)
    blocks = []
    # row-major vec: vec(A X B) = kron(A, B^T) vec(X)
    for g in gens:
        for h in (g, adjoint(g)):
            blocks.append(np.kron(eye, h.T) - np.kron(h, eye))
    ns = null_space(np.concatenate(blocks), tol, scale=max(op_norm(g) for g in gens))
    return OperatorSubspace(ns.T, (d, d))


def polar(t, tol: Tolerance | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Polar decomposition ``t = phase @ modulus``.

    ``modulus = (t^* t)^{1/2}`` and ``phase`` is the partial isometry whose
    initial projection is the range projection of ``modulus``.  Singular values
    below ``rank_tol * sigma_max`` are treated as zero.
    """
    tol = _tol(tol)
    t = as_matrix(t)
    n, m = t.shape
    u, s, vh = np.linalg.svd(t, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((n, m), dtype=complex), np.zeros((m, m), dtype=complex)
    r = int(np.sum(s > tol.rank_tol * s[0]))
    u, s, vh = u[:, :r], s[:r], vh[:r]
    phase = u @ vh
    modulus = (adjoint(vh) * s) @ vh
    return phase, 0.5 * (modulus + adjoint(modulus))


def range_isometry(mats, tol: Tolerance | None = None, *, dim: int | None = None,
                   scale: float | None = None) -> np.ndarray:
    """Matrix whose orthonormal columns span the column space of ``mats``.

    ``scale`` sets an absolute floor for the rank cutoff; pass the natural size
    of the inputs when products may be numerically (not exactly) zero.
    """
    tol = _tol(tol)
    mats = [as_matrix(a) for a in mats]
    if not mats:
        if dim is None:
            raise DimensionMismatch("dim is required for an empty list")
        return np.zeros((dim, 0), dtype=complex)
    rows = {a.shape[0] for a in mats}
    if len(rows) != 1 or (dim is not None and rows != {dim}):
        raise DimensionMismatch(f"row counts {sorted(rows)} do not match")
    d = mats[0].shape[0]
    cols = np.concatenate(mats, axis=1)
    if cols.shape[1] == 0:
        return np.zeros((d, 0), dtype=complex)
    if cols.shape[1] > 2 * d:
        cols = adjoint(_reduce_rows(adjoint(cols)))
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    ref = s[0] if scale is None else max(s[0], scale)
    if ref == 0:
        return np.zeros((d, 0), dtype=complex)
    r = int(np.sum(s > tol.rank_tol * ref))
    return u[:, :r]


def range_projection(mats, tol: Tolerance | None = None, *, dim: int | None = None,
                     scale: float | None = None) -> np.ndarray:
    """Orthogonal projection onto the span of all columns of ``mats``.

    An empty list gives the zero projection on ``C^dim``.
    """
    q = range_isometry(mats, tol, dim=dim, scale=scale)
    return q @ adjoint(q)


def kernel_projection(mats, tol: Tolerance | None = None, *, dim: int | None = None,
                      scale: float | None = None) -> np.ndarray:
    """Projection onto the joint kernel of ``mats`` (all with ``dim`` columns)."""
    mats = [as_matrix(a) for a in mats]
    if dim is None:
        if not mats:
            raise DimensionMismatch("dim is required for an empty list")
        dim = mats[0].shape[1]
    return np.eye(dim) - range_projection([adjoint(a) for a in mats], tol, dim=dim, scale=scale)


def join(projections, dim: int, tol: Tolerance | None = None) -> np.ndarray:
    return range_projection(list(projections), tol, dim=dim, scale=1.0)


def meet(projections, dim: int, tol: Tolerance | None = None) -> np.ndarray:
    """Projection onto the intersection of the ranges."""
    eye = np.eye(dim)
    comps = [eye - as_matrix(p) for p in projections]
    if not comps:
        return eye.astype(complex)
    return eye - range_projection(comps, tol, dim=dim, scale=1.0)


def is_projection(p, tol: Tolerance | None = None) -> bool:
    tol = _tol(tol)
    p = as_matrix(p)
    if p.shape[0] != p.shape[1]:
        return False
    return op_norm(p - adjoint(p)) <= tol.eq_tol and op_norm(p @ p - p) <= tol.eq_tol


def spectral_clusters(values: np.ndarray, tol: Tolerance | None = None) -> list[np.ndarray]:
    """Group sorted real eigenvalues into clusters split at gaps above ``gap_tol * scale``.

    Returns index arrays into ``values`` (which must be ascending).
    """
    tol = _tol(tol)
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return []
    scale = max(float(np.max(np.abs(values))), 1e-300)
    gaps = np.diff(values) > tol.gap_tol * scale
    cuts = np.flatnonzero(gaps) + 1
    idx = np.arange(values.size)
    return [c for c in np.split(idx, cuts)]


def _smallest_cluster_gap(values, clusters) -> float:
    if len(clusters) < 2:
        return np.inf
    scale = max(float(np.max(np.abs(values))), 1e-300)
    return min(values[b[0]] - values[a[-1]] for a, b in zip(clusters, clusters[1:])) / scale


def sample_commuting_projection(gens, seed, tol: Tolerance | None = None, *, dim: int | None = None,
                                max_retries: int = 8) -> np.ndarray:
    """A random projection commuting with every generator and its adjoint.

    Takes a random Hermitian element of the commutant, groups its eigenvalues
    into clusters, and returns the spectral projection of a random subset of
    clusters.  A fresh draw is made when two clusters are separated by a gap
    that is only marginally above ``gap_tol``.
    """
    tol = _tol(tol)
    rng = rng_from(seed)
    if isinstance(gens, OperatorSubspace):
        gens = list(gens.basis)
        if not gens and dim is None:
            raise DimensionMismatch("dim is required for an empty algebra")
    comm = commutant(gens, tol, dim=dim)
    d = comm.n
    for attempt in range(max_retries + 1):
        x = comm.random_element(rng)
        h = 0.5 * (x + adjoint(x))
        w, v = np.linalg.eigh(h)
        clusters = spectral_clusters(w, tol)
        if _smallest_cluster_gap(w, clusters) > 1e3 * tol.gap_tol or attempt == max_retries:
            break
    chosen = [c for c in clusters if rng.random() < 0.5]
    p = np.zeros((d, d), dtype=complex)
    for c in chosen:
        q = v[:, c]
        p += q @ adjoint(q)
    return p
