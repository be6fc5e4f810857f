"""Normalizing spaces (spaces closed under ``(A, B, C) -> A B^* C``)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .masa import (
    PatternError,
    diagonal_projection,
    is_normalizing_pattern,
    pattern_components,
    pattern_of,
)
from .numkernel import (
    DEFAULT_TOL,
    OperatorSubspace,
    Tolerance,
    adjoint,
    commutant,
    hs_orthonormalize,
    intersect,
    kernel_projection,
    polar,
    range_isometry,
    range_projection,
    rng_from,
    spectral_clusters,
    subspace_contains,
    subspace_equal,
)

__all__ = [
    "NotNormalizingError",
    "triple_products",
    "triple_closure",
    "is_normalizing",
    "normalizing_witness",
    "algebra_closure",
    "TroProfile",
    "profile",
    "essential_part",
    "LinkingAlgebra",
    "linking_algebra",
    "phase_pieces",
    "partial_isometries",
    "BlockDecomposition",
    "block_decompose",
    "rank_one_subspace",
    "WedderburnBlock",
    "wedderburn",
]


class NotNormalizingError(ValueError):
    """Raised for a space that is not closed under the triple product.

    ``witness`` is a triple of basis indices ``(a, b, c)`` whose product
    ``B_a B_b^* B_c`` leaves the space, together with its distance.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def triple_products(u: OperatorSubspace) -> np.ndarray:
    """All ``B_a B_b^* B_c`` over basis elements, shape ``(d**3, n, m)``."""
    b = u.basis
    d = u.dim
    mid = np.einsum("bkj,ckl->bcjl", np.conj(b), b)
    prods = np.einsum("aij,bcjl->abcil", b, mid)
    return prods.reshape(d ** 3, u.n, u.m)


def triple_closure(gens, tol: Tolerance | None = None, *, shape=None) -> OperatorSubspace:
    """Smallest space containing ``gens`` and closed under the triple product."""
    tol = tol or DEFAULT_TOL
    u = hs_orthonormalize(gens, tol, shape=shape)
    while u.dim:
        stacked = np.concatenate([u.basis, triple_products(u)])
        nxt = hs_orthonormalize(stacked, tol, shape=u.shape, scale=1.0)
        if nxt.dim == u.dim:
            return u
        u = nxt
    return u


def _residuals(u: OperatorSubspace, prods: np.ndarray) -> np.ndarray:
    v = u.vectors
    flat = prods.reshape(prods.shape[0], -1)
    res = flat - (flat @ np.conj(v).T) @ v
    return np.linalg.norm(res, axis=1)


def normalizing_witness(u: OperatorSubspace, tol: Tolerance | None = None):
    """``None`` when ``u`` is normalizing, else ``((a, b, c), distance)`` for the worst triple."""
    tol = tol or DEFAULT_TOL
    if u.dim == 0:
        return None
    res = _residuals(u, triple_products(u))
    k = int(np.argmax(res))
    if res[k] <= tol.eq_tol:
        return None
    d = u.dim
    return (k // (d * d), (k // d) % d, k % d), float(res[k])


def is_normalizing(u: OperatorSubspace, tol: Tolerance | None = None) -> bool:
    return normalizing_witness(u, tol) is None


def _require_normalizing(u, tol):
    w = normalizing_witness(u, tol)
    if w is not None:
        raise NotNormalizingError(f"space is not closed under the triple product (triple {w[0]})", w)


def algebra_closure(gens, tol: Tolerance | None = None, *, dim: int | None = None,
                    unital: bool = True) -> OperatorSubspace:
    """The algebra generated by square matrices ``gens`` (with the identity when ``unital``)."""
    tol = tol or DEFAULT_TOL
    gens = list(gens.basis) if isinstance(gens, OperatorSubspace) else list(gens)
    if dim is None:
        if not gens:
            raise ValueError("dim is required for an empty generator list")
        dim = np.asarray(gens[0]).shape[0]
    if unital:
        gens.append(np.eye(dim) / np.sqrt(dim))
    a = hs_orthonormalize(gens, tol, shape=(dim, dim))
    while a.dim:
        prods = np.einsum("aij,bjk->abik", a.basis, a.basis).reshape(-1, dim, dim)
        nxt = hs_orthonormalize(np.concatenate([a.basis, prods]), tol, shape=(dim, dim), scale=1.0)
        if nxt.dim == a.dim:
            return a
        a = nxt
    return a


@dataclass(frozen=True)
class TroProfile:
    zero_plus: np.ndarray
    i_minus: np.ndarray
    essential: bool
    k1_dim: int
    k2_dim: int


def profile(u: OperatorSubspace, tol: Tolerance | None = None) -> TroProfile:
    """Joint-kernel projection, range projection and the essential flag."""
    tol = tol or DEFAULT_TOL
    zp = kernel_projection(list(u.basis), tol, dim=u.m, scale=1.0)
    im = range_projection(list(u.basis), tol, dim=u.n, scale=1.0)
    k1 = u.m - int(round(np.real(np.trace(zp))))
    k2 = int(round(np.real(np.trace(im))))
    return TroProfile(zp, im, k1 == u.m and k2 == u.n, k1, k2)


def essential_part(u: OperatorSubspace, tol: Tolerance | None = None):
    """Compress ``u`` to the complement of its joint kernel and to its range.

    Returns ``(u_o, iso1, iso2)`` with ``iso1`` (``m x k1``) and ``iso2``
    (``n x k2``) isometries onto those subspaces, and
    ``u_o = {iso2^* T iso1 : T in u}``.
    """
    tol = tol or DEFAULT_TOL
    iso1 = range_isometry([adjoint(b) for b in u.basis], tol, dim=u.m, scale=1.0)
    iso2 = range_isometry(list(u.basis), tol, dim=u.n, scale=1.0)
    comp = np.einsum("ji,ajk,kl->ail", np.conj(iso2), u.basis, iso1)
    u_o = hs_orthonormalize(comp, tol, shape=(iso2.shape[1], iso1.shape[1]))
    return u_o, iso1, iso2


@dataclass(frozen=True)
class LinkingAlgebra:
    """The algebra generated by ``I`` and ``[[0, U], [U^*, 0]]`` on ``C^n + C^m``."""

    n: int
    m: int
    subspace: OperatorSubspace

    @property
    def dim(self) -> int:
        return self.subspace.dim

    def corner(self, name: str, tol: Tolerance | None = None) -> OperatorSubspace:
        """One of the four blocks: ``"B"`` (n x n), ``"U"`` (n x m), ``"U*"`` (m x n), ``"A"`` (m x m)."""
        n = self.n
        rows, cols = {"B": (slice(None, n), slice(None, n)),
                      "U": (slice(None, n), slice(n, None)),
                      "U*": (slice(n, None), slice(None, n)),
                      "A": (slice(n, None), slice(n, None))}[name]
        blocks = self.subspace.basis[:, rows, cols]
        return hs_orthonormalize(blocks, tol, shape=blocks.shape[1:], scale=1.0)


def _embed(mats, n, m, upper: bool) -> np.ndarray:
    out = np.zeros((len(mats), n + m, n + m), dtype=complex)
    if len(mats):
        if upper:
            out[:, :n, n:] = mats
        else:
            out[:, n:, :n] = mats
    return out


def linking_algebra(u: OperatorSubspace, tol: Tolerance | None = None) -> LinkingAlgebra:
    tol = tol or DEFAULT_TOL
    _require_normalizing(u, tol)
    n, m = u.shape
    gens = np.concatenate([_embed(u.basis, n, m, True), _embed(adjoint(u.basis), n, m, False)])
    alg = algebra_closure(list(gens), tol, dim=n + m)
    return LinkingAlgebra(n, m, alg)


def phase_pieces(a, tol: Tolerance | None = None) -> list[np.ndarray]:
    """The phase of ``a`` and its restrictions to the spectral clusters of ``|a|``.

    The zero cluster is dropped, and with a single nonzero cluster only the
    phase itself is returned.
    """
    tol = tol or DEFAULT_TOL
    v, mod = polar(a, tol)
    if not np.any(v):
        return []
    w, q = np.linalg.eigh(mod)
    floor = tol.rank_tol * max(float(w[-1]), 0.0)
    pieces = [v]
    clusters = [c for c in spectral_clusters(w, tol) if w[c[-1]] > floor]
    if len(clusters) > 1:
        for c in clusters:
            qc = q[:, c]
            pieces.append(v @ qc @ adjoint(qc))
    return pieces


def partial_isometries(u: OperatorSubspace, count: int, seed=None,
                       tol: Tolerance | None = None) -> list[np.ndarray]:
    """Partial isometries in ``u`` from ``count`` random elements."""
    tol = tol or DEFAULT_TOL
    _require_normalizing(u, tol)
    if u.dim == 0:
        return []
    rng = rng_from(seed)
    out = []
    for _ in range(count):
        out.extend(phase_pieces(u.random_element(rng), tol))
    return out


@dataclass(frozen=True)
class BlockDecomposition:
    """Pairs ``(E_k, F_k)`` with ``U = sum_k F_k B(C^m, C^n) E_k``."""

    m: int
    n: int
    blocks: tuple
    columns: tuple = ()
    rows: tuple = ()

    def __len__(self):
        return len(self.blocks)

    def reconstruct(self, tol: Tolerance | None = None) -> OperatorSubspace:
        """The direct sum of the full blocks, as a subspace."""
        mats = []
        for e, f in self.blocks:
            qe = range_isometry([e], tol, dim=self.m, scale=1.0)
            qf = range_isometry([f], tol, dim=self.n, scale=1.0)
            mats.extend(np.einsum("ia,jb->abij", qf, np.conj(qe)).reshape(-1, self.n, self.m))
        return hs_orthonormalize(mats, tol, shape=(self.n, self.m))


def block_decompose(u: OperatorSubspace, tol: Tolerance | None = None) -> BlockDecomposition:
    """Blocks of a normalizing bimodule over the two diagonal algebras.

    Raises :class:`PatternError` when ``u`` is not spanned by matrix units
    (witness: a unit of the support missing from ``u``) or when its pattern is
    not normalizing (witness: a missing pair inside a component).
    """
    tol = tol or DEFAULT_TOL
    kappa = pattern_of(u, tol)
    if u.dim != len(kappa):
        for x, y in kappa.sorted_pairs():
            unit = np.zeros(u.shape, dtype=complex)
            unit[y, x] = 1.0
            if not subspace_contains(u, unit, tol)[0]:
                raise PatternError("space is not a bimodule over the diagonal algebras", (x, y))
    ok, res = is_normalizing_pattern(kappa)
    if not ok:
        raise PatternError(f"support pattern is not normalizing; missing pair {res}", res)
    comps = pattern_components(kappa)
    blocks = tuple((diagonal_projection(c, u.m), diagonal_projection(r, u.n)) for c, r in comps)
    return BlockDecomposition(u.m, u.n, blocks, tuple(c for c, _ in comps), tuple(r for _, r in comps))


def rank_one_subspace(u: OperatorSubspace, tol: Tolerance | None = None) -> OperatorSubspace:
    """Span of the rank-one operators in a normalizing diagonal bimodule.

    In finite dimensions this is all of ``u``; the equality is checked.
    """
    tol = tol or DEFAULT_TOL
    dec = block_decompose(u, tol)
    r1 = dec.reconstruct(tol)
    if not subspace_equal(r1, u, tol):
        raise AssertionError("rank-one span differs from the space")
    return r1


@dataclass(frozen=True)
class WedderburnBlock:
    """``F U E`` is ``M_{p,q}`` tensored with ``I_r`` (rank E = q r, rank F = p r)."""

    e: np.ndarray
    f: np.ndarray
    p: int
    q: int
    r: int


def wedderburn(u: OperatorSubspace, seed=0, tol: Tolerance | None = None) -> list[WedderburnBlock]:
    """Experimental: split a normalizing space along the center of its linking algebra.

    A random Hermitian central element separates the minimal central
    projections ``diag(F_k, E_k)``; blocks on which ``u`` vanishes are skipped.
    """
    tol = tol or DEFAULT_TOL
    if u.dim == 0:
        return []
    link = linking_algebra(u, tol)
    n, m = u.shape
    center = intersect(link.subspace, commutant(list(link.subspace.basis), tol), tol=tol)
    x = center.random_element(rng_from(seed))
    h = 0.5 * (x + adjoint(x))
    w, q = np.linalg.eigh(h)
    out = []
    for c in spectral_clusters(w, tol):
        z = q[:, c] @ adjoint(q[:, c])
        f, e = z[:n, :n], z[n:, n:]
        piece = hs_orthonormalize(np.einsum("ij,ajk,kl->ail", f, u.basis, e), tol,
                                  shape=u.shape, scale=1.0)
        if piece.dim == 0:
            continue
        re = int(round(np.real(np.trace(e))))
        rf = int(round(np.real(np.trace(f))))
        r = int(round(np.sqrt(re * rf / piece.dim)))
        out.append(WedderburnBlock(e, f, rf // r, re // r, r))
    return out

