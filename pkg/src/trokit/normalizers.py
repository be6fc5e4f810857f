"""Semi-normalizers and normalizers between CSL algebras on coordinate lattices.

``T`` (from ``C^m`` to ``C^n``) is a semi-normalizer of ``B`` (on ``C^n``)
into ``A`` (on ``C^m``) when ``T^* B T`` lies in ``A``, and a normalizer when
in addition ``T A T^*`` lies in ``B``.  Both algebras are pattern algebras of
lattices of coordinate subsets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .maps import SubspaceMap, map_of, op_space
from .masa import (
    DiagonalLattice,
    PatternError,
    SupportPattern,
    family_pattern,
    pattern_of,
    pattern_space,
)
from .numkernel import (
    DEFAULT_TOL,
    DimensionMismatch,
    OperatorSubspace,
    Tolerance,
    adjoint,
    as_matrix,
    hs_orthonormalize,
    intersect,
    is_projection,
    op_norm,
    orthogonal_complement,
    rng_from,
    subspace_contains,
)
from .tro import NotNormalizingError, essential_part, normalizing_witness, profile

__all__ = [
    "NotSemiNormalizerError",
    "PreconditionError",
    "CslAlgebra",
    "alg_of_lattice",
    "invariance_residual",
    "Witness",
    "NormalizerReport",
    "sn_check",
    "n_check",
    "phi_from",
    "nu_phi",
    "sn_cover",
    "n_cover",
    "space_in_sn",
    "space_in_n",
    "ModuleReport",
    "module_check",
    "a_module_closure",
    "MaximalityReport",
    "maximality_check",
    "SumReport",
    "sum_check",
]


class NotSemiNormalizerError(ValueError):
    """An operator or space failed the (semi-)normalizer test; ``report`` says why."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class CslAlgebra:
    lattice: DiagonalLattice
    algebra: OperatorSubspace
    diagonal: OperatorSubspace

    @property
    def dim(self) -> int:
        return self.lattice.dim

    def projections(self) -> list[np.ndarray]:
        return self.lattice.projections()


def alg_of_lattice(lattice: DiagonalLattice) -> CslAlgebra:
    """The algebra of matrices leaving every member of ``lattice`` invariant.

    ``T[y, x]`` may be nonzero exactly when every member containing ``x``
    also contains ``y``.
    """
    if not (lattice.is_lattice() and lattice.has_bottom and lattice.has_top):
        raise PatternError("input must contain the empty and full sets and be closed under union and intersection")
    d = lattice.dim
    allowed = family_pattern(d, lattice.members)
    sym = {(x, y) for x, y in allowed.pairs if (y, x) in allowed}
    return CslAlgebra(lattice, pattern_space(allowed), pattern_space(SupportPattern(d, d, sym)))


def invariance_residual(ell, algebra) -> float:
    """``max ||(I - L) A L||`` over the basis of ``algebra`` (0 for an empty basis)."""
    ell = as_matrix(ell)
    basis = algebra.basis if isinstance(algebra, OperatorSubspace) else np.asarray(algebra)
    if len(basis) == 0:
        return 0.0
    comp = np.eye(ell.shape[0]) - ell
    return float(max(op_norm(comp @ a @ ell) for a in basis))


@dataclass(frozen=True)
class Witness:
    """A basis element of the conjugated algebra whose image leaves the target."""

    side: str
    index: int
    element: np.ndarray
    residual: float


@dataclass
class NormalizerReport:
    subject: object
    verdict: bool
    witnesses: list = field(default_factory=list)
    cover: tuple | None = None
    mode: str = "sn"
    details: dict = field(default_factory=dict)


def _conjugation_witnesses(t, source: CslAlgebra, target: CslAlgebra, side, tol):
    out = []
    for i, b in enumerate(source.algebra.basis):
        ok, dist = subspace_contains(target.algebra, adjoint(t) @ b @ t, tol)
        if not ok:
            out.append(Witness(side, i, b, dist))
    return out


def _check_shapes(t, b: CslAlgebra, a: CslAlgebra):
    t = as_matrix(t)
    if t.shape != (b.dim, a.dim):
        raise DimensionMismatch(f"operator of shape {t.shape} between C^{a.dim} and C^{b.dim}")
    return t


def sn_check(t, b: CslAlgebra, a: CslAlgebra, tol: Tolerance | None = None) -> NormalizerReport:
    """``T^* B_i T`` in ``A`` for every basis element ``B_i`` of ``B``."""
    tol = tol or DEFAULT_TOL
    t = _check_shapes(t, b, a)
    wit = _conjugation_witnesses(t, b, a, "B", tol)
    return NormalizerReport(t, not wit, wit, mode="sn")


def n_check(t, b: CslAlgebra, a: CslAlgebra, tol: Tolerance | None = None) -> NormalizerReport:
    tol = tol or DEFAULT_TOL
    t = _check_shapes(t, b, a)
    wit = _conjugation_witnesses(t, b, a, "B", tol) + _conjugation_witnesses(adjoint(t), a, b, "A", tol)
    return NormalizerReport(t, not wit, wit, mode="n")


def phi_from(t, b: CslAlgebra, lattice: DiagonalLattice, tol: Tolerance | None = None,
             *, a: CslAlgebra | None = None) -> SubspaceMap:
    """The map ``L -> [B T L]`` on every member of ``lattice``.

    When ``a`` is given, ``T`` is first checked to be a semi-normalizer of
    ``b`` into ``a``.
    """
    tol = tol or DEFAULT_TOL
    t = as_matrix(t)
    if a is not None:
        rep = sn_check(t, b, a, tol)
        if not rep.verdict:
            raise NotSemiNormalizerError("operator is not a semi-normalizer", rep)
    carrier = hs_orthonormalize(b.algebra.basis @ t, tol, shape=t.shape,
                                scale=max(op_norm(t), 1.0))
    gens = tuple((ell, map_of(carrier, ell, tol)) for ell in lattice.projections())
    return SubspaceMap(t.shape[1], t.shape[0], gens, carrier, tol)


def nu_phi(phi: SubspaceMap, lattice: DiagonalLattice | None = None,
           tol: Tolerance | None = None) -> OperatorSubspace:
    """``{T : T L = phi(L) T}`` over the members of ``lattice`` (default: the generators)."""
    if lattice is None:
        pairs = phi.generators
    else:
        pairs = [(ell, phi(ell)) for ell in lattice.projections()]
    return op_space(pairs, "intertwiner", tol, shape=(phi.n, phi.m))


def sn_cover(t, b: CslAlgebra, a: CslAlgebra, tol: Tolerance | None = None) -> NormalizerReport:
    """Certify ``T in U_phi`` with every basis element of ``U_phi`` a semi-normalizer.

    A failing ``sn_check`` is returned unchanged (no cover).
    """
    tol = tol or DEFAULT_TOL
    rep = sn_check(t, b, a, tol)
    if not rep.verdict:
        return rep
    phi = phi_from(rep.subject, b, a.lattice, tol)
    u_phi = nu_phi(phi, tol=tol)
    contains, dist = subspace_contains(u_phi, rep.subject, tol)
    bad = [i for i, e in enumerate(u_phi.basis) if not sn_check(e, b, a, tol).verdict]
    rep.cover = (phi, u_phi)
    rep.details.update(contains=contains, distance=dist, failing_basis=bad)
    rep.verdict = contains and not bad
    return rep


def n_cover(t, b: CslAlgebra, a: CslAlgebra, tol: Tolerance | None = None) -> NormalizerReport:
    """``U_phi`` intersected with the adjoint of the cover of ``T^*``."""
    tol = tol or DEFAULT_TOL
    rep = n_check(t, b, a, tol)
    if not rep.verdict:
        return rep
    t = rep.subject
    phi = phi_from(t, b, a.lattice, tol)
    psi = phi_from(adjoint(t), a, b.lattice, tol)
    cover = intersect(nu_phi(phi, tol=tol), nu_phi(psi, tol=tol).adjoint(), tol=tol)
    contains, dist = subspace_contains(cover, t, tol)
    bad = [i for i, e in enumerate(cover.basis) if not n_check(e, b, a, tol).verdict]
    rep.cover = (phi, cover)
    rep.details.update(contains=contains, distance=dist, failing_basis=bad, psi=psi)
    rep.verdict = contains and not bad
    return rep


def space_in_sn(u: OperatorSubspace, b: CslAlgebra, a: CslAlgebra, tol: Tolerance | None = None):
    """Whether every element of ``u`` is a semi-normalizer.

    ``T -> T^* B T`` is a quadratic form, so by polarization it suffices
    that ``T_i^* B_k T_j`` lies in ``A`` for all basis indices.  Returns
    ``(verdict, witness)`` with ``witness = (i, j, k, distance)`` or ``None``.
    """
    tol = tol or DEFAULT_TOL
    if u.shape != (b.dim, a.dim):
        raise DimensionMismatch(f"space of shape {u.shape} between C^{a.dim} and C^{b.dim}")
    if u.dim == 0 or b.algebra.dim == 0:
        return True, None
    t = u.basis
    prods = np.einsum("iyx,kyz,jzw->ijkxw", np.conj(t), b.algebra.basis, t)
    flat = prods.reshape(-1, a.dim * a.dim)
    v = a.algebra.vectors
    res = np.linalg.norm(flat - (flat @ np.conj(v).T) @ v, axis=1)
    worst = int(np.argmax(res))
    if res[worst] <= tol.eq_tol:
        return True, None
    d, k = u.dim, b.algebra.dim
    return False, (worst // (d * k), (worst // k) % d, worst % k, float(res[worst]))


def space_in_n(u: OperatorSubspace, b: CslAlgebra, a: CslAlgebra, tol: Tolerance | None = None):
    ok, wit = space_in_sn(u, b, a, tol)
    if not ok:
        return False, ("B",) + wit
    ok, wit = space_in_sn(u.adjoint(), a, b, tol)
    return ok, (None if ok else ("A",) + wit)


@dataclass
class ModuleReport:
    mode: str
    ortho_ok: bool
    ortho_failures: list
    lattice_ok: bool
    lattice_failures: list
    verdict: bool
    elementwise: bool
    compressed_images: list = field(default_factory=list)
    adjoint_ortho_failures: list = field(default_factory=list)
    bijection_ok: bool | None = None

    @property
    def agrees(self) -> bool:
        return self.verdict == self.elementwise


def _same_projection_sets(ps, qs, tol) -> bool:
    def covered(xs, ys):
        return all(any(op_norm(x - y) <= tol.eq_tol for y in ys) for x in xs)
    return covered(ps, qs) and covered(qs, ps)


def _compressed_images(u, b, a, tol):
    """``chi_o(L_o)`` for ``L`` in ``Lat A`` and their invariance under ``B_o``."""
    u_o, iso1, iso2 = essential_part(u, tol)
    b_o = np.einsum("ji,ajk,kl->ail", np.conj(iso2), b.algebra.basis, iso2)
    images, failures = [], []
    for ell in a.projections():
        ell_o = adjoint(iso1) @ ell @ iso1
        if not is_projection(ell_o, tol):
            failures.append((ell, np.inf))
            continue
        img = map_of(u_o, ell_o, tol)
        images.append(img)
        res = invariance_residual(img, b_o) if len(b_o) else 0.0
        if res > tol.eq_tol:
            failures.append((ell, res))
    return images, failures, iso2


def module_check(u: OperatorSubspace, b: CslAlgebra, a: CslAlgebra, mode: str = "sn",
                 tol: Tolerance | None = None) -> ModuleReport:
    """Decide ``u`` inside ``SN(B, A)`` (or ``N(B, A)``) through its map.

    Condition (i): ``chi(L)`` is orthogonal to ``chi(L^perp)`` for ``L`` in
    ``Lat A``.  Condition (ii): on the essential part, ``chi_o`` sends each
    compressed ``L`` into ``Lat B_o``; in ``n`` mode the image set must be
    exactly the compressed ``Lat B`` and (i) must also hold for ``u^*``.
    The verdict is compared with the direct polarized test.
    """
    tol = tol or DEFAULT_TOL
    if mode not in ("sn", "n"):
        raise ValueError("mode must be 'sn' or 'n'")
    w = normalizing_witness(u, tol)
    if w is not None:
        raise NotNormalizingError("module_check needs a normalizing space", w)
    eye = np.eye(u.m)
    ortho = []
    for ell in a.projections():
        res = op_norm(map_of(u, ell, tol) @ map_of(u, eye - ell, tol))
        if res > tol.eq_tol:
            ortho.append((ell, res))
    adj_fail = []
    if mode == "n":
        ustar = u.adjoint()
        eye2 = np.eye(u.n)
        for mm in b.projections():
            res = op_norm(map_of(ustar, mm, tol) @ map_of(ustar, eye2 - mm, tol))
            if res > tol.eq_tol:
                adj_fail.append((mm, res))
    images, lat_fail, iso2 = ([], [], None)
    if not ortho:
        images, lat_fail, iso2 = _compressed_images(u, b, a, tol)
    bij = None
    if mode == "n" and not ortho and not lat_fail:
        b_lat = [adjoint(iso2) @ mm @ iso2 for mm in b.projections()]
        bij = _same_projection_sets(images, b_lat, tol)
    ortho_ok = not ortho and not adj_fail
    lattice_ok = not ortho and not lat_fail and (bij is not False)
    verdict = ortho_ok and lattice_ok
    elementwise = (space_in_sn if mode == "sn" else space_in_n)(u, b, a, tol)[0]
    return ModuleReport(mode, ortho_ok, ortho, lattice_ok, lat_fail, verdict, elementwise,
                        images, adj_fail, bij)


def _right_module(u: OperatorSubspace, diag: OperatorSubspace, tol) -> OperatorSubspace:
    while True:
        prods = np.einsum("aij,bjk->abik", u.basis, diag.basis).reshape(-1, *u.shape)
        nxt = hs_orthonormalize(np.concatenate([u.basis, prods]), tol, shape=u.shape, scale=1.0)
        if nxt.dim == u.dim:
            return u
        u = nxt


def a_module_closure(u: OperatorSubspace, b: CslAlgebra, a: CslAlgebra,
                     tol: Tolerance | None = None) -> OperatorSubspace:
    """The span of ``u A_d``, a normalizing right ``A_d``-module of semi-normalizers."""
    tol = tol or DEFAULT_TOL
    ok, wit = space_in_sn(u, b, a, tol)
    if not ok:
        raise NotSemiNormalizerError(f"space is not inside SN(B, A); witness {wit}", wit)
    out = _right_module(u, a.diagonal, tol)
    w = normalizing_witness(out, tol)
    if w is not None:
        raise AssertionError(f"module closure is not normalizing: {w}")
    if not space_in_sn(out, b, a, tol)[0]:
        raise AssertionError("module closure left SN(B, A)")
    return out


@dataclass
class MaximalityReport:
    verdict: bool
    trials: int
    enlargement: OperatorSubspace | None = None
    witnesses: list = field(default_factory=list)
    empirical: bool = True


def maximality_check(u: OperatorSubspace, b: CslAlgebra, a: CslAlgebra, trials: int = 20,
                     seed=None, tol: Tolerance | None = None) -> MaximalityReport:
    """Probe whether ``u`` is maximal among linear spaces of semi-normalizers.

    Each trial adds one random operator outside ``u`` and tests the enlarged
    span exactly.  A ``True`` verdict is empirical; ``False`` comes with an
    enlargement that stays inside ``SN(B, A)``.

    Raises :class:`PreconditionError` unless ``u`` is essential, normalizing,
    a right ``A_d``-module and inside ``SN(B, A)``.
    """
    tol = tol or DEFAULT_TOL
    if not profile(u, tol).essential:
        raise PreconditionError("space is not essential")
    if normalizing_witness(u, tol) is not None:
        raise PreconditionError("space is not normalizing")
    if _right_module(u, a.diagonal, tol).dim != u.dim:
        raise PreconditionError("space is not a right module over the diagonal of A")
    if not space_in_sn(u, b, a, tol)[0]:
        raise PreconditionError("space is not inside SN(B, A)")
    comp = orthogonal_complement(u, tol)
    rng = rng_from(seed)
    witnesses = []
    if comp.dim == 0:
        return MaximalityReport(True, 0)
    for _ in range(trials):
        t = comp.random_element(rng)
        big = hs_orthonormalize(np.concatenate([u.basis, t[None]]), tol, shape=u.shape)
        ok, wit = space_in_sn(big, b, a, tol)
        if ok:
            return MaximalityReport(False, trials, big, witnesses)
        witnesses.append(wit)
    return MaximalityReport(True, trials, None, witnesses)


@dataclass
class SumReport:
    mode: str
    verdict: bool
    sum_report: NormalizerReport
    lam: float | None = None
    cover: OperatorSubspace | None = None
    pattern_ok: bool | None = None
    members_ok: bool | None = None
    corollary_samples: int = 0
    corollary_failures: int = 0

    @property
    def witnesses(self) -> list:
        return self.sum_report.witnesses


def sum_check(t, s, b: CslAlgebra, a: CslAlgebra, mode: str = "sn", seed=None,
              tol: Tolerance | None = None, *, samples: int = 20, max_tries: int = 8) -> SumReport:
    """Analyse the sum of two semi-normalizers (normalizers with ``mode="n"``).

    If ``T + S`` passes, a generic ``lam`` in ``[1/2, 2]`` is chosen so that
    ``T + lam S`` has the union of the two supports, its cover is computed and
    checked to contain ``T`` and ``S``, and ``samples`` operators
    ``B1 T A1 + B2 S A2`` with ``B_i``, ``A_i`` in the diagonals are tested.
    """
    tol = tol or DEFAULT_TOL
    check = sn_check if mode == "sn" else n_check
    cover_fn = sn_cover if mode == "sn" else n_cover
    t = _check_shapes(t, b, a)
    s = _check_shapes(s, b, a)
    for name, x in (("T", t), ("S", s)):
        rep = check(x, b, a, tol)
        if not rep.verdict:
            raise NotSemiNormalizerError(f"{name} fails the {mode} test", rep)
    total = check(t + s, b, a, tol)
    if not total.verdict:
        return SumReport(mode, False, total)
    rng = rng_from(seed)
    mask = np.abs(t) > tol.eq_tol
    mask |= np.abs(s) > tol.eq_tol
    for _ in range(max_tries):
        lam = float(rng.uniform(0.5, 2.0))
        if np.all(np.abs(t + lam * s)[mask] > tol.eq_tol):
            break
    cov = cover_fn(t + lam * s, b, a, tol)
    u = cov.cover[1]
    union = SupportPattern.from_mask(mask)
    pattern_ok = union.pairs <= pattern_of(u, tol).pairs
    members_ok = subspace_contains(u, t, tol)[0] and subspace_contains(u, s, tol)[0]
    fails = 0
    for _ in range(samples):
        b1, b2 = (b.diagonal.random_element(rng) for _ in range(2))
        a1, a2 = (a.diagonal.random_element(rng) for _ in range(2))
        if not check(b1 @ t @ a1 + b2 @ s @ a2, b, a, tol).verdict:
            fails += 1
    verdict = cov.verdict and pattern_ok and members_ok and fails == 0
    return SumReport(mode, verdict, total, lam, u, pattern_ok, members_ok, samples, fails)

