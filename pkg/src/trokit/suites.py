"""Named verification suites over seeded random and exhaustive instances.

Every suite returns a :class:`VerifyReport`; an empty failure list means
every invariant held on every instance.  Default scales are the ones used by
the acceptance run and can be overridden by keyword.
"""

from __future__ import annotations

import functools
import hashlib
import inspect
import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from . import generate as gen
from .io import dumps
from .maps import is_ortho_map_on, is_reflexive_certified
from .masa import (
    DiagonalLattice,
    SupportPattern,
    boolean_closure,
    diagonal_projection,
    family_pattern,
    is_normalizing_pattern,
    left_semilattice,
    pattern_components,
    pattern_space,
    rank_one_sum,
)
from .normalizers import (
    alg_of_lattice,
    invariance_residual,
    module_check,
    n_check,
    sn_check,
    sn_cover,
    space_in_sn,
    sum_check,
)
from .numkernel import (
    DEFAULT_TOL,
    Tolerance,
    adjoint,
    hs_norm,
    hs_orthonormalize,
    op_norm,
    rng_from,
    sample_commuting_projection,
    random_unitary,
    subspace_contains,
    subspace_equal,
)
from .tro import block_decompose, is_normalizing, partial_isometries, triple_closure

__all__ = ["VerifyReport", "SUITES", "run_suite", "unit"]


@dataclass
class VerifyReport:
    suite: str
    instances: int = 0
    failures: list = field(default_factory=list)
    wall_time: float = 0.0
    checks: dict = field(default_factory=dict)
    parts: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, digest: str, invariant: str, residual) -> None:
        self.failures.append((digest, invariant, float(residual)))

    def count(self, invariant: str, k: int = 1) -> None:
        self.checks[invariant] = self.checks.get(invariant, 0) + k

    def to_doc(self, timing: bool = True) -> dict:
        doc = {
            "suite": self.suite,
            "instances": self.instances,
            "ok": self.ok,
            "checks": dict(self.checks),
            "failures": [{"instance": d, "invariant": i, "residual": r} for d, i, r in self.failures],
        }
        if timing:
            doc["wall_time"] = round(self.wall_time, 3)
        if self.parts:
            doc["parts"] = [p.to_doc(timing) for p in self.parts]
        return doc

    def summary(self) -> str:
        status = "PASS" if self.ok else f"FAIL ({len(self.failures)} failures)"
        return f"{self.suite}: {self.instances} instances, {status}, {self.wall_time:.2f}s"


def _digest(**params) -> str:
    return hashlib.sha256(dumps(params).encode()).hexdigest()[:12]


def unit(n: int, m: int, y: int, x: int) -> np.ndarray:
    """Matrix unit with a one at row ``y``, column ``x`` (0-based)."""
    e = np.zeros((n, m), dtype=complex)
    e[y, x] = 1.0
    return e


def _timed(fn):
    default_budget = inspect.signature(fn).parameters["budget"].default

    @functools.wraps(fn)
    def wrapper(seed: int = 0, tol: Tolerance | None = None, **kw):
        kw.setdefault("budget", default_budget)
        t0 = time.perf_counter()
        rep = fn(seed, tol or DEFAULT_TOL, **kw)
        rep.wall_time = time.perf_counter() - t0
        if kw["budget"] is not None and rep.wall_time > kw["budget"]:
            rep.fail("suite", "runtime-budget", rep.wall_time)
        return rep

    return wrapper


def _tro_instances(seed, instances):
    for s in gen.spawn(seed, instances):
        gens, u = gen.random_tro(s)
        yield s, gens, u


@_timed
def tro_reflexive(seed, tol, instances: int = 200, budget: float | None = 60.0):
    """Sampled reflexive hull of the triple closure of random generators equals the closure."""
    rep = VerifyReport("tro-reflexive")
    for s, gens, u in _tro_instances(seed, instances):
        rep.instances += 1
        d = _digest(suite="tro-reflexive", seed=s)
        ok, excess = is_reflexive_certified(u, seed=s, tol=tol, return_excess=True)
        rep.count("reflexive")
        if not ok:
            rep.fail(d, "reflexive", excess.dim)
        if not all(subspace_contains(u, g, tol)[0] for g in gens):
            rep.fail(d, "closure-extensive", 1)
    return rep


def _ustar_u(u, tol):
    prods = np.einsum("akj,bkl->abjl", np.conj(u.basis), u.basis).reshape(-1, u.m, u.m)
    return hs_orthonormalize(prods, tol, shape=(u.m, u.m), scale=1.0)


@_timed
def ortho(seed, tol, instances: int = 200, projections: int = 50, budget: float | None = None):
    """Projections commuting with ``U^*U`` satisfy the ortho-map condition; generic ones do not."""
    rep = VerifyReport("ortho")
    for s, _, u in _tro_instances(seed, instances):
        rep.instances += 1
        d = _digest(suite="ortho", seed=s)
        gens = list(_ustar_u(u, tol).basis)
        rng = rng_from([s, 1])
        ls = [sample_commuting_projection(gens, rng, tol, dim=u.m) for _ in range(projections)]
        res = is_ortho_map_on(u, ls, tol)
        rep.count("orthogonality", len(ls))
        for _, r in res.failures:
            rep.fail(d, "orthogonality", r)
        # converse on one generic projection
        k = int(rng.integers(1, u.m))
        q = random_unitary(rng, u.m)[:, :k]
        p = q @ adjoint(q)
        comm = max((op_norm(p @ g - g @ p) for g in gens), default=0.0)
        if comm > 1e3 * tol.eq_tol:
            rep.count("converse")
            if is_ortho_map_on(u, [p], tol).ok:
                rep.fail(d, "converse", comm)
    return rep


@_timed
def pattern_oracle(seed, tol, size: int = 3, budget: float | None = 10.0):
    """The biclique test agrees with the triple-closure oracle on every ``size x size`` pattern."""
    rep = VerifyReport("pattern-oracle")
    cells = [(x, y) for x in range(size) for y in range(size)]
    for bits in range(1 << len(cells)):
        kappa = SupportPattern(size, size, frozenset(c for i, c in enumerate(cells) if bits >> i & 1))
        rep.instances += 1
        ok, res = is_normalizing_pattern(kappa)
        ps = pattern_space(kappa)
        closure = triple_closure(ps.basis, tol, shape=ps.shape)
        oracle = closure.dim == ps.dim and subspace_equal(closure, ps, tol)
        rep.count("agreement")
        if ok != oracle or ok != is_normalizing(ps, tol):
            rep.fail(f"mask={bits}", "agreement", 1)
        if ok:
            rep.count("labels")
            if res.pattern() != kappa:
                rep.fail(f"mask={bits}", "labels", 1)
        else:
            x, y = res
            rep.count("witness")
            if (x, y) in kappa or not subspace_contains(closure, unit(size, size, y, x), tol)[0]:
                rep.fail(f"mask={bits}", "witness", 1)
    return rep


def _check_blocks(rep, kappa, digest, tol):
    u = pattern_space(kappa)
    dec = block_decompose(u, tol)
    rep.count("reconstruction")
    if not subspace_equal(dec.reconstruct(tol), u, tol):
        rep.fail(digest, "reconstruction", 1)
    es = sum((e for e, _ in dec.blocks), np.zeros((kappa.m, kappa.m)))
    fs = sum((f for _, f in dec.blocks), np.zeros((kappa.n, kappa.n)))
    rep.count("orthogonal-families")
    res = max(op_norm(es @ es - es), op_norm(fs @ fs - fs))
    if res > tol.eq_tol:
        rep.fail(digest, "orthogonal-families", res)


@_timed
def blocks(seed, tol, size: int = 3, random_instances: int = 100, random_size: int = 6,
           budget: float | None = None):
    """Block decompositions reconstruct every normalizing pattern space."""
    rep = VerifyReport("blocks")
    cells = [(x, y) for x in range(size) for y in range(size)]
    for bits in range(1 << len(cells)):
        kappa = SupportPattern(size, size, frozenset(c for i, c in enumerate(cells) if bits >> i & 1))
        if is_normalizing_pattern(kappa)[0]:
            rep.instances += 1
            _check_blocks(rep, kappa, f"mask={bits}", tol)
    for s in gen.spawn(seed, random_instances):
        rep.instances += 1
        kappa = gen.random_normalizing_pattern(random_size, random_size, s)
        _check_blocks(rep, kappa, _digest(suite="blocks", seed=s), tol)
    return rep


@_timed
def isometries(seed, tol, instances: int = 100, budget: float | None = None):
    """Phases of random elements are partial isometries in ``U`` spanning ``U``."""
    rep = VerifyReport("isometries")
    for s in gen.spawn(seed, instances):
        rep.instances += 1
        d = _digest(suite="isometries", seed=s)
        _, u = gen.random_tro(s)
        vs = partial_isometries(u, max(4 * u.dim, 1), seed=s, tol=tol)
        rep.count("span")
        span = hs_orthonormalize(vs, tol, shape=u.shape) if vs else None
        if span is None or span.dim != u.dim:
            rep.fail(d, "span", u.dim - (span.dim if span else 0))
        for v in vs:
            rep.count("partial-isometry")
            r = hs_norm(v @ adjoint(v) @ v - v)
            if r > 1e-8:
                rep.fail(d, "partial-isometry", r)
            dist = subspace_contains(u, v, tol)[1]
            if dist > 1e-8:
                rep.fail(d, "membership", dist)
    return rep


@_timed
def rankone(seed, tol, instances: int = 100, budget: float | None = None):
    """Supported operators of rank ``r`` split into exactly ``r`` dyads inside the pattern."""
    rep = VerifyReport("rankone")
    for s in gen.spawn(seed, instances):
        rep.instances += 1
        d = _digest(suite="rankone", seed=s)
        rng = rng_from(s)
        while True:
            m, n = (int(v) for v in rng.integers(2, 7, size=2))
            kappa = gen.random_normalizing_pattern(m, n, rng)
            cap = sum(min(len(c), len(r)) for c, r in pattern_components(kappa))
            if cap:
                break
        r = int(rng.integers(1, cap + 1))
        t = gen.random_supported_operator(kappa, r, rng)
        if np.linalg.matrix_rank(t) != r:
            rep.fail(d, "known-rank", np.linalg.matrix_rank(t))
            continue
        dyads = rank_one_sum(t, kappa, tol)
        ps = pattern_space(kappa)
        rep.count("dyad-count")
        if len(dyads) != r:
            rep.fail(d, "dyad-count", len(dyads) - r)
        for dy in dyads:
            rep.count("dyad")
            s_ = np.linalg.svd(dy, compute_uv=False)
            if s_[1] > tol.rank_tol * s_[0] or not subspace_contains(ps, dy, tol)[0]:
                rep.fail(d, "dyad", s_[1])
        err = hs_norm(sum(dyads, np.zeros_like(t)) - t)
        rep.count("reconstruction")
        if err > 1e-10:
            rep.fail(d, "reconstruction", err)
    return rep


def _ut2():
    return alg_of_lattice(DiagonalLattice.nest(2))


@_timed
def fixture(seed, tol, budget: float | None = None):
    """The upper-triangular 2x2 example."""
    rep = VerifyReport("fixture")
    ut = _ut2()
    e = {(i, j): unit(2, 2, i - 1, j - 1) for i in (1, 2) for j in (1, 2)}
    lower = hs_orthonormalize([e[2, 1]], tol)
    checks = {
        "sn(E21)": sn_check(e[2, 1], ut, ut, tol).verdict,
        "sn(E11+E21)": sn_check(e[1, 1] + e[2, 1], ut, ut, tol).verdict,
        "n(E21)": n_check(e[2, 1], ut, ut, tol).verdict,
        "lower-normalizing": is_normalizing(lower, tol),
        "lower-bimodule": _is_bimodule(lower, ut.diagonal, ut.diagonal, tol),
        "E11+lower in SN": space_in_sn(hs_orthonormalize([e[1, 1], e[2, 1]], tol), ut, ut, tol)[0],
        "lower module_check": module_check(lower, ut, ut, "sn", tol).verdict,
    }
    for name, ok in checks.items():
        rep.instances += 1
        rep.count(name)
        if ok is not True:
            rep.fail("ut2", name, 1)
    return rep


def _is_bimodule(u, left, right, tol):
    prods = np.einsum("aij,bjk,ckl->abcil", left.basis, u.basis, right.basis).reshape(-1, *u.shape)
    if not len(prods):
        return True
    v = u.vectors
    flat = prods.reshape(len(prods), -1)
    res = flat - (flat @ np.conj(v).T) @ v if u.dim else flat
    return float(np.max(np.linalg.norm(res, axis=1))) <= tol.eq_tol


@_timed
def sn_cover_suite(seed, tol, instances: int = 100, max_dim: int = 6, budget: float | None = None):
    """Covers of constructed semi-normalizers contain them and consist of semi-normalizers."""
    rep = VerifyReport("sn-cover")
    for s in gen.spawn(seed, instances):
        rep.instances += 1
        d = _digest(suite="sn-cover", seed=s)
        la, lb = gen.random_csl_pair(s, max_dim=max_dim)
        a, b = alg_of_lattice(la), alg_of_lattice(lb)
        t, _ = gen.random_sn_operator(b, a, s)
        res = sn_cover(t, b, a, tol)
        rep.count("cover")
        if res.cover is None:
            rep.fail(d, "input-sn", 1)
            continue
        u = res.cover[1]
        if not res.details["contains"]:
            rep.fail(d, "contains-T", res.details["distance"])
        for i in res.details["failing_basis"]:
            rep.fail(d, "basis-in-SN", i)
        rep.count("space-in-SN")
        if not space_in_sn(u, b, a, tol)[0]:
            rep.fail(d, "space-in-SN", 1)
        rep.count("normalizing")
        if not is_normalizing(u, tol):
            rep.fail(d, "normalizing", 1)
        rep.count("bimodule")
        if not _is_bimodule(u, b.diagonal, a.diagonal, tol):
            rep.fail(d, "bimodule", 1)
        rep.count("reflexive")
        if not is_reflexive_certified(u, seed=s, tol=tol):
            rep.fail(d, "reflexive", 1)
    return rep


@_timed
def sums(seed, tol, instances: int = 20, budget: float | None = None):
    """Sum fixtures on the 2x2 diagonal algebra plus random sums inside one pattern."""
    rep = VerifyReport("sum")
    diag = alg_of_lattice(DiagonalLattice.all_subsets(2))
    e11, e12, e22 = unit(2, 2, 0, 0), unit(2, 2, 0, 1), unit(2, 2, 1, 1)

    rep.instances += 1
    bad = sum_check(e11, e12, diag, diag, "n", seed=seed, tol=tol)
    rep.count("fixture-fails")
    if bad.verdict or not bad.witnesses:
        rep.fail("E11,E12", "fixture-fails", 1)

    rep.instances += 1
    good = sum_check(e11, e22, diag, diag, "sn", seed=seed, tol=tol)
    rep.count("fixture-passes")
    if not good.verdict or not subspace_equal(good.cover, diag.diagonal, tol):
        rep.fail("E11,E22", "fixture-passes", 1)
    if good.corollary_failures:
        rep.fail("E11,E22", "corollary", good.corollary_failures)

    for s in gen.spawn(seed, instances):
        rep.instances += 1
        d = _digest(suite="sum", seed=s)
        la, lb = gen.random_csl_pair(s, max_dim=5)
        a, b = alg_of_lattice(la), alg_of_lattice(lb)
        _, kappa = gen.random_sn_operator(b, a, s)
        space = pattern_space(kappa)
        rng = rng_from([s, 2])
        t, s_ = space.random_element(rng), space.random_element(rng)
        res = sum_check(t, s_, b, a, "sn", seed=s, tol=tol)
        rep.count("random-sum")
        if not res.verdict:
            rep.fail(d, "random-sum", res.corollary_failures or 1)
    return rep


@_timed
def lattice(seed, tol, instances: int = 50, max_dim: int = 4, budget: float | None = None):
    """Diagonal invariant projections of ``Alg S_1`` are exactly ``S_1`` and ``0``."""
    rep = VerifyReport("lattice")
    for s in gen.spawn(seed, instances):
        rep.instances += 1
        d = _digest(suite="lattice", seed=s)
        rng = rng_from(s)
        m, n = (int(v) for v in rng.integers(1, max_dim + 1, size=2))
        kappa = gen.random_normalizing_pattern(m, n, rng)
        u = pattern_space(kappa)
        s1 = left_semilattice(u, tol)
        alg = pattern_space(family_pattern(m, s1))
        lat = {frozenset(x) for r in range(m + 1) for x in itertools.combinations(range(m), r)
               if invariance_residual(diagonal_projection(x, m), alg) <= tol.eq_tol}
        rep.count("lat-alg")
        if lat != set(s1) | {frozenset()}:
            rep.fail(d, "lat-alg", len(lat ^ (set(s1) | {frozenset()})))
        comps = pattern_components(kappa)
        k1 = frozenset(x for c, _ in comps for x in c)
        zero_plus = frozenset(range(m)) - k1
        unions = {frozenset().union(*sel) for r in range(len(comps) + 1)
                  for sel in itertools.combinations([frozenset(c) for c, _ in comps], r)}
        rep.count("semilattice")
        if set(s1) != {x | zero_plus for x in unions}:
            rep.fail(d, "semilattice", 1)
        rep.count("ortho-generated")
        if set(boolean_closure(s1, m)) != set(s1) | unions:
            rep.fail(d, "ortho-generated", 1)
    return rep


SUITES = {
    "tro-reflexive": tro_reflexive,
    "ortho": ortho,
    "pattern-oracle": pattern_oracle,
    "blocks": blocks,
    "isometries": isometries,
    "rankone": rankone,
    "fixture": fixture,
    "lattice": lattice,
    "sn-cover": sn_cover_suite,
    "sum": sums,
}


def run_suite(name: str, seed: int = 0, tol: Tolerance | None = None, **overrides) -> VerifyReport:
    """Run one suite, or every suite for ``name == "all"``."""
    if name == "all":
        t0 = time.perf_counter()
        parts = [fn(seed, tol, **_applicable(fn, overrides)) for fn in SUITES.values()]
        rep = VerifyReport("all", sum(p.instances for p in parts), parts=parts)
        for p in parts:
            rep.failures.extend((f"{p.suite}:{d}", i, r) for d, i, r in p.failures)
            rep.checks[p.suite] = p.instances
        rep.wall_time = time.perf_counter() - t0
        return rep
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES) + ['all']}")
    return SUITES[name](seed, tol, **overrides)


def _applicable(fn, overrides):
    params = inspect.signature(fn).parameters
    return {k: v for k, v in overrides.items() if k in params}
