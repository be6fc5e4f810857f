"""Seeded random instances: operator spaces, patterns, lattices, semi-normalizers."""

from __future__ import annotations

import numpy as np

from .masa import (
    DiagonalLattice,
    LabelPair,
    SupportPattern,
    is_normalizing_pattern,
    pattern_components,
    pattern_space,
)
from .numkernel import random_complex, rng_from
from .tro import triple_closure

__all__ = [
    "spawn",
    "random_generators",
    "random_tro",
    "random_labels",
    "random_normalizing_pattern",
    "random_lattice",
    "random_csl_pair",
    "random_supported_operator",
    "random_sn_operator",
]


def spawn(seed, count: int) -> list[int]:
    """``count`` independent 63-bit child seeds derived from ``seed``."""
    ss = np.random.SeedSequence(seed)
    return [int(c.generate_state(1, np.uint64)[0] >> np.uint64(1)) for c in ss.spawn(count)]


def random_generators(m: int, n: int, k: int, seed) -> list[np.ndarray]:
    rng = rng_from(seed)
    return [random_complex(rng, (n, m)) for _ in range(k)]


def random_tro(seed, m_range=(2, 6), n_range=(2, 6), k_range=(1, 3)):
    """``(generators, closure)`` with sizes drawn uniformly from the inclusive ranges."""
    rng = rng_from(seed)
    m = int(rng.integers(m_range[0], m_range[1] + 1))
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    k = int(rng.integers(k_range[0], k_range[1] + 1))
    gens = [random_complex(rng, (n, m)) for _ in range(k)]
    return gens, triple_closure(gens)


def random_labels(m: int, n: int, seed, labels: int | None = None, p_bottom: float = 0.2) -> LabelPair:
    """Uniform labels from ``range(labels)``; each coordinate is off-support with probability ``p_bottom``."""
    rng = rng_from(seed)
    labels = labels or max(1, (max(m, n) + 1) // 2)

    def draw(k):
        return tuple(None if rng.random() < p_bottom else int(rng.integers(labels)) for _ in range(k))

    return LabelPair(draw(m), draw(n))


def random_normalizing_pattern(m: int, n: int, seed, **kwargs) -> SupportPattern:
    return random_labels(m, n, seed, **kwargs).pattern()


def random_lattice(dim: int, seed, kind: str = "csl") -> DiagonalLattice:
    """A random lattice of coordinate subsets.

    ``nest``: initial segments of a random order.  ``boolean``: all unions of
    the blocks of a random partition.  ``csl``: the lattice generated by a few
    random subsets.
    """
    rng = rng_from(seed)
    if kind == "nest":
        return DiagonalLattice.nest(dim, rng.permutation(dim).tolist())
    if kind == "boolean":
        k = int(rng.integers(1, dim + 1))
        owner = rng.integers(k, size=dim)
        atoms = [set(np.flatnonzero(owner == j).tolist()) for j in range(k)]
        return DiagonalLattice.boolean([a for a in atoms if a], dim)
    if kind == "csl":
        sets = [np.flatnonzero(rng.random(dim) < 0.5).tolist() for _ in range(int(rng.integers(0, 4)))]
        return DiagonalLattice.generated(dim, sets)
    raise ValueError(f"unknown lattice kind {kind!r}")


def random_csl_pair(seed, max_dim: int = 6, min_dim: int = 1):
    """``(lattice_A, lattice_B)`` on ``C^m`` and ``C^n`` of random kinds."""
    rng = rng_from(seed)
    kinds = ("nest", "boolean", "csl")
    m, n = (int(x) for x in rng.integers(min_dim, max_dim + 1, size=2))
    la = random_lattice(m, rng, kinds[int(rng.integers(3))])
    lb = random_lattice(n, rng, kinds[int(rng.integers(3))])
    return la, lb


def random_supported_operator(kappa: SupportPattern, rank: int, seed) -> np.ndarray:
    """A random operator of the given rank supported in a normalizing pattern.

    The rank is split at random across the blocks, each block receiving at
    most its smaller side.
    """
    ok, _ = is_normalizing_pattern(kappa)
    if not ok:
        raise ValueError("pattern is not normalizing")
    rng = rng_from(seed)
    comps = pattern_components(kappa)
    caps = [min(len(c), len(r)) for c, r in comps]
    if rank > sum(caps):
        raise ValueError(f"rank {rank} exceeds the pattern capacity {sum(caps)}")
    share = [0] * len(comps)
    slots = [i for i, c in enumerate(caps) for _ in range(c)]
    for i in rng.choice(len(slots), size=rank, replace=False) if rank else []:
        share[slots[i]] += 1
    t = np.zeros((kappa.n, kappa.m), dtype=complex)
    for (cols, rows), r in zip(comps, share):
        if r:
            t[np.ix_(rows, cols)] = random_complex(rng, (len(rows), r)) @ random_complex(rng, (r, len(cols)))
    return t


def random_sn_operator(b, a, seed, keep: float = 0.7):
    """A nonzero semi-normalizer of ``b`` into ``a``, with a pattern space of semi-normalizers containing it.

    Matrix units are always semi-normalizers between pattern algebras, so a
    support pattern is grown from the pairs in random order, keeping a pair
    only while the whole pattern space stays inside ``SN(b, a)`` (checked
    exactly).  ``T`` is a random element of that space with each coordinate
    kept with probability ``keep``.  Returns ``(T, pattern)``.
    """
    from .normalizers import space_in_sn

    rng = rng_from(seed)
    m, n = a.dim, b.dim
    pairs = [(x, y) for x in range(m) for y in range(n)]
    chosen: set = set()
    for i in rng.permutation(len(pairs)):
        trial = chosen | {pairs[i]}
        if space_in_sn(pattern_space(SupportPattern(m, n, trial)), b, a)[0]:
            chosen = trial
    kappa = SupportPattern(m, n, chosen)
    t = np.zeros((n, m), dtype=complex)
    for x, y in kappa.pairs:
        if rng.random() < keep:
            t[y, x] = complex(*rng.standard_normal(2))
    if not np.any(t):
        x, y = kappa.sorted_pairs()[int(rng.integers(len(kappa)))]
        t[y, x] = 1.0
    return t, kappa
