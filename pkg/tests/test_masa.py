import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trokit.generate import random_normalizing_pattern, random_supported_operator
from trokit.maps import SubspaceMap
from trokit.masa import (
    DiagonalLattice,
    LabelPair,
    PatternError,
    SupportPattern,
    boolean_closure,
    diag_core,
    diagonal_projection,
    family_pattern,
    graph_check,
    is_normalizing_pattern,
    labels_of,
    left_semilattice,
    nest_generators,
    pattern_components,
    pattern_of,
    pattern_space,
    rank_one_sum,
    right_semilattice,
    support_of,
)
from trokit.numkernel import hs_orthonormalize, subspace_equal, zero_space
from trokit.suites import unit
from trokit.tro import is_normalizing, triple_closure


def E(i, j, n=2, m=2):
    return unit(n, m, i - 1, j - 1)


def P(*idx, dim):
    return diagonal_projection([i - 1 for i in idx], dim)


PARITY = SupportPattern(4, 4, frozenset((x, y) for x in range(4) for y in range(4) if (x - y) % 2 == 0))
L_SHAPE = SupportPattern(2, 2, frozenset({(0, 0), (0, 1), (1, 0)}))


class TestSupportPattern:
    def test_rejects_out_of_range(self):
        with pytest.raises(PatternError):
            SupportPattern(2, 2, frozenset({(2, 0)}))

    def test_mask_round_trip(self):
        assert SupportPattern.from_mask(PARITY.mask()) == PARITY
        assert L_SHAPE.mask().tolist() == [[True, True], [True, False]]

    def test_pattern_of(self):
        assert pattern_of(hs_orthonormalize([E(2, 1)])).pairs == {(0, 1)}
        assert pattern_of(hs_orthonormalize([E(1, 1) + E(2, 2)])).pairs == {(0, 0), (1, 1)}
        assert pattern_of(zero_space(2, 2)).pairs == frozenset()
        assert support_of(E(1, 2)).pairs == {(1, 0)}

    def test_pattern_space(self):
        assert pattern_space(SupportPattern(2, 2, frozenset())).dim == 0
        assert pattern_space(SupportPattern.full(3, 2)).dim == 6
        diag = pattern_space(SupportPattern(2, 2, frozenset({(0, 0), (1, 1)})))
        assert subspace_equal(diag, hs_orthonormalize([E(1, 1), E(2, 2)]))


class TestNormalizingPattern:
    def test_parity(self):
        ok, labels = is_normalizing_pattern(PARITY)
        assert ok and labels.f == labels.g == (0, 1, 0, 1)
        assert labels.pattern() == PARITY

    def test_l_shape(self):
        assert is_normalizing_pattern(L_SHAPE) == (False, (1, 1))
        with pytest.raises(PatternError):
            labels_of(L_SHAPE)

    def test_full_rectangle(self):
        ok, labels = is_normalizing_pattern(SupportPattern.full(3, 2))
        assert ok and set(labels.f) == set(labels.g) == {0}

    def test_empty(self):
        ok, labels = is_normalizing_pattern(SupportPattern(3, 2, frozenset()))
        assert ok and labels.f == (None,) * 3

    def test_components(self):
        assert pattern_components(PARITY) == [((0, 2), (0, 2)), ((1, 3), (1, 3))]

    @settings(max_examples=120, deadline=None)
    @given(st.integers(1, 4), st.integers(1, 4), st.data())
    def test_agrees_with_triple_closure(self, m, n, data):
        bits = data.draw(st.lists(st.booleans(), min_size=m * n, max_size=m * n))
        kappa = SupportPattern(m, n, frozenset(c for c, b in zip(itertools.product(range(m), range(n)), bits) if b))
        u = pattern_space(kappa)
        ok, res = is_normalizing_pattern(kappa)
        assert ok == is_normalizing(u)
        if ok:
            assert res.pattern() == kappa
        else:
            x, y = res
            assert (x, y) not in kappa
            closure = triple_closure(list(u.basis), shape=u.shape)
            assert (x, y) in pattern_of(closure)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_labelled_patterns_are_normalizing(self, m, n, seed):
        kappa = random_normalizing_pattern(m, n, seed)
        ok, labels = is_normalizing_pattern(kappa)
        assert ok and labels.pattern() == kappa


class TestGraphCheck:
    def test_examples(self):
        assert graph_check(SupportPattern(2, 2, frozenset({(0, 1)}))) == "graph"
        assert graph_check(SupportPattern(2, 2, frozenset({(0, 0), (0, 1)}))) == "reverse_graph"
        assert graph_check(PARITY) == "neither"


class TestLattice:
    def test_constructors(self):
        nest = DiagonalLattice.nest(3)
        assert nest.sorted_members() == [frozenset(), {0}, {0, 1}, {0, 1, 2}]
        assert DiagonalLattice.all_subsets(3).is_boolean()
        assert len(DiagonalLattice.generated(3, [{0}, {1}])) == 5
        assert nest.is_lattice() and nest.has_bottom and nest.has_top
        assert not nest.is_boolean()
        assert DiagonalLattice.boolean([{0, 2}, {1}]).atoms() == [{0, 2}, {1}]

    def test_rejects_out_of_range(self):
        with pytest.raises(PatternError):
            DiagonalLattice(2, frozenset({frozenset({3})}))

    def test_boolean_closure(self):
        assert boolean_closure([{0}], 3) == frozenset(map(frozenset, [(), (0,), (1, 2), (0, 1, 2)]))

    def test_family_pattern_of_nest_is_upper_triangular(self):
        kappa = family_pattern(2, DiagonalLattice.nest(2).members)
        assert subspace_equal(pattern_space(kappa), hs_orthonormalize([E(1, 1), E(1, 2), E(2, 2)]))


class TestNestGenerators:
    def test_three_atoms(self):
        chain = nest_generators(DiagonalLattice.all_subsets(3))
        expected = [np.zeros((3, 3)), P(1, dim=3), P(1, 2, dim=3), np.eye(3)]
        assert len(chain) == 4 and all(np.allclose(a, b) for a, b in zip(chain, expected))

    def test_trivial(self):
        chain = nest_generators(DiagonalLattice(2, frozenset({frozenset(), frozenset({0, 1})})))
        assert len(chain) == 2 and np.allclose(chain[-1], np.eye(2))

    def test_zero_plus(self):
        lat = DiagonalLattice.boolean([{0}, {1}], 3)
        chain = nest_generators(lat, zero_plus={2})
        expected = [np.zeros((3, 3)), P(1, 3, dim=3), np.eye(3)]
        assert len(chain) == 3 and all(np.allclose(a, b) for a, b in zip(chain, expected))

    def test_rejects_nest(self):
        with pytest.raises(PatternError):
            nest_generators(DiagonalLattice.nest(3))

    def test_generates_the_lattice(self):
        lat = DiagonalLattice.boolean([{0, 3}, {1}, {2, 4}], 5)
        chain = nest_generators(lat)
        sets = [frozenset(np.flatnonzero(np.diag(p).real > 0.5).tolist()) for p in chain]
        assert boolean_closure(sets, 5) == lat.members


class TestRankOneSum:
    def test_diagonal(self):
        kappa = SupportPattern(2, 2, frozenset({(0, 0), (1, 1)}))
        dyads = rank_one_sum(np.diag([1.0, 2.0]), kappa)
        assert len(dyads) == 2
        assert any(np.allclose(d, E(1, 1)) for d in dyads)
        assert any(np.allclose(d, 2 * E(2, 2)) for d in dyads)

    def test_zero(self):
        assert rank_one_sum(np.zeros((2, 2)), SupportPattern.full(2, 2)) == []

    def test_off_pattern_entry(self):
        with pytest.raises(PatternError) as info:
            rank_one_sum(E(1, 2), SupportPattern(2, 2, frozenset({(0, 0)})))
        assert info.value.witness == (1, 0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_exact_rank(self, m, n, seed):
        kappa = random_normalizing_pattern(m, n, seed)
        cap = sum(min(len(c), len(r)) for c, r in pattern_components(kappa))
        r = seed % (cap + 1)
        t = random_supported_operator(kappa, r, seed)
        dyads = rank_one_sum(t, kappa)
        assert len(dyads) == np.linalg.matrix_rank(t) == r
        assert np.allclose(sum(dyads, np.zeros_like(t)), t, atol=1e-10)
        for d in dyads:
            assert np.linalg.matrix_rank(d, tol=1e-8) == 1
            assert not np.any(np.abs(d) * ~kappa.mask() > 1e-12)


class TestDiagCore:
    def test_identity_on_nest(self):
        phi = SubspaceMap(2, 2, tuple((p, p) for p in DiagonalLattice.nest(2).projections()))
        assert subspace_equal(diag_core(phi), hs_orthonormalize([E(1, 1), E(2, 2)]))

    def test_single_identity(self):
        assert diag_core(SubspaceMap(2, 2, ((np.eye(2), np.eye(2)),))).dim == 4

    def test_zero_map(self):
        assert diag_core(SubspaceMap(2, 2, ((np.eye(2), np.zeros((2, 2))),))).dim == 0


class TestSemilattices:
    def test_single_unit(self):
        u = hs_orthonormalize([E(2, 1)])
        assert left_semilattice(u) == {frozenset({1}), frozenset({0, 1})}
        assert right_semilattice(u) == {frozenset(), frozenset({1})}

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
    def test_left_semilattice_is_a_lattice(self, m, n, seed):
        kappa = random_normalizing_pattern(m, n, seed)
        s1 = left_semilattice(pattern_space(kappa))
        assert frozenset(range(m)) in s1
        assert all(a | b in s1 and a & b in s1 for a in s1 for b in s1)


def test_label_pair_pattern():
    labels = LabelPair((0, None, 1), (1, 0))
    assert labels.pattern().pairs == {(0, 1), (2, 0)}
