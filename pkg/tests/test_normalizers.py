import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trokit.generate import random_csl_pair, random_normalizing_pattern, random_sn_operator
from trokit.masa import DiagonalLattice, PatternError, pattern_space
from trokit.normalizers import (
    NotSemiNormalizerError,
    PreconditionError,
    a_module_closure,
    alg_of_lattice,
    invariance_residual,
    maximality_check,
    module_check,
    n_check,
    n_cover,
    nu_phi,
    phi_from,
    sn_check,
    sn_cover,
    space_in_n,
    space_in_sn,
    sum_check,
)
from trokit.numkernel import (
    DimensionMismatch,
    full_space,
    hs_orthonormalize,
    subspace_contains,
    subspace_equal,
    zero_space,
)
from trokit.suites import unit
from trokit.tro import is_normalizing


def E(i, j, n=2, m=2):
    return unit(n, m, i - 1, j - 1)


def span(*mats):
    return hs_orthonormalize(list(mats))


UT2 = alg_of_lattice(DiagonalLattice.nest(2))
D2 = alg_of_lattice(DiagonalLattice.all_subsets(2))
M2 = alg_of_lattice(DiagonalLattice(2, frozenset({frozenset(), frozenset({0, 1})})))
I2 = np.eye(2)


class TestAlgebras:
    def test_upper_triangular(self):
        assert UT2.algebra.dim == 3
        assert subspace_equal(UT2.algebra, span(E(1, 1), E(1, 2), E(2, 2)))
        assert subspace_equal(UT2.diagonal, span(E(1, 1), E(2, 2)))

    def test_trivial_and_boolean(self):
        assert M2.algebra.dim == 4
        assert subspace_equal(D2.algebra, span(E(1, 1), E(2, 2)))

    def test_rejects_non_lattice(self):
        with pytest.raises(PatternError):
            alg_of_lattice(DiagonalLattice(2, frozenset({frozenset({0}), frozenset({1})})))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_members_invariant_and_closed(self, seed):
        la, _ = random_csl_pair(seed, max_dim=5)
        alg = alg_of_lattice(la)
        assert subspace_contains(alg.algebra, np.eye(la.dim))[0]
        for p in alg.projections():
            assert invariance_residual(p, alg.algebra) <= 1e-12
        basis = alg.algebra.basis
        for x in basis:
            for y in basis:
                assert subspace_contains(alg.algebra, x @ y)[0]


class TestChecks:
    def test_sn_examples(self):
        assert sn_check(E(2, 1), UT2, UT2).verdict
        assert sn_check(I2, UT2, UT2).verdict
        rep = sn_check(E(1, 1) + E(1, 2), D2, D2)
        assert not rep.verdict
        assert rep.witnesses and np.allclose(rep.witnesses[0].element, E(1, 1))

    def test_n_examples(self):
        assert n_check(E(2, 1), UT2, UT2).verdict
        assert n_check(E(1, 2), D2, D2).verdict
        assert not n_check(E(1, 1) + E(1, 2), D2, D2).verdict

    def test_shape_check(self):
        with pytest.raises(DimensionMismatch):
            sn_check(np.eye(3), UT2, UT2)


class TestCovers:
    def test_phi_of_lower_unit(self):
        phi = phi_from(E(2, 1), UT2, UT2.lattice)
        vals = [phi(p) for p in UT2.projections()]
        assert np.allclose(vals[0], 0) and np.allclose(vals[1], I2) and np.allclose(vals[2], I2)

    def test_phi_of_zero_and_identity(self):
        phi = phi_from(np.zeros((2, 2)), UT2, UT2.lattice)
        assert all(np.allclose(phi(p), 0) for p in UT2.projections())
        ident = phi_from(I2, UT2, UT2.lattice, a=UT2)
        assert all(np.allclose(ident(p), p) for p in UT2.projections())

    def test_phi_rejects_non_semi_normalizer(self):
        with pytest.raises(NotSemiNormalizerError):
            phi_from(E(1, 1) + E(1, 2), D2, D2.lattice, a=D2)

    def test_nu_phi(self):
        u = nu_phi(phi_from(E(2, 1), UT2, UT2.lattice))
        assert subspace_equal(u, span(E(1, 1), E(2, 1)))
        assert nu_phi(phi_from(np.zeros((2, 2)), UT2, UT2.lattice)).dim == 0

    def test_sn_cover_examples(self):
        rep = sn_cover(E(2, 1), UT2, UT2)
        assert rep.verdict and rep.cover[1].dim == 2 and not rep.details["failing_basis"]
        ident = sn_cover(I2, UT2, UT2)
        assert ident.verdict and subspace_equal(ident.cover[1], UT2.diagonal)
        assert sn_cover(np.zeros((2, 2)), UT2, UT2).cover[1].dim == 0

    def test_sn_cover_passes_through_failures(self):
        rep = sn_cover(E(1, 1) + E(1, 2), D2, D2)
        assert not rep.verdict and rep.cover is None

    def test_n_cover_examples(self):
        rep = n_cover(E(2, 1), UT2, UT2)
        assert rep.verdict and subspace_contains(rep.cover[1], E(2, 1))[0]
        assert n_cover(np.zeros((2, 2)), UT2, UT2).cover[1].dim == 0
        assert subspace_equal(n_cover(I2, UT2, UT2).cover[1], UT2.diagonal)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_cover_soundness(self, seed):
        la, lb = random_csl_pair(seed, max_dim=5)
        a, b = alg_of_lattice(la), alg_of_lattice(lb)
        t, _ = random_sn_operator(b, a, seed)
        rep = sn_cover(t, b, a)
        assert rep.verdict
        u = rep.cover[1]
        assert space_in_sn(u, b, a)[0]
        assert is_normalizing(u)


class TestSpaceTests:
    def test_lower_with_diagonal_unit(self):
        assert space_in_sn(span(E(1, 1), E(2, 1)), UT2, UT2)[0]

    def test_basis_checks_are_not_enough(self):
        # both basis elements are semi-normalizers of D2, their sum is not
        u = span(E(1, 1), E(1, 2))
        assert sn_check(E(1, 1), D2, D2).verdict and sn_check(E(1, 2), D2, D2).verdict
        ok, wit = space_in_sn(u, D2, D2)
        assert not ok and wit[3] > 0.1

    def test_normalizer_space(self):
        assert space_in_n(span(E(2, 1)), UT2, UT2)[0]
        assert not space_in_n(full_space(2, 2), UT2, UT2)[0]


class TestModuleCheck:
    def test_examples(self):
        assert module_check(span(E(2, 1)), UT2, UT2).verdict
        full = module_check(full_space(2, 2), UT2, UT2)
        assert not full.verdict and full.agrees
        assert module_check(zero_space(2, 2), UT2, UT2).verdict

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            module_check(span(E(2, 1)), UT2, UT2, mode="x")

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(["sn", "n"]))
    def test_agrees_with_elementwise(self, seed, mode):
        la, lb = random_csl_pair(seed, max_dim=4)
        a, b = alg_of_lattice(la), alg_of_lattice(lb)
        u = pattern_space(random_normalizing_pattern(la.dim, lb.dim, seed))
        assert module_check(u, b, a, mode).agrees


class TestModuleClosure:
    def test_examples(self):
        assert subspace_equal(a_module_closure(span(E(2, 1)), UT2, UT2), span(E(2, 1)))
        v = span(E(1, 1) + E(2, 1))
        assert subspace_equal(a_module_closure(v, UT2, UT2), v)
        assert a_module_closure(zero_space(2, 2), UT2, UT2).dim == 0

    def test_rejects_outside(self):
        with pytest.raises(NotSemiNormalizerError):
            a_module_closure(full_space(2, 2), UT2, UT2)


class TestMaximality:
    def test_lower_triangle_precondition(self):
        with pytest.raises(PreconditionError):
            maximality_check(span(E(2, 1)), UT2, UT2)

    def test_diagonal(self):
        rep = maximality_check(span(E(1, 1), E(2, 2)), D2, D2, seed=0)
        assert rep.verdict and rep.empirical and rep.witnesses

    def test_full(self):
        assert maximality_check(full_space(2, 2), M2, M2).verdict

    def test_diagonal_three_dimensional(self):
        la = DiagonalLattice.all_subsets(3)
        a = alg_of_lattice(la)
        u = span(*(unit(3, 3, i, i) for i in range(3)))
        assert maximality_check(u, a, a, seed=0).verdict


class TestSum:
    def test_failing_fixture(self):
        rep = sum_check(E(1, 1), E(1, 2), D2, D2, "n", seed=0)
        assert not rep.verdict and rep.witnesses[0].index == 0

    def test_passing_fixture(self):
        rep = sum_check(E(1, 1), E(2, 2), D2, D2, seed=0)
        assert rep.verdict and subspace_equal(rep.cover, D2.diagonal)
        assert rep.corollary_samples == 20 and rep.corollary_failures == 0

    def test_zero_summand(self):
        rep = sum_check(E(2, 1), np.zeros((2, 2)), UT2, UT2, seed=0)
        assert rep.verdict
        assert subspace_equal(rep.cover, sn_cover(E(2, 1), UT2, UT2).cover[1])

    def test_rejects_bad_summand(self):
        with pytest.raises(NotSemiNormalizerError):
            sum_check(E(1, 1) + E(1, 2), E(1, 1), D2, D2)
