import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trokit.io import (
    SchemaError,
    csl_pair_from_doc,
    csl_pair_to_doc,
    dumps,
    lattice_from_doc,
    lattice_to_doc,
    loads,
    matrix_from_doc,
    matrix_to_doc,
    pattern_from_doc,
    pattern_to_doc,
    subspace_from_doc,
    subspace_to_doc,
    tolerance_from_doc,
)
from trokit.masa import DiagonalLattice, SupportPattern
from trokit.numkernel import DEFAULT_TOL, hs_orthonormalize, subspace_equal

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 4), st.integers(0, 4), st.data())
def test_matrix_round_trip_is_bit_exact(r, c, data):
    vals = data.draw(st.lists(st.tuples(finite, finite), min_size=r * c, max_size=r * c))
    a = np.array([complex(x, y) for x, y in vals], dtype=complex).reshape(r, c)
    text = dumps(matrix_to_doc(a))
    back = matrix_from_doc(loads(text))
    assert back.shape == a.shape
    assert np.array_equal(back.view(np.float64), a.view(np.float64))
    assert dumps(matrix_to_doc(back)) == text


def test_canonical_form():
    assert dumps({"b": 1, "a": [1.0, 0.5, True, None]}) == '{"a":[1.0,0.5,true,null],"b":1}'
    assert json.loads(dumps({"x": 1e300})) == {"x": 1e300}
    with pytest.raises(SchemaError):
        dumps({"x": math.nan})


@pytest.mark.parametrize("doc", [
    {"rows": 1, "cols": 1, "entries": [[1.0]]},
    {"rows": 1, "cols": 2, "entries": [[1.0, 0.0]]},
    {"rows": -1, "cols": 1, "entries": []},
    {"rows": 1, "cols": 1, "entries": [["1", 0]]},
    {"kind": "pattern", "rows": 1, "cols": 1, "entries": [[1, 0]]},
    [1, 2],
])
def test_matrix_schema_errors(doc):
    with pytest.raises(SchemaError):
        matrix_from_doc(doc)


def test_invalid_json():
    with pytest.raises(SchemaError):
        loads("{not json")


def test_subspace_round_trip():
    u = hs_orthonormalize([np.eye(2), np.array([[0, 1j], [0, 0]])])
    doc = loads(dumps(subspace_to_doc(u)))
    assert doc["kind"] == "subspace" and doc["m"] == doc["n"] == 2
    assert subspace_equal(subspace_from_doc(doc), u)


def test_subspace_shape_mismatch():
    doc = subspace_to_doc([np.eye(2)], shape=(2, 2))
    doc["m"] = 3
    with pytest.raises(SchemaError):
        subspace_from_doc(doc)


def test_pattern_round_trip_is_one_based():
    kappa = SupportPattern(3, 2, frozenset({(0, 1), (2, 0)}))
    doc = pattern_to_doc(kappa)
    assert doc["pairs"] == [[1, 2], [3, 1]]
    assert pattern_from_doc(loads(dumps(doc))) == kappa
    with pytest.raises(SchemaError):
        pattern_from_doc({"m": 2, "n": 2, "pairs": [[3, 1]]})


def test_lattice_and_pair_round_trip():
    la, lb = DiagonalLattice.nest(3), DiagonalLattice.all_subsets(2)
    assert lattice_to_doc(la)["members"] == [[], [1], [1, 2], [1, 2, 3]]
    assert lattice_from_doc(lattice_to_doc(la)) == la
    assert csl_pair_from_doc(loads(dumps(csl_pair_to_doc(la, lb)))) == (la, lb)
    with pytest.raises(SchemaError):
        lattice_from_doc({"dim": 2, "members": [[0]]})


def test_tolerance_overrides():
    assert tolerance_from_doc({}) == DEFAULT_TOL
    assert tolerance_from_doc({"tol": {"eq_tol": 1e-6}}).eq_tol == 1e-6
    with pytest.raises(SchemaError):
        tolerance_from_doc({"tol": {"bogus": 1}})
    with pytest.raises(SchemaError):
        tolerance_from_doc({"tol": {"rank_tol": -1}})
