"""Finite-dimensional toolkit for normalizing operator spaces, masa-bimodules
and semi-normalizers of CSL algebras."""

from .numkernel import DEFAULT_TOL, OperatorSubspace, Tolerance, hs_orthonormalize
from .tro import block_decompose, is_normalizing, linking_algebra, triple_closure
from .maps import SubspaceMap, map_of, op_space, ref_hull_sampled
from .masa import DiagonalLattice, SupportPattern, is_normalizing_pattern, pattern_space
from .normalizers import alg_of_lattice, n_check, n_cover, sn_check, sn_cover, sum_check

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOL",
    "OperatorSubspace",
    "Tolerance",
    "hs_orthonormalize",
    "block_decompose",
    "is_normalizing",
    "linking_algebra",
    "triple_closure",
    "SubspaceMap",
    "map_of",
    "op_space",
    "ref_hull_sampled",
    "DiagonalLattice",
    "SupportPattern",
    "is_normalizing_pattern",
    "pattern_space",
    "alg_of_lattice",
    "n_check",
    "n_cover",
    "sn_check",
    "sn_cover",
    "sum_check",
]
