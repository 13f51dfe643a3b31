"""Exact Hecke-operator lattice combinatorics, resonator construction and
archimedean spherical-function diagnostics for PGL(n)."""

from heckeamp.lattices import (
    AdaptedLattice,
    CapacityError,
    Cotype,
    PrimeContext,
    SubgroupHNF,
    cotype_of,
    dual_subgroup,
    enumerate_adapted_overlattices,
    enumerate_subgroups,
    normalize_cotype,
    relative_cotype,
)

__version__ = "0.1.0"
