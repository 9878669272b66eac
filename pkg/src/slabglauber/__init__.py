"""Zero-temperature Glauber (coarsening) dynamics on two-dimensional slabs."""

from .lattice import BoundaryCondition, Site, SlabGeometry, degree, index_site, neighbors, site_index
from .dynamics import (
    DynamicsState,
    RunReport,
    SpinConfig,
    hamiltonian,
    is_absorbing,
    is_legal_flip_sequence,
    local_energies,
    local_energy,
    run,
    step,
)
from .certify import CertifiedSet, certify, is_stable_set

__all__ = [
    "BoundaryCondition", "Site", "SlabGeometry", "degree", "index_site", "neighbors",
    "site_index", "DynamicsState", "RunReport", "SpinConfig", "hamiltonian", "is_absorbing",
    "is_legal_flip_sequence", "local_energies", "local_energy", "run", "step",
    "CertifiedSet", "certify", "is_stable_set",
]
