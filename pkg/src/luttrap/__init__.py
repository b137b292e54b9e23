"""Luttinger-model solver for interacting spinless fermions in a 1D harmonic trap."""

from .couplings import (
    PotentialSpec,
    dipole_potential,
    estimate_v1,
    matrix_element_asymptotic,
    matrix_element_exact,
    species_enhancement,
    vdw_potential,
)
from .observables import density, duality_check, friedel_metrics, momentum
from .occupations import OccupationMatrix, occ_general, occ_im1, occ_im2, occupation_matrix, sum_rule
from .trapmodel import InteractionModel, ModelInvalidError, TrapConfig, derive_trap, validate_model

__version__ = "0.1.0"

__all__ = [
    "InteractionModel",
    "ModelInvalidError",
    "OccupationMatrix",
    "PotentialSpec",
    "TrapConfig",
    "density",
    "derive_trap",
    "dipole_potential",
    "duality_check",
    "estimate_v1",
    "friedel_metrics",
    "matrix_element_asymptotic",
    "matrix_element_exact",
    "momentum",
    "occ_general",
    "occ_im1",
    "occ_im2",
    "occupation_matrix",
    "species_enhancement",
    "sum_rule",
    "validate_model",
    "vdw_potential",
]
