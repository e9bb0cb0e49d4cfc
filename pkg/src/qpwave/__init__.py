"""Certified Picard solver and diagnostics for dispersive equations with quasi-periodic data."""
from .lattice import FrequencyVector, LatticeBox
from .models import ModelSpec, build_model
from .qpfield import CoefficientField, norm_vk
from .solver import Certificate, SolverParams, Trajectory, certify, picard_solve

__all__ = [
    "Certificate",
    "CoefficientField",
    "FrequencyVector",
    "LatticeBox",
    "ModelSpec",
    "SolverParams",
    "Trajectory",
    "build_model",
    "certify",
    "norm_vk",
    "picard_solve",
]
__version__ = "0.1.0"
