"""Pseudo-spectral lattice solver for the periodic time-dependent Schroedinger equation."""

__version__ = "0.1.0"

from .antialias import AntiAliasSet, build, verify_minimal
from .lattice import LatticeSpec, enumerate_points, in_dual, residue, validate_canonical
from .spectral import CoefficientField, SampleField, analyze, evaluate, synthesize
from .tdse import ProblemSpec, StrangPropagator, energy, l2_norm, propagate, strang_step

__all__ = [
    "AntiAliasSet", "CoefficientField", "LatticeSpec", "ProblemSpec", "SampleField", "StrangPropagator",
    "analyze", "build", "energy", "enumerate_points", "evaluate", "in_dual", "l2_norm", "propagate",
    "residue", "strang_step", "synthesize", "validate_canonical", "verify_minimal",
]
