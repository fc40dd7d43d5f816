"""Exact unfolding computations and reduced dynamics for the 1:1 resonance."""
from .polyalg import I2, I3, I4, Poly3
from .transforms import CoeffSet, UnfoldingParams, build_unfolding, check_nondegeneracy, diagonalize_H4
from .tangent import build_generators, codimension_report, construct_F5
from .invariants import hopf_lift, hopf_map, s1_act, full_flow_field
from .poisson import bracket, bracket_generators, reduced_vector_field

__all__ = [
    "I2", "I3", "I4", "Poly3", "CoeffSet", "UnfoldingParams", "build_unfolding",
    "check_nondegeneracy", "diagonalize_H4", "build_generators", "codimension_report",
    "construct_F5", "hopf_lift", "hopf_map", "s1_act", "full_flow_field", "bracket",
    "bracket_generators", "reduced_vector_field",
]
__version__ = "0.1.0"
