"""Quantization of nearly singular superconducting circuits: constrained reduction versus Born-Oppenheimer limits."""
from .errors import ConvergenceError, DomainError, QflowError
from .netlist import load_netlist, parse_netlist
from .potentials import Cosine, PiecewiseLinear, PowerLaw, Quadratic, SelfSimilar, Sum, Tabulated, potential_eval

__all__ = [
    "ConvergenceError", "DomainError", "QflowError", "load_netlist", "parse_netlist",
    "Cosine", "PiecewiseLinear", "PowerLaw", "Quadratic", "SelfSimilar", "Sum", "Tabulated", "potential_eval",
]
