"""Compartmental lateral-inhibition networks: static-map patterning analysis,
full-network simulation and a 1-D channel diffusion model."""

from .graph import (CompartmentGraph, LaplacianPair, NotEquitable, build_laplacian, check_equitable,
                    parallelogram, two_compartment)
from .network import Network, NetworkState
from .params import DEFAULTS, DomainError, ParameterSet
from .patterning import classify_patterning, compose_Tbar, find_fixed_points, reduced_system
from .simulate import IntegratorControls, Trajectory, estimate_time_constant, integrate

__all__ = [
    "CompartmentGraph", "LaplacianPair", "NotEquitable", "build_laplacian", "check_equitable",
    "parallelogram", "two_compartment", "Network", "NetworkState", "DEFAULTS", "DomainError",
    "ParameterSet", "classify_patterning", "compose_Tbar", "find_fixed_points", "reduced_system",
    "IntegratorControls", "Trajectory", "estimate_time_constant", "integrate",
]
