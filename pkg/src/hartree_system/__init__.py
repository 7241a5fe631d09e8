"""Numerics for a critical Hartree-type Hamiltonian elliptic system:
bubbles, their nondegeneracy spectrum, multi-bubble ansatz and the reduced problem."""
from .params_special import DomainError, NonIntegrableError, SystemParams, check_admissible
from .quadrature import AccuracyError, MonteCarloSpec, QuadratureSpec
from .bubble import Bubble, BubblePair, KernelBasisElement, pde_residual
from .nondegeneracy import nondegeneracy_report, spectral_multiplier
from .multibubble import CutoffSpec, PolygonConfig
from .reduced_energy import PotentialPair, ReducedEnergyModel, balance_lambda, solve_reduced_system
from .pohozaev import PohozaevDomain

__version__ = "0.1.0"

__all__ = [
    "AccuracyError", "Bubble", "BubblePair", "CutoffSpec", "DomainError", "KernelBasisElement",
    "MonteCarloSpec", "NonIntegrableError", "PohozaevDomain", "PolygonConfig", "PotentialPair",
    "QuadratureSpec", "ReducedEnergyModel", "SystemParams", "balance_lambda", "check_admissible",
    "nondegeneracy_report", "pde_residual", "solve_reduced_system", "spectral_multiplier",
]
