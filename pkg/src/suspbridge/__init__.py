"""Modal simulation of a suspension bridge: cable equilibrium, weighted
eigenbasis, hanger slackening, nonlocal cable stretching, energy audit and
a Picard fixed-point oracle.
"""

from .cable import CableParams, CableProfile, compare_sag_conventions, solve_cable
from .dynamics import BridgeParams, BridgeSystem, EnergyBreakdown, ModalState, build_system, energy, modal_rhs
from .errors import BlowUpError, BridgeError, DivergenceError, HorizonTooLargeError, NumericalError, ParameterError
from .integration import IntegratorConfig, PicardConfig, picard_solve, run
from .spectral import SpectralBasis, solve_weighted_eigenbasis

__version__ = "0.1.0"

__all__ = [
    "CableParams",
    "CableProfile",
    "solve_cable",
    "compare_sag_conventions",
    "BridgeParams",
    "BridgeSystem",
    "EnergyBreakdown",
    "ModalState",
    "build_system",
    "energy",
    "modal_rhs",
    "IntegratorConfig",
    "PicardConfig",
    "run",
    "picard_solve",
    "SpectralBasis",
    "solve_weighted_eigenbasis",
    "BridgeError",
    "ParameterError",
    "NumericalError",
    "DivergenceError",
    "BlowUpError",
    "HorizonTooLargeError",
    "__version__",
]
