"""
bimetro: quantum Fisher information, optimal input states and Gaussian
bounds for two-mode linear circuits.
"""

from bimetro._logger import logger
from bimetro._metadata import __author__, __version__
from bimetro.bounds import cramer_rao, gaussian_gap, max_qfi, special_case_qfi
from bimetro.circuit import CircuitCatalog, CircuitSpec, generator, transfer_matrix
from bimetro.fock import TwoModeFockState, mode_rotate, number_moments, qfi_pure
from bimetro.gaussian import GaussianPureState, UnitaryAngles, gaussian_qfi, optimal_gaussian
from bimetro.states import NumberBudget, noon, poissonian_cat, quasi_noon

__all__ = [
    "__author__",
    "__version__",
    "CircuitCatalog",
    "CircuitSpec",
    "GaussianPureState",
    "NumberBudget",
    "TwoModeFockState",
    "UnitaryAngles",
    "cramer_rao",
    "gaussian_gap",
    "gaussian_qfi",
    "generator",
    "logger",
    "max_qfi",
    "mode_rotate",
    "noon",
    "number_moments",
    "optimal_gaussian",
    "poissonian_cat",
    "qfi_pure",
    "quasi_noon",
    "special_case_qfi",
    "transfer_matrix",
]
