"""Optimum multiuser efficiency of random spreading matrices.

Exact efficiency searches, detecting-matrix checks, union bounds and a
seeded Monte Carlo harness.
"""

from .bounds import efficiency_lower_bound, union_bound_binary, union_bound_gaussian
from .detecting import DetectingVerdict, is_detecting, verify_witness
from .efficiency import EfficiencyResult, TernaryVector, eta, eta_branch_bound, eta_bruteforce
from .errors import AlphabetError, ArgumentError, CapacityError, ConfigError, DomainError, UnsupportedEnsembleError
from .matrix import Alphabet, SpreadingMatrix, generate, gram, zeta

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "AlphabetError",
    "ArgumentError",
    "CapacityError",
    "ConfigError",
    "DetectingVerdict",
    "DomainError",
    "EfficiencyResult",
    "SpreadingMatrix",
    "TernaryVector",
    "UnsupportedEnsembleError",
    "efficiency_lower_bound",
    "eta",
    "eta_branch_bound",
    "eta_bruteforce",
    "generate",
    "gram",
    "is_detecting",
    "union_bound_binary",
    "union_bound_gaussian",
    "verify_witness",
    "zeta",
]
