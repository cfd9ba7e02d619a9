"""Error-performance analysis of RIS-assisted SSK and SM links.

Subpackages and modules
-----------------------
specfun
    Laguerre, Bessel, Gaussian Q and Marcum Q functions; adaptive quadrature.
combinatorics
    Integer partitions and Faa di Bruno weights.
model
    System configuration and decision-statistic distributions.
analytic_ped
    Index-error probabilities: double series, numerical oracle, limits.
analytic_sep
    Symbol-error probabilities and bit-error approximations.
montecarlo
    Reproducible link simulation.
sweep, cli
    Parameter sweeps with CSV output.
"""

from .errors import CapacityError, ContractError, ConvergenceError, DomainError, RisimError
from .model import Constellation, SystemConfig

__version__ = "0.1.0"

__all__ = ["CapacityError", "ContractError", "ConvergenceError", "DomainError", "RisimError",
           "Constellation", "SystemConfig", "__version__"]
