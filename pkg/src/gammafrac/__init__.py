"""Damage-to-fracture energies with low-order potentials.

Modules
-------
material    elastic tensor, damage law and the constants derived from them
potentials  low-order potentials with recession functions and bound checks
sharp       the sharp-limit energy of explicitly cracked displacements
recovery    recovery sequences and eps-ladder convergence studies
solver      grid discretization and alternating minimization
scenario    JSON scenarios and the workflows behind the command line
"""

from .errors import GammaFracError
from .material import DamageLaw, ElasticTensor, coefficients, energy_bound_constant, sigma_max

__version__ = "0.1.0"

__all__ = ["DamageLaw", "ElasticTensor", "GammaFracError", "coefficients",
           "energy_bound_constant", "sigma_max", "__version__"]
