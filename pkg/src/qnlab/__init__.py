"""qnlab: a desk-scale laboratory for quasi-neutral quantum dynamics.

Solvers for the Schrodinger equation coupled to a (linear or Boltzmann)
Poisson field on the torus, the isothermal Euler limit system, nonlinear
elliptic potential solves for smooth and particle densities, the modulated
energies that compare the two dynamics, and a CLI harness for reproducible
experiments and parameter sweeps.
"""

__version__ = "0.1.0"

from . import errors  # noqa: F401
from .grid import ComplexField, RealField, TorusGrid  # noqa: F401
