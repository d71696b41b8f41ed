"""Numerical laboratory for the light cones of Lorentz-Finsler Lagrangians.

Modules:

* :mod:`lightcone.autodiff` -- batched second-order forward-mode differentiation;
* :mod:`lightcone.expr` -- the Lagrangian expression language;
* :mod:`lightcone.core` -- Lagrangians, fundamental tensor, causal classes, validity;
* :mod:`lightcone.atlas` -- sphere sampling, cone components, convexity;
* :mod:`lightcone.legendre` -- Legendre map, Hamiltonian, polar cones, antipodal solvers;
* :mod:`lightcone.inequalities` -- reverse Cauchy-Schwarz/triangle, hyperplanes, support;
* :mod:`lightcone.catalogue` -- reference Lagrangians with expected verdicts;
* :mod:`lightcone.cli` -- the ``lightcone`` command.
"""

__version__ = "0.1.0"

from .autodiff import DomainError, Taylor2
from .core import (HOPF4, LagrangianSpec, beem2, beem3, beem_validity_scan, classify,
                   from_expression, metric_at, minkowski, randers4)
from .expr import ExpressionError, parse

__all__ = [
    "DomainError", "Taylor2", "HOPF4", "LagrangianSpec", "beem2", "beem3", "beem_validity_scan",
    "classify", "from_expression", "metric_at", "minkowski", "randers4", "ExpressionError", "parse",
    "__version__",
]
