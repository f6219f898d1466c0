"""Spectral phase portraits of rank-one and rank-two matrix perturbations.

Subpackage map:
  kernel     - dense eigensolves, polynomial algebra, elliptic functions
  lowrank    - the four-polynomial determinant decomposition
  curves     - constant-eigenvalue, envelope, Hopf and triple-point loci
  phase      - region classification over the (rho2, rho1) plane
  integrator - line-attractor network models and gain analysis
  continuum  - integral-coupled diffusion eigenbranches
  allencahn  - nonlocal reaction-diffusion front stability
  cli        - command line front end
"""

from .kernel import Poly, Spectrum, eig_dense
from .lowrank import (
    AKDecomposition,
    LowRankProblem,
    ak_value,
    decompose_cofactor,
    decompose_spectral,
    perturbed_matrix,
)

__all__ = [
    "Poly",
    "Spectrum",
    "eig_dense",
    "AKDecomposition",
    "LowRankProblem",
    "ak_value",
    "decompose_cofactor",
    "decompose_spectral",
    "perturbed_matrix",
]

__version__ = "0.1.0"
