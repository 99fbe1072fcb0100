"""Large-N free energy of two-dimensional Coulomb gases on the sphere and on tori.

Submodules: :mod:`specfun` (theta, eta, Hurwitz zeta, Barnes G),
:mod:`geometry` (surfaces, grids, Green functions, spectral Laplacians),
:mod:`functionals` (Liouville, Mabuchi, Aubin-Yau and magnetic functionals),
:mod:`exactpf` (exact partition functions and determinants),
:mod:`expansion` (asymptotic coefficients) and :mod:`harness` (CLI runs).
"""
from .exceptions import AdmissibilityError, ConditioningError, ConfigError, CoulombError
from .geometry import PotentialSpec, SurfaceSpec, make_grid, sphere, torus
from .exactpf import ln_z_sphere_exact, ln_z_sphere_gram, ln_z_theta_torus_exact
from .expansion import ExpansionCoefficients, coeffs_modified, coeffs_plain, eval_expansion
from .estimator import CoulombGasExpansion

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError", "ConditioningError", "ConfigError", "CoulombError",
    "PotentialSpec", "SurfaceSpec", "make_grid", "sphere", "torus",
    "ln_z_sphere_exact", "ln_z_sphere_gram", "ln_z_theta_torus_exact",
    "ExpansionCoefficients", "coeffs_modified", "coeffs_plain", "eval_expansion",
    "CoulombGasExpansion",
]
