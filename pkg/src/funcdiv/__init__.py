"""f-divergences, affine surface areas and dual transforms of log-concave and
s-concave functions and of convex bodies."""
from . import bodygeom, divergence, funcmodel, generators, quadrature, transforms, verifier
from .divergence import (affine_surface_area, df, df_log_concave, df_s_concave, entropy,
                         kl_divergence, log_divergence, omega, total_mass)
from .funcmodel import LogConcaveFn, ScalarField, SConcaveFn
from .generators import Generator
from .quadrature import IntegralResult
from .transforms import polar_dual, s_dual_function

__version__ = "0.1.0"
