"""Numerical laboratory for symmetry-reduced quantum ergodicity on spheres of revolution."""

from .geometry import ProfileCurve, SurfaceSpec, build_profile, orbit_volume, quotient_measure_density
from .spectral import EigenPair, ModeSpectrum, assemble_mode, closed_form_sphere, solve_mode

__version__ = "0.1.0"

__all__ = [
    "EigenPair",
    "ModeSpectrum",
    "ProfileCurve",
    "SurfaceSpec",
    "assemble_mode",
    "build_profile",
    "closed_form_sphere",
    "orbit_volume",
    "quotient_measure_density",
    "solve_mode",
]
