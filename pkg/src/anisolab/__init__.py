"""anisolab: numerical laboratory for fully anisotropic Young functions."""

from .aniso2d import (
    AnisoFn2D,
    RadialFn2D,
    constructed_triple_fn,
    intro_exp_fn,
    power_sum_fn,
    quadratic_fn,
    radial_power_fn,
    trudinger_fn,
)
from .construction import TripleBuild, build_triple, incomparability_certificate
from .tables import MonotoneTable
from .young1d import PiecewiseYoungFn1D, PowerFn, PowerLogFn

__version__ = "0.1.0"

__all__ = [
    "AnisoFn2D",
    "RadialFn2D",
    "MonotoneTable",
    "PiecewiseYoungFn1D",
    "PowerFn",
    "PowerLogFn",
    "TripleBuild",
    "build_triple",
    "incomparability_certificate",
    "constructed_triple_fn",
    "intro_exp_fn",
    "power_sum_fn",
    "quadratic_fn",
    "radial_power_fn",
    "trudinger_fn",
    "__version__",
]
