"""Numerical laboratory for the quadratic Schrodinger equation i u_t + u_xx = kappa conj(u)^2
on the torus: spectral states, free flow, Bourgain-space norms, Picard iteration and
checks of the estimates behind the smoothing of the first iterate."""

__version__ = "0.1.0"

from .expsum import ExpSumField
from .picard import (ContractionReport, NormSpec, duhamel, duhamel_field, first_iterate,
                     first_iterate_field, picard_solve)
from .propagator import SpaceTimeField, conjugate_square, evolve, sample_free_field
from .spectral import FourierState, edge_data, hsp_norm, random_data, rescale
from .window import Window
from .xsb import TauGrid, XsbNorm, restriction_norm, xsb_norm

__all__ = [
    "__version__", "FourierState", "hsp_norm", "edge_data", "random_data", "rescale",
    "SpaceTimeField", "evolve", "sample_free_field", "conjugate_square", "ExpSumField",
    "Window", "TauGrid", "XsbNorm", "xsb_norm", "restriction_norm",
    "first_iterate", "first_iterate_field", "duhamel", "duhamel_field",
    "NormSpec", "ContractionReport", "picard_solve",
]
