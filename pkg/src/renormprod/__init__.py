"""Wavelet renormalization of products, Hardy-type quasi-norms and their duals on periodic grids."""
from .grid import Ball, DyadicCube, Grid, GridFunction, integrate
from .wavelets import FilterPair, WaveletExpansion, build_filter, forward, inverse
from .paraproducts import ParaproductResult, S_operator, T_operator, renormalize
from .orlicz import OrliczSpec, luxemburg_norm, phi_log, phi_p, star_norm
from .maximal import Mollifier, grand_maximal, hardy_quasinorm, radial_maximal
from .campanato import DualNormSpec, dual_norm, lipschitz_norm, minimizing_polynomial
from .atoms import cz_decompose, structure_split, validate_atom
from .divcurl import VectorField2D, curl2d, divergence, riesz

__version__ = "0.1.0"

__all__ = [
    "Ball", "DyadicCube", "Grid", "GridFunction", "integrate",
    "FilterPair", "WaveletExpansion", "build_filter", "forward", "inverse",
    "ParaproductResult", "S_operator", "T_operator", "renormalize",
    "OrliczSpec", "luxemburg_norm", "phi_log", "phi_p", "star_norm",
    "Mollifier", "grand_maximal", "hardy_quasinorm", "radial_maximal",
    "DualNormSpec", "dual_norm", "lipschitz_norm", "minimizing_polynomial",
    "cz_decompose", "structure_split", "validate_atom",
    "VectorField2D", "curl2d", "divergence", "riesz",
]
