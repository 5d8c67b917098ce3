"""Radial graphs over Sasaki sphere bundles and their prescribed-curvature equations."""

from .bundle_geometry import BundleSpec, FourierSeries, MetricField, SasakiEngine, TotalPoint
from .continuation import SolverOptions, solve_horizontal, solve_vertical
from .grid import AnalyticField, ScalarField, SigmaGrid
from .pde_core import CurvatureSpec, combined_residual, horizontal_residual, linearize, vertical_residual

__version__ = "0.1.0"

__all__ = [
    "AnalyticField",
    "BundleSpec",
    "CurvatureSpec",
    "FourierSeries",
    "MetricField",
    "SasakiEngine",
    "ScalarField",
    "SigmaGrid",
    "SolverOptions",
    "TotalPoint",
    "combined_residual",
    "horizontal_residual",
    "linearize",
    "solve_horizontal",
    "solve_vertical",
    "vertical_residual",
]
