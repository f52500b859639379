"""Numerical toolkit for the Robin function of strongly pseudoconvex domains and its Kahler metric.

Modules
-------
domains
    Defining functions, boundary geometry and normalizations.
halfspace, moments
    Closed forms on the model half-space and the hyperplane integrals behind them.
robin
    Robin-function backends (closed-form ball and half-space, method of fundamental solutions).
metric
    The metric with potential ``log(-Lambda)``, its inverse, determinant and derivatives.
geodesics
    Geodesic integration and the near-boundary convexity scan.
asymptotics
    Boundary limits of scaled derivatives along inner normals.
acceptance, cli
    The executable acceptance suite and the command-line interface.
"""

from .domains import (AffineSpec, DomainError, DomainSpec, PolynomialSpec, ball, custom_polynomial,
                      ellipsoid, halfspace, normalize_dagger, perturbed_ball, spec_from_dict)
from .metric import MetricData, metric_data
from .robin import RobinEval, make_backend, robin_derivatives

__version__ = "0.1.0"

__all__ = [
    "AffineSpec", "DomainError", "DomainSpec", "PolynomialSpec", "ball", "custom_polynomial",
    "ellipsoid", "halfspace", "normalize_dagger", "perturbed_ball", "spec_from_dict",
    "MetricData", "metric_data", "RobinEval", "make_backend", "robin_derivatives",
]
