"""alelab: a numerical laboratory for Ricci-de Turck flow on cohomogeneity-one
ALE geometries (Eguchi-Hanson family and the flat cone).

The package evolves SU(2)-invariant diagonal metrics

    g = f(u)^2 du^2 + a(u)^2 s1^2 + b(u)^2 s2^2 + c(u)^2 s3^2

on a radial grid, where u is geodesic distance from the bolt and s1..s3 are
the left-invariant coframe on S^3/Z2 normalized so that s1^2+s2^2+s3^2 is the
unit round metric.  On top of that ansatz it provides curvature operators, the
Lichnerowicz Laplacian and its heat flow, gauge projections onto the
Ricci-flat family, decay-rate fitting, and scalar-curvature experiments.
"""

from .errors import (
    AlelabError,
    ConfigurationError,
    ContractViolation,
    DomainError,
    GaugeError,
    NumericError,
)

__version__ = "0.1.0"

__all__ = [
    "AlelabError",
    "ConfigurationError",
    "ContractViolation",
    "DomainError",
    "GaugeError",
    "NumericError",
    "__version__",
]
