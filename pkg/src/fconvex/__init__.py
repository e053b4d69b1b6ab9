"""Support functions, area measures and the Christoffel problem for F-convex sets in Minkowski space."""

from . import area, christoffel, lorentz, measures, one_dim, polyhedral, support

__version__ = "0.1.0"
