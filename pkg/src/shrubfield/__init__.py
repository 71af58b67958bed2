"""Analytic vector fields on the 2-sphere with prescribed limit behavior.

The package builds, from a combinatorial shrub description, a polynomial (or
arc-extended) function on the sphere and the tangent vector field it induces,
then integrates orbits and checks their limit sets numerically.
"""

__version__ = "0.1.0"
