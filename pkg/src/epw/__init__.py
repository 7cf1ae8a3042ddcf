"""Stable approximation of Helmholtz solutions in the unit ball.

Evanescent plane-wave approximation sets for solutions of the homogeneous
Helmholtz equation on the 3D unit ball, together with the propagative
baseline whose ill-conditioning motivates them: special functions, Wigner
rotation blocks, the spherical-wave basis and its Herglotz-density scaling,
cubature on the sphere, parametric sampling of the evanescent family, and a
regularized least-squares solver with its experiment drivers.
"""

from __future__ import annotations

__version__ = "0.1.0"
