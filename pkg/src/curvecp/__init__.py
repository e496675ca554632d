"""curvecp: Casimir-Polder potentials near gently curved magneto-dielectric surfaces.

Computes the planar and curvature-correction response coefficients of a smooth
surface, the resulting potential and preferred orientation of an anisotropic
dipolar particle, and an exact multipole reference solution for a sphere.
"""

from __future__ import annotations

__version__ = "0.1.0"
