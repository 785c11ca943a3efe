"""Planar Orlicz-Minkowski torsion flow.

Support-function calculus for planar convex bodies, a q-Laplace torsion
solver on triangulated interiors, and the normalized Gauss curvature flow
that couples them. Everything here is a thin re-export of the compiled
extension; see the individual docstrings.
"""

from ._torqflow import *  # noqa: F401,F403
