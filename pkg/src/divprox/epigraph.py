"""Conjugate kernels and projection onto their epigraphs.

For every divergence kernel ``phi`` (restricted to the nonnegative
half-line) the Fenchel conjugate ``phi*`` has a closed form, and the
Euclidean projection onto ``epi phi* = {(a, b) : phi*(a) <= b}`` reduces to
one two-argument prox evaluation through conjugacy:

with ``(p, q) = prox_Phi(a, -b)`` the projection of ``(a, b)`` is
``(a - p, b + q)``.

The sign flip on the second output coordinate matters: the conjugate of the
perspective function is the epigraph indicator composed with the reflection
``(a, b) -> (a, -b)``, and unwinding the Moreau identity through that
reflection flips the second difference.  (Without the flip, points already
inside the epigraph would not be fixed.)
"""

from dataclasses import dataclass

import numpy as np

from .divergences import conjugate_value
from .scalar_prox import prox_pairs

__all__ = ["ConjugatePoint", "conjugate_value", "project_epi_conjugate", "project_epi_pairs"]


@dataclass(frozen=True)
class ConjugatePoint:
    """A point in the conjugate plane."""

    u_star: float
    xi_star: float

    def as_tuple(self):
        return (self.u_star, self.xi_star)


def project_epi_pairs(spec, a, b):
    """Vectorized projection onto the conjugate epigraph; arrays in/out."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p, q = prox_pairs(spec, a, -b, 1.0)
    return a - p, b + q


def project_epi_conjugate(spec, point):
    """Euclidean projection of ``point`` onto ``epi phi*``.

    Parameters
    ----------
    spec : DivergenceSpec
    point : ConjugatePoint or pair of floats

    Returns
    -------
    ConjugatePoint
    """
    if isinstance(point, ConjugatePoint):
        a, b = point.u_star, point.xi_star
    else:
        a, b = point
    u, x = project_epi_pairs(spec, a, b)
    return ConjugatePoint(float(u), float(x))
