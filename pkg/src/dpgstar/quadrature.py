"""Gauss-Legendre rules on the reference square [-1,1]^2 and segment [-1,1].

Element maps in this package are scale+translate only, so a rule that is
exact for the polynomial degree of an integrand on the reference cell is
exact on the physical cell as well.  ``gauss_square(n)`` integrates
Q^{2n-1,2n-1} exactly and ``gauss_edge(n)`` integrates P_{2n-1}.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DegreeError


@dataclass(frozen=True)
class QuadRule:
    """Reference-cell quadrature rule.

    points: (npts,) for edge rules, (npts, 2) for square rules.
    weights: (npts,), positive, summing to the reference measure.
    order: largest polynomial degree integrated exactly (per direction).
    """

    points: np.ndarray
    weights: np.ndarray
    order: int

    @property
    def npts(self):
        return self.weights.shape[0]


@lru_cache(maxsize=None)
def gauss_edge(n: int) -> QuadRule:
    """n-point Gauss rule on [-1,1], exact for degree 2n-1."""
    if n < 1:
        raise DegreeError(f"edge rule needs n >= 1, got {n}")
    x, w = leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadRule(points=x, weights=w, order=2 * n - 1)

@lru_cache(maxsize=None)
def gauss_square(n: int) -> QuadRule:
    """Tensor rule with n points per direction on [-1,1]^2.

    Exact for Q^{2n-1,2n-1}; weights sum to 4.
    """
    if n < 1:
        raise DegreeError(f"square rule needs n >= 1, got {n}")
    x, w = leggauss(n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    wts = np.outer(w, w).ravel()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadRule(points=pts, weights=wts, order=2 * n - 1)


def map_square(rule: QuadRule, anchor, size):
    """Push a square rule to the element [anchor, anchor+size]^2.

    Returns physical points (npts, 2) and weights scaled by (size/2)^2.
    """
    ax, ay = anchor
    pts = np.empty_like(rule.points)
    pts[:, 0] = ax + (rule.points[:, 0] + 1.0) * (size / 2.0)
    pts[:, 1] = ay + (rule.points[:, 1] + 1.0) * (size / 2.0)
    return pts, rule.weights * (size / 2.0) ** 2


def map_edge(rule: QuadRule, a, b):
    """Push an edge rule to the segment from point a to point b.

    Returns physical points (npts, 2) and weights scaled by |b-a|/2.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    pts = mid[None, :] + rule.points[:, None] * half[None, :]
    h = float(np.hypot(*(b - a)))
    return pts, rule.weights * (h / 2.0)
