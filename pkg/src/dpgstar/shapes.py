"""Reference shape functions for the 2D de Rham sequence on [-1,1]^2.

Three families are provided, indexed by the element order pair (p, q):

    h1_q    spans Q^{p,q}                      (scalar, values + gradients)
    hdiv_rt spans Q^{p,q-1} x Q^{p-1,q}        (vector, values + divergence)
    l2_q    spans Q^{p-1,q-1}                  (scalar, values)

The 1D building blocks are hierarchical: endpoint hats (1-t)/2, (1+t)/2
followed by integrated-Legendre kernels that vanish at both endpoints, so
raising the order extends a basis without changing existing functions.
L^2 directions use plain Legendre polynomials.  Tensor indices are
enumerated so that the set for (p, q) is a prefix of the set for
(p+1, q+1); see ``tensor_pairs``.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegreeError


def legendre_table(pmax: int, t) -> np.ndarray:
    """Values of Legendre P_0..P_pmax at points t, shape (pmax+1, npts)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    tab = np.zeros((pmax + 1, t.size))
    tab[0] = 1.0
    if pmax >= 1:
        tab[1] = t
    for k in range(1, pmax):
        tab[k + 1] = ((2 * k + 1) * t * tab[k] - k * tab[k - 1]) / (k + 1)
    return tab


def lobatto_table(pmax: int, t):
    """Hierarchical H^1 basis on [-1,1]: values and derivatives.

    Index 0, 1 are the endpoint hats; index k >= 2 is the integrated
    Legendre kernel (P_k - P_{k-2})/sqrt(2(2k-1)), which vanishes at +-1
    and has derivative sqrt((2k-1)/2) P_{k-1}.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    P = legendre_table(max(pmax, 1), t)
    vals = np.zeros((pmax + 1, t.size))
    ders = np.zeros((pmax + 1, t.size))
    vals[0] = 0.5 * (1.0 - t)
    ders[0] = -0.5
    if pmax >= 1:
        vals[1] = 0.5 * (1.0 + t)
        ders[1] = 0.5
    for k in range(2, pmax + 1):
        c = 1.0 / np.sqrt(2.0 * (2 * k - 1))
        vals[k] = c * (P[k] - P[k - 2])
        ders[k] = np.sqrt((2 * k - 1) / 2.0) * P[k - 1]
    return vals, ders


@lru_cache(maxsize=None)
def tensor_pairs(a: int, b: int):
    """Index pairs of the rectangle [0..a] x [0..b] in nesting order.

    Sorted by (max(i-a, j-b), i, j): under the isotropic increment
    (a, b) -> (a+1, b+1) every old key shifts by -1 uniformly, so the old
    enumeration is a prefix of the new one.
    """
    pairs = [(i, j) for i in range(a + 1) for j in range(b + 1)]
    pairs.sort(key=lambda ij: (max(ij[0] - a, ij[1] - b), ij[0], ij[1]))
    return tuple(pairs)


@dataclass(frozen=True)
class ShapeSet:
    """Evaluation tables of one shape family at fixed reference points.

    values: (count, npts) for scalars, (count, npts, 2) for hdiv_rt.
    gradients: (count, npts, 2) for h1_q, else None.
    divergences: (count, npts) for hdiv_rt, else None.
    """

    space: str
    degrees: tuple
    count: int
    values: np.ndarray
    gradients: np.ndarray = None
    divergences: np.ndarray = None


def h1_count(p, q):
    return (p + 1) * (q + 1)


def hdiv_count(p, q):
    return (p + 1) * q + p * (q + 1)


def l2_count(p, q):
    return p * q


def eval_shapes(space: str, degrees, points) -> ShapeSet:
    """Evaluate one shape family at reference points in [-1,1]^2.

    ``degrees`` is the element order pair (p, q); the spanned spaces are
    listed in the module docstring.  h1_q and hdiv_rt require p, q >= 1.
    """
    p, q = degrees
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    x, y = pts[:, 0], pts[:, 1]
    if space == "h1_q":
        if p < 1 or q < 1:
            raise DegreeError(f"h1_q needs degrees >= 1, got {degrees}")
        vx, dx = lobatto_table(p, x)
        vy, dy = lobatto_table(q, y)
        idx = tensor_pairs(p, q)
        vals = np.array([vx[i] * vy[j] for i, j in idx])
        grads = np.empty((len(idx), pts.shape[0], 2))
        for k, (i, j) in enumerate(idx):
            grads[k, :, 0] = dx[i] * vy[j]
            grads[k, :, 1] = vx[i] * dy[j]
        return ShapeSet(space, (p, q), len(idx), vals, gradients=grads)
    if space == "hdiv_rt":
        if p < 1 or q < 1:
            raise DegreeError(f"hdiv_rt needs degrees >= 1, got {degrees}")
        vx, dx = lobatto_table(p, x)
        vy, dy = lobatto_table(q, y)
        lx = legendre_table(p, x)
        ly = legendre_table(q, y)
        # x-component functions lob_i(x) leg_j(y) on [0..p]x[0..q-1],
        # y-component functions leg_i(x) lob_j(y) on [0..p-1]x[0..q],
        # interleaved per nesting shell so prefixes survive (p,q)->(p+1,q+1).
        xi = [("x",) + ij for ij in tensor_pairs(p, q - 1)]
        yi = [("y",) + ij for ij in tensor_pairs(p - 1, q)]
        merged = sorted(
            xi + yi,
            key=lambda c: (
                max(c[1] - (p if c[0] == "x" else p - 1),
                    c[2] - (q - 1 if c[0] == "x" else q)),
                c[0], c[1], c[2],
            ),
        )
        n = len(merged)
        vals = np.zeros((n, pts.shape[0], 2))
        divs = np.zeros((n, pts.shape[0]))
        for k, (comp, i, j) in enumerate(merged):
            if comp == "x":
                vals[k, :, 0] = vx[i] * ly[j]
                divs[k] = dx[i] * ly[j]
            else:
                vals[k, :, 1] = lx[i] * vy[j]
                divs[k] = lx[i] * dy[j]
        return ShapeSet(space, (p, q), n, vals, divergences=divs)
    if space == "l2_q":
        if p < 1 or q < 1:
            raise DegreeError(f"l2_q needs degrees >= 1, got {degrees}")
        lx = legendre_table(p - 1, x)
        ly = legendre_table(q - 1, y)
        idx = tensor_pairs(p - 1, q - 1)
        vals = np.array([lx[i] * ly[j] for i, j in idx])
        return ShapeSet(space, (p, q), len(idx), vals)
    raise DegreeError(f"unknown space {space!r}")
