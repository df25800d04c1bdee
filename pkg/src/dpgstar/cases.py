"""Manufactured Poisson cases: -lap v = f, v = v0 on the Dirichlet part,
dv/dn = p_n on the Neumann part.

The multiplier group of the norm-minimizing formulation satisfies
lambda = f + e where -lap e = v + 2f with zero Dirichlet data, so for the
sine case lambda is a closed-form multiple of v:

    v = sin(pi x) sin(pi y),  f = 2 pi^2 v,
    -lap e = (1 + 4 pi^2) v  ->  e = (1 + 4 pi^2) / (2 pi^2) v,
    lambda = f + e = (1 + 4 pi^2 + 4 pi^4) / (2 pi^2) v.

For v = 1 the auxiliary load is g = 1 and lambda has no elementary closed
form; its limited boundary regularity is what caps the uniform-refinement
rates of that case.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CaseError

SIN_LAMBDA_COEF = (1.0 + 4.0 * np.pi ** 2 + 4.0 * np.pi ** 4) / (2.0 * np.pi ** 2)


@dataclass(frozen=True)
class ManufacturedCase:
    """Closed-form solution data; all callables take numpy arrays x, y."""

    name: str
    v: callable
    grad_v: callable  # returns (npts, 2)
    lap_v: callable
    f: callable
    v0: callable
    lambda_exact: callable = None

    def normal_flux(self, x, y, normal):
        """dv/dn against a fixed unit normal (used for Neumann data)."""
        g = self.grad_v(x, y)
        return g[:, 0] * normal[0] + g[:, 1] * normal[1]


def _sin_case():
    pi = np.pi

    def v(x, y):
        return np.sin(pi * x) * np.sin(pi * y)

    def grad(x, y):
        return np.column_stack([
            pi * np.cos(pi * x) * np.sin(pi * y),
            pi * np.sin(pi * x) * np.cos(pi * y),
        ])

    return ManufacturedCase(
        name="sin",
        v=v,
        grad_v=grad,
        lap_v=lambda x, y: -2.0 * pi ** 2 * v(x, y),
        f=lambda x, y: 2.0 * pi ** 2 * v(x, y),
        v0=lambda x, y: np.zeros_like(np.asarray(x, dtype=float)),
        lambda_exact=lambda x, y: SIN_LAMBDA_COEF * v(x, y),
    )


def _constant_one_case():
    def zero(x, y):
        return np.zeros_like(np.asarray(x, dtype=float))

    return ManufacturedCase(
        name="constant_one",
        v=lambda x, y: np.ones_like(np.asarray(x, dtype=float)),
        grad_v=lambda x, y: np.zeros((np.asarray(x).size, 2)),
        lap_v=zero,
        f=zero,
        v0=lambda x, y: np.ones_like(np.asarray(x, dtype=float)),
    )


def _lshaped_case():
    """Harmonic corner solution r^(2/3) sin(2 theta / 3), theta in [0, 3pi/2]."""

    def polar(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        th = np.arctan2(y, x)
        th = np.where(th < 0.0, th + 2.0 * np.pi, th)
        return r, th

    def v(x, y):
        r, th = polar(x, y)
        return np.where(r > 0.0, r ** (2.0 / 3.0) * np.sin(2.0 * th / 3.0), 0.0)

    def grad(x, y):
        r, th = polar(x, y)
        safe = np.where(r > 0.0, r, 1.0)
        mag = (2.0 / 3.0) * safe ** (-1.0 / 3.0)
        gx = np.where(r > 0.0, -mag * np.sin(th / 3.0), 0.0)
        gy = np.where(r > 0.0, mag * np.cos(th / 3.0), 0.0)
        return np.column_stack([gx, gy])

    def zero(x, y):
        return np.zeros_like(np.asarray(x, dtype=float))

    return ManufacturedCase(
        name="lshaped_singular",
        v=v,
        grad_v=grad,
        lap_v=zero,
        f=zero,
        v0=zero,
    )


def linear_case():
    """Exactly representable fixture v = x + y (used by tests and demos)."""

    def v(x, y):
        return np.asarray(x, dtype=float) + np.asarray(y, dtype=float)

    def zero(x, y):
        return np.zeros_like(np.asarray(x, dtype=float))

    return ManufacturedCase(
        name="linear",
        v=v,
        grad_v=lambda x, y: np.column_stack([
            np.ones_like(np.asarray(x, dtype=float)),
            np.ones_like(np.asarray(y, dtype=float)),
        ]),
        lap_v=zero,
        f=zero,
        v0=v,
    )


_CASES = {
    "sin": _sin_case,
    "constant_one": _constant_one_case,
    "lshaped_singular": _lshaped_case,
}


def exact_case(name: str) -> ManufacturedCase:
    """Look up a study case (sin, constant_one, lshaped_singular)."""
    try:
        return _CASES[name]()
    except KeyError:
        raise CaseError(f"unknown case {name!r}; choose from {sorted(_CASES)}") from None
