"""The quartic double-well potential and its derived profile functions.

    W(s)  = (1-s)^2 s^2 / 2          wells at 0 and 1
    W'(s) = s (1-s) (1-2s)
    sqrt(2 W(s)) = |s (1-s)|

SIGMA = integral_0^1 sqrt(2 W) = 1/6 is the surface-tension normalizer: the
energy of a flat optimal transition layer equals SIGMA per unit interface
area, so SIGMA^{-1}-weighted energies count interface area directly.

The primitive k(s) = integral_0^s sqrt(2 W) and its normalization
G = k / SIGMA map a phase field to its total-variation representative.  Both
are extended outside [0, 1] with the primitive of |y(1-y)| so they stay
monotone when a numerical solution overshoots the wells.

All functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .errors import InputError

__all__ = [
    "SIGMA",
    "PotentialConstants",
    "double_well",
    "double_well_prime",
    "sqrt_double_well",
    "well_primitive",
    "profile_transform",
    "profile_transform_inverse",
    "optimal_profile",
]

SIGMA = 1.0 / 6.0


class PotentialConstants:
    """Fixed constants of the hard-coded quartic well."""

    sigma: float = SIGMA
    well_values: tuple[float, float] = (0.0, 1.0)


def double_well(s):
    """W(s) = (1-s)^2 s^2 / 2."""
    s = np.asarray(s, dtype=np.float64)
    return 0.5 * np.square(s) * np.square(1.0 - s)


def double_well_prime(s):
    """W'(s) = s (1-s) (1-2s)."""
    s = np.asarray(s, dtype=np.float64)
    return s * (1.0 - s) * (1.0 - 2.0 * s)


def sqrt_double_well(s):
    """sqrt(2 W(s)) = |s (1-s)|, the multiplier weight."""
    s = np.asarray(s, dtype=np.float64)
    return np.abs(s * (1.0 - s))


def well_primitive(s):
    """k(s) = integral_0^s |y(1-y)| dy; k(0) = 0, k(1) = 1/6.

    Closed form, piecewise in the sign pattern of y(1-y):
        s <= 0:       s^3/3 - s^2/2
        0 <= s <= 1:  s^2/2 - s^3/3
        s >= 1:       s^3/3 - s^2/2 + 1/3
    """
    s = np.asarray(s, dtype=np.float64)
    inner = 0.5 * s * s - s**3 / 3.0
    outer = -inner
    return np.where(s < 0.0, outer, np.where(s > 1.0, outer + 1.0 / 3.0, inner))


def profile_transform(s):
    """G(s) = k(s) / SIGMA, increasing with G(0) = 0 and G(1) = 1."""
    return well_primitive(s) / SIGMA


def profile_transform_inverse(y: float) -> float:
    """Inverse of G restricted to [0, 1].

    Raises InputError when y is outside G([0, 1]) = [0, 1].
    """
    y = float(y)
    if not 0.0 <= y <= 1.0:
        raise InputError(f"profile_transform_inverse requires y in [0, 1], got {y}")
    if y == 0.0:
        return 0.0
    if y == 1.0:
        return 1.0
    return brentq(lambda s: profile_transform(s) - y, 0.0, 1.0, xtol=1e-14)


def optimal_profile(z, eps: float):
    """The logistic transition layer q(z) = 1 / (1 + exp(-z/eps)).

    Solves eps q' = sqrt(2 W(q)) = q (1 - q), so the layer is exactly
    equipartitioned: eps q'^2 / 2 == W(q) / eps pointwise.
    """
    if not eps > 0:
        raise ValueError(f"optimal_profile requires eps > 0, got {eps}")
    z = np.asarray(z, dtype=np.float64)
    return expit(z / eps)
