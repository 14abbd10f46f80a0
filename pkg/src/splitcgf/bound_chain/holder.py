"""One-step Hölder inequalities relating ``f_{r+s}`` to ``f_r`` and ``f_s``.

For a splittable process the integral over ``[-r, s]`` equals the sum of two
independent integrals plus a defect with ``E exp|Z| <= 2``.  Hölder's
inequality with exponent ``p`` then bounds ``f_{r+s}`` from both sides.
"""

import math

import numpy as np

from .._validation import DomainError, positive
from .quadratic import Direction


def holder_domain(r, s, p, direction):
    """Largest admissible ``|lam|`` for :func:`holder_split`."""
    direction = Direction(direction)
    root = math.sqrt(r + s)
    return (p - 1.0) / p * root if direction is Direction.UPPER else (p - 1.0) * root


def holder_split(f, r, s, p, lam, direction):
    """Right-hand side of the two-window Hölder bound on ``f_{r+s}(lam)``.

    upper: ``f_r(p lam sqrt(r/(r+s)))/p + f_s(p lam sqrt(s/(r+s)))/p + p/(p-1) lam**2/(r+s)``
    for ``|lam| <= (p-1)/p sqrt(r+s)``;

    lower: ``p f_r(lam/p sqrt(r/(r+s))) + p f_s(lam/p sqrt(s/(r+s))) - lam**2/((p-1)(r+s))``
    for ``|lam| <= (p-1) sqrt(r+s)``.
    """
    direction = Direction(direction)
    r = positive(r, "r")
    s = positive(s, "s")
    p = positive(p, "p")
    if p <= 1.0:
        raise DomainError(f"p must exceed 1, got {p}")
    scalar = np.ndim(lam) == 0
    lam = np.asarray(lam, dtype=float)
    limit = holder_domain(r, s, p, direction)
    # a few ulps of slack so boundary points survive rescaling
    if not np.all(np.abs(lam) <= limit * (1.0 + 8.0 * np.finfo(float).eps)):
        raise DomainError(f"|lam|={np.max(np.abs(lam))} exceeds {limit} for the {direction.value} Hölder step")
    total = r + s
    wr, ws = math.sqrt(r / total), math.sqrt(s / total)
    if direction is Direction.UPPER:
        out = (np.asarray(f(r, p * lam * wr)) / p + np.asarray(f(s, p * lam * ws)) / p
               + p / (p - 1.0) * lam * lam / total)
    else:
        out = (p * np.asarray(f(r, lam / p * wr)) + p * np.asarray(f(s, lam / p * ws))
               - lam * lam / ((p - 1.0) * total))
    return float(out) if scalar else out


def holder_upper_step(f, r, p, lam):
    """``(2/p) f_r(p lam/sqrt2) + p/(p-1) lam**2/(2r)``, an upper bound on ``f_{2r}(lam)``."""
    return holder_split(f, r, r, p, lam, Direction.UPPER)


def holder_lower_step(f, r, p, lam):
    """``2p f_r(lam/(p sqrt2)) - lam**2/(2r(p-1))``, a lower bound on ``f_{2r}(lam)``."""
    return holder_split(f, r, r, p, lam, Direction.LOWER)


def holder_grid(r, s, p, direction, n_points=33):
    """Symmetric ``lam`` grid filling the admissible domain, endpoints included."""
    limit = holder_domain(r, s, p, direction)
    return np.linspace(-limit, limit, n_points)
