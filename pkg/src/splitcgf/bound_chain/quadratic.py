"""Quadratic bounds ``f_r(eps lam) <= a lam**2`` (or ``>=``) and their doubling.

The doubling maps here act on bounds stated on ``|lam| <= 1``, where the
hypothesis is written ``f_r(eps lam) <= (a - 1) lam**2``.  The stored
coefficient is the right-hand side coefficient, so ``a = coefficient + 1``.
"""

from dataclasses import dataclass, replace
from enum import Enum
import math

import numpy as np

from .._validation import DomainError, nonnegative, positive

SQRT2 = math.sqrt(2.0)
KAPPA = SQRT2 / (SQRT2 - 1.0)
SLACK = 1e-9


class Direction(str, Enum):
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class QuadBound:
    """Claim ``f_r(eps lam) <= a lam**2`` (upper) or ``>=`` (lower) for ``|lam| <= lam_max``."""

    direction: Direction
    a: float
    eps: float
    r: float
    lam_max: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "a", nonnegative(self.a, "a"))
        object.__setattr__(self, "eps", nonnegative(self.eps, "eps"))
        object.__setattr__(self, "r", positive(self.r, "r"))
        object.__setattr__(self, "lam_max", positive(self.lam_max, "lam_max"))

    def in_domain(self, lam):
        return abs(float(lam)) <= self.lam_max

    def value(self, lam):
        if not self.in_domain(lam):
            raise DomainError(f"|lam|={abs(lam)} outside |lam| <= {self.lam_max}")
        return self.a * float(lam) ** 2

    def rescale(self, s, keep="lambda"):
        """The same claim for the family ``g_r(lam) = f_{s**2 r}(s lam)``.

        ``keep='lambda'`` moves the scale into ``eps``; ``keep='epsilon'``
        moves it into ``lam`` and ``a``.
        """
        s = positive(s, "s")
        if keep == "lambda":
            return replace(self, eps=self.eps / s, r=self.r / s ** 2)
        if keep == "epsilon":
            return replace(self, a=self.a * s ** 2, r=self.r / s ** 2, lam_max=self.lam_max / s)
        raise ValueError(f"keep must be 'lambda' or 'epsilon', got {keep!r}")

    def holds_for(self, f, n_points=33, slack=SLACK):
        """Whether an evaluator satisfies the claim on a symmetric grid, endpoints included."""
        lam = np.linspace(-self.lam_max, self.lam_max, n_points)
        vals = np.asarray(f(self.r, self.eps * lam), dtype=float)
        bound = self.a * lam ** 2
        if self.direction is Direction.UPPER:
            return bool(np.all(vals <= bound + slack))
        return bool(np.all(vals >= bound - slack))

    def to_dict(self):
        return {"type": "quad", "direction": self.direction.value, "a": self.a, "eps": self.eps,
                "r": self.r, "lam_max": self.lam_max}


def _unit_hypothesis(q, direction):
    if q.direction is not Direction(direction):
        raise ValueError(f"expected a {direction} bound, got {q.direction.value}")
    if q.lam_max < 1.0:
        raise DomainError("the doubling maps need the bound on |lam| <= 1")


def quad_upper_step(q):
    """One doubling: ``f_{2r}(eps lam) <= (a (1 + eps/sqrt r) - 1) lam**2``."""
    _unit_hypothesis(q, Direction.UPPER)
    x = q.eps / math.sqrt(q.r)
    if not x <= SQRT2 - 1.0:
        raise DomainError(f"eps/sqrt(r)={x} exceeds sqrt2-1")
    return QuadBound(Direction.UPPER, (q.a + 1.0) * (1.0 + x) - 1.0, q.eps, 2.0 * q.r, 1.0)


def quad_lower_step(q):
    """One doubling: ``f_{2r}(eps lam) >= (a (1 - eps/sqrt(2r)) - 1) lam**2``, clamped at 0."""
    _unit_hypothesis(q, Direction.LOWER)
    x = q.eps / math.sqrt(q.r)
    if not x < SQRT2:
        raise DomainError(f"eps/sqrt(r)={x} must be below sqrt2")
    a = (q.a + 1.0) * (1.0 - x / SQRT2) - 1.0
    return QuadBound(Direction.LOWER, max(a, 0.0), q.eps, 2.0 * q.r, 1.0)


def iterate_upper_quad(q, n):
    """Bound at scale ``2**n r``: coefficient ``a exp(kappa eps/sqrt r) - 1``, independent of ``n``.

    ``kappa = sqrt2/(sqrt2-1)`` bounds the infinite product of the one-step
    factors ``1 + eps/sqrt(2**k r)``.
    """
    _unit_hypothesis(q, Direction.UPPER)
    n = _doublings(n)
    x = q.eps / math.sqrt(q.r)
    if not x <= SQRT2 - 1.0:
        raise DomainError(f"eps/sqrt(r)={x} exceeds sqrt2-1")
    a = (q.a + 1.0) * math.exp(KAPPA * x) - 1.0
    return QuadBound(Direction.UPPER, a, q.eps, q.r * 2.0 ** n, 1.0)


def iterate_lower_quad(q, n):
    """Bound at scale ``2**n r``: coefficient ``a (1 - (sqrt2+1) eps/sqrt r) - 1``, clamped at 0."""
    _unit_hypothesis(q, Direction.LOWER)
    n = _doublings(n)
    x = q.eps / math.sqrt(q.r)
    if not x < SQRT2:
        raise DomainError(f"eps/sqrt(r)={x} must be below sqrt2")
    a = (q.a + 1.0) * (1.0 - (SQRT2 + 1.0) * x) - 1.0
    return QuadBound(Direction.LOWER, max(a, 0.0), q.eps, q.r * 2.0 ** n, 1.0)


def _doublings(n):
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 0:
        raise ValueError(f"n must be a nonnegative integer, got {n!r}")
    return int(n)
