"""Quadratic envelopes at scale ``2**n r`` from a base bound on ``|lam| <= sqrt r``.

With ``V = n 2**(-n/2) |lam|/sqrt r`` the envelopes are

* upper: ``f(eps lam) <= (a + C eps (a + 1/r)(1 + V)/(1 - eps V)) lam**2``,
  ``C = (exp(kappa eps) - 1)/eps``, for
  ``|lam| <= 2**(n/2) sqrt r/(eps n + max(eps sqrt(2n), 1))``;
* lower: ``f(eps lam) >= (a - (sqrt2 + 1) eps (a + 1/r)(1 + V)) lam**2``
  for ``|lam| <= 2**(n/2) sqrt r``, clamped at 0.
"""

from dataclasses import dataclass
import math

from .._validation import DomainError
from .quadratic import KAPPA, SQRT2, Direction, QuadBound, _doublings


def envelope_constant(eps):
    """``C = (exp(kappa eps) - 1)/eps``."""
    return math.expm1(KAPPA * eps) / eps


@dataclass(frozen=True)
class EnvelopeBound:
    """A bound ``f_{2**n r}(eps lam) <= or >= coefficient(lam) lam**2`` on ``|lam| <= lam_max``."""

    base: QuadBound
    n: int
    C: float
    lam_max: float

    @property
    def direction(self):
        return self.base.direction

    @property
    def r(self):
        """Scale at which the envelope holds."""
        return self.base.r * 2.0 ** self.n

    def V(self, lam):
        return self.n * 2.0 ** (-0.5 * self.n) * abs(float(lam)) / math.sqrt(self.base.r)

    def in_domain(self, lam):
        return abs(float(lam)) <= self.lam_max

    def coefficient(self, lam):
        if not self.in_domain(lam):
            raise DomainError(f"|lam|={abs(lam)} outside |lam| <= {self.lam_max}")
        q = self.base
        v = self.V(lam)
        eps = q.eps
        spread = eps * (q.a + 1.0 / q.r) * (1.0 + v)
        if self.direction is Direction.UPPER:
            return q.a + self.C * spread / (1.0 - eps * v)
        return max(q.a - (SQRT2 + 1.0) * spread, 0.0)

    def value(self, lam):
        return self.coefficient(lam) * float(lam) ** 2

    def rescale(self, s):
        """The same envelope for ``g_r(lam) = f_{s**2 r}(s lam)``."""
        return EnvelopeBound(self.base.rescale(s, keep="epsilon"), self.n, self.C, self.lam_max / s)

    def to_dict(self):
        return {"type": "envelope", "direction": self.direction.value, "base": self.base.to_dict(),
                "n": self.n, "C": self.C, "scale": self.r, "lam_max": self.lam_max}


def _check_base(q, direction):
    if q.direction is not direction:
        raise ValueError(f"expected a {direction.value} bound")
    if not q.a > 0.0:
        raise DomainError("the base coefficient a must be positive")
    if q.lam_max < math.sqrt(q.r):
        raise DomainError("the base bound must hold on |lam| <= sqrt r")


def upper_envelope(q, n):
    eps = q.eps
    if not 0.0 < eps <= SQRT2 - 1.0:
        raise DomainError(f"eps={eps} outside (0, sqrt2-1]")
    n = _doublings(n)
    if n < 1:
        raise DomainError("the envelope needs n >= 1")
    _check_base(q, Direction.UPPER)
    lam_max = 2.0 ** (0.5 * n) * math.sqrt(q.r) / (eps * n + max(eps * math.sqrt(2.0 * n), 1.0))
    return EnvelopeBound(q, n, envelope_constant(eps), lam_max)


def lower_envelope(q, n):
    eps = q.eps
    if not 0.0 < eps < SQRT2:
        raise DomainError(f"eps={eps} outside (0, sqrt2)")
    n = _doublings(n)
    if n < 1:
        raise DomainError("the envelope needs n >= 1")
    _check_base(q, Direction.LOWER)
    return EnvelopeBound(q, n, SQRT2 + 1.0, 2.0 ** (0.5 * n) * math.sqrt(q.r))
