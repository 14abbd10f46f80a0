"""Rational bounds ``a lam**2/(1 -+ b|lam|/sqrt r) +- c|lam|/sqrt r`` and their doubling.

Each doubling ``r -> 2r`` maps ``(b, c) -> (b + 1, 2c + 1)`` and shrinks
(upper) or widens (lower) the domain ``|lam| <= delta sqrt r``.  Iterating
from a plain quadratic bound gives ``b = n`` and ``c = 2**n - 1`` at scale
``2**n r``; the published form rounds ``c`` up to ``2**n``.
"""

from dataclasses import dataclass, replace
import math

from .._validation import DomainError, nonnegative, positive
from .quadratic import Direction, QuadBound, _doublings


@dataclass(frozen=True)
class RationalBound:
    """``f_r(lam)`` compared with ``a lam**2/(1 -+ b|lam|/sqrt r) +- c|lam|/sqrt r``.

    The sign pattern is ``(-, +)`` for upper bounds and ``(+, -)`` for lower
    bounds.  The domain is ``|lam| <= delta sqrt r``; ``delta = inf`` means
    unrestricted.
    """

    direction: Direction
    a: float
    b: float
    c: float
    r: float
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, nonnegative(getattr(self, name), name))
        object.__setattr__(self, "r", positive(self.r, "r"))
        object.__setattr__(self, "delta", positive(self.delta, "delta", allow_inf=True))
        if self.direction is Direction.UPPER and not self.b * self.delta < 1.0:
            raise DomainError("an upper rational bound needs b*delta < 1")

    @property
    def unrestricted(self):
        return math.isinf(self.delta)

    @property
    def lam_max(self):
        return self.delta * math.sqrt(self.r)

    def in_domain(self, lam):
        return self.unrestricted or abs(float(lam)) <= self.lam_max

    def value(self, lam):
        """Bound value; lower bounds are clamped at 0."""
        if not self.in_domain(lam):
            raise DomainError(f"|lam|={abs(lam)} outside |lam| <= {self.lam_max}")
        x = abs(float(lam)) / math.sqrt(self.r)
        lam2 = float(lam) ** 2
        if self.direction is Direction.UPPER:
            return self.a * lam2 / (1.0 - self.b * x) + self.c * x
        return max(self.a * lam2 / (1.0 + self.b * x) - self.c * x, 0.0)

    def rescale(self, s):
        """The same claim for ``g_r(lam) = f_{s**2 r}(s lam)``."""
        s = positive(s, "s")
        return replace(self, a=self.a * s ** 2, r=self.r / s ** 2)

    def to_dict(self):
        return {"type": "rational", "direction": self.direction.value, "a": self.a, "b": self.b,
                "c": self.c, "r": self.r, "delta": None if self.unrestricted else self.delta}


def rational_from_quad(q):
    """Rewrite ``f_r(eps lam) <= a lam**2, |lam| <= L`` as ``f_r(mu) <= (a/eps**2) mu**2, |mu| <= delta sqrt r``."""
    if q.eps <= 0.0:
        raise DomainError("eps must be positive to rewrite a quadratic bound")
    return RationalBound(q.direction, q.a / q.eps ** 2, 0.0, 0.0, q.r, q.eps * q.lam_max / math.sqrt(q.r))


def rational_upper_step(rb):
    """One doubling of an upper rational bound."""
    if rb.direction is not Direction.UPPER:
        raise ValueError("expected an upper bound")
    return RationalBound(Direction.UPPER, rb.a, rb.b + 1.0, 2.0 * rb.c + 1.0, 2.0 * rb.r,
                         rb.delta / (1.0 + rb.delta))


def rational_lower_step(rb):
    """One doubling of a lower rational bound; the domain becomes unrestricted once ``delta >= 1``."""
    if rb.direction is not Direction.LOWER:
        raise ValueError("expected a lower bound")
    delta = math.inf if rb.delta >= 1.0 else rb.delta / (1.0 - rb.delta)
    return RationalBound(Direction.LOWER, rb.a, rb.b + 1.0, 2.0 * rb.c + 1.0, 2.0 * rb.r, delta)


def _iterate(q, n, direction, strengthened):
    if not isinstance(q, QuadBound):
        raise TypeError("expected a QuadBound")
    if q.direction is not direction:
        raise ValueError(f"expected a {direction.value} bound")
    n = _doublings(n)
    base = rational_from_quad(q)
    c = 2.0 ** n - 1.0 if strengthened else 2.0 ** n
    d = base.delta
    if direction is Direction.UPPER:
        delta = d / (1.0 + n * d)
    else:
        delta = math.inf if n * d >= 1.0 else d / (1.0 - n * d)
    return RationalBound(direction, base.a, float(n), c, base.r * 2.0 ** n, delta)


def rational_upper_iterate(q, n, strengthened=False):
    """Upper bound at scale ``R = 2**n r`` from ``f_r(lam) <= a lam**2`` on ``|lam| <= delta sqrt r``.

    Returns ``b = n``, ``c = 2**n`` and domain ``delta/(1 + n delta)`` in units
    of ``sqrt R``.  With ``strengthened=True`` the sharper ``c = 2**n - 1`` is
    used, which is exactly what ``n`` single doublings produce.
    """
    return _iterate(q, n, Direction.UPPER, strengthened)


def rational_lower_iterate(q, n, strengthened=False):
    """Lower analogue: domain ``delta/(1 - n delta)``, unrestricted when ``n delta >= 1``."""
    return _iterate(q, n, Direction.LOWER, strengthened)
