"""Errors of the quadratic approximation ``f_r(lam) ~ sigma_r**2 lam**2/2`` and the sigma chain."""

import math

import numpy as np

from .._validation import DomainError, count, positive
from .quadratic import KAPPA, SQRT2

# Third-derivative bound: |f(lam) - f''(0) lam**2/2| <= A_CUBIC (|lam|/(1-|lam|))**3 E exp|X|.
A_CUBIC = 41.0 / (6.0 * math.e ** 3)


def _derived_constants():
    """Worst-case absolute constant of the three-regime median bound.

    Each entry composes explicit constants from the chain of estimates that
    establishes the bound.  Nothing here is sharp; the table exists so the
    bound can be evaluated at all.

    * ``doubling``: cube-root error at scale ``2**n`` from a unit bound,
      ``2 exp(2 e**sqrt2 - 1) A_CUBIC`` (the endpoint values ``f(+-eps)`` are
      at most ``2 e**sqrt2 - 1``).
    * ``envelope_C``: the envelope constant ``C`` at ``eps <= (sqrt2-1)/2``,
      at most ``2 (e**(1/sqrt2) - 1)/(sqrt2 - 1)``.
    * ``two_scale``: the constant in the two-scale comparison,
      ``max(8 A_doubling, 2 C (2 + A_doubling))``.
    * ``small_lambda``: ``|lam|/(1-|lam|)**3 <= 27 |lam|`` for ``|lam| <= 2/3``.
    * ``middle``: intermediate regime with ``delta`` from :func:`delta_choice`
      at ``a = 3``; the pieces contribute ``892.6 delta`` and
      ``84.28 A_two_scale delta`` plus one more ``A_two_scale delta``, and
      ``delta <= 3 (n eps 2**(-n/2) |lam|)**(1/3)``.
    * ``large_lambda``: regime ``|lam| >= sqrt(n eps) 2**(n/2)`` with
      ``m = 0``, giving ``1.081 + 3.278 A_two_scale``.
    """
    doubling = 2.0 * math.exp(2.0 * math.exp(SQRT2) - 1.0) * A_CUBIC
    envelope_c = 2.0 * (math.exp(1.0 / SQRT2) - 1.0) / (SQRT2 - 1.0)
    two_scale = max(8.0 * doubling, 2.0 * envelope_c * (2.0 + doubling))
    cases = {
        "small_lambda": 27.0 * doubling,
        "middle": 3.0 * (892.6 + 85.28 * two_scale),
        "large_lambda": 1.081 + 3.278 * two_scale,
    }
    return {"cubic": A_CUBIC, "doubling": doubling, "envelope_C": envelope_c,
            "two_scale": two_scale, **cases, "median_bound": max(cases.values())}


DERIVED_CONSTANTS = _derived_constants()
A_MEDIAN_DEFAULT = DERIVED_CONSTANTS["median_bound"]


def quad_approx_error(f_minus_c, f_plus_c, lam, c, A=A_CUBIC):
    """``A (|lam|/(c - |lam|))**3 (exp f(-c) + exp f(c))``; infinite endpoint values give ``inf``."""
    c = positive(c, "c")
    lam = abs(float(lam))
    if not lam < c:
        raise DomainError(f"|lam|={lam} must be below c={c}")
    if not (math.isfinite(f_minus_c) and math.isfinite(f_plus_c)):
        return math.inf
    if lam == 0.0:
        return 0.0
    if max(f_minus_c, f_plus_c) > 709.0:
        return math.inf
    return A * (lam / (c - lam)) ** 3 * (math.exp(f_minus_c) + math.exp(f_plus_c))


def quad_approx_deviation(f, r, lam, sigma_r):
    """``|f_r(lam) - sigma_r**2 lam**2/2|``, the quantity bounded by :func:`quad_approx_error`."""
    return abs(float(f(r, lam)) - 0.5 * sigma_r ** 2 * float(lam) ** 2)


def median3(a, b, c):
    """Middle value of three numbers."""
    return max(min(a, b), min(max(a, b), c))


def _median_terms(eps, n, lam):
    h = 2.0 ** (-0.5 * n)
    return abs(lam), (h * n * eps * abs(lam)) ** (1.0 / 3.0), h * abs(lam)


def median_piecewise(eps, n, lam):
    """Three-regime closed form of the median bound (without the constant)."""
    x = abs(float(lam))
    root = math.sqrt(n * eps)
    first, middle, last = _median_terms(eps, n, x)
    if x <= root * 2.0 ** (-0.25 * n):
        return first
    if x <= root * 2.0 ** (0.5 * n):
        return middle
    return last


def quad_envelope_domain(eps, n, capped=False):
    top = 2.0 ** (0.5 * n) * min(1.0 / (3.0 * n * eps), 1.0 / 9.0)
    return min(top, math.sqrt(n * eps)) if capped else top


def quad_envelope_error(eps, r, n, lam, A=None, capped=False):
    """``A Median(|lam|, (2**(-n/2) n eps |lam|)**(1/3), 2**(-n/2) |lam|)``.

    Bounds ``|f_{2**n r}(eps lam sqrt r)/lam**2 - r sigma**2 eps**2/2|`` given
    ``f_r(eps lam) <= lam**2`` on ``|lam| <= 1``.  With ``capped=True`` the
    domain is further capped at ``sqrt(n eps)``, where the median is the
    cube-root term.  ``A`` defaults to :data:`A_MEDIAN_DEFAULT`.
    """
    eps = float(eps)
    if not 0.0 < eps < SQRT2 - 1.0:
        raise DomainError(f"eps={eps} outside (0, sqrt2-1)")
    positive(r, "r")
    n = count(n, "n", minimum=2)
    x = abs(float(lam))
    top = quad_envelope_domain(eps, n, capped)
    if not 0.0 < x <= top:
        raise DomainError(f"|lam|={x} outside (0, {top}]")
    A = A_MEDIAN_DEFAULT if A is None else positive(A, "A")
    if capped:
        return A * _median_terms(eps, n, x)[1]
    return A * median3(*_median_terms(eps, n, x))


def sigma_gap_bound(m, n, r):
    """Bound on ``|sigma_{2**n r} - sigma_{2**m r}|``; ``n = inf`` bounds the gap to the limit."""
    r = positive(r, "r")
    m = count(m, "m")
    if not (n == math.inf or isinstance(n, (int, np.integer))) or isinstance(n, bool):
        raise ValueError(f"n must be an integer or inf, got {n!r}")
    if n < m:
        raise ValueError(f"need m <= n, got m={m}, n={n}")
    if n == m:
        return 0.0
    base = 1.0 / math.sqrt(2.0 ** m * r)
    return base if n == m + 1 else KAPPA * base


def delta_choice(a, x, lam, tol=1e-12):
    """A ``delta`` with ``a delta <= 1``, ``a lam <= delta`` and ``delta/a <= (x lam)**(1/3) <= a delta``.

    Returns the midpoint of the feasible interval
    ``[max(a lam, (x lam)**(1/3)/a), min(1/a, a (x lam)**(1/3))]``, which is
    nonempty when ``a >= 1`` and ``0 < lam <= min(sqrt x, 1/x, 1/a**2)``.
    ``tol`` absorbs rounding when the interval degenerates to a point.
    """
    a = float(a)
    if not a >= 1.0:
        raise DomainError(f"a={a} must be at least 1")
    x = positive(x, "x")
    lam = positive(lam, "lam")
    cube = (x * lam) ** (1.0 / 3.0)
    lo = max(a * lam, cube / a)
    hi = min(1.0 / a, a * cube)
    if lo > hi * (1.0 + tol):
        raise DomainError(f"no feasible delta: [{lo}, {hi}] is empty")
    delta = 0.5 * (lo + hi) if lo <= hi else hi
    slack = tol * max(1.0, delta)
    ok = (a * delta <= 1.0 + slack and a * lam <= delta + slack
          and delta / a <= cube + slack and cube <= a * delta + slack)
    if not ok:
        raise DomainError("delta post-check failed")
    return delta
