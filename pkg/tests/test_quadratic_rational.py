import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from splitcgf import DomainError
from splitcgf.bound_chain import (QuadBound, iterate_lower_quad, iterate_upper_quad, quad_lower_step,
                                  quad_upper_step, rational_from_quad, rational_lower_iterate,
                                  rational_lower_step, rational_upper_iterate, rational_upper_step,
                                  RationalBound)
from splitcgf.cgf import ExactCGF
from splitcgf.process_models import ProcessModel

SQRT2 = math.sqrt(2)
POISSON = ExactCGF(ProcessModel.centered_poisson())


def up(a_minus_1, eps, r=1.0, lam_max=1.0):
    return QuadBound("upper", a_minus_1, eps, r, lam_max)


def lo(a_minus_1, eps, r=1.0, lam_max=1.0):
    return QuadBound("lower", a_minus_1, eps, r, lam_max)


# quadratic doubling ------------------------------------------------------

def test_iterate_upper_values():
    assert iterate_upper_quad(up(0.5, 0.0), 7).a == 0.5
    assert iterate_upper_quad(up(1.0, SQRT2 - 1), 4).a == pytest.approx(2 * math.exp(SQRT2) - 1, rel=1e-14)
    # 1.5 exp(0.34142) - 1 evaluates to 1.11042
    assert iterate_upper_quad(up(0.5, 0.1), 3).a == pytest.approx(1.5 * math.exp(0.1 * SQRT2 / (SQRT2 - 1)) - 1)
    assert iterate_upper_quad(up(0.5, 0.1), 3).a == pytest.approx(1.11042, abs=1e-5)
    assert iterate_upper_quad(up(0.5, 0.1), 3).r == 8.0


def test_iterate_lower_values():
    assert iterate_lower_quad(lo(0.5, 0.0), 7).a == 0.5
    assert iterate_lower_quad(lo(1.0, 1 / (SQRT2 + 1)), 2).a == 0.0
    assert iterate_lower_quad(lo(0.5, 0.05), 5).a == pytest.approx(1.5 * (1 - 0.12071067811865) - 1, abs=1e-12)
    assert iterate_lower_quad(lo(0.5, 0.05), 5).a == pytest.approx(0.3189, abs=1e-4)


def test_quad_preconditions():
    with pytest.raises(DomainError):
        iterate_upper_quad(up(1.0, 0.5), 1)
    with pytest.raises(DomainError):
        quad_upper_step(up(1.0, 0.5))
    with pytest.raises(DomainError):
        iterate_lower_quad(lo(1.0, SQRT2), 1)
    with pytest.raises(DomainError):
        iterate_upper_quad(up(1.0, 0.1, lam_max=0.5), 1)
    with pytest.raises(ValueError):
        iterate_upper_quad(lo(1.0, 0.1), 1)
    with pytest.raises(ValueError):
        iterate_upper_quad(up(1.0, 0.1), -1)


@given(st.floats(0, 10), st.floats(0, 0.4142), st.floats(0.5, 100), st.integers(1, 30))
def test_stepwise_product_is_below_closed_form(a1, eps, r, n):
    q = up(a1, eps * math.sqrt(r), r)
    stepped = q
    for _ in range(n):
        stepped = quad_upper_step(stepped)
    closed = iterate_upper_quad(q, n)
    assert stepped.r == closed.r
    assert stepped.a <= closed.a * (1 + 1e-12) + 1e-12


@given(st.floats(0, 10), st.floats(0, 1.41), st.floats(0.5, 100), st.integers(1, 30))
def test_stepwise_lower_product_is_above_closed_form(a1, eps, r, n):
    q = lo(a1, eps * math.sqrt(r), r)
    stepped = q
    for _ in range(n):
        stepped = quad_lower_step(stepped)
    assert stepped.a >= iterate_lower_quad(q, n).a - 1e-12


@pytest.mark.parametrize("r", [1.0, 4.0, 64.0])
@pytest.mark.parametrize("eps", [0.1, 0.3])
def test_iterated_bounds_hold_for_poisson(r, eps):
    lam = np.linspace(-1, 1, 65)[np.linspace(-1, 1, 65) != 0]
    ratio = POISSON(r, eps * lam) / lam ** 2
    upper = up(float(ratio.max()) * (1 + 1e-12), eps, r)
    lower = lo(float(ratio.min()) * (1 - 1e-12), eps, r)
    assert upper.holds_for(POISSON) and lower.holds_for(POISSON)
    for n in range(0, 12):
        R = r * 2 ** n
        u, l_ = iterate_upper_quad(upper, n), iterate_lower_quad(lower, n)
        assert np.all(POISSON(R, eps * lam) <= u.a * lam ** 2 + 1e-9)
        assert np.all(POISSON(R, eps * lam) >= l_.a * lam ** 2 - 1e-9)


# rational doubling -------------------------------------------------------

def test_rational_conversion():
    rb = rational_from_quad(QuadBound("upper", 0.02, 0.1, 4.0, 2.0))
    assert rb.a == pytest.approx(2.0) and rb.b == 0 and rb.c == 0
    assert rb.delta == pytest.approx(0.1)


def test_rational_n0():
    q = QuadBound("upper", 0.5, 1.0, 2.0, 0.3 * math.sqrt(2.0))
    s0 = rational_upper_iterate(q, 0, strengthened=True)
    assert (s0.b, s0.c, s0.r) == (0.0, 0.0, 2.0)
    assert s0.delta == pytest.approx(0.3)
    # published form at n = 0 adds |lam|/sqrt r
    p0 = rational_upper_iterate(q, 0)
    assert p0.value(0.2) == pytest.approx(s0.value(0.2) + 0.2 / math.sqrt(2.0))


def test_rational_upper_example():
    q = QuadBound("upper", 1.0, 1.0, 1.0, 0.5)
    rb = rational_upper_iterate(q, 3)
    assert (rb.b, rb.c, rb.r) == (3.0, 8.0, 8.0)
    assert rb.lam_max == pytest.approx(0.5 / 2.5 * math.sqrt(8))
    with pytest.raises(DomainError):
        rb.value(1.0)  # lam = 1 lies beyond 0.2 * 2**1.5
    lam = 0.5
    want = lam ** 2 / (1 - 3 * lam / 2 ** 1.5) + 2 ** 1.5 * lam
    assert rb.value(lam) == pytest.approx(want, rel=1e-14)
    assert rb.value(0.0) == 0.0


def test_rational_lower_examples():
    q = QuadBound("lower", 1.0, 1.0, 1.0, 0.5)
    rb = rational_lower_iterate(q, 2)
    assert rb.unrestricted
    assert rb.value(2.0) == 0.0  # 4/3 - 4 clamps at 0
    assert rational_lower_iterate(q, 1).delta == pytest.approx(1.0)
    assert rational_lower_iterate(q, 0, strengthened=True).value(0.3) == pytest.approx(0.09)


def test_rational_upper_requires_b_delta_below_one():
    with pytest.raises(DomainError):
        RationalBound("upper", 1.0, 2.0, 0.0, 1.0, 0.5)
    RationalBound("lower", 1.0, 2.0, 0.0, 1.0, math.inf)


def test_rational_lower_step_unrestricted_propagates():
    rb = RationalBound("lower", 1.0, 0.0, 0.0, 1.0, math.inf)
    assert rational_lower_step(rb).unrestricted
    assert rational_lower_step(RationalBound("lower", 1.0, 0.0, 0.0, 1.0, 1.0)).unrestricted


@given(st.floats(0.01, 10), st.floats(0.01, 3), st.floats(0.1, 100), st.integers(0, 20))
def test_iterate_equals_steps(a, delta, r, n):
    q = QuadBound("upper", a, 1.0, r, delta * math.sqrt(r))
    rb = rational_from_quad(q)
    for _ in range(n):
        rb = rational_upper_step(rb)
    it = rational_upper_iterate(q, n, strengthened=True)
    assert (rb.b, rb.c, rb.r, rb.a) == (it.b, it.c, it.r, it.a)
    assert rb.delta == pytest.approx(it.delta, rel=8 * (n + 1) * 2 ** -52)


@pytest.mark.parametrize("r", [1.0, 16.0])
def test_rational_iterates_hold_for_poisson(r):
    eps = 0.3
    lam = np.linspace(-math.sqrt(r), math.sqrt(r), 65)
    nz = lam[lam != 0]
    ratio = POISSON(r, eps * nz) / nz ** 2
    up_q = QuadBound("upper", float(ratio.max()) * (1 + 1e-12), eps, r, math.sqrt(r))
    lo_q = QuadBound("lower", float(ratio.min()) * (1 - 1e-12), eps, r, math.sqrt(r))
    for n in range(0, 16):
        u = rational_upper_iterate(up_q, n)
        l_ = rational_lower_iterate(lo_q, n)
        mu = np.linspace(-u.lam_max, u.lam_max, 33)
        assert all(POISSON(u.r, m) <= u.value(m) + 1e-9 for m in mu)
        top = 50.0 if l_.unrestricted else l_.lam_max
        mu = np.linspace(-top, top, 33)
        assert all(POISSON(l_.r, m) >= l_.value(m) - 1e-9 for m in mu)
