import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from splitcgf import DomainError
from splitcgf.bound_chain import (A_CUBIC, A_MEDIAN_DEFAULT, DERIVED_CONSTANTS, QuadBound, delta_choice,
                                  envelope_constant, lower_envelope, median3, median_piecewise,
                                  quad_approx_deviation, quad_approx_error, quad_envelope_error,
                                  sigma_gap_bound, upper_envelope)
from splitcgf.cgf import ExactCGF
from splitcgf.process_models import ProcessModel

SQRT2 = math.sqrt(2)
KAPPA = SQRT2 / (SQRT2 - 1)
WHITE = ExactCGF(ProcessModel.white_noise())
POISSON = ExactCGF(ProcessModel.centered_poisson())


# envelopes ----------------------------------------------------------------

def test_upper_envelope_example():
    env = upper_envelope(QuadBound("upper", 1.0, 0.1, 1.0, 1.0), 10)
    assert env.C == pytest.approx(math.expm1(0.1 * KAPPA) / 0.1, rel=1e-15)
    assert env.C == pytest.approx(4.0695, abs=1e-4)
    assert env.lam_max == pytest.approx(16.0)
    assert env.V(1.0) == pytest.approx(0.3125)
    want = 1 + 0.1 * env.C * 2 * 1.3125 / 0.96875
    assert env.coefficient(1.0) == pytest.approx(want, rel=1e-14)
    assert env.coefficient(1.0) == pytest.approx(2.103, abs=1e-3)
    assert env.r == 1024.0
    with pytest.raises(DomainError):
        env.value(16.5)


def test_lower_envelope_example():
    env = lower_envelope(QuadBound("lower", 1.0, 0.05, 1.0, 1.0), 10)
    assert env.coefficient(1.0) == pytest.approx(1 - (SQRT2 + 1) * 0.05 * 2 * 1.3125, rel=1e-14)
    assert env.coefficient(1.0) == pytest.approx(0.6832, abs=1e-4)
    assert env.lam_max == pytest.approx(32.0)
    assert env.coefficient(32.0) == 0.0  # clamped


def test_envelope_preconditions():
    q = QuadBound("upper", 1.0, 0.5, 1.0, 1.0)
    with pytest.raises(DomainError):
        upper_envelope(q, 3)
    with pytest.raises(DomainError):
        upper_envelope(QuadBound("upper", 1.0, 0.1, 4.0, 1.0), 3)  # holds only on |lam| <= 1 < sqrt 4
    with pytest.raises(DomainError):
        upper_envelope(QuadBound("upper", 1.0, 0.1, 1.0, 1.0), 0)
    with pytest.raises(DomainError):
        lower_envelope(QuadBound("lower", 0.0, 0.1, 1.0, 1.0), 2)
    with pytest.raises(ValueError):
        lower_envelope(QuadBound("upper", 1.0, 0.1, 1.0, 1.0), 2)


@pytest.mark.parametrize("r", [1.0, 16.0])
@pytest.mark.parametrize("eps", [0.05, 0.2, SQRT2 - 1])
def test_envelopes_sandwich_poisson(r, eps):
    a_up = POISSON(r, eps * math.sqrt(r)) / r * (1 + 1e-12)
    a_lo = POISSON(r, -eps * math.sqrt(r)) / r * (1 - 1e-12)
    up = QuadBound("upper", a_up, eps, r, math.sqrt(r))
    lo = QuadBound("lower", a_lo, eps, r, math.sqrt(r))
    assert up.holds_for(POISSON) and lo.holds_for(POISSON)
    for n in range(1, 13):
        u, l_ = upper_envelope(up, n), lower_envelope(lo, n)
        for lam in np.linspace(-min(u.lam_max, l_.lam_max), min(u.lam_max, l_.lam_max), 33):
            truth = POISSON(u.r, eps * lam)
            assert l_.value(lam) - 1e-9 <= truth <= u.value(lam) + 1e-9


def test_white_noise_envelope_is_loose():
    up = QuadBound("upper", 0.005, 0.1, 1.0, 1.0)
    env = upper_envelope(up, 4)
    lam = np.linspace(-env.lam_max, env.lam_max, 17)
    assert all(WHITE(env.r, 0.1 * x) <= env.value(x) for x in lam)


# quadratic approximation ---------------------------------------------------

def test_cubic_constant_and_examples():
    assert A_CUBIC == pytest.approx(0.34021, abs=1e-5)
    err = quad_approx_error(0.5, 0.5, 0.5, 1.0)
    assert err == pytest.approx(A_CUBIC * 2 * math.exp(0.5), rel=1e-14)
    assert err == pytest.approx(1.1219, abs=1e-4)
    assert quad_approx_deviation(WHITE, 1.0, 0.5, 1.0) == 0.0
    assert quad_approx_error(math.inf, 0.5, 0.5, 1.0) == math.inf
    with pytest.raises(DomainError):
        quad_approx_error(0.5, 0.5, 1.0, 1.0)


def test_quad_approx_vanishes_cubically():
    e1 = quad_approx_error(0.5, 0.5, 1e-3, 1.0)
    e2 = quad_approx_error(0.5, 0.5, 5e-4, 1.0)
    assert e1 / e2 == pytest.approx(8.0, rel=1e-2)
    assert quad_approx_error(0.5, 0.5, 0.0, 1.0) == 0.0


@pytest.mark.parametrize("r", [1.0, 4.0, 100.0])
@pytest.mark.parametrize("lam", [0.1, 0.5, 0.9])
def test_quad_approx_bounds_poisson(r, lam):
    c = 1.0
    bound = quad_approx_error(POISSON(r, -c), POISSON(r, c), lam, c)
    assert quad_approx_deviation(POISSON, r, lam, 1.0) <= bound


# median bound -------------------------------------------------------------

@pytest.mark.parametrize("triple, want", [((1, 2, 3), 2), ((5, 5, 1), 5), ((3, 1, 2), 2), ((2, 2, 2), 2)])
def test_median3_examples(triple, want):
    assert median3(*triple) == want


def test_median3_matches_sorting():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(1_000_000, 3))
    x[::7, 1] = x[::7, 0]  # plenty of ties
    got = np.maximum(np.minimum(x[:, 0], x[:, 1]), np.minimum(np.maximum(x[:, 0], x[:, 1]), x[:, 2]))
    np.testing.assert_array_equal(got, np.sort(x, axis=1)[:, 1])
    for row in x[:2000]:
        assert median3(*row) == sorted(row)[1]


@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_median3_property(a, b, c):
    assert median3(a, b, c) == sorted([a, b, c])[1]


def test_piecewise_matches_median_dense():
    for n in (2, 4, 8, 16, 30):
        for eps in (0.01, 0.1, 0.4):
            root = math.sqrt(n * eps)
            knots = [root * 2 ** (-n / 4), root * 2 ** (n / 2)]
            grid = np.concatenate([np.geomspace(knots[0] / 100, knots[1] * 100, 400), knots])
            for lam in grid:
                h = 2 ** (-n / 2)
                med = median3(lam, (h * n * eps * lam) ** (1 / 3), h * lam)
                assert median_piecewise(eps, n, lam) == pytest.approx(med, rel=1e-12)


def test_regime_boundary():
    n, eps = 8, 0.05
    x = math.sqrt(n * eps) * 2 ** (-n / 4)
    assert (2 ** (-n / 2) * n * eps * x) ** (1 / 3) == pytest.approx(x, rel=1e-12)
    y = math.sqrt(n * eps) * 2 ** (n / 2)
    assert (2 ** (-n / 2) * n * eps * y) ** (1 / 3) == pytest.approx(2 ** (-n / 2) * y, rel=1e-12)


def test_quad_envelope_error_examples():
    assert quad_envelope_error(0.05, 1.0, 8, 1.0, A=1.0) == pytest.approx(0.4 ** (1 / 3) / 2 ** (4 / 3), rel=1e-12)
    assert quad_envelope_error(0.05, 1.0, 8, 1.0, A=1.0) == pytest.approx(0.2924, abs=1e-4)
    assert quad_envelope_error(0.05, 1.0, 8, 1.0) == pytest.approx(0.2924 * A_MEDIAN_DEFAULT, rel=1e-3)
    lo = quad_envelope_error(0.05, 1.0, 8, 1e-8, A=1.0)
    assert lo == pytest.approx(1e-8)  # linear near zero
    with pytest.raises(DomainError):
        quad_envelope_error(0.05, 1.0, 8, 16 * 1 / 9 * 1.01)
    with pytest.raises(DomainError):
        quad_envelope_error(0.5, 1.0, 8, 0.1)
    with pytest.raises(DomainError):
        quad_envelope_error(0.05, 1.0, 8, 0.0)
    with pytest.raises(DomainError):
        quad_envelope_error(0.05, 1.0, 8, 1.0, capped=True)  # cap sqrt(0.4)


def test_derived_constant_table():
    c = DERIVED_CONSTANTS
    assert c["doubling"] == pytest.approx(2 * math.exp(2 * math.exp(SQRT2) - 1) * A_CUBIC)
    assert c["envelope_C"] == pytest.approx(envelope_constant((SQRT2 - 1) / 2), rel=1e-14)
    assert A_MEDIAN_DEFAULT == max(c["small_lambda"], c["middle"], c["large_lambda"])


# sigma chain and delta -----------------------------------------------------

def test_sigma_gap():
    assert sigma_gap_bound(0, math.inf, 100.0) == pytest.approx(KAPPA / 10, rel=1e-15)
    assert sigma_gap_bound(0, math.inf, 100.0) == pytest.approx(0.34142, abs=1e-5)
    assert sigma_gap_bound(0, 1, 4.0) == 0.5
    assert sigma_gap_bound(3, 3, 4.0) == 0.0
    assert sigma_gap_bound(1, 5, 2.0) == pytest.approx(KAPPA / 2)
    with pytest.raises(ValueError):
        sigma_gap_bound(4, 2, 1.0)


@pytest.mark.parametrize("sigma", [0.5, 1.0, 3.0])
def test_sigma_gap_bounds_poisson_variance_chain(sigma):
    model = ProcessModel.centered_poisson(sigma)
    # sigma_r is constant for an exact process, so every gap must be within the bound
    for r in (0.25, 1.0, 64.0):
        assert abs(math.sqrt(model.variance(r)) - sigma) <= sigma_gap_bound(0, math.inf, r)


def test_delta_choice_examples():
    assert delta_choice(3.0, 0.1, 1 / 9) == pytest.approx(1 / 3, rel=1e-9)
    d = delta_choice(1.0, 1.0, 1.0)
    assert d == pytest.approx(1.0)
    with pytest.raises(DomainError):
        delta_choice(3.0, 0.1, 0.2)
    with pytest.raises(DomainError):
        delta_choice(0.5, 0.1, 0.01)


def _check_delta(a, x, lam, d):
    cube = (x * lam) ** (1 / 3)
    tol = 1e-12
    assert a * d <= 1 + tol and a * lam <= d + tol
    assert d / a <= cube + tol and cube <= a * d + tol


def test_delta_choice_over_second_regime():
    a = 3.0
    for n in range(2, 31):
        for eps in (0.01, 0.05, 0.1, 0.2, 0.4):
            x = n * eps
            lo = math.sqrt(x) * 2 ** (-n / 4)
            hi = 2 ** (n / 2) * min(math.sqrt(x), 1 / (3 * x), 1 / 9)
            if lo > hi:
                continue
            for lam in np.geomspace(lo, hi, 25):
                lam_eff = 2 ** (-n / 2) * lam
                _check_delta(a, x, lam_eff, delta_choice(a, x, lam_eff))


@given(st.floats(1.0, 20.0), st.floats(1e-4, 1e4), st.floats(1e-100, 1.0))
def test_delta_choice_postcondition(a, x, t):
    lam = t * min(math.sqrt(x), 1 / x, 1 / a ** 2)
    _check_delta(a, x, lam, delta_choice(a, x, lam))
