"""Cumulant generating functions ``f_r(lam) = log E exp(lam S_r)`` and ``sigma_r``.

Exact values come from :mod:`splitcgf.process_models`; Monte Carlo values
come from a log-sum-exp estimate with a delta-method confidence interval.
An *evaluator* is any callable ``f(r, lam)`` returning ``f_r(lam)``; the
bound-chain operations consume evaluators.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import special, stats
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import process_models as pm
from ._validation import count, positive, real_array
from .rng import BATCH_SIZE, draw_batched, label_key

KAPPA = math.sqrt(2.0) / (math.sqrt(2.0) - 1.0)
MIN_SAMPLES = 100


@dataclass(frozen=True)
class CgfValue:
    """One value of ``f_r(lam)``.

    ``raw`` is the unclamped estimate; ``value`` is clamped at 0 because a
    cumulant generating function of a centered variable is nonnegative.
    ``heavy_tail`` flags estimates dominated by a single draw.
    """

    value: float
    source: str
    ci_half_width: float = 0.0
    heavy_tail: bool = False
    raw: float = None
    n_samples: int = 0

    def __post_init__(self):
        if self.source not in ("exact", "monte_carlo"):
            raise ValueError(f"unknown source {self.source!r}")
        if self.raw is None:
            object.__setattr__(self, "raw", self.value)
        if math.isfinite(self.value) and self.value < 0:
            raise ValueError("a CGF value is nonnegative")


@dataclass(frozen=True)
class SigmaEstimate:
    """``sigma_r`` with the deterministic bound on ``|sigma_r - sigma|``."""

    r: float
    sigma_r: float
    deterministic_gap_to_limit: float
    ci_half_width: float = 0.0
    source: str = "monte_carlo"

    @property
    def limit_interval(self):
        """Interval certain to contain ``sigma`` up to sampling error."""
        lo = self.sigma_r - self.ci_half_width - self.deterministic_gap_to_limit
        hi = self.sigma_r + self.ci_half_width + self.deterministic_gap_to_limit
        return max(lo, 0.0), hi


def _z(confidence):
    return float(stats.norm.ppf(0.5 + 0.5 * confidence))


def log_mean_exp(x, lam, confidence=0.95, heavy_tail_share=0.05, centered=False):
    """Estimate ``log E exp(lam X)`` from draws ``x``.

    Returns ``(raw, ci_half_width, heavy_tail)``.  The confidence interval is
    the delta-method interval of the log of a sample mean.  With
    ``centered=True`` the known ``E X = 0`` is used as a control variate:
    the mean of ``exp(lam x) - lam x`` replaces that of ``exp(lam x)``, which
    removes the sampling noise of the linear term at small ``lam``.
    """
    x = np.asarray(x, dtype=float)
    if lam == 0.0:
        return 0.0, 0.0, False
    t = lam * x
    m = float(np.max(t))
    n = x.size
    if centered and m < 700.0:
        d = pm.exp_minus_linear(t)
        total = math.fsum(d)
        mean = total / n
        sd = float(np.std(d, ddof=1)) if n > 1 else math.inf
        half = _z(confidence) * sd / ((1.0 + mean) * math.sqrt(n))
        heavy = bool(total > 0 and np.max(d) / (n + total) > heavy_tail_share)
        return math.log1p(mean), half, heavy
    w = np.exp(t - m)
    total = math.fsum(w)
    raw = m + math.log(total / n)
    mean = total / n
    sd = float(np.std(w, ddof=1)) if n > 1 else math.inf
    half = _z(confidence) * sd / (mean * math.sqrt(n))
    heavy = bool(np.max(w) / total > heavy_tail_share)
    return raw, half, heavy


class MonteCarloCGF(BaseEstimator):
    """Empirical CGF of a sample.

    ``fit`` takes a one-dimensional sample (or an ``(n, 1)`` array) of ``S_r``;
    ``evaluate`` returns a :class:`CgfValue` and ``predict`` the clamped values
    on a grid of ``lam``.
    """

    def __init__(self, confidence=0.95, heavy_tail_share=0.05, centered=False):
        self.confidence = confidence
        self.heavy_tail_share = heavy_tail_share
        self.centered = centered

    def fit(self, X, y=None):
        X = check_array(np.asarray(X, dtype=float).reshape(-1, 1), ensure_min_samples=MIN_SAMPLES)
        self.samples_ = X[:, 0].copy()
        self.n_samples_ = self.samples_.size
        return self

    def evaluate(self, lam):
        check_is_fitted(self, "samples_")
        raw, half, heavy = log_mean_exp(self.samples_, float(lam), self.confidence, self.heavy_tail_share,
                                       self.centered)
        return CgfValue(max(raw, 0.0), "monte_carlo", half, heavy, raw, self.n_samples_)

    def predict(self, lam):
        lam = real_array(lam, "lam")
        return np.array([self.evaluate(x).value for x in lam])


class SigmaEstimator(BaseEstimator):
    """``sigma_r = sqrt(E S_r**2)`` from a sample, with a delta-method interval."""

    def __init__(self, confidence=0.95):
        self.confidence = confidence

    def fit(self, X, y=None, r=None):
        X = check_array(np.asarray(X, dtype=float).reshape(-1, 1), ensure_min_samples=MIN_SAMPLES)
        sq = X[:, 0] ** 2
        second = float(np.mean(sq))
        self.sigma_ = math.sqrt(second)
        sd = float(np.std(sq, ddof=1))
        self.ci_half_width_ = (_z(self.confidence) * sd / (2.0 * self.sigma_ * math.sqrt(sq.size))
                               if self.sigma_ > 0 else 0.0)
        self.r_ = r
        return self

    def estimate(self):
        check_is_fitted(self, "sigma_")
        if self.r_ is None:
            raise ValueError("fit with r= to attach the gap bound")
        return SigmaEstimate(self.r_, self.sigma_, KAPPA / math.sqrt(self.r_), self.ci_half_width_)


def sample_S_batched(model, r, n_samples, seed, threads=1, key=()):
    """``n_samples`` draws of ``S_r`` on per-batch streams; independent of ``threads``."""
    n_samples = count(n_samples, "n_samples")
    stream_key = (label_key(model.model_id), label_key(repr(float(r)))) + tuple(key)
    return draw_batched(lambda g, m: pm.sample_S(model, r, g, size=m), n_samples, seed, stream_key, threads)


def estimate_cgf_mc(model, r, lam, n_samples, seed, threads=1, confidence=0.95):
    r = positive(r, "r")
    if count(n_samples, "n_samples") < MIN_SAMPLES:
        raise ValueError(f"n_samples must be at least {MIN_SAMPLES}")
    if float(lam) == 0.0:
        return CgfValue(0.0, "monte_carlo", 0.0, n_samples=n_samples)
    x = sample_S_batched(model, r, n_samples, seed, threads)
    return MonteCarloCGF(confidence).fit(x).evaluate(lam)


def estimate_sigma_r(model, r, n_samples, seed, threads=1, confidence=0.95):
    r = positive(r, "r")
    if count(n_samples, "n_samples") < MIN_SAMPLES:
        raise ValueError(f"n_samples must be at least {MIN_SAMPLES}")
    x = sample_S_batched(model, r, n_samples, seed, threads, key=(label_key("sigma"),))
    return SigmaEstimator(confidence).fit(x, r=r).estimate()


def exact_sigma_r(model, r):
    """``sigma_r`` from the closed-form variance, or ``None``."""
    if not model.has_exact_cgf:
        return None
    r = positive(r, "r")
    sigma = math.sqrt(model.variance(r))
    return SigmaEstimate(r, sigma, KAPPA / math.sqrt(r), 0.0, "exact")


# ---------------------------------------------------------------------------
# evaluators


class ExactCGF:
    """Evaluator backed by a closed form."""

    def __init__(self, model):
        if not model.has_exact_cgf:
            raise ValueError(f"{model.model_id} has no closed-form CGF")
        self.model = model

    def __call__(self, r, lam):
        out = pm.cgf_values(self.model, r, lam)
        return float(out) if np.ndim(out) == 0 else out


class ScaledCGF:
    """``factor * f``; with ``factor != 1`` the result is generally not a CGF."""

    def __init__(self, base, factor):
        self.base = base
        self.factor = float(factor)

    def __call__(self, r, lam):
        return self.factor * self.base(r, lam)


class RescaledCGF:
    """The rescaled family ``g_r(lam) = f_{s**2 r}(s lam)``."""

    def __init__(self, base, s):
        self.base = base
        self.s = positive(s, "s")

    def __call__(self, r, lam):
        return self.base(self.s ** 2 * r, self.s * np.asarray(lam, dtype=float))


class TabulatedCGF:
    """Evaluator over stored draws of ``S_r``, one sample per ``r``."""

    def __init__(self, samples_by_r, confidence=0.95):
        self.fits = {float(r): MonteCarloCGF(confidence).fit(x) for r, x in samples_by_r.items()}

    def __call__(self, r, lam):
        try:
            est = self.fits[float(r)]
        except KeyError:
            raise ValueError(f"no sample stored for r={r!r}") from None
        if np.ndim(lam) == 0:
            return est.evaluate(lam).value
        return est.predict(lam)


# ---------------------------------------------------------------------------
# checks and probes


@dataclass
class SubquadResult:
    verdict: str
    worst_margin: float
    lambdas: np.ndarray = field(repr=False)
    margins: np.ndarray = field(repr=False)
    reason: str = ""


def subquad_check(z, lam_grid=None, confidence=0.95, slack=1e-9, precondition_z=3.0):
    """Empirical check of ``log E exp(lam Z) <= lam**2`` on ``[-1, 1]``.

    The inequality is a consequence of ``E Z = 0`` and ``E exp|Z| <= 2``; when
    the sample contradicts either hypothesis the verdict is ``inapplicable``.
    A grid point fails only when the estimate exceeds ``lam**2`` by more than
    its confidence half-width plus ``slack``.
    """
    z = real_array(z, "z")
    if z.size < 2:
        raise ValueError("need at least two draws of Z")
    lam = np.linspace(-1.0, 1.0, 33) if lam_grid is None else real_array(lam_grid, "lam_grid")
    if np.any(np.abs(lam) > 1.0):
        raise ValueError("subquadratic check is stated for |lam| <= 1")
    n = z.size
    mean, sd = float(np.mean(z)), float(np.std(z, ddof=1))
    if abs(mean) > precondition_z * sd / math.sqrt(n) + slack:
        return SubquadResult("inapplicable", math.nan, lam, np.full(lam.shape, math.nan),
                             "sample mean of Z is not consistent with 0")
    e = np.exp(np.abs(z))
    upper = float(np.mean(e)) - _z(confidence) * float(np.std(e, ddof=1)) / math.sqrt(n)
    if upper > 2.0:
        return SubquadResult("inapplicable", math.nan, lam, np.full(lam.shape, math.nan),
                             "E exp|Z| is not consistent with <= 2")
    margins = np.empty(lam.shape)
    for i, x in enumerate(lam):
        raw, half, _ = log_mean_exp(z, float(x), confidence)
        margins[i] = x * x + half - raw
    worst = float(np.min(margins))
    return SubquadResult("pass" if worst >= -slack else "fail", worst, lam, margins)


def probe_epsilon(evaluator, r_values, eps_grid=None, lam_grid=None):
    """Largest grid ``eps`` with ``f_r(eps lam) <= lam**2`` for all ``|lam| <= 1`` and given ``r``.

    The existence of such an ``eps`` is guaranteed but not constructive; this
    probe only tests a finite grid.  Returns ``None`` when no grid value works.
    """
    eps_grid = [math.ldexp(1.0, -k) for k in range(0, 31)] if eps_grid is None else sorted(eps_grid, reverse=True)
    lam = np.linspace(-1.0, 1.0, 33) if lam_grid is None else real_array(lam_grid, "lam_grid")
    for eps in eps_grid:
        ok = True
        for r in r_values:
            with np.errstate(over="ignore", invalid="ignore"):
                vals = np.asarray(evaluator(r, eps * lam), dtype=float)
            if not np.all(np.isfinite(vals)) or np.any(vals > lam ** 2 + 1e-12):
                ok = False
                break
        if ok:
            return float(eps)
    return None


# ---------------------------------------------------------------------------
# sweeps

SWEEP_COLUMNS = ("model_id", "r", "lambda", "value", "ci", "source")


def cgf_sweep(model, r_grid, lam_grid, *, method="auto", n_samples=100_000, seed=None,
              threads=1, confidence=0.95):
    """Rows ``(model_id, r, lambda, value, ci, source)`` over a grid.

    ``method='auto'`` uses the closed form when available.  Monte Carlo rows at
    one ``r`` share a single batch of draws.
    """
    lam_grid = real_array(lam_grid, "lam_grid")
    if method not in ("auto", "exact", "monte_carlo"):
        raise ValueError(f"unknown method {method!r}")
    use_exact = model.has_exact_cgf and method != "monte_carlo"
    if method == "exact" and not model.has_exact_cgf:
        raise ValueError(f"{model.model_id} has no closed-form CGF")
    rows = []
    for r in r_grid:
        r = positive(r, "r")
        if use_exact:
            vals = pm.cgf_values(model, r, lam_grid)
            rows.extend((model.model_id, r, float(x), float(v), 0.0, "exact") for x, v in zip(lam_grid, vals))
            continue
        if lam_grid.size == 0:
            continue
        if seed is None:
            raise ValueError("a seed is required for Monte Carlo sweeps")
        est = MonteCarloCGF(confidence).fit(sample_S_batched(model, r, n_samples, seed, threads))
        for x in lam_grid:
            c = est.evaluate(float(x))
            rows.append((model.model_id, r, float(x), c.value, c.ci_half_width, c.source))
    return rows


def normal_log_sf(c):
    """``log P(N(0,1) >= c)``, accurate far in the tail."""
    return float(special.log_ndtr(-np.asarray(c, dtype=float)))


__all__ = [
    "BATCH_SIZE", "CgfValue", "ExactCGF", "KAPPA", "MonteCarloCGF", "RescaledCGF", "ScaledCGF",
    "SigmaEstimate", "SigmaEstimator", "SubquadResult", "TabulatedCGF", "cgf_sweep", "estimate_cgf_mc",
    "estimate_sigma_r", "exact_sigma_r", "log_mean_exp", "normal_log_sf", "probe_epsilon",
    "sample_S_batched", "subquad_check",
]
