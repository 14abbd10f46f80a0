"""Stationary processes observed through their integrals.

Only the normalized integrals ``S_r = r**-0.5 * int_0^r X_t dt`` are ever
materialized.  Three families are provided:

* white noise, ``int_a^b X dt ~ N(0, b - a)``;
* the centered rate-1 Poisson point process;
* a causal moving average ``X_t = int h(t - u) dW_u`` of either driver, with
  ``h`` piecewise constant on a uniform grid over ``[0, L]``.

For the moving average every integral ``int_a^b X_t dt`` equals
``int H_ab(u) dW_u`` with ``H_ab(u) = K(b - u) - K(a - u)`` and ``K`` the
cumulative kernel.  ``H_ab`` is piecewise linear with breakpoints on the
shifted kernel grid, so integrating it cell by cell against the driver is
exact: a Gaussian driver contributes two independent normals per cell
(the increment and the first moment about the cell midpoint) and a
Poisson driver contributes the points that fall in the cell.
"""

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np
from scipy import special

from ._validation import positive

SQRT2 = math.sqrt(2.0)

# Gauss-Legendre nodes; the variance integrand is piecewise quadratic.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(4)


class Kind(str, Enum):
    WHITE_NOISE = "white_noise"
    CENTERED_POISSON = "centered_poisson"
    KERNEL_MA = "kernel_ma"


class Driver(str, Enum):
    GAUSSIAN = "gaussian"
    POISSON = "poisson"


@dataclass(frozen=True)
class Kernel:
    """Nonnegative piecewise-constant weight function on ``[0, support]``.

    ``weights[i]`` is the height on the ``i``-th of ``len(weights)`` equal cells.
    """

    weights: tuple
    support: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.size == 0:
            raise ValueError("kernel needs at least one cell")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("kernel weights must be finite and nonnegative")
        if not np.any(w > 0):
            raise ValueError("kernel is identically zero")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        object.__setattr__(self, "support", positive(self.support, "support"))

    @classmethod
    def box(cls, height=0.5, support=2.0):
        return cls((height,), support)

    @property
    def n_cells(self):
        return len(self.weights)

    @property
    def cell(self):
        return self.support / self.n_cells

    @property
    def mass(self):
        """``int h``."""
        return float(np.sum(self.weights)) * self.cell

    def cumulative(self, y):
        """``K(y) = int_0^y h``, constant outside ``[0, support]``."""
        w = np.asarray(self.weights)
        y = np.clip(np.asarray(y, dtype=float), 0.0, self.support)
        nodes = np.concatenate([[0.0], np.cumsum(w) * self.cell])
        k = np.minimum((y / self.cell).astype(int), self.n_cells - 1)
        return nodes[k] + w[k] * (y - k * self.cell)

    def autocovariance(self, tau):
        """``R(tau) = int h(u) h(u + tau) du``; piecewise linear in ``tau``."""
        w = np.asarray(self.weights)
        m = self.n_cells
        node_vals = np.array([self.cell * np.dot(w[: m - k], w[k:]) for k in range(m)] + [0.0])
        nodes = np.arange(m + 1) * self.cell
        return np.interp(np.abs(np.asarray(tau, dtype=float)), nodes, node_vals, right=0.0)


@dataclass(frozen=True)
class ProcessModel:
    """A centered stationary process.

    ``amplitude_scale`` multiplies the whole process.  For the moving average,
    ``driver_scale`` is the standard deviation per unit time of a Gaussian
    driver; a Poisson driver always has rate 1.
    """

    kind: Kind
    kernel: Kernel = None
    driver: Driver = Driver.GAUSSIAN
    amplitude_scale: float = 1.0
    driver_scale: float = 1.0
    name: str = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "driver", Driver(self.driver))
        object.__setattr__(self, "amplitude_scale", positive(self.amplitude_scale, "amplitude_scale"))
        object.__setattr__(self, "driver_scale", positive(self.driver_scale, "driver_scale"))
        if self.kind is Kind.KERNEL_MA:
            if self.kernel is None:
                raise ValueError("kernel_ma needs a kernel")
            if self.driver is Driver.POISSON and self.driver_scale != 1.0:
                raise ValueError("a Poisson driver has unit rate; driver_scale must be 1")
        elif self.kernel is not None:
            raise ValueError(f"{self.kind.value} takes no kernel")

    # constructors -----------------------------------------------------

    @classmethod
    def white_noise(cls, amplitude_scale=1.0):
        return cls(Kind.WHITE_NOISE, amplitude_scale=amplitude_scale)

    @classmethod
    def centered_poisson(cls, amplitude_scale=1.0):
        return cls(Kind.CENTERED_POISSON, amplitude_scale=amplitude_scale)

    @classmethod
    def kernel_ma(cls, kernel, driver=Driver.GAUSSIAN, amplitude_scale=1.0, driver_scale=1.0, name=None):
        return cls(Kind.KERNEL_MA, kernel, Driver(driver), amplitude_scale, driver_scale, name)

    @classmethod
    def calibrated(cls, kernel, driver=Driver.GAUSSIAN, *, seed, driver_scale=1.0,
                   n_samples=100_000, threshold=1.9, name=None):
        """Moving average at the largest dyadic scale passing the defect moment test."""
        base = cls.kernel_ma(kernel, driver, 1.0, driver_scale, name)
        scale = calibrate_amplitude_scale(base, seed=seed, n_samples=n_samples, threshold=threshold)
        return base.with_scale(scale)

    def with_scale(self, amplitude_scale):
        return ProcessModel(self.kind, self.kernel, self.driver, amplitude_scale, self.driver_scale, self.name)

    # descriptors ------------------------------------------------------

    @property
    def model_id(self):
        if self.name:
            return self.name
        if self.kind is Kind.KERNEL_MA:
            base = f"kernel_ma_{self.driver.value}_L{self.kernel.support:g}_k{self.kernel.n_cells}"
        else:
            base = self.kind.value
        if self.amplitude_scale != 1.0:
            base += f"_s{self.amplitude_scale:g}"
        return base

    @property
    def support(self):
        """Kernel support length, 0 for processes with independent increments."""
        return self.kernel.support if self.kind is Kind.KERNEL_MA else 0.0

    @property
    def has_exact_cgf(self):
        return self.kind is not Kind.KERNEL_MA or self.driver is Driver.GAUSSIAN

    def to_dict(self):
        d = {"kind": self.kind.value, "scale": self.amplitude_scale}
        if self.kind is Kind.KERNEL_MA:
            d.update(kernel=list(self.kernel.weights), support=self.kernel.support,
                     driver=self.driver.value, driver_scale=self.driver_scale)
        if self.name:
            d["name"] = self.name
        return d

    @classmethod
    def from_dict(cls, d):
        kind = Kind(d["kind"])
        scale = float(d.get("scale", 1.0))
        if kind is not Kind.KERNEL_MA:
            return cls(kind, amplitude_scale=scale, name=d.get("name"))
        kernel = Kernel(tuple(d["kernel"]), float(d["support"]))
        return cls(kind, kernel, Driver(d.get("driver", "gaussian")), scale,
                   float(d.get("driver_scale", 1.0)), d.get("name"))

    # second moments ---------------------------------------------------

    def variance(self, r):
        """``Var S_r``; the moving-average value comes from the autocovariance."""
        r = positive(r, "r")
        s2 = self.amplitude_scale ** 2
        if self.kind is not Kind.KERNEL_MA:
            return s2
        return s2 * self.driver_scale ** 2 * _ma_integrated_autocov(self.kernel, r) / r


def _ma_integrated_autocov(kernel, r):
    """``2 * int_0^min(r, L) (r - tau) R(tau) dtau`` by piecewise Gauss-Legendre."""
    top = min(r, kernel.support)
    edges = np.arange(kernel.n_cells + 1) * kernel.cell
    edges = np.unique(np.clip(np.append(edges, top), 0.0, top))
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    tau = (lo + hi)[:, None] * 0.5 + half[:, None] * _GL_NODES[None, :]
    vals = (r - tau) * kernel.autocovariance(tau)
    return 2.0 * float(np.sum(half[:, None] * _GL_WEIGHTS[None, :] * vals))


# ---------------------------------------------------------------------------
# exact quantities


def exp_minus_linear(y):
    """``e**y - 1 - y`` without cancellation for small ``|y|``."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    small = np.abs(y) < 0.5
    ys = y[small]
    # y**2 * sum_k y**k / (k + 2)!, 20 terms reach double precision for |y| < 0.5
    acc = np.zeros_like(ys)
    for k in range(20, -1, -1):
        acc = acc * ys + 1.0 / math.factorial(k + 2)
    out[small] = ys * ys * acc
    yl = y[~small]
    with np.errstate(over="ignore"):
        out[~small] = np.expm1(yl) - yl
    return out if out.ndim else float(out)


def cgf_values(model, r, lam):
    """Vectorized exact ``f_r(lam)``; ``None`` when no closed form exists."""
    r = positive(r, "r")
    lam = np.asarray(lam, dtype=float)
    s = model.amplitude_scale
    if model.kind is Kind.WHITE_NOISE:
        return 0.5 * (s * lam) ** 2
    if model.kind is Kind.CENTERED_POISSON:
        return r * exp_minus_linear(s * lam / math.sqrt(r))
    if model.driver is Driver.GAUSSIAN:
        return 0.5 * model.variance(r) * lam ** 2
    return None


def exact_cgf(model, r, lam):
    """Closed-form ``f_r(lam)`` as a :class:`~splitcgf.cgf.CgfValue`, or ``None``."""
    from .cgf import CgfValue

    vals = cgf_values(model, r, lam)
    if vals is None:
        return None
    return CgfValue(float(vals), "exact", 0.0)


def exact_sigma_limit(model):
    """``lim sigma_r`` when known in closed form, else ``None``."""
    if model.kind is not Kind.KERNEL_MA:
        return model.amplitude_scale
    if model.driver is Driver.GAUSSIAN:
        return model.kernel.mass * model.driver_scale * model.amplitude_scale
    return None


# ---------------------------------------------------------------------------
# driver integration


def _breakpoints(kernel, windows, lo, hi):
    k = np.arange(kernel.n_cells + 1) * kernel.cell
    pts = [np.array([lo, hi])]
    if lo < 0.0 < hi:
        pts.append(np.array([0.0]))
    for a, b, _, _ in windows:
        pts.append(a - k)
        pts.append(b - k)
    pts = np.clip(np.concatenate(pts), lo, hi)
    tol = 1e-12 * max(1.0, hi - lo)
    pts[np.abs(pts) < tol] = 0.0
    pts = np.unique(pts)
    keep = np.concatenate([[True], np.diff(pts) > tol])
    pts = pts[keep]
    pts[-1] = hi
    return pts


def _driver_integrals(model, rng, n, lo, hi, windows):
    """Draws of ``int_lo^hi H_w(u) dW_u`` for each window ``w``.

    A window is ``(a, b, u_min, u_max)``: integrand ``H_ab`` restricted to
    ``u_min <= u <= u_max`` (both breakpoints).  Returns shape ``(n, len(windows))``.
    """
    kernel = model.kernel
    pts = _breakpoints(kernel, windows, lo, hi)
    left, right = pts[:-1], pts[1:]
    width = right - left
    mid = 0.5 * (left + right)
    hm = np.empty((len(windows), width.size))
    slope = np.empty_like(hm)
    for j, (a, b, u_min, u_max) in enumerate(windows):
        hl = kernel.cumulative(b - left) - kernel.cumulative(a - left)
        hr = kernel.cumulative(b - right) - kernel.cumulative(a - right)
        inside = (mid >= u_min) & (mid <= u_max)
        hm[j] = np.where(inside, 0.5 * (hl + hr), 0.0)
        slope[j] = np.where(inside, (hr - hl) / width, 0.0)
    sloped = np.any(slope != 0.0, axis=0)
    ws = width[sloped]

    if model.driver is Driver.GAUSSIAN:
        level = rng.standard_normal((n, width.size)) * np.sqrt(width)
        moment = rng.standard_normal((n, ws.size)) * np.sqrt(ws ** 3 / 12.0)
        out = level @ hm.T + moment @ slope[:, sloped].T
        return out * model.driver_scale

    counts = rng.poisson(width, size=(n, width.size))
    level = counts - width
    sub = counts[:, sloped]
    offsets = rng.random(int(sub.sum())) - 0.5
    owner = np.repeat(np.arange(sub.size), sub.ravel())
    moment = np.bincount(owner, weights=offsets, minlength=sub.size).reshape(sub.shape) * ws
    return level @ hm.T + moment @ slope[:, sloped].T


def _path_variance(model, r):
    """Variance of the cell-wise representation of ``int_0^r X dt``; equals ``r v(r)``."""
    kernel = model.kernel
    win = [(0.0, r, -kernel.support, r)]
    pts = _breakpoints(kernel, win, -kernel.support, r)
    left, right = pts[:-1], pts[1:]
    width = right - left
    hl = kernel.cumulative(r - left) - kernel.cumulative(-left)
    hr = kernel.cumulative(r - right) - kernel.cumulative(-right)
    mean = 0.5 * (hl + hr)
    slope = (hr - hl) / width
    total = np.sum(mean ** 2 * width + slope ** 2 * width ** 3 / 12.0)
    return float(total) * (model.driver_scale * model.amplitude_scale) ** 2


# ---------------------------------------------------------------------------
# samplers


def sample_S(model, r, rng, size=None):
    """Draw(s) of ``S_r``.  ``size=None`` returns a float."""
    r = positive(r, "r")
    n = 1 if size is None else int(size)
    s = model.amplitude_scale
    if model.kind is Kind.WHITE_NOISE:
        out = s * rng.standard_normal(n)
    elif model.kind is Kind.CENTERED_POISSON:
        out = s * (rng.poisson(r, n) - r) / math.sqrt(r)
    else:
        L = model.kernel.support
        out = s * _driver_integrals(model, rng, n, -L, r, [(0.0, r, -L, r)])[:, 0] / math.sqrt(r)
    return float(out[0]) if size is None else out


@dataclass(frozen=True)
class SplitSample:
    """Joint draw(s) of ``(U, V, W, Z)`` with ``sqrt(r+s) W = sqrt(r) U + sqrt(s) V + Z``."""

    u: object
    v: object
    w: object
    z: object
    r: float
    s: float

    def identity_residual(self):
        return (math.sqrt(self.r + self.s) * np.asarray(self.w) - math.sqrt(self.r) * np.asarray(self.u)
                - math.sqrt(self.s) * np.asarray(self.v) - np.asarray(self.z))


def sample_split(model, r, rng, s=None, size=None):
    """Sample the coupling behind the doubling inequalities.

    ``U`` integrates ``X^-`` over ``[-r, 0]``, ``V`` integrates ``X^+`` over
    ``[0, s]`` and ``W`` integrates ``X^0`` over ``[-r, s]``, each normalized by
    the root of its window length (``s`` defaults to ``r``).  For the moving
    average, ``X^-`` and ``X^+`` are driven by independent noises and ``X^0``
    by the noise equal to the first on ``u < 0`` and the second on ``u > 0``.
    Processes with independent increments split exactly and give ``z = 0``.
    """
    r = positive(r, "r")
    s = r if s is None else positive(s, "s")
    n = 1 if size is None else int(size)
    scale = model.amplitude_scale
    if model.kind is Kind.KERNEL_MA:
        L = model.kernel.support
        minus = _driver_integrals(model, rng, n, -r - L, 0.0,
                                  [(-r, 0.0, -r - L, 0.0), (-r, s, -r - L, 0.0)])
        plus = _driver_integrals(model, rng, n, -L, s,
                                 [(0.0, s, -L, s), (-r, s, 0.0, s)])
        u = scale * minus[:, 0] / math.sqrt(r)
        v = scale * plus[:, 0] / math.sqrt(s)
        w = scale * (minus[:, 1] + plus[:, 1]) / math.sqrt(r + s)
        z = math.sqrt(r + s) * w - math.sqrt(r) * u - math.sqrt(s) * v
    else:
        if model.kind is Kind.WHITE_NOISE:
            u = scale * rng.standard_normal(n)
            v = scale * rng.standard_normal(n)
        else:
            u = scale * (rng.poisson(r, n) - r) / math.sqrt(r)
            v = scale * (rng.poisson(s, n) - s) / math.sqrt(s)
        w = (math.sqrt(r) * u + math.sqrt(s) * v) / math.sqrt(r + s)
        z = np.zeros(n)
    if size is None:
        return SplitSample(float(u[0]), float(v[0]), float(w[0]), float(z[0]), r, s)
    return SplitSample(u, v, w, z, r, s)


def sample_defects(model, a, b, rng, size):
    """Draws of the two coupling defects of the splitting condition.

    Returns ``(left, right)`` with ``left = int_{-a}^0 (X^- - X^0)`` and
    ``right = int_0^b (X^+ - X^0)``.  The kernel is causal, so ``X^0 = X^-``
    on negative times and ``left`` vanishes identically.
    """
    a = positive(a, "a")
    b = positive(b, "b")
    n = int(size)
    left = np.zeros(n)
    if model.kind is not Kind.KERNEL_MA:
        return left, np.zeros(n)
    L = model.kernel.support
    win = [(0.0, b, -L, 0.0)]
    plus = _driver_integrals(model, rng, n, -L, 0.0, win)[:, 0]
    minus = _driver_integrals(model, rng, n, -L, 0.0, win)[:, 0]
    return left, model.amplitude_scale * (plus - minus)


def defect_variance(model, b=None):
    """Exact variance of the right defect for window ``b`` (default: full support)."""
    if model.kind is not Kind.KERNEL_MA:
        return 0.0
    kernel = model.kernel
    b = kernel.support if b is None else positive(b, "b")
    edges = np.unique(np.concatenate([-np.arange(kernel.n_cells + 1) * kernel.cell,
                                      b - np.arange(kernel.n_cells + 1) * kernel.cell]))
    edges = edges[(edges >= -kernel.support) & (edges <= 0.0)]
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    u = (lo + hi)[:, None] * 0.5 + half[:, None] * _GL_NODES[None, :]
    g = kernel.cumulative(b - u) - kernel.cumulative(-u)
    integral = float(np.sum(half[:, None] * _GL_WEIGHTS[None, :] * g ** 2))
    return 2.0 * integral * (model.amplitude_scale * model.driver_scale) ** 2


def gaussian_defect_exp_moment(model, b=None):
    """``E exp|D|`` for the Gaussian-driven defect ``D ~ N(0, tau**2)``: ``2 e^{tau^2/2} Phi(tau)``."""
    if model.kind is not Kind.KERNEL_MA:
        return 1.0
    if model.driver is not Driver.GAUSSIAN:
        raise ValueError("closed form only for a Gaussian driver")
    tau = math.sqrt(defect_variance(model, b))
    return 2.0 * math.exp(0.5 * tau * tau) * float(special.ndtr(tau))


def calibrate_amplitude_scale(model, *, seed, n_samples=100_000, threshold=1.9, r=None,
                              max_exponent=16):
    """Largest ``2**k`` with Monte Carlo ``E exp|Z| <= threshold`` at ``r`` (default ``4L``).

    ``Z`` is linear in the scale, so one batch of unit-scale defects serves
    every candidate and the estimates are monotone in ``k``.
    """
    from .rng import draw_batched

    if model.kind is not Kind.KERNEL_MA:
        return model.amplitude_scale
    unit = model.with_scale(1.0)
    r = 4.0 * model.kernel.support if r is None else positive(r, "r")
    absz = np.abs(draw_batched(lambda g, m: sample_split(unit, r, g, size=m).z, n_samples, seed, (0xCA1,)))
    for k in range(max_exponent, -1075, -1):
        scale = math.ldexp(1.0, k)
        with np.errstate(over="ignore"):
            if np.mean(np.exp(scale * absz)) <= threshold:
                return scale
    raise RuntimeError("no dyadic scale satisfies the defect moment threshold")
