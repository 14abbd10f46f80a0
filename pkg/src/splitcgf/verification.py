"""End-to-end checks of the limit statements and their hypotheses.

Every check returns a :class:`CheckReport`.  Checks on models with closed
forms consume no randomness; Monte Carlo checks draw from counter-based
streams keyed by the check and model, so reports do not depend on the number
of threads.  Each check accepts a perturbation argument used as a negative
control: a correct harness must flag the perturbed run.
"""

from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import dataclass, field
import io
import json
import math

import numpy as np
from scipy import stats

from . import cgf as cgf_mod
from . import process_models as pm
from .bound_chain import holder_grid, holder_split, sigma_gap_bound
from .bound_chain.quadratic import KAPPA, SLACK, Direction
from .rng import draw_batched, label_key

SCHEMA = "splitcgf.report"
SCHEMA_VERSION = 1
VERDICTS = ("pass", "fail", "inapplicable", "inconclusive")
DEFAULT_R_GRID = tuple(2.0 ** k for k in range(21))
DEFAULT_P_GRID = (1.1, 1.5, 2.0, 4.0)
DEFAULT_S_MULTIPLIERS = (0.25, 3.0)
MAX_VIOLATIONS_KEPT = 50


@dataclass
class CheckReport:
    check_id: str
    model_id: str
    grid: dict
    worst_margin: float
    violations: list
    verdict: str
    details: dict = field(default_factory=dict)
    n_violations: int = None

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.n_violations is None:
            self.n_violations = len(self.violations)
        if (self.verdict == "fail") != (self.n_violations > 0):
            raise ValueError("a report fails exactly when it lists violations")

    @property
    def ok(self):
        return self.verdict in ("pass", "inapplicable")

    def to_dict(self):
        return _jsonable({
            "check_id": self.check_id, "model_id": self.model_id, "grid": self.grid,
            "worst_margin": self.worst_margin, "verdict": self.verdict,
            "n_violations": self.n_violations, "violations": self.violations, "details": self.details,
        })


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def _violation(inputs, lhs, rhs):
    return {"inputs": inputs, "lhs": float(lhs), "rhs": float(rhs)}


def _finish(check, model, grid, margins, violations, details=None, inconclusive=False):
    worst = float(min(margins)) if len(margins) else math.nan
    n_viol = len(violations)
    if n_viol:
        verdict = "fail"
    elif inconclusive:
        verdict = "inconclusive"
    else:
        verdict = "pass"
    return CheckReport(f"{check}:{model.model_id}", model.model_id, grid, worst,
                       violations[:MAX_VIOLATIONS_KEPT], verdict, details or {}, n_viol)


def _inapplicable(check, model, grid, reason):
    return CheckReport(f"{check}:{model.model_id}", model.model_id, grid, math.nan, [], "inapplicable",
                       {"reason": reason})


def _zq(confidence):
    return float(stats.norm.ppf(0.5 + 0.5 * confidence))


# ---------------------------------------------------------------------------
# splittability


def check_splittability(model, r_grid=None, n_samples=100_000, seed=None, threads=1,
                        confidence=0.95, inflate=1.0):
    """Monte Carlo test of ``E exp(|left defect| + |right defect|) <= 2``.

    Both defect windows are taken of length ``r``; beyond the kernel support
    the defect no longer depends on the window.  The check passes when the
    upper confidence limit is at most 2.  ``inflate`` multiplies the defects.
    """
    if model.kind is not pm.Kind.KERNEL_MA:
        r_grid = list(r_grid or [1.0])
        grid = {"r": r_grid, "n_samples": 0}
        if inflate != 1.0:
            grid["inflate"] = inflate
        return _finish("splittability", model, grid, [1.0] * len(r_grid), [],
                       {"statistic": {repr(float(r)): 1.0 for r in r_grid}, "exact": True})
    if seed is None:
        raise ValueError("a seed is required for the splittability check")
    r_grid = list(r_grid or [4.0 * model.kernel.support])
    zq = _zq(confidence)
    margins, violations, stat = [], [], {}
    for r in r_grid:
        key = (label_key("splittability"), label_key(model.model_id), label_key(repr(float(r))))
        left, right = draw_batched(lambda g, m: pm.sample_defects(model, r, r, g, m), n_samples, seed, key, threads)
        e = np.exp(inflate * (np.abs(left) + np.abs(right)))
        mean = float(np.mean(e))
        upper = mean + zq * float(np.std(e, ddof=1)) / math.sqrt(e.size)
        stat[repr(float(r))] = {"mean": mean, "upper": upper}
        margins.append(2.0 - upper)
        if upper > 2.0:
            violations.append(_violation({"r": r}, upper, 2.0))
    grid = {"r": r_grid, "n_samples": n_samples, "confidence": confidence}
    if inflate != 1.0:
        grid["inflate"] = inflate
    return _finish("splittability", model, grid, margins, violations,
                   {"statistic": stat, "amplitude_scale": model.amplitude_scale})


# ---------------------------------------------------------------------------
# Hölder chain


def check_holder_chain(model, r_grid=DEFAULT_R_GRID, p_grid=DEFAULT_P_GRID,
                       s_multipliers=DEFAULT_S_MULTIPLIERS, n_points=33, slack=SLACK,
                       corrupt_factor=None):
    """Both Hölder inequalities against the exact CGF on a grid of ``(r, s, p, lam)``.

    ``s = r`` tests the doubling steps; the multipliers test the two-window
    form.  ``corrupt_factor`` replaces the evaluator on the bound side by
    ``factor * f``; the exact side is never altered.
    """
    if not model.has_exact_cgf:
        return _inapplicable("holder_chain", model, {}, "no closed-form CGF")
    exact = cgf_mod.ExactCGF(model)
    bound_side = exact if corrupt_factor is None else cgf_mod.ScaledCGF(exact, corrupt_factor)
    margins, violations = [], []
    n_points_total = 0
    for r in r_grid:
        for mult in (1.0,) + tuple(s_multipliers):
            s = r * mult
            for p in p_grid:
                for direction in (Direction.UPPER, Direction.LOWER):
                    lam = holder_grid(r, s, p, direction, n_points)
                    lhs = np.asarray(exact(r + s, lam))
                    rhs = holder_split(bound_side, r, s, p, lam, direction)
                    margin = rhs - lhs if direction is Direction.UPPER else lhs - rhs
                    n_points_total += lam.size
                    margins.append(float(np.min(margin)))
                    for i in np.flatnonzero(margin < -slack):
                        violations.append(_violation(
                            {"r": r, "s": s, "p": p, "lambda": float(lam[i]), "direction": direction.value},
                            lhs[i], rhs[i]))
    grid = {"r": list(r_grid), "p": list(p_grid), "s_over_r": [1.0, *s_multipliers],
            "n_lambda": n_points, "slack": slack, "n_points": n_points_total}
    if corrupt_factor is not None:
        grid["corrupt_factor"] = corrupt_factor
    return _finish("holder_chain", model, grid, margins, violations)


# ---------------------------------------------------------------------------
# linear response


def linear_response_grid(r, delta, n_points=33):
    """Nonzero ``lam`` with ``|lam| log(2r) <= delta`` on a symmetric grid."""
    top = delta / math.log(2.0 * r)
    lam = np.linspace(-top, top, n_points)
    return lam[lam != 0.0]


def _tolerance_fn(tolerance, eps=None, A=None):
    if callable(tolerance):
        return tolerance
    if tolerance == "scheduled":
        # cube-root approach to the limit plus the deterministic sigma gap
        def tol(r, lam, sigma):
            gap = KAPPA / math.sqrt(r)
            return (abs(lam) * math.log2(2.0 * r)) ** (1.0 / 3.0) + gap * (sigma + 0.5 * gap)
        return tol
    if tolerance == "median_bound":
        from .bound_chain import A_MEDIAN_DEFAULT

        if eps is None:
            raise ValueError("the median_bound schedule needs eps")
        const = 2.0 * (A_MEDIAN_DEFAULT if A is None else A) / eps ** 2

        def tol(r, lam, sigma):
            gap = KAPPA / math.sqrt(r)
            return const * (abs(lam) * math.log2(2.0 * r)) ** (1.0 / 3.0) + gap * (sigma + 0.5 * gap)
        return tol
    if tolerance == "poisson_series":
        # second-order expansion (lam/6) with 5% headroom for higher terms
        return lambda r, lam, sigma: 1.05 * abs(lam) / 6.0 + 1e-6
    raise ValueError(f"unknown tolerance schedule {tolerance!r}")


def check_linear_response(model, r_grid=DEFAULT_R_GRID, delta=1e-3, n_points=33, tolerance="scheduled",
                          eps=None, A=None, n_samples=100_000, seed=None, threads=1, confidence=0.95,
                          cgf_factor=1.0, sigma=None):
    """``|f_r(lam sqrt r)/(r lam**2) - sigma**2/2|`` against a tolerance schedule.

    ``lam`` ranges over :func:`linear_response_grid`.  Without a closed form
    the CGF is estimated, using ``E S_r = 0`` as a control variate, and
    points whose confidence interval straddles the tolerance make the
    verdict ``inconclusive``.  ``cgf_factor`` scales the
    CGF as a negative control.
    """
    tol_fn = _tolerance_fn(tolerance, eps, A)
    sigma_err = 0.0
    if sigma is None:
        sigma = pm.exact_sigma_limit(model)
    if sigma is None:
        if seed is None:
            raise ValueError("a seed is required to estimate sigma")
        est = cgf_mod.estimate_sigma_r(model, max(r_grid), n_samples, seed, threads, confidence)
        sigma, sigma_err = est.sigma_r, est.ci_half_width + est.deterministic_gap_to_limit
    half_s2 = 0.5 * sigma ** 2
    half_s2_err = 0.5 * sigma_err * (2.0 * sigma + sigma_err)
    exact = cgf_mod.ExactCGF(model) if model.has_exact_cgf else None
    if exact is None and seed is None:
        raise ValueError("a seed is required for Monte Carlo linear response")
    margins, violations, unsure = [], [], 0
    worst_dev = 0.0
    for r in r_grid:
        lam = linear_response_grid(r, delta, n_points)
        if exact is not None:
            vals = cgf_factor * np.asarray(exact(r, lam * math.sqrt(r)))
            ci = np.zeros_like(vals)
        else:
            x = cgf_mod.sample_S_batched(model, r, n_samples, seed, threads, key=(label_key("linear_response"),))
            est = cgf_mod.MonteCarloCGF(confidence, centered=True).fit(x)
            cv = [est.evaluate(float(t * math.sqrt(r))) for t in lam]
            vals = cgf_factor * np.array([c.raw for c in cv])
            ci = cgf_factor * np.array([c.ci_half_width for c in cv])
        q = vals / (r * lam ** 2)
        q_ci = ci / (r * lam ** 2) + half_s2_err
        dev = np.abs(q - half_s2)
        for t, d, e, v in zip(lam, dev, q_ci, q):
            tol = tol_fn(r, float(t), sigma)
            margins.append(tol - d)
            worst_dev = max(worst_dev, float(d))
            if d - e > tol:
                violations.append(_violation({"r": r, "lambda": float(t)}, d, tol))
            elif d + e > tol:
                unsure += 1
    grid = {"r": list(r_grid), "delta": delta, "n_lambda": n_points,
            "tolerance": tolerance if isinstance(tolerance, str) else "custom"}
    if cgf_factor != 1.0:
        grid["cgf_factor"] = cgf_factor
    details = {"sigma": sigma, "sup_deviation": worst_dev, "uncertain_points": unsure,
               "source": "exact" if exact is not None else "monte_carlo"}
    return _finish("linear_response", model, grid, margins, violations, details, inconclusive=unsure > 0)


# ---------------------------------------------------------------------------
# moderate deviations


def mills_log_bracket(c):
    """``(lo, hi)`` with ``lo <= log P(N(0,1) >= c) <= hi`` from the Mills-ratio inequalities."""
    c = float(c)
    log_phi = -0.5 * c * c - 0.5 * math.log(2.0 * math.pi)
    return log_phi + math.log(c / (1.0 + c * c)), log_phi - math.log(c)


def poisson_log_tail(r, c):
    """``log P(N >= r + c sqrt r)`` for ``N ~ Poisson(r)``."""
    k = math.ceil(r + c * math.sqrt(r))
    return float(stats.poisson.logsf(k - 1, r))


def _log_tail(model, r, c, sigma, n_samples, seed, threads):
    """``(log P(S_r >= c sigma), exact)``; ``None`` below the Monte Carlo floor."""
    s = model.amplitude_scale
    if model.kind is pm.Kind.WHITE_NOISE:
        return cgf_mod.normal_log_sf(c * sigma / s), True
    if model.kind is pm.Kind.CENTERED_POISSON:
        return poisson_log_tail(r, c * sigma / s), True
    if model.driver is pm.Driver.GAUSSIAN:
        return cgf_mod.normal_log_sf(c * sigma / math.sqrt(model.variance(r))), True
    if seed is None:
        raise ValueError("a seed is required for Monte Carlo tails")
    x = cgf_mod.sample_S_batched(model, r, n_samples, seed, threads, key=(label_key("mdp"),))
    hits = int(np.count_nonzero(x >= c * sigma))
    if hits < 30:
        return None, False
    return math.log(hits / x.size), False


def check_mdp_tail(model, c_values=tuple(range(3, 11)), r_of_c=lambda c: float(c) ** 6, tolerance=0.05,
                   n_samples=100_000, seed=None, threads=1, shift=0.0, sigma=None):
    """``(1/c**2) log P(S_r >= c sigma)`` along a sequence ``(c_k, r_k)``.

    Passes when the distance to ``-1/2`` decreases along the sequence and the
    last distance is within ``tolerance``.  Sequences where
    ``(c log r)**2/r`` does not decrease are recorded as out of regime.
    ``shift`` moves the mean of ``S_r`` by ``shift * c * sigma``.
    """
    if sigma is None:
        sigma = pm.exact_sigma_limit(model)
    if sigma is None:
        sigma = math.sqrt(model.variance(r_of_c(max(c_values))))
    values, distances, regime, rows = [], [], [], []
    inconclusive = False
    for c in c_values:
        r = r_of_c(c)
        logp, exact = _log_tail(model, r, (1.0 - shift) * c, sigma, n_samples, seed, threads)
        regime.append((c * math.log(r)) ** 2 / r)
        if logp is None:
            inconclusive = True
            rows.append({"c": c, "r": r, "value": None, "exact": exact})
            continue
        v = logp / c ** 2
        values.append(v)
        distances.append(abs(v + 0.5))
        rows.append({"c": c, "r": r, "value": v, "distance": abs(v + 0.5), "exact": exact})
    margins, violations = [], []
    for k in range(1, len(distances)):
        margins.append(distances[k - 1] - distances[k])
        if distances[k] >= distances[k - 1]:
            violations.append(_violation({"c": rows[k]["c"], "kind": "monotone"}, distances[k], distances[k - 1]))
    if rows and rows[-1]["value"] is not None:
        margins.append(tolerance - distances[-1])
        if distances[-1] > tolerance:
            violations.append(_violation({"c": rows[-1]["c"], "kind": "final"}, distances[-1], tolerance))
    in_regime = all(b < a for a, b in zip(regime, regime[1:]))
    grid = {"c": list(c_values), "r": [r_of_c(c) for c in c_values], "tolerance": tolerance}
    if shift:
        grid["shift"] = shift
    details = {"sequence": rows, "sigma": sigma, "regime_ratio": regime,
               "in_regime": in_regime}
    return _finish("mdp_tail", model, grid, margins, violations, details, inconclusive=inconclusive)


# ---------------------------------------------------------------------------
# central limit


def poisson_ks_exact(r, sigma=1.0, shift=0.0):
    """Kolmogorov distance between the law of ``(N - r)/sqrt r + shift`` and ``N(0, sigma**2)``."""
    sd = math.sqrt(r)
    lo = max(int(math.floor(r - 40.0 * sd - 40.0)), 0)
    hi = int(math.ceil(r + 40.0 * sd + 40.0))
    k = np.arange(lo, hi + 1)
    x = (k - r) / sd + shift
    phi = stats.norm.cdf(x, scale=sigma)
    F = stats.poisson.cdf(k, r)
    F_prev = np.concatenate([[stats.poisson.cdf(lo - 1, r)], F[:-1]])
    return float(np.max(np.maximum(np.abs(F - phi), np.abs(F_prev - phi))))


def check_clt(model, r, n_samples=100_000, seed=None, threads=1, threshold=None, be_constant=1.0,
              shift=0.0):
    """Kolmogorov distance between the law of ``S_r`` and ``N(0, sigma**2)``.

    Centered Poisson uses its exact law; other models use a sample.  The
    default threshold is ``be_constant/sqrt r`` plus, for samples, the 99%
    point of the Kolmogorov statistic.  ``shift`` translates ``S_r``.
    """
    sigma = pm.exact_sigma_limit(model)
    reference = "limit"
    if sigma is None:
        sigma, reference = math.sqrt(model.variance(r)), "finite_r"
    if model.kind is pm.Kind.CENTERED_POISSON:
        ks = poisson_ks_exact(r, sigma / model.amplitude_scale, shift / model.amplitude_scale)
        sampling = 0.0
        source = "exact"
    else:
        if seed is None:
            raise ValueError("a seed is required for a sampled CLT check")
        x = cgf_mod.sample_S_batched(model, r, n_samples, seed, threads, key=(label_key("clt"),)) + shift
        ks = float(stats.kstest(x, stats.norm(scale=sigma).cdf).statistic)
        sampling = float(stats.kstwo.ppf(0.99, x.size))
        source = "monte_carlo"
    if threshold is None:
        threshold = be_constant / math.sqrt(r) + sampling
    violations = [] if ks <= threshold else [_violation({"r": r}, ks, threshold)]
    grid = {"r": r, "n_samples": 0 if source == "exact" else n_samples, "threshold": threshold}
    if shift:
        grid["shift"] = shift
    return _finish("clt", model, grid, [threshold - ks], violations,
                   {"ks": ks, "sigma": sigma, "reference": reference, "source": source})


# ---------------------------------------------------------------------------
# additivity of sigma**2


def check_additivity_sigma(model, r, s, n_doublings=16, perturb=1.0):
    """``(r+s) sigma**2 = r sigma**2 + s sigma**2`` through doubling limits.

    The limit along each base ``b`` in ``{r, s, r+s}`` is bracketed by
    ``sigma_{2**K b} +- gap``.  Passes when the interval for ``(r+s) sigma**2``
    meets the interval for ``r sigma**2 + s sigma**2``.  ``perturb``
    multiplies ``sigma`` along the ``r+s`` base.
    """
    if not model.has_exact_cgf:
        return _inapplicable("additivity_sigma", model, {"r": r, "s": s}, "no closed-form CGF")

    def bracket(base, factor=1.0):
        top = base * 2.0 ** n_doublings
        sig = factor * math.sqrt(model.variance(top))
        gap = sigma_gap_bound(n_doublings, math.inf, base)
        return max(sig - gap, 0.0) ** 2, (sig + gap) ** 2

    lo_t, hi_t = bracket(r + s, perturb)
    lo_r, hi_r = bracket(r)
    lo_s, hi_s = bracket(s)
    lhs = ((r + s) * lo_t, (r + s) * hi_t)
    rhs = (r * lo_r + s * lo_s, r * hi_r + s * hi_s)
    margin = min(lhs[1], rhs[1]) - max(lhs[0], rhs[0])
    violations = [] if margin >= -SLACK else [_violation({"r": r, "s": s}, lhs[0] if lhs[0] > rhs[1] else lhs[1],
                                                         rhs[1] if lhs[0] > rhs[1] else rhs[0])]
    grid = {"r": r, "s": s, "n_doublings": n_doublings}
    if perturb != 1.0:
        grid["perturb"] = perturb
    return _finish("additivity_sigma", model, grid, [margin], violations,
                   {"lhs_interval": list(lhs), "rhs_interval": list(rhs)})


# ---------------------------------------------------------------------------
# suites and serialization

CHECKS = {
    "splittability": check_splittability,
    "holder_chain": check_holder_chain,
    "linear_response": check_linear_response,
    "mdp_tail": check_mdp_tail,
    "clt": check_clt,
    "additivity_sigma": check_additivity_sigma,
}

STOCHASTIC = {"splittability", "linear_response", "mdp_tail", "clt"}


def run_suite(jobs, threads=1):
    """Run ``(check_name, model, kwargs)`` jobs; reports come back sorted by ``check_id``.

    ``threads`` runs jobs concurrently; each job owns its random streams.
    """
    def run(job):
        name, model, kwargs = job
        return CHECKS[name](model, **kwargs)

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(run, jobs))
    else:
        reports = [run(j) for j in jobs]
    return sorted(reports, key=lambda rep: rep.check_id)


def reports_to_json(reports, config=None):
    doc = {"schema": SCHEMA, "schema_version": SCHEMA_VERSION,
           "config": _jsonable(config or {}),
           "all_ok": all(r.ok for r in reports),
           "reports": [r.to_dict() for r in reports]}
    return json.dumps(doc, sort_keys=True, indent=2)


SUMMARY_COLUMNS = ("check_id", "model_id", "verdict", "worst_margin", "n_violations")


def reports_to_csv(reports):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for rep in reports:
        w.writerow([rep.check_id, rep.model_id, rep.verdict, format(rep.worst_margin, ".17g"), rep.n_violations])
    return buf.getvalue()
