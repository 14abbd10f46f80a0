"""Command-line front end.

Subcommands: ``sweep`` (CGF values to CSV), ``bounds`` (envelope trace to
JSON), ``verify`` (check suite to JSON and CSV) and ``report`` (summarize a
saved report).  Exit status: 0 success, 1 check failure or inconclusive
check, 2 usage or configuration error.
"""

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import cgf as cgf_mod
from . import process_models as pm
from . import verification as ver
from ._validation import DomainError
from .bound_chain import A_MEDIAN_DEFAULT, QuadBound, Trace, lower_envelope, upper_envelope
from .config import ConfigError, RunConfig, build_model, model_spec, needs_calibration

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
BOUNDS_SCHEMA = "splitcgf.bounds"
NEGATIVE_CONTROLS = {
    "splittability": {"inflate": 4.0},
    "holder_chain": {"corrupt_factor": 0.5},
    "linear_response": {"cgf_factor": 0.5},
    "mdp_tail": {"shift": 0.2},
    "clt": {"shift": 0.5},
    "additivity_sigma": {"perturb": 1.1},
}


class UsageError(Exception):
    pass


def _g(x):
    return format(float(x), ".17g")


def _provenance(command, cfg):
    body = json.dumps({"command": command, "config": cfg.to_dict()}, sort_keys=True)
    return f"# splitcgf {command}\n# {body}\n"


def _write(path, text):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _output_path(cfg, args, default_name):
    if getattr(args, "output", None):
        return args.output
    return os.path.join(cfg.resolved_output_dir(), default_name)


def _models(cfg):
    if any(needs_calibration(m) for m in cfg.models) and cfg.seed is None:
        raise UsageError("a seed is required to calibrate a model scale")
    return [build_model(m, cfg.seed, cfg.n_samples) for m in cfg.models]


# ---------------------------------------------------------------------------
# sweep


def cmd_sweep(cfg, args):
    models = _models(cfg)
    for model in models:
        mc = cfg.method == "monte_carlo" or not model.has_exact_cgf
        if cfg.method == "exact" and not model.has_exact_cgf:
            raise UsageError(f"{model.model_id} has no closed-form CGF")
        if mc and cfg.lambda_grid and cfg.seed is None:
            raise UsageError("a seed is required for Monte Carlo sweeps")
        if mc and cfg.n_samples < cgf_mod.MIN_SAMPLES:
            raise UsageError(f"n_samples must be at least {cgf_mod.MIN_SAMPLES}")
    buf = io.StringIO()
    buf.write(_provenance("sweep", cfg))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cgf_mod.SWEEP_COLUMNS)
    for model in models:
        rows = cgf_mod.cgf_sweep(model, cfg.r_grid, cfg.lambda_grid, method=cfg.method,
                                 n_samples=cfg.n_samples, seed=cfg.seed, threads=cfg.threads)
        for mid, r, lam, value, ci, source in rows:
            w.writerow([mid, _g(r), _g(lam), _g(value), _g(ci), source])
    path = _output_path(cfg, args, "sweep.csv")
    _write(path, buf.getvalue())
    print(path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# bounds


def derive_base_bounds(model, r, eps, n_grid=4097):
    """Coefficients ``(upper, lower)`` with ``lower lam**2 <= f_r(eps lam) <= upper lam**2`` on ``|lam| <= sqrt r``.

    They are the extreme values of ``f_r(eps lam)/lam**2`` over a dense grid,
    including the curvature limit at ``lam = 0``, widened by a relative 1e-12.
    """
    f = cgf_mod.ExactCGF(model)
    lam = np.linspace(-math.sqrt(r), math.sqrt(r), n_grid)
    lam = lam[lam != 0.0]
    ratio = np.asarray(f(r, eps * lam)) / lam ** 2
    curvature = 0.5 * eps ** 2 * model.variance(r)
    hi = max(float(np.max(ratio)), curvature)
    lo = min(float(np.min(ratio)), curvature)
    return hi * (1.0 + 1e-12), lo * (1.0 - 1e-12)


def build_bounds_trace(model, cfg):
    eps, r = cfg.eps, cfg.base_r
    if not 0.0 < eps <= math.sqrt(2.0) - 1.0:
        raise UsageError(f"eps={eps} outside (0, sqrt2-1]")
    trace = Trace()
    exact = cgf_mod.ExactCGF(model) if model.has_exact_cgf else None
    if cfg.base_a is None:
        if exact is None:
            raise UsageError(f"{model.model_id} has no closed-form CGF; supply base_a")
        a_up, a_lo = derive_base_bounds(model, r, eps)
    else:
        a_up, a_lo = cfg.base_a, None
    upper = QuadBound("upper", a_up, eps, r, math.sqrt(r))
    if exact is not None and not upper.holds_for(exact, n_points=257):
        return None, f"base bound f_r(eps lam) <= {a_up} lam^2 fails against the exact CGF"
    trace.record("base_bound", {"model": model.to_dict(), "eps": eps, "r": r}, upper)
    lower = None
    if a_lo is not None and a_lo > 0.0:
        lower = QuadBound("lower", a_lo, eps, r, math.sqrt(r))
        if not lower.holds_for(exact, n_points=257):
            return None, f"base bound f_r(eps lam) >= {a_lo} lam^2 fails against the exact CGF"
        trace.record("base_bound", {"model": model.to_dict(), "eps": eps, "r": r}, lower)
    lam = cfg.lambda_eval
    for n in range(1, cfg.n_max + 1):
        for q, op in ((upper, upper_envelope), (lower, lower_envelope)):
            if q is None or (op is lower_envelope and not eps < math.sqrt(2.0)):
                continue
            env = op(q, n)
            out = env.to_dict()
            if env.in_domain(lam):
                out["lambda_eval"] = lam
                out["coefficient"] = env.coefficient(lam)
                out["value"] = env.value(lam)
                if exact is not None:
                    out["exact_value"] = float(exact(env.r, eps * lam))
            trace.record(op.__name__, {"base": q, "n": n}, out, {"lam_max": env.lam_max})
    return trace, None


def cmd_bounds(cfg, args):
    docs = []
    for entry in cfg.models:
        spec = model_spec(entry)
        if spec.get("scale") == "auto" and cfg.seed is None:
            raise UsageError("a seed is required to calibrate a model scale")
        model = build_model(entry, cfg.seed, cfg.n_samples)
        trace, problem = build_bounds_trace(model, cfg)
        if problem:
            print(f"bounds refused for {model.model_id}: {problem}", file=sys.stderr)
            return EXIT_FAIL
        docs.append({"model_id": model.model_id, "trace": trace.to_dict()})
    doc = {"schema": BOUNDS_SCHEMA, "schema_version": 1, "config": cfg.to_dict(),
           "median_constant_default": A_MEDIAN_DEFAULT, "models": docs}
    path = _output_path(cfg, args, "bounds.json")
    _write(path, json.dumps(ver._jsonable(doc), sort_keys=True, indent=2) + "\n")
    print(path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def requires_seed(check, model):
    if check == "splittability":
        return model.kind is pm.Kind.KERNEL_MA
    if check == "linear_response":
        return not model.has_exact_cgf
    if check == "mdp_tail":
        return model.kind is pm.Kind.KERNEL_MA and model.driver is pm.Driver.POISSON
    if check == "clt":
        return model.kind is not pm.Kind.CENTERED_POISSON
    return False


def build_jobs(cfg, models):
    checks = cfg.checks or list(ver.CHECKS)
    jobs = []
    tol = cfg.tolerances
    for model in models:
        for name in checks:
            if requires_seed(name, model) and cfg.seed is None:
                raise UsageError(f"check {name} on {model.model_id} is stochastic and needs a seed")
            kw = {}
            if name in ver.STOCHASTIC:
                kw.update(seed=cfg.seed, n_samples=cfg.n_samples)
            if name == "linear_response" and "linear_response" in tol:
                t = tol["linear_response"]
                kw["tolerance"] = t if isinstance(t, str) else (lambda r, lam, sigma, t=float(t): t)
            if name == "mdp_tail" and "mdp_tail" in tol:
                kw["tolerance"] = float(tol["mdp_tail"])
            if name == "clt":
                kw["r"] = float(tol.get("clt_r", 4096.0))
                if "clt" in tol:
                    kw["threshold"] = float(tol["clt"])
            if name == "additivity_sigma":
                kw.update(r=1.0, s=3.0)
            if cfg.negative_control:
                kw.update(NEGATIVE_CONTROLS[name])
            jobs.append((name, model, kw))
    return jobs


def cmd_verify(cfg, args):
    models = _models(cfg)
    reports = ver.run_suite(build_jobs(cfg, models), threads=cfg.threads)
    out_dir = cfg.resolved_output_dir()
    resolved = cfg.to_dict()
    resolved.pop("threads")  # width never changes the results
    resolved["resolved_models"] = [m.to_dict() for m in models]
    _write(os.path.join(out_dir, "report.json"), ver.reports_to_json(reports, resolved) + "\n")
    _write(os.path.join(out_dir, "summary.csv"),
           "# splitcgf verify\n# " + json.dumps(ver._jsonable(resolved), sort_keys=True) + "\n"
           + ver.reports_to_csv(reports))
    bad = [r for r in reports if not r.ok]
    for r in reports:
        print(f"{r.verdict:>12}  {r.check_id}")
    for r in bad:
        print(f"not ok: {r.check_id} ({r.verdict}, {r.n_violations} violations)", file=sys.stderr)
        for v in r.violations[:5]:
            print(f"    {json.dumps(ver._jsonable(v), sort_keys=True)}", file=sys.stderr)
    return EXIT_FAIL if bad else EXIT_OK


# ---------------------------------------------------------------------------
# report


def cmd_report(args):
    try:
        with open(args.input, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read report {args.input}: {exc}") from None
    if doc.get("schema") != ver.SCHEMA:
        raise UsageError(f"{args.input} is not a verification report")
    if doc.get("schema_version") != ver.SCHEMA_VERSION:
        raise UsageError(f"unsupported report schema version {doc.get('schema_version')!r}")
    reports = doc["reports"]
    if args.format == "csv":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(ver.SUMMARY_COLUMNS)
        for r in reports:
            margin = r["worst_margin"]
            w.writerow([r["check_id"], r["model_id"], r["verdict"],
                        margin if isinstance(margin, str) or margin is None else _g(margin), r["n_violations"]])
    else:
        for r in reports:
            print(f"{r['verdict']:>12}  {r['check_id']}  worst_margin={r['worst_margin']}")
        counts = {}
        for r in reports:
            counts[r["verdict"]] = counts.get(r["verdict"], 0) + 1
        print("totals: " + ", ".join(f"{k}={counts[k]}" for k in sorted(counts)))
    return EXIT_OK if doc.get("all_ok") else EXIT_FAIL


# ---------------------------------------------------------------------------
# argument parsing


def _floats(text):
    text = text.strip()
    if not text:
        return []
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _names(text):
    return [x for x in text.split(",") if x]


def build_parser():
    parser = argparse.ArgumentParser(prog="splitcgf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--model", dest="models", type=_names, help="comma-separated model presets")
        p.add_argument("--seed", type=int)
        p.add_argument("--n-samples", dest="n_samples", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--output-dir", dest="output_dir")

    p = sub.add_parser("sweep", help="CGF values over (r, lambda) grids")
    common(p)
    p.add_argument("--r", dest="r_grid", type=_floats)
    p.add_argument("--lambda", dest="lambda_grid", type=_floats)
    p.add_argument("--method", choices=("auto", "exact", "monte_carlo"))
    p.add_argument("--output", help="CSV path (default: <output-dir>/sweep.csv)")

    p = sub.add_parser("bounds", help="envelope bound propagation trace")
    common(p)
    p.add_argument("--eps", type=float)
    p.add_argument("--base-r", dest="base_r", type=float)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--a", dest="base_a", type=float, help="base upper coefficient (default: derived)")
    p.add_argument("--lambda-eval", dest="lambda_eval", type=float)
    p.add_argument("--output", help="JSON path (default: <output-dir>/bounds.json)")

    p = sub.add_parser("verify", help="run the verification suite")
    common(p)
    p.add_argument("--checks", type=_names)
    p.add_argument("--negative-control", dest="negative_control", action="store_true", default=None)

    p = sub.add_parser("report", help="summarize a saved verification report")
    p.add_argument("input")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    return parser


CONFIG_KEYS = ("models", "seed", "n_samples", "threads", "output_dir", "r_grid", "lambda_grid", "method",
               "eps", "base_r", "n_max", "base_a", "lambda_eval", "checks", "negative_control")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "report":
            return cmd_report(args)
        cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
        cfg = cfg.merged({k: getattr(args, k, None) for k in CONFIG_KEYS})
        handler = {"sweep": cmd_sweep, "bounds": cmd_bounds, "verify": cmd_verify}[args.command]
        return handler(cfg, args)
    except (UsageError, ConfigError, DomainError) as exc:
        print(f"splitcgf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
