"""Run configuration: a flat YAML mapping with typed keys.

Example::

    models: [white_noise, centered_poisson]
    r_grid: [1, 16, 256]
    lambda_grid: [-0.5, 0.0, 0.5]
    n_samples: 100000
    seed: 7
    checks: [holder_chain, linear_response]

A model entry is either a preset name or a mapping accepted by
:meth:`splitcgf.process_models.ProcessModel.from_dict`; ``scale: auto``
calibrates the amplitude of a moving average.
"""

from dataclasses import asdict, dataclass, field, fields
import math
import os

import yaml

from . import process_models as pm

OUTPUT_DIR_ENV = "SPLITCGF_OUTPUT_DIR"

PRESETS = {
    "white_noise": {"kind": "white_noise"},
    "centered_poisson": {"kind": "centered_poisson"},
    "kernel_ma_box": {"kind": "kernel_ma", "kernel": [0.5], "support": 2.0, "driver": "gaussian",
                      "scale": "auto", "name": "kernel_ma_box"},
    "kernel_ma_box_poisson": {"kind": "kernel_ma", "kernel": [0.5], "support": 2.0, "driver": "poisson",
                              "scale": "auto", "name": "kernel_ma_box_poisson"},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    models: list = field(default_factory=lambda: ["white_noise"])
    r_grid: list = field(default_factory=lambda: [1.0, 4.0, 16.0])
    lambda_grid: list = field(default_factory=lambda: [-1.0, -0.5, 0.0, 0.5, 1.0])
    n_samples: int = 100_000
    seed: int = None
    threads: int = 1
    output_dir: str = None
    method: str = "auto"
    checks: list = None
    eps: float = 0.1
    base_r: float = 1.0
    n_max: int = 16
    base_a: float = None
    lambda_eval: float = 1.0
    negative_control: bool = False
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if isinstance(self.models, (str, dict)):
            self.models = [self.models]
        self.models = list(self.models)
        if not self.models:
            raise ConfigError("at least one model is required")
        try:
            self.r_grid = [float(x) for x in self.r_grid]
            self.lambda_grid = [float(x) for x in self.lambda_grid]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"grids must be lists of numbers: {exc}") from None
        if any(not (r > 0 and math.isfinite(r)) for r in self.r_grid):
            raise ConfigError("r_grid entries must be positive and finite")
        if any(not math.isfinite(x) for x in self.lambda_grid):
            raise ConfigError("lambda_grid entries must be finite")
        for name in ("n_samples", "threads", "n_max"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.seed is not None and (isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0):
            raise ConfigError("seed must be a nonnegative integer")
        if self.method not in ("auto", "exact", "monte_carlo"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.checks is not None:
            from .verification import CHECKS

            unknown = sorted(set(self.checks) - set(CHECKS))
            if unknown:
                raise ConfigError(f"unknown checks: {unknown}")
        if not isinstance(self.tolerances, dict):
            raise ConfigError("tolerances must be a mapping")
        for m in self.models:
            model_spec(m)

    @classmethod
    def from_mapping(cls, data):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError("a config file must hold a mapping")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return cls(**data)

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh)
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_mapping(data)

    def merged(self, overrides):
        """Copy with non-``None`` overrides applied."""
        data = asdict(self)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig.from_mapping(data)

    def to_dict(self):
        return asdict(self)

    def resolved_output_dir(self):
        return self.output_dir or os.environ.get(OUTPUT_DIR_ENV) or "."


def model_spec(entry):
    """Normalized descriptor mapping for a config model entry."""
    if isinstance(entry, str):
        try:
            return dict(PRESETS[entry])
        except KeyError:
            raise ConfigError(f"unknown model preset {entry!r}; choose from {sorted(PRESETS)}") from None
    if not isinstance(entry, dict) or "kind" not in entry:
        raise ConfigError(f"a model entry needs a kind: {entry!r}")
    try:
        pm.Kind(entry["kind"])
    except ValueError:
        raise ConfigError(f"unknown model kind {entry['kind']!r}") from None
    return dict(entry)


def needs_calibration(entry):
    return model_spec(entry).get("scale") == "auto"


def build_model(entry, seed=None, n_samples=100_000):
    """Construct a model; ``scale: auto`` calibrates and therefore needs a seed."""
    spec = model_spec(entry)
    auto = spec.get("scale") == "auto"
    if auto:
        spec["scale"] = 1.0
    try:
        model = pm.ProcessModel.from_dict(spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model {entry!r}: {exc}") from None
    if auto:
        if seed is None:
            raise ConfigError("calibrating a model scale needs a seed")
        model = model.with_scale(pm.calibrate_amplitude_scale(model, seed=seed, n_samples=n_samples))
    return model
