"""JSON traces of bound propagation.

A trace is an ordered list of nodes.  Each node names the operation, a rule
tag describing the inequality it applies, its inputs, its output and the
output's validity domain.
"""

import json
import math

RULES = {
    "holder_split": "holder-two-window",
    "holder_upper_step": "holder-doubling-upper",
    "holder_lower_step": "holder-doubling-lower",
    "quad_upper_step": "quad-doubling-upper",
    "quad_lower_step": "quad-doubling-lower",
    "iterate_upper_quad": "quad-iterate-upper",
    "iterate_lower_quad": "quad-iterate-lower",
    "rational_upper_step": "rational-doubling-upper",
    "rational_lower_step": "rational-doubling-lower",
    "rational_upper_iterate": "rational-iterate-upper",
    "rational_lower_iterate": "rational-iterate-lower",
    "upper_envelope": "doubling-envelope-upper",
    "lower_envelope": "doubling-envelope-lower",
    "quad_approx_error": "cubic-remainder",
    "quad_envelope_error": "median-three-regime",
    "sigma_gap_bound": "sigma-chain",
    "base_bound": "base-bound-from-exact-cgf",
}


def _plain(x):
    if hasattr(x, "to_dict"):
        return x.to_dict()
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if hasattr(x, "item"):
        return _plain(x.item())
    if hasattr(x, "value") and not isinstance(x, (int, float, str)):
        return x.value
    return x


class Trace:
    def __init__(self):
        self.nodes = []

    def record(self, operation, inputs, output, domain=None, rule=None):
        node = {
            "id": len(self.nodes),
            "operation": operation,
            "rule": rule or RULES.get(operation, operation),
            "inputs": _plain(inputs),
            "output": _plain(output),
        }
        if domain is None and hasattr(output, "lam_max"):
            domain = {"lam_max": output.lam_max}
        node["domain"] = _plain(domain)
        self.nodes.append(node)
        return output

    def apply(self, fn, *args, **kwargs):
        """Call ``fn`` and record the call."""
        out = fn(*args, **kwargs)
        inputs = {"args": list(args), **kwargs}
        return self.record(fn.__name__, inputs, out)

    def to_dict(self):
        return {"nodes": self.nodes}

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)
