"""Bound transformations on cumulant generating functions."""

from .approximation import (A_CUBIC, A_MEDIAN_DEFAULT, DERIVED_CONSTANTS, delta_choice, median3,
                            median_piecewise, quad_approx_deviation, quad_approx_error,
                            quad_envelope_domain, quad_envelope_error, sigma_gap_bound)
from .envelope import EnvelopeBound, envelope_constant, lower_envelope, upper_envelope
from .holder import holder_domain, holder_grid, holder_lower_step, holder_split, holder_upper_step
from .quadratic import (KAPPA, SLACK, Direction, QuadBound, iterate_lower_quad, iterate_upper_quad,
                        quad_lower_step, quad_upper_step)
from .rational import (RationalBound, rational_from_quad, rational_lower_iterate, rational_lower_step,
                       rational_upper_iterate, rational_upper_step)
from .trace import RULES, Trace

__all__ = [
    "A_CUBIC", "A_MEDIAN_DEFAULT", "DERIVED_CONSTANTS", "Direction", "EnvelopeBound", "KAPPA", "QuadBound",
    "RULES", "RationalBound", "SLACK", "Trace", "delta_choice", "envelope_constant", "holder_domain",
    "holder_grid", "holder_lower_step", "holder_split", "holder_upper_step", "iterate_lower_quad",
    "iterate_upper_quad", "lower_envelope", "median3", "median_piecewise", "quad_approx_deviation",
    "quad_approx_error", "quad_envelope_domain", "quad_envelope_error", "quad_lower_step",
    "quad_upper_step", "rational_from_quad", "rational_lower_iterate", "rational_lower_step",
    "rational_upper_iterate", "rational_upper_step", "sigma_gap_bound", "upper_envelope",
]
