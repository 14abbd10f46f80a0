"""Simulation and bound propagation for cumulant generating functions of splittable processes."""

from ._validation import DomainError
from .cgf import (CgfValue, ExactCGF, MonteCarloCGF, SigmaEstimate, SigmaEstimator, estimate_cgf_mc,
                  estimate_sigma_r, subquad_check)
from .process_models import (Driver, Kernel, Kind, ProcessModel, SplitSample, exact_cgf,
                             exact_sigma_limit, sample_S, sample_split)
from .verification import (CheckReport, check_additivity_sigma, check_clt, check_holder_chain,
                           check_linear_response, check_mdp_tail, check_splittability, run_suite)

__version__ = "0.1.0"

__all__ = [
    "CgfValue", "CheckReport", "DomainError", "Driver", "ExactCGF", "Kernel", "Kind", "MonteCarloCGF",
    "ProcessModel", "SigmaEstimate", "SigmaEstimator", "SplitSample", "check_additivity_sigma", "check_clt",
    "check_holder_chain", "check_linear_response", "check_mdp_tail", "check_splittability",
    "estimate_cgf_mc", "estimate_sigma_r", "exact_cgf", "exact_sigma_limit", "run_suite", "sample_S",
    "sample_split", "subquad_check",
]
