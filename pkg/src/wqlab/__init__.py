"""Random quantization of probability measures by empirical measures.

Exact and semi-discrete Wasserstein solvers, the dyadic multiscale bound,
explicit rate constants and seeded Monte Carlo experiments.
"""
from __future__ import annotations

__version__ = "0.1.0"

from ._kernels import BACKEND, available_backends
from .bounds import BoundReport, check_report, hr_integral, kappa_cube, kappa_pierce, pierce_rhs
from .dyadic import (DyadicBoundResult, DyadicCell, dyadic_bound, partition_approximation,
                     resample_coupling)
from .measures import (DiscreteMeasure, Mixture, ModelMeasure, Norm, PiecewiseConstantDensity,
                       ProductLaplace, TwoPoint, UniformBox, box_mass, moment_maxnorm, sample,
                       unit_cube_diameter)
from .ot_exact import SemiDiscreteResult, TransportPlan, rho_bruteforce, rho_exact, semidiscrete
from .quantize import (ExperimentSpec, RateFit, ReplicationRecord, SolverSpec, kappa_unif_trace,
                       optimal_quantizer, rate_fit, two_point_exact, v_rand_estimate)

__all__ = [
    "BACKEND", "available_backends",
    "BoundReport", "check_report", "hr_integral", "kappa_cube", "kappa_pierce", "pierce_rhs",
    "DyadicBoundResult", "DyadicCell", "dyadic_bound", "partition_approximation",
    "resample_coupling",
    "DiscreteMeasure", "Mixture", "ModelMeasure", "Norm", "PiecewiseConstantDensity",
    "ProductLaplace", "TwoPoint", "UniformBox", "box_mass", "moment_maxnorm", "sample",
    "unit_cube_diameter",
    "SemiDiscreteResult", "TransportPlan", "rho_bruteforce", "rho_exact", "semidiscrete",
    "ExperimentSpec", "RateFit", "ReplicationRecord", "SolverSpec", "kappa_unif_trace",
    "optimal_quantizer", "rate_fit", "two_point_exact", "v_rand_estimate",
]
