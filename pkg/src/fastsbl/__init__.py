"""Fast sparse Bayesian learning with pruning criteria for general scale-family priors."""
from .criteria import (
    Verdict,
    evaluate_criteria,
    kappa_pruning_rule,
    lemma1_rate_check,
    r1bar,
    theorem1_check,
    theorem2_check,
)
from .errors import (
    AmbiguousMaximumError,
    ConvergenceError,
    DomainError,
    EvaluationError,
    FastSBLError,
    IllConditionedError,
    InputError,
)
from .estimator import FastSBLRegressor
from .priors import GAUSSIAN, LAPLACE, UNIFORM, ScaleFamilyPrior, student_t
from .quadrature import QuadratureSpec, integrate
from .section import (
    GaussianSection,
    GenericSection,
    SectionStats,
    SparseProblem,
    argmax_section_likelihood,
    compute_section_stats,
    section_likelihood,
)
from .solver import SolverConfig, log_evidence, posterior, solve

__version__ = "0.1.0"

__all__ = [
    "AmbiguousMaximumError", "ConvergenceError", "DomainError", "EvaluationError", "FastSBLError",
    "FastSBLRegressor", "GAUSSIAN", "GaussianSection", "GenericSection", "IllConditionedError",
    "InputError", "LAPLACE", "QuadratureSpec", "ScaleFamilyPrior", "SectionStats", "SolverConfig",
    "SparseProblem", "UNIFORM", "Verdict", "argmax_section_likelihood", "compute_section_stats",
    "evaluate_criteria", "integrate", "kappa_pruning_rule", "lemma1_rate_check", "log_evidence",
    "posterior", "r1bar", "section_likelihood", "solve", "student_t", "theorem1_check", "theorem2_check",
]
