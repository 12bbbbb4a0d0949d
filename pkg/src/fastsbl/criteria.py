"""Pruning criteria as executable predicates.

Two sufficient conditions decide the fate of a single hyperparameter:

* the symmetrized tangent remainder ``R1bar(x) = f(x) + f(-x) - 2 f(0)`` is
  negative for every ``x > 0``  ->  the section has no maximum, prune;
* ``f''(0) > 0``  ->  the section has a finite maximizer, keep.

For Gaussian sections both are decided in closed form and reduce to
``|mu| > sigma``.  For arbitrary sections they are checked numerically and
return a tri-state verdict, since a finite grid cannot certify a statement
about every ``x > 0``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError, EvaluationError
from .priors import ScaleFamilyPrior
from .quadrature import DEFAULT_SPEC, QuadratureSpec, expect, second_derivative_at_zero
from .section import GaussianSection, SectionStats, as_section

DEFAULT_GRID = 2048
_LOG2 = math.log(2.0)


class Verdict(str, enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNDETERMINED = "undetermined"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class RemainderProfile:
    xs: np.ndarray
    r1bar_values: np.ndarray
    tangent_intercept: float
    tangent_slope: float


class Theorem1Result(NamedTuple):
    verdict: Verdict
    worst_x: float
    worst_value: float


class Theorem2Result(NamedTuple):
    verdict: Verdict
    f2_estimate: float
    f2_error: float


@dataclass(frozen=True)
class CriterionVerdict:
    theorem1_prune: Verdict
    theorem2_finite: Verdict
    kappa_rule_finite: bool | None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.theorem1_prune is Verdict.HOLDS and self.theorem2_finite is Verdict.HOLDS:
            raise AssertionError("prune and finite-maximum criteria both hold")


class Lemma1Rate(NamedTuple):
    fitted_coeff: float
    reference: float
    rel_error: float
    degenerate: bool


# -- tangent remainders ------------------------------------------------------------


def r1bar_gaussian(stats: SectionStats, x):
    """Closed-form ``R1bar(x)`` for ``f = N(.; mu, sigma2)``.

    The bracket ``e^{-x^2/2s} cosh(mu x/s) - 1`` is evaluated through its
    logarithm, so large ``mu x / s`` cannot overflow and small ``x`` keeps
    full relative accuracy.
    """
    mu, s2 = stats.mu, stats.sigma2
    x = np.asarray(x, dtype=float)
    z = mu * x / s2
    quad = x * x / (2.0 * s2)
    az = np.abs(z)
    # log cosh z: the sinh form keeps relative accuracy for small z
    log_cosh = np.where(
        az < 1.0,
        np.log1p(2.0 * np.sinh(0.5 * np.minimum(az, 1.0)) ** 2),
        az + np.log1p(np.exp(-2.0 * az)) - _LOG2,
    )
    log_bracket = log_cosh - quad
    log_pref = 0.5 * math.log(2.0 / (math.pi * s2)) - mu * mu / (2.0 * s2)
    small = log_bracket < 1.0
    safe = np.where(small, log_bracket, 0.0)
    big = np.where(small, 0.0, log_bracket)
    out = np.where(
        small,
        np.exp(log_pref) * np.expm1(safe),
        np.exp(log_pref + big) * -np.expm1(-big),
    )
    return float(out) if out.ndim == 0 else out


def r1bar_generic(f, x):
    """``R1bar(x) = f(x) + f(-x) - 2 f(0)``; the slope terms cancel."""
    f = as_section(f)
    x = np.asarray(x, dtype=float)
    out = f(x) + f(-x) - 2.0 * f.at_zero()
    if not np.all(np.isfinite(out)):
        bad = np.flatnonzero(~np.isfinite(np.atleast_1d(out)))[0]
        raise EvaluationError(float(np.atleast_1d(x)[bad]), float(np.atleast_1d(out)[bad]))
    return float(out) if out.ndim == 0 else out


def r1bar(f, x):
    f = as_section(f)
    if isinstance(f, GaussianSection):
        return math.exp(f.log_scale) * r1bar_gaussian(f.stats, x)
    return r1bar_generic(f, x)


def tangent(f) -> tuple[float, float]:
    """Intercept and slope of the tangent to ``f`` at the origin."""
    f = as_section(f)
    if isinstance(f, GaussianSection):
        f0, f1, _ = f.derivatives_at_zero()
        return f0, f1
    h = 1e-5 * max(1.0, f.width)
    v = f(np.array([-2 * h, -h, 0.0, h, 2 * h]))
    slope = (v[0] - 8 * v[1] + 8 * v[3] - v[4]) / (12 * h)
    return float(v[2]), float(slope)


def r1(f, x):
    """``f(x) - t(x)``, the remainder of the first-order Taylor polynomial."""
    f = as_section(f)
    f0, f1 = tangent(f)
    x = np.asarray(x, dtype=float)
    return f(x) - (f0 + f1 * x)


def scan_grid(f, x_max: float | None = None, n_grid: int = DEFAULT_GRID) -> np.ndarray:
    f = as_section(f)
    if x_max is None:
        x_max = 10.0 * f.width
    if not x_max > 0:
        raise DomainError("x_max must be positive")
    if n_grid < 64:
        raise DomainError("n_grid must be at least 64")
    return np.logspace(math.log10(x_max * 1e-6), math.log10(x_max), n_grid)


def remainder_profile(f, x_max: float | None = None, n_grid: int = DEFAULT_GRID) -> RemainderProfile:
    f = as_section(f)
    xs = scan_grid(f, x_max, n_grid)
    f0, f1 = tangent(f)
    return RemainderProfile(xs, np.asarray(r1bar(f, xs)), f0, f1)


# -- pruning and finite-maximum criteria --------------------------------------------


def theorem1_check(f, x_max: float | None = None, n_grid: int = DEFAULT_GRID) -> Theorem1Result:
    """Does ``R1bar(x) < 0`` hold for all ``x > 0``?

    Gaussian sections are decided analytically (holds iff ``mu^2 <= sigma2``)
    and the grid only supplies ``worst_x``.  For other sections the grid is
    the evidence, with resolution ``1e-12 * max(f(0), 1)``: any value above it
    fails.  Since ``R1bar(x) ~ f''(0) x^2`` near zero, unresolved values are
    accepted only on the leading small-``x`` stretch of the grid and only if
    ``f''(0)`` is resolvably negative; every later value must be resolvably
    negative.  Anything else is undetermined.
    """
    f = as_section(f)
    profile = remainder_profile(f, x_max, n_grid)
    k = int(np.argmax(profile.r1bar_values))
    worst_x, worst = float(profile.xs[k]), float(profile.r1bar_values[k])
    if isinstance(f, GaussianSection):
        holds = f.stats.mu**2 <= f.stats.sigma2
        return Theorem1Result(Verdict.HOLDS if holds else Verdict.FAILS, worst_x, worst)
    thresh = 1e-12 * max(abs(profile.tangent_intercept), 1.0)
    resolved = profile.r1bar_values < -thresh
    n_lead = int(np.argmax(resolved)) if resolved.any() else resolved.size
    if worst > thresh:
        verdict = Verdict.FAILS
    elif n_lead == resolved.size or not resolved[n_lead:].all():
        verdict = Verdict.UNDETERMINED
    elif n_lead == 0:
        verdict = Verdict.HOLDS
    else:
        est, err = second_derivative_at_zero(f, scale=f.width)
        verdict = Verdict.HOLDS if est < -10.0 * err else Verdict.UNDETERMINED
    return Theorem1Result(verdict, worst_x, worst)


def theorem2_check(f, step: float | None = None) -> Theorem2Result:
    """Is ``f''(0) > 0``?

    The numeric path trusts the sign of the finite-difference estimate only
    when it exceeds ten times its error indicator.
    """
    f = as_section(f)
    if isinstance(f, GaussianSection):
        _, _, f2 = f.derivatives_at_zero()
        finite = f.stats.mu**2 > f.stats.sigma2
        return Theorem2Result(Verdict.HOLDS if finite else Verdict.FAILS, f2, 0.0)
    est, err = second_derivative_at_zero(f, step=step, scale=f.width)
    if est > 10.0 * err:
        verdict = Verdict.HOLDS
    elif est < -10.0 * err:
        verdict = Verdict.FAILS
    else:
        verdict = Verdict.UNDETERMINED
    return Theorem2Result(verdict, est, err)


def kappa_pruning_rule(stats: SectionStats, kappa: float = 1.0) -> bool:
    """True (keep, finite precision) iff ``|mu| > sqrt(kappa) * sigma``."""
    if not kappa > 0:
        raise DomainError(f"kappa must be positive, got {kappa!r}")
    return abs(stats.mu) > math.sqrt(kappa) * stats.sigma


def evaluate_criteria(f, kappa: float = 1.0, n_grid: int = DEFAULT_GRID) -> CriterionVerdict:
    f = as_section(f)
    t1 = theorem1_check(f, n_grid=n_grid)
    t2 = theorem2_check(f)
    rule = kappa_pruning_rule(f.stats, kappa) if isinstance(f, GaussianSection) else None
    details = {
        "worst_x": t1.worst_x,
        "worst_r1bar": t1.worst_value,
        "f2_estimate": t2.f2_estimate,
        "f2_error": t2.f2_error,
        "n_grid": n_grid,
    }
    return CriterionVerdict(t1.verdict, t2.verdict, rule, details)


# -- asymptotic rate ----------------------------------------------------------------


def lemma1_rate_check(
    f,
    prior: ScaleFamilyPrior,
    gamma_grid=None,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> Lemma1Rate:
    """Compare the plateau of ``(l(gamma) - f(0)) * gamma`` with ``f''(0) / 2``.

    ``l(gamma) - f(0)`` is integrated directly as ``E[f(x) - f(0)]`` so the
    small difference is not lost to cancellation.  The plateau is the median
    over the top decade of the grid.
    """
    f = as_section(f)
    grid = np.logspace(3.0, 6.0, 31) if gamma_grid is None else np.sort(np.asarray(gamma_grid, dtype=float))
    if grid[0] < 1e3 or grid[-1] / grid[0] < 1e3 * (1 - 1e-12):
        raise DomainError("gamma grid must start at >= 1e3 and span at least three decades")
    f0 = f.at_zero()
    points = f.feature_points()
    scaled = np.array([g * expect(lambda x: f(x) - f0, prior, g, spec, points) for g in grid])
    top = grid >= grid[-1] / 10.0
    fitted = float(np.median(scaled[top]))

    ref_f2 = theorem2_check(f)
    reference = 0.5 * ref_f2.f2_estimate
    if isinstance(f, GaussianSection):
        degenerate = reference == 0.0
    else:
        degenerate = abs(ref_f2.f2_estimate) <= 10.0 * ref_f2.f2_error
    rel_error = math.nan if degenerate else abs(fitted - reference) / abs(reference)
    return Lemma1Rate(fitted, reference, rel_error, degenerate)
