"""One-dimensional expectations under scale-family priors.

The integrator is a globally adaptive Simpson rule: the truncated window is
cut into panels, each panel carries a Richardson error estimate, and panels
whose share of the error budget is exceeded are bisected.  All panels of one
refinement round are evaluated in a single vectorized call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, EvaluationError
from .priors import ScaleFamilyPrior, _check_gamma

_EPS = np.finfo(float).eps
_INITIAL_PANELS = 8


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and budget for :func:`expect`.

    ``truncation_sigmas`` is a lower bound on the half-width of the window in
    prior standard deviations.  Heavy-tailed families are widened further until
    the neglected tail mass is below 1e-17.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 4096
    truncation_sigmas: float = 12.0

    def __post_init__(self):
        if not self.rel_tol > 0 or not self.abs_tol > 0:
            raise DomainError("quadrature tolerances must be positive")
        if not self.truncation_sigmas >= 8:
            raise DomainError("truncation_sigmas must be at least 8")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be at least 1")

    def tightened(self, factor: float = 100.0) -> "QuadratureSpec":
        return replace(self, rel_tol=self.rel_tol / factor)


DEFAULT_SPEC = QuadratureSpec()


def _vectorized(g):
    scalar = np.vectorize(g, otypes=[float])

    def call(x):
        try:
            y = g(x)
        except TypeError:
            return scalar(x)
        y = np.asarray(y, dtype=float)
        if y.shape != np.shape(x):
            y = np.broadcast_to(y, np.shape(x)) if y.ndim == 0 else scalar(x)
        return y

    return call


def _checked(g, x):
    y = g(x)
    bad = ~np.isfinite(y)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise EvaluationError(float(x.flat[k]), float(y.flat[k]))
    return y


def integrate(
    g: Callable,
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    points: Sequence[float] = (),
) -> tuple[float, float]:
    """Adaptive Simpson estimate of ``int_a^b g(x) dx``.

    Parameters
    ----------
    g : callable
        Vectorized integrand; scalar-only callables are wrapped.
    a, b : float
        Finite limits with ``a < b``.
    spec : QuadratureSpec
    points : sequence of float
        Extra breakpoints (kinks, locations of narrow features).

    Returns
    -------
    value, error : float
        The estimate and the summed Richardson error bound.
    """
    if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
        raise DomainError(f"need finite limits a < b, got ({a}, {b})")
    g = _vectorized(g)
    breaks = np.unique(np.concatenate([[a, b], [p for p in points if a < p < b]]))
    edges = np.concatenate(
        [np.linspace(lo, hi, _INITIAL_PANELS + 1)[:-1] for lo, hi in zip(breaks[:-1], breaks[1:])]
        + [[b]]
    )
    left, right = edges[:-1], edges[1:]
    mid = 0.5 * (left + right)
    fl, fm, fr = (_checked(g, v) for v in (left, mid, right))

    # a panel's error may not drop below 1/32 of its parent's (the h^5 rate); this
    # guards against coarse panels whose two estimates agree by coincidence
    parent_err = np.full(left.size, np.inf)
    width = b - a
    total = err_total = floor_total = 0.0
    n_panels = left.size
    while True:
        h = right - left
        q1 = left + 0.25 * h
        q3 = left + 0.75 * h
        f1 = _checked(g, q1)
        f3 = _checked(g, q3)
        whole = h / 6.0 * (fl + 4.0 * fm + fr)
        halves = h / 12.0 * (fl + 4.0 * f1 + 2.0 * fm + 4.0 * f3 + fr)
        diff = halves - whole
        value = halves + diff / 15.0
        raw_err = np.abs(diff) / 15.0
        err = np.maximum(raw_err, parent_err / 32.0)

        # roundoff level of each panel sum; cancellation can put the target below it
        floor = 64.0 * _EPS * (np.abs(h / 12.0) * (np.abs(fl) + 4 * np.abs(f1) + 2 * np.abs(fm) + 4 * np.abs(f3) + np.abs(fr)))
        estimate = total + value.sum()
        target = max(spec.abs_tol, spec.rel_tol * abs(estimate))
        if err_total + err.sum() <= max(target, floor_total + floor.sum()):
            return float(estimate), float(err_total + err.sum())

        # panel budget proportional to its width; roundoff-limited panels are accepted
        tiny = h <= 64.0 * _EPS * np.maximum(np.abs(left), np.abs(right))
        done = (err <= 0.5 * target * h / width) | (err <= floor) | tiny
        if done.all():
            # every panel met its share but the sum did not; split the worst half
            done = err < np.median(err)
            if done.all():
                return float(estimate), float(err_total + err.sum())
        total += value[done].sum()
        err_total += err[done].sum()
        floor_total += floor[done].sum()

        keep = ~done
        n_panels += int(keep.sum())
        if n_panels > spec.max_subdivisions:
            raise ConvergenceError(
                f"adaptive Simpson exceeded {spec.max_subdivisions} subdivisions",
                estimate=float(estimate),
                error=float(err_total + err[keep].sum()),
            )
        parent_err = np.tile(raw_err[keep], 2)
        left, mid, right = left[keep], mid[keep], right[keep]
        fl, fm, fr, f1, f3 = fl[keep], fm[keep], fr[keep], f1[keep], f3[keep]
        left, mid, right = (
            np.concatenate([left, mid]),
            np.concatenate([q1[keep], q3[keep]]),
            np.concatenate([mid, right]),
        )
        fl, fm, fr = np.concatenate([fl, fm]), np.concatenate([f1, f3]), np.concatenate([fm, fr])


def window(prior: ScaleFamilyPrior, gamma: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Half-width of the integration window for ``p(.; gamma)``."""
    gamma = _check_gamma(gamma)
    if math.isfinite(prior.support):
        sigmas = prior.support
    else:
        sigmas = max(spec.truncation_sigmas, prior.tail_sigmas())
    return sigmas / math.sqrt(gamma)


def expect(
    g: Callable,
    prior: ScaleFamilyPrior,
    gamma: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    points: Sequence[float] = (),
) -> float:
    """Estimate ``int g(x) p(x; gamma) dx`` over the truncated window.

    The prior is even, so the integral is folded onto ``[0, T]`` as
    ``int_0^T (g(x) + g(-x)) p(x; gamma) dx``; odd parts of ``g`` cancel
    exactly instead of through quadrature.  ``points`` adds breakpoints
    (their absolute values are used), typically where ``g`` has a narrow
    feature that the initial panels could step over.
    """
    gamma = _check_gamma(gamma)
    g = _vectorized(g)
    root = math.sqrt(gamma)
    half = window(prior, gamma, spec)
    support = prior.support

    def integrand(x):
        # clip so the closed window edge of a compact support stays inside it
        u = np.minimum(root * x, support)
        return (g(x) + g(-x)) * (root * prior.standard_pdf(u))

    value, _ = integrate(integrand, 0.0, half, spec, points=[abs(p) for p in points])
    return value


def second_derivative_at_zero(g: Callable, step: float | None = None, scale: float = 1.0) -> tuple[float, float]:
    """Central-difference estimate of ``g''(0)`` with Richardson extrapolation.

    Differences at ``h``, ``2h`` and ``4h`` give two extrapolated values; the
    finer one is returned and their gap is the error indicator.  The indicator
    never drops below the roundoff level of the finest difference quotient.

    Returns
    -------
    estimate, error : float
    """
    h = 1e-4 * max(1.0, scale) if step is None else float(step)
    if not h > 0:
        raise DomainError(f"step must be positive, got {step!r}")
    g = _vectorized(g)
    xs = np.array([-4 * h, -2 * h, -h, 0.0, h, 2 * h, 4 * h])
    v = _checked(g, xs)
    g0 = v[3]

    def quotient(k_minus, k_plus, hh):
        return (v[k_plus] - 2.0 * g0 + v[k_minus]) / (hh * hh)

    d1, d2, d4 = quotient(2, 4, h), quotient(1, 5, 2 * h), quotient(0, 6, 4 * h)
    fine = (4.0 * d1 - d2) / 3.0
    coarse = (4.0 * d2 - d4) / 3.0
    roundoff = 8.0 * _EPS * np.max(np.abs(v)) / (h * h)
    return float(fine), float(max(abs(fine - coarse), roundoff))
