"""Sections of the marginal likelihood along a single hyperparameter.

With every precision but the ``i``-th held fixed, the evidence as a function
of ``gamma_i`` is the expectation of the partly marginalized likelihood
``f_i`` under the prior ``p(x_i; gamma_i)``.  For a Gaussian likelihood and
Gaussian priors ``f_i`` is proportional to ``N(x; mu_i, sigma2_i)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping

import numpy as np
from scipy import linalg
from scipy.signal import find_peaks

from .errors import AmbiguousMaximumError, ConvergenceError, DomainError, IllConditionedError
from .priors import GAUSSIAN, ScaleFamilyPrior, _check_gamma
from .quadrature import DEFAULT_SPEC, QuadratureSpec, expect

_LOG_2PI = math.log(2.0 * math.pi)
MAX_CONDITION = 1e12
BOUNDARY_RTOL = 1e-9
ARGMAX_GRID = np.logspace(-6.0, 12.0, 97)


@dataclass(frozen=True, eq=False)
class SparseProblem:
    """``y = A x + v`` with white Gaussian noise of known precision."""

    dictionary: np.ndarray
    observation: np.ndarray
    noise_precision: float

    def __post_init__(self):
        A = np.array(self.dictionary, dtype=float)
        y = np.array(self.observation, dtype=float).reshape(-1)
        if A.ndim == 1:
            A = A[:, None]
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise DomainError(f"dictionary must be a non-empty N x M matrix, got shape {A.shape}")
        if y.shape[0] != A.shape[0]:
            raise DomainError(f"observation has length {y.shape[0]}, dictionary has {A.shape[0]} rows")
        if not (np.isfinite(A).all() and np.isfinite(y).all()):
            raise DomainError("dictionary and observation must be finite")
        lam = float(self.noise_precision)
        if not (lam > 0 and math.isfinite(lam)):
            raise DomainError(f"noise precision must be positive and finite, got {self.noise_precision!r}")
        zero = np.flatnonzero(~A.any(axis=0))
        if zero.size:
            raise DomainError(f"dictionary columns {zero.tolist()} are zero")
        A.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "dictionary", A)
        object.__setattr__(self, "observation", y)
        object.__setattr__(self, "noise_precision", lam)

    @property
    def n_samples(self) -> int:
        return self.dictionary.shape[0]

    @property
    def n_columns(self) -> int:
        return self.dictionary.shape[1]

    @cached_property
    def gram(self) -> np.ndarray:
        return self.dictionary.T @ self.dictionary

    @cached_property
    def aty(self) -> np.ndarray:
        return self.dictionary.T @ self.observation

    @cached_property
    def yty(self) -> float:
        return float(self.observation @ self.observation)


@dataclass(frozen=True)
class SectionStats:
    """Mean and variance of the Gaussian-shaped section likelihood."""

    mu: float
    sigma2: float
    index: int | None = None

    def __post_init__(self):
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise DomainError(f"sigma2 must be positive and finite, got {self.sigma2!r}")
        if not math.isfinite(self.mu):
            raise DomainError(f"mu must be finite, got {self.mu!r}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


# -- section functions ------------------------------------------------------------


class SectionFunction:
    """``x -> f(x)`` up to a positive scale, plus hints for the integrator.

    ``center`` and ``width`` locate the bulk of ``f``; they seed quadrature
    breakpoints and set the scan ranges of the criteria.
    """

    center: float = 0.0
    width: float = 1.0

    def __call__(self, x):
        raise NotImplementedError

    def feature_points(self):
        c, w = self.center, self.width
        return tuple(c + k * w for k in (-8, -4, -2, -1, 0, 1, 2, 4, 8))

    def at_zero(self) -> float:
        return float(self(np.array(0.0)))


class GaussianSection(SectionFunction):
    """``f(x) = exp(log_scale) * N(x; mu, sigma2)``."""

    def __init__(self, stats: SectionStats, log_scale: float = 0.0):
        self.stats = stats
        self.log_scale = float(log_scale)

    @classmethod
    def from_moments(cls, mu: float, sigma2: float, log_scale: float = 0.0) -> "GaussianSection":
        return cls(SectionStats(float(mu), float(sigma2)), log_scale)

    @property
    def center(self):
        return self.stats.mu

    @property
    def width(self):
        return self.stats.sigma

    def logf(self, x):
        mu, s2 = self.stats.mu, self.stats.sigma2
        x = np.asarray(x, dtype=float)
        return self.log_scale - 0.5 * (_LOG_2PI + math.log(s2)) - (x - mu) ** 2 / (2.0 * s2)

    def __call__(self, x):
        return np.exp(self.logf(x))

    def derivatives_at_zero(self) -> tuple[float, float, float]:
        """``(f(0), f'(0), f''(0))`` in closed form."""
        mu, s2 = self.stats.mu, self.stats.sigma2
        f0 = float(np.exp(self.logf(0.0)))
        return f0, f0 * mu / s2, f0 * (mu * mu - s2) / (s2 * s2)

    def __repr__(self):
        return f"GaussianSection(mu={self.stats.mu!r}, sigma2={self.stats.sigma2!r})"


class GenericSection(SectionFunction):
    """Wrap an arbitrary non-negative callable."""

    def __init__(self, func: Callable, center: float = 0.0, width: float = 1.0):
        if not width > 0:
            raise DomainError("width must be positive")
        self.func = func
        self.center = float(center)
        self.width = float(width)

    def __call__(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def __repr__(self):
        return f"GenericSection({self.func!r}, center={self.center}, width={self.width})"


def as_section(f) -> SectionFunction:
    if isinstance(f, SectionFunction):
        return f
    if isinstance(f, SectionStats):
        return GaussianSection(f)
    if callable(f):
        return GenericSection(f)
    raise TypeError(f"cannot interpret {f!r} as a section function")


def vanishes_at_edges(f: SectionFunction, reach: float = 40.0, rtol: float = 1e-8) -> bool:
    """Check the decay condition on ``f`` at ``center +- reach * width``."""
    f = as_section(f)
    edges = np.array([f.center - reach * f.width, f.center + reach * f.width])
    peak = max(float(np.max(f(np.array(f.feature_points())))), np.finfo(float).tiny)
    return bool(np.all(f(edges) <= rtol * peak))


# -- statistics from a problem --------------------------------------------------------


def _gammas_of(state) -> Mapping[int, float]:
    return getattr(state, "gammas", state)


def active_factor(problem: SparseProblem, active, gammas):
    """Cholesky factor of ``lambda * A_a^T A_a + diag(gamma_a)``.

    Returns ``None`` for an empty active set.  The condition number is judged
    after symmetric diagonal scaling, which Cholesky is insensitive to.
    """
    active = np.asarray(active, dtype=int)
    if active.size == 0:
        return None
    lam = problem.noise_precision
    C = lam * problem.gram[np.ix_(active, active)]
    C[np.diag_indices_from(C)] += np.asarray(gammas, dtype=float)
    d = 1.0 / np.sqrt(np.diag(C))
    eig = np.linalg.eigvalsh(C * d[:, None] * d[None, :])
    if not eig[0] > eig[-1] / MAX_CONDITION:
        cond = math.inf if eig[0] <= 0 else eig[-1] / eig[0]
        raise IllConditionedError(active, cond)
    return linalg.cho_factor(C, lower=True, check_finite=False)


def compute_section_stats(problem: SparseProblem, state, i: int) -> SectionStats:
    """``mu_i`` and ``sigma2_i`` with column ``i`` removed from the model.

    ``state`` is a :class:`~fastsbl.solver.ModelState` or a mapping from
    active column index to its finite precision.  Pruned columns are simply
    absent.
    """
    M = problem.n_columns
    if not 0 <= i < M:
        raise DomainError(f"column index {i} outside [0, {M})")
    gammas = _gammas_of(state)
    active = np.array(sorted(j for j in gammas if j != i), dtype=int)
    lam = problem.noise_precision
    gii = problem.gram[i, i]
    qi = problem.aty[i]
    if active.size:
        factor = active_factor(problem, active, [gammas[j] for j in active])
        b = problem.gram[active, i]
        c = problem.aty[active]
        z = linalg.cho_solve(factor, np.column_stack([b, c]), check_finite=False)
        gii = gii - lam * b @ z[:, 0]
        qi = qi - lam * b @ z[:, 1]
    s = lam * gii
    q = lam * qi
    if not s > 0:
        raise IllConditionedError(active, math.inf)
    return SectionStats(mu=float(q / s), sigma2=float(1.0 / s), index=int(i))


def all_section_stats(problem: SparseProblem, state) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``(mu, sigma2)`` for every column under one frozen state.

    One factorization serves all ``M`` columns; active columns have their own
    contribution removed through the diagonal of the posterior covariance.
    """
    gammas = _gammas_of(state)
    active = np.array(sorted(gammas), dtype=int)
    lam = problem.noise_precision
    S = lam * np.diag(problem.gram).copy()
    Q = lam * problem.aty.copy()
    if active.size:
        g = np.array([gammas[j] for j in active])
        factor = active_factor(problem, active, g)
        B = problem.gram[active, :]
        Z = linalg.cho_solve(factor, np.column_stack([B, problem.aty[active]]), check_finite=False)
        S -= lam * lam * np.einsum("km,km->m", B, Z[:, :-1])
        Q -= lam * lam * (B.T @ Z[:, -1])
        s, q = S.copy(), Q.copy()
        # Schur complement: 1 / Sigma_ii = gamma_i + s_i and m_i = Sigma_ii q_i
        inv_diag = 1.0 / np.diag(linalg.cho_solve(factor, np.eye(active.size), check_finite=False))
        mean = lam * Z[:, -1]
        s[active] = inv_diag - g
        q[active] = mean * inv_diag
    else:
        s, q = S, Q
    return q / s, 1.0 / s


# -- section likelihood ------------------------------------------------------------


def log_section_likelihood_closed_form(stats: SectionStats, gamma: float) -> float:
    """``log N(0; mu, sigma2 + 1/gamma)``; ``gamma = inf`` gives ``log f(0)``."""
    gamma = float(gamma)
    if gamma != math.inf:
        _check_gamma(gamma)
    var = stats.sigma2 + (0.0 if gamma == math.inf else 1.0 / gamma)
    return -0.5 * (_LOG_2PI + math.log(var)) - stats.mu**2 / (2.0 * var)


def section_likelihood_closed_form(stats: SectionStats, gamma: float) -> float:
    """Gaussian section likelihood ``int N(x; mu, sigma2) N(x; 0, 1/gamma) dx``."""
    return math.exp(log_section_likelihood_closed_form(stats, gamma))


def section_likelihood_quadrature(
    f, prior: ScaleFamilyPrior, gamma: float, spec: QuadratureSpec = DEFAULT_SPEC
) -> float:
    """``l(gamma) = E[f(x)]`` for ``x ~ p(.; gamma)`` by adaptive quadrature."""
    f = as_section(f)
    return expect(f, prior, gamma, spec, points=f.feature_points())


def section_likelihood(f, prior: ScaleFamilyPrior = GAUSSIAN, gamma: float = 1.0,
                       spec: QuadratureSpec = DEFAULT_SPEC, method: str = "auto") -> float:
    """Dispatch to the closed form when it applies, otherwise to quadrature."""
    f = as_section(f)
    if method not in ("auto", "closed_form", "quadrature"):
        raise DomainError(f"unknown method {method!r}")
    closed = isinstance(f, GaussianSection) and prior == GAUSSIAN
    if method == "closed_form" and not closed:
        raise DomainError("closed form needs a Gaussian section under a Gaussian prior")
    if closed and method != "quadrature":
        return math.exp(f.log_scale + log_section_likelihood_closed_form(f.stats, gamma))
    return section_likelihood_quadrature(f, prior, gamma, spec)


# -- maximization ------------------------------------------------------------------


def closed_form_argmax(stats: SectionStats) -> float:
    """``1 / (mu^2 - sigma2)`` when ``|mu| > sigma``, else ``inf``.

    ``|mu|`` within ``1e-9 * sigma`` of ``sigma`` counts as pruned.
    """
    if abs(stats.mu) <= stats.sigma * (1.0 + BOUNDARY_RTOL):
        return math.inf
    return 1.0 / (stats.mu**2 - stats.sigma2)


def _golden_max(fun, a: float, b: float, xtol: float = 1e-10) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while abs(b - a) > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def numeric_argmax(log_ell: Callable[[float], float], log_sup: float, rel_tol: float = 1e-10,
                   grid: np.ndarray = ARGMAX_GRID) -> float:
    """Maximize a section log-likelihood over ``gamma`` without closed forms.

    A log-spaced grid scan locates the bracket, golden-section search on
    ``log10(gamma)`` refines it.  Returns ``inf`` when the profile is still
    (weakly) rising at the top of the grid and has reached ``log_sup``, the
    limit of ``log l(gamma)`` as ``gamma`` grows.
    """
    tie = 10.0 * rel_tol
    t = np.log10(grid)
    vals = np.array([log_ell(g) for g in grid])
    if not np.isfinite(vals).all():
        raise ConvergenceError("section likelihood is not finite on the search grid")
    peaks, _ = find_peaks(vals, prominence=tie)
    k = int(np.argmax(vals))
    if vals[k] <= vals[-1] + tie:
        if peaks.size:
            raise AmbiguousMaximumError([*grid[peaks], math.inf])
        if abs(vals[-1] - log_sup) <= tie:
            return math.inf
        raise ConvergenceError(
            f"section likelihood still rising at gamma={grid[-1]:g}", estimate=float(grid[-1])
        )
    if peaks.size > 1:
        raise AmbiguousMaximumError(grid[peaks])
    if k == 0:
        raise ConvergenceError(f"maximum below gamma={grid[0]:g}", estimate=float(grid[0]))
    best = _golden_max(lambda s: log_ell(10.0**s), t[k - 1], t[k + 1])
    return float(10.0**best)


def argmax_section_likelihood(f, prior: ScaleFamilyPrior = GAUSSIAN,
                              spec: QuadratureSpec = DEFAULT_SPEC, method: str = "auto") -> float:
    """Maximizer of ``l(gamma)``; ``math.inf`` means the column is pruned.

    Parameters
    ----------
    f : SectionFunction, SectionStats or callable
    prior : ScaleFamilyPrior
    spec : QuadratureSpec
        Used by quadrature evaluations and as the tie tolerance of the scan.
    method : {"auto", "closed_form", "numeric", "quadrature"}
        ``auto`` uses ``1/(mu^2 - sigma2)`` for Gaussian/Gaussian and the
        numeric search otherwise.  ``numeric`` searches the grid but still
        evaluates ``l`` in closed form where one exists; ``quadrature`` also
        integrates numerically.
    """
    f = as_section(f)
    closed = isinstance(f, GaussianSection) and prior == GAUSSIAN
    if method not in ("auto", "closed_form", "numeric", "quadrature"):
        raise DomainError(f"unknown method {method!r}")
    if method == "closed_form" and not closed:
        raise DomainError("closed form needs a Gaussian section under a Gaussian prior")
    if closed and method in ("auto", "closed_form"):
        return closed_form_argmax(f.stats)

    if closed and method == "numeric":
        stats = f.stats
        log_sup = log_section_likelihood_closed_form(stats, math.inf)
        return numeric_argmax(lambda g: log_section_likelihood_closed_form(stats, g), log_sup, spec.rel_tol)

    f0 = f.at_zero()
    if not f0 > 0:
        raise DomainError("the numeric search needs f(0) > 0")

    def log_ell(g):
        value = section_likelihood_quadrature(f, prior, g, spec)
        return math.log(value) if value > 0 else -math.inf

    return numeric_argmax(log_ell, math.log(f0), spec.rel_tol)
