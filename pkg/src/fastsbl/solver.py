"""Coordinate-ascent evidence maximization (fast SBL) for Gaussian noise.

Each update recomputes the section statistics of one column against the
current model and either sets its precision to the section maximizer
``1 / (mu^2 - sigma2)`` or prunes it.  Pruned columns are absent from the
active set rather than carrying a huge precision.
"""
from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import linalg

from .criteria import kappa_pruning_rule
from .errors import DomainError
from .section import (
    SparseProblem,
    active_factor,
    all_section_stats,
    compute_section_stats,
    closed_form_argmax,
    log_section_likelihood_closed_form,
    SectionStats,
)

logger = logging.getLogger(__name__)

_LOG_2PI = math.log(2.0 * math.pi)
SWEEP_ORDERS = ("cyclic", "largest_gain")
# cached statistics losing more digits than this fall back to a fresh solve
CANCELLATION = 1e-6


@dataclass(frozen=True)
class SolverConfig:
    kappa: float = 1.0
    max_sweeps: int = 1000
    evidence_rel_tol: float = 1e-8
    sweep_order: str = "cyclic"
    seed: int = 0

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError(f"kappa must be positive, got {self.kappa!r}")
        if not self.evidence_rel_tol > 0:
            raise DomainError("evidence_rel_tol must be positive")
        if self.max_sweeps < 1:
            raise DomainError("max_sweeps must be at least 1")
        if self.sweep_order not in SWEEP_ORDERS:
            raise DomainError(f"sweep_order must be one of {SWEEP_ORDERS}, got {self.sweep_order!r}")


@dataclass(frozen=True)
class ModelState:
    """Finite precisions of the active columns plus cached posterior quantities.

    ``mean`` and ``covariance`` are over the active columns in ascending
    index order.
    """

    gammas: dict
    mean: np.ndarray
    covariance: np.ndarray
    log_evidence: float
    index: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "index", np.array(sorted(self.gammas), dtype=int))

    @property
    def active(self) -> tuple:
        return tuple(int(j) for j in self.index)

    def gamma_vector(self, n_columns: int) -> np.ndarray:
        out = np.full(n_columns, np.inf)
        for j, g in self.gammas.items():
            out[j] = g
        return out


class Posterior(NamedTuple):
    mean: np.ndarray
    active_covariance: np.ndarray


@dataclass
class SolverTrace:
    evidence: list = field(default_factory=list)
    active_size: list = field(default_factory=list)
    deltas: list = field(default_factory=list)
    actions: Counter = field(default_factory=Counter)
    converged: bool = False
    n_sweeps: int = 0


def _summaries(problem: SparseProblem, gammas: dict):
    active = np.array(sorted(gammas), dtype=int)
    lam = problem.noise_precision
    N = problem.n_samples
    base = -0.5 * (N * _LOG_2PI - N * math.log(lam) + lam * problem.yty)
    if active.size == 0:
        return np.empty(0), np.empty((0, 0)), base
    g = np.array([gammas[j] for j in active], dtype=float)
    factor = active_factor(problem, active, g)
    c = problem.aty[active]
    k = active.size
    cov = linalg.cho_solve(factor, np.eye(k), check_finite=False)
    mean = lam * cov @ c
    logdet = 2.0 * np.log(np.diag(factor[0])).sum()
    logev = base - 0.5 * (logdet - np.log(g).sum() - lam * c @ mean)
    return mean, cov, float(logev)


def make_state(problem: SparseProblem, gammas) -> ModelState:
    """Build a state from ``{column: precision}`` and fill its caches."""
    gammas = {int(j): float(g) for j, g in dict(gammas).items()}
    for j, g in gammas.items():
        if not 0 <= j < problem.n_columns:
            raise DomainError(f"column index {j} outside [0, {problem.n_columns})")
        if not (g > 0 and math.isfinite(g)):
            raise DomainError(f"active precision for column {j} must be finite and positive, got {g}")
    mean, cov, logev = _summaries(problem, gammas)
    return ModelState(gammas, mean, cov, logev)


def empty_state(problem: SparseProblem) -> ModelState:
    return make_state(problem, {})


def log_evidence(problem: SparseProblem, state) -> float:
    """``log N(y; 0, I/lambda + A_a diag(1/gamma_a) A_a^T)`` via the active-set identity."""
    gammas = getattr(state, "gammas", state)
    return _summaries(problem, gammas)[2]


def posterior(problem: SparseProblem, state) -> Posterior:
    """Gaussian weight posterior; pruned weights are exactly zero."""
    gammas = getattr(state, "gammas", state)
    mean_a, cov, _ = _summaries(problem, gammas)
    mean = np.zeros(problem.n_columns)
    mean[sorted(gammas)] = mean_a
    return Posterior(mean, cov)


def section_stats_from_state(problem: SparseProblem, state: ModelState, i: int) -> SectionStats:
    """Section statistics of column ``i`` read off the cached posterior.

    Same quantities as :func:`~fastsbl.section.compute_section_stats`, but the
    cached covariance replaces a fresh factorization.  An active column's own
    contribution is removed through the Schur complement of its diagonal entry.
    """
    if not 0 <= i < problem.n_columns:
        raise DomainError(f"column index {i} outside [0, {problem.n_columns})")
    lam = problem.noise_precision
    g = state.gammas.get(i)
    if g is None:
        scale = lam * problem.gram[i, i]
        s = scale
        q = lam * problem.aty[i]
        if state.index.size:
            b = problem.gram[state.index, i]
            s -= lam * lam * (b @ state.covariance @ b)
            q -= lam * (b @ state.mean)
    else:
        # Schur complement: 1 / Sigma_ii = gamma_i + s_i and m_i = Sigma_ii q_i
        k = int(np.searchsorted(state.index, i))
        scale = 1.0 / state.covariance[k, k]
        s, q = scale - g, state.mean[k] * scale
    if not s > CANCELLATION * scale:
        # too many digits lost to cancellation; solve afresh against the active set
        return compute_section_stats(problem, state, i)
    return SectionStats(mu=float(q / s), sigma2=float(1.0 / s), index=int(i))


def proposed_gamma(stats: SectionStats, kappa: float) -> float:
    """Precision the update rule assigns; ``inf`` means prune.

    The kappa rule gates admission; an admitted column gets the section
    maximizer, which only exists when ``mu^2 > sigma2``.
    """
    if not kappa_pruning_rule(stats, kappa):
        return math.inf
    return closed_form_argmax(stats)


def update_coordinate(problem: SparseProblem, state: ModelState, i: int,
                      config: SolverConfig = SolverConfig()) -> tuple[ModelState, str]:
    """One fast-SBL step on column ``i``.

    Returns the new state and one of ``"added"``, ``"re_estimated"``,
    ``"deleted"``, ``"unchanged"``.
    """
    stats = section_stats_from_state(problem, state, i)
    gamma = proposed_gamma(stats, config.kappa)
    present = i in state.gammas
    if math.isinf(gamma):
        if not present:
            return state, "unchanged"
        gammas = {j: g for j, g in state.gammas.items() if j != i}
        action = "deleted"
    else:
        gammas = dict(state.gammas)
        gammas[i] = gamma
        action = "re_estimated" if present else "added"
    return make_state(problem, gammas), action


def _converged(previous: float, current: float, tol: float) -> bool:
    return abs(current - previous) <= tol * max(1.0, abs(current))


def solve(problem: SparseProblem, config: SolverConfig = SolverConfig(),
          order: Sequence[int] | None = None, initial: ModelState | None = None
          ) -> tuple[ModelState, SolverTrace]:
    """Maximize the evidence by coordinate ascent starting from the empty model.

    Parameters
    ----------
    problem : SparseProblem
    config : SolverConfig
    order : sequence of int, optional
        Column visiting order for cyclic sweeps (default: index order).
    initial : ModelState, optional
        Starting state; the empty model by default.

    Returns
    -------
    state, trace
        ``trace.converged`` is False when ``max_sweeps`` ran out; the state
        is still the best one reached.
    """
    state = empty_state(problem) if initial is None else initial
    trace = SolverTrace()
    trace.evidence.append(state.log_evidence)
    trace.active_size.append(len(state.gammas))
    M = problem.n_columns
    if order is None:
        order = range(M)
    elif sorted(order) != list(range(M)):
        raise DomainError("order must be a permutation of the column indices")

    for sweep in range(config.max_sweeps):
        before = state.log_evidence
        if config.sweep_order == "cyclic":
            for i in order:
                new, action = update_coordinate(problem, state, i, config)
                trace.actions[action] += 1
                trace.deltas.append(new.log_evidence - state.log_evidence)
                state = new
            done = _converged(before, state.log_evidence, config.evidence_rel_tol)
        else:
            state, gain = _greedy_step(problem, state, config, trace)
            done = gain <= config.evidence_rel_tol * max(1.0, abs(state.log_evidence))
        trace.evidence.append(state.log_evidence)
        trace.active_size.append(len(state.gammas))
        trace.n_sweeps = sweep + 1
        if done:
            trace.converged = True
            break
    else:
        logger.warning("fast SBL did not converge in %d sweeps", config.max_sweeps)
    return state, trace


def _greedy_step(problem, state, config, trace):
    """Apply the single update with the largest predicted evidence gain."""
    mu, s2 = all_section_stats(problem, state)
    current = state.gamma_vector(problem.n_columns)
    gains = np.full(mu.shape, -np.inf)
    proposals = np.empty_like(mu)
    for i in range(mu.size):
        stats = SectionStats(float(mu[i]), float(s2[i]), i)
        g_new = proposed_gamma(stats, config.kappa)
        proposals[i] = g_new
        if g_new == current[i]:
            gains[i] = 0.0
            continue
        gains[i] = log_section_likelihood_closed_form(stats, g_new) - log_section_likelihood_closed_form(
            stats, current[i]
        )
    i = int(np.argmax(gains))
    gain = float(gains[i])
    if gain <= config.evidence_rel_tol * max(1.0, abs(state.log_evidence)):
        return state, gain
    new, action = update_coordinate(problem, state, i, config)
    trace.actions[action] += 1
    trace.deltas.append(new.log_evidence - state.log_evidence)
    return new, gain
