"""Even scale-family priors parameterized by their precision.

Every family is stored in standardized form ``p(x; 1)`` with zero mean and
unit variance.  The precision-``gamma`` density is derived on the fly as
``sqrt(gamma) * p(sqrt(gamma) * x; 1)``, so the variance is always
``1 / gamma``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special, stats

from .errors import DomainError

FAMILIES = ("gaussian", "laplace", "uniform", "student_t")

_SQRT2 = math.sqrt(2.0)
_SQRT3 = math.sqrt(3.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ScaleFamilyPrior:
    """A zero-mean, even, unit-variance prior family.

    Parameters
    ----------
    family : {"gaussian", "laplace", "uniform", "student_t"}
    dof : float, optional
        Degrees of freedom, only for ``student_t``.  Must exceed 4 so the
        fourth moment is finite.
    """

    family: str
    dof: float | None = None

    def __post_init__(self):
        family = self.family.lower().replace("-", "_")
        if family == "studentt":
            family = "student_t"
        if family not in FAMILIES:
            raise DomainError(f"unknown prior family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "family", family)
        if family == "student_t":
            if self.dof is None or not math.isfinite(self.dof) or self.dof <= 4:
                raise DomainError(
                    f"student_t prior needs dof > 4 for a finite fourth moment, got {self.dof!r}"
                )
            object.__setattr__(self, "dof", float(self.dof))
        elif self.dof is not None:
            raise DomainError(f"dof is only meaningful for student_t, not {family}")

    @classmethod
    def from_config(cls, config: dict) -> "ScaleFamilyPrior":
        """Build from a JSON-style mapping such as ``{"family": "student_t", "dof": 5}``."""
        if isinstance(config, str):
            return cls(config)
        return cls(config["family"], config.get("dof"))

    def to_config(self) -> dict:
        out = {"family": self.family}
        if self.dof is not None:
            out["dof"] = self.dof
        return out

    def __str__(self):
        return f"student_t({self.dof:g})" if self.family == "student_t" else self.family

    # -- standardized quantities -------------------------------------------------

    @cached_property
    def _t_scale(self) -> float:
        # unit-variance Student-t is t_nu scaled by sqrt((nu - 2) / nu)
        return math.sqrt((self.dof - 2.0) / self.dof)

    @cached_property
    def _t_log_norm(self) -> float:
        nu = self.dof
        return (
            special.gammaln((nu + 1) / 2)
            - special.gammaln(nu / 2)
            - 0.5 * math.log(nu * math.pi)
            - math.log(self._t_scale)
        )

    def standard_logpdf(self, u):
        """Log density of the unit-variance member at ``u``."""
        u = np.asarray(u, dtype=float)
        if self.family == "gaussian":
            return -0.5 * u * u - _LOG_SQRT_2PI
        if self.family == "laplace":
            return -_SQRT2 * np.abs(u) - 0.5 * math.log(2.0)
        if self.family == "uniform":
            inside = np.abs(u) <= _SQRT3
            return np.where(inside, -math.log(2.0 * _SQRT3), -np.inf)
        nu = self.dof
        z = u / self._t_scale
        return self._t_log_norm - 0.5 * (nu + 1) * np.log1p(z * z / nu)

    def standard_pdf(self, u):
        return np.exp(self.standard_logpdf(u))

    @property
    def support(self) -> float:
        """Half-width of the standardized support (``inf`` if unbounded)."""
        return _SQRT3 if self.family == "uniform" else math.inf

    def tail_sigmas(self, mass: float = 1e-17) -> float:
        """Standard deviations beyond which the two-sided tail mass is below ``mass``."""
        if self.family == "gaussian":
            return float(stats.norm.isf(mass / 2))
        if self.family == "laplace":
            return math.log(1.0 / mass) / _SQRT2
        if self.family == "uniform":
            return _SQRT3
        return float(stats.t.isf(mass / 2, self.dof)) * self._t_scale

    def fourth_moment(self) -> float:
        """Closed-form ``E[x^4]`` of the unit-variance member (its kurtosis)."""
        if self.family == "gaussian":
            return 3.0
        if self.family == "laplace":
            return 6.0
        if self.family == "uniform":
            return 9.0 / 5.0
        nu = self.dof
        return 3.0 * (nu - 2.0) / (nu - 4.0)

    # -- precision-parameterized density -----------------------------------------

    def logpdf(self, x, gamma: float):
        gamma = _check_gamma(gamma)
        root = math.sqrt(gamma)
        return 0.5 * math.log(gamma) + self.standard_logpdf(root * np.asarray(x, dtype=float))

    def density(self, x, gamma: float):
        """``p(x; gamma) = sqrt(gamma) * p(sqrt(gamma) * x; 1)``."""
        out = np.exp(self.logpdf(x, gamma))
        return float(out) if out.ndim == 0 else out

    def sample(self, gamma: float, n: int, seed=None) -> np.ndarray:
        """Draw ``n`` values from ``p(.; gamma)``.

        Laplace and uniform draws use the inverse CDF; the Student-t is built
        from a normal over a chi-square so every family is rejection-free.
        """
        gamma = _check_gamma(gamma)
        if n < 0:
            raise DomainError(f"sample size must be non-negative, got {n}")
        rng = np.random.default_rng(seed)
        if self.family == "gaussian":
            u = rng.standard_normal(n)
        elif self.family == "laplace":
            v = rng.uniform(-0.5, 0.5, n)
            u = -np.sign(v) * np.log1p(-2.0 * np.abs(v)) / _SQRT2
        elif self.family == "uniform":
            u = _SQRT3 * (2.0 * rng.uniform(0.0, 1.0, n) - 1.0)
        else:
            z = rng.standard_normal(n)
            chi2 = rng.chisquare(self.dof, n)
            u = self._t_scale * z / np.sqrt(chi2 / self.dof)
        return u / math.sqrt(gamma)


def _check_gamma(gamma) -> float:
    gamma = float(gamma)
    if not gamma > 0 or math.isnan(gamma):
        raise DomainError(f"precision gamma must be positive, got {gamma!r}")
    return gamma


GAUSSIAN = ScaleFamilyPrior("gaussian")
LAPLACE = ScaleFamilyPrior("laplace")
UNIFORM = ScaleFamilyPrior("uniform")


def student_t(dof: float) -> ScaleFamilyPrior:
    return ScaleFamilyPrior("student_t", dof)


def density(prior: ScaleFamilyPrior, x, gamma: float):
    return prior.density(x, gamma)


def fourth_moment(prior: ScaleFamilyPrior) -> float:
    return prior.fourth_moment()


def sample(prior: ScaleFamilyPrior, gamma: float, n: int, seed=None) -> np.ndarray:
    return prior.sample(gamma, n, seed)
