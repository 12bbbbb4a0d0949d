"""Acceptance runs at their stated tolerances and time budgets.

Each test records one PASS/FAIL line that is printed in the terminal
summary under "acceptance criteria".
"""
import math
import time

import numpy as np
import pytest
from scipy import stats as sps

from fastsbl.criteria import (
    Verdict,
    kappa_pruning_rule,
    lemma1_rate_check,
    r1bar_gaussian,
    r1bar_generic,
    scan_grid,
    theorem1_check,
    theorem2_check,
)
from fastsbl.datagen import SyntheticSpec
from fastsbl.harness import MONOTONE_TOL, bench, in_boundary_band, random_sections
from fastsbl.priors import GAUSSIAN, LAPLACE, UNIFORM, student_t
from fastsbl.quadrature import QuadratureSpec
from fastsbl.section import (
    GaussianSection,
    GenericSection,
    SectionStats,
    argmax_section_likelihood,
    closed_form_argmax,
    section_likelihood,
    section_likelihood_closed_form,
    section_likelihood_quadrature,
)
from fastsbl.solver import SolverConfig

pytestmark = pytest.mark.acceptance


def test_gaussian_rule_matches_numeric_maximizer(report):
    start = time.perf_counter()
    checked = mismatches = 0
    for st in random_sections(1000, seed=0):
        if in_boundary_band(st, 1e-3):
            continue
        checked += 1
        keep = kappa_pruning_rule(st, kappa=1.0)
        finite = math.isfinite(argmax_section_likelihood(GaussianSection(st), method="numeric"))
        mismatches += keep != finite
    elapsed = time.perf_counter() - start
    report(f"{checked} sections outside the band, {mismatches} mismatches, {elapsed:.2f}s")
    assert mismatches == 0
    assert elapsed < 30


def test_two_reference_sections(report):
    start = time.perf_counter()
    finite_case = GaussianSection(SectionStats(1.5, 1.0))
    closed = closed_form_argmax(finite_case.stats)
    numeric = argmax_section_likelihood(finite_case, method="numeric")
    by_quadrature = argmax_section_likelihood(finite_case, method="quadrature")

    prune_case = GaussianSection(SectionStats(0.5, 1.0))
    pruned = argmax_section_likelihood(prune_case, method="numeric")
    spec = QuadratureSpec()
    ells = [section_likelihood(prune_case, GAUSSIAN, g, spec, method="quadrature") for g in (1e2, 1e4, 1e6)]
    f0 = sps.norm.pdf(0.0, loc=0.5, scale=1.0)
    elapsed = time.perf_counter() - start
    report(f"gamma_hat={closed:.10g} (numeric {numeric:.10g}, quadrature {by_quadrature:.10g}), "
           f"pruned={pruned}, f0-l(1e6)={f0 - ells[-1]:.3g}, {elapsed:.2f}s")

    assert closed == pytest.approx(0.8, rel=1e-6)
    assert numeric == pytest.approx(0.8, rel=1e-6)
    assert by_quadrature == pytest.approx(0.8, rel=1e-6)
    assert math.isinf(pruned)
    assert ells[0] < ells[1] < ells[2]
    assert all(ell <= f0 * (1 + spec.rel_tol) for ell in ells)
    assert elapsed < 5


def _sections_by_sign(n, keep_positive, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        mu, s2 = rng.uniform(-3, 3), rng.uniform(0.1, 4.0)
        if (mu * mu > s2) == keep_positive:
            out.append(SectionStats(mu, s2))
    return out


def test_remainder_sign_matches_threshold(report):
    start = time.perf_counter()
    failures = 0
    worst_negative_side = -math.inf
    for st in _sections_by_sign(500, keep_positive=False, seed=1):
        peak = float(np.max(r1bar_gaussian(st, scan_grid(GaussianSection(st)))))
        worst_negative_side = max(worst_negative_side, peak)
        failures += peak > 1e-12
    smallest_positive_peak = math.inf
    for st in _sections_by_sign(500, keep_positive=True, seed=2):
        peak = float(np.max(r1bar_gaussian(st, scan_grid(GaussianSection(st)))))
        smallest_positive_peak = min(smallest_positive_peak, peak)
        failures += not peak > 1e-12
    elapsed = time.perf_counter() - start
    report(f"max on prune side {worst_negative_side:.3g}, min peak on keep side "
           f"{smallest_positive_peak:.3g}, {failures} failures, {elapsed:.2f}s")
    assert failures == 0
    assert elapsed < 10


def test_large_precision_rate(report):
    start = time.perf_counter()
    priors = [GAUSSIAN, LAPLACE, UNIFORM, student_t(5)]
    errors = {}
    for mu in (1.5, 0.5):
        f = GaussianSection(SectionStats(mu, 1.0))
        for prior in priors:
            rate = lemma1_rate_check(f, prior, np.logspace(3, 6, 31))
            errors[(mu, str(prior))] = rate.rel_error
    elapsed = time.perf_counter() - start
    worst = max(errors.values())
    failures = sum(not e < 0.01 for e in errors.values())
    report(f"8 combinations, worst relative error {worst:.3g}, {failures} failures, {elapsed:.2f}s")
    assert failures == 0
    assert elapsed < 60


def _even_mixture(rng):
    w = rng.uniform(0.05, 0.95)
    m1, m2 = rng.uniform(0, 3, 2)
    s1, s2 = rng.uniform(0.2, 2.0, 2)

    def f(x):
        x = np.asarray(x, dtype=float)
        half = w * (sps.norm.pdf(x, m1, s1) + sps.norm.pdf(-x, m1, s1))
        return half + (1 - w) * (sps.norm.pdf(x, m2, s2) + sps.norm.pdf(-x, m2, s2))

    return GenericSection(f, center=0.0, width=max(m1, m2) + 3 * max(s1, s2))


def test_criteria_never_both_hold(report):
    start = time.perf_counter()
    both = 0
    verdicts = {"prune": 0, "finite": 0, "neither": 0}
    for st in random_sections(10_000, seed=3):
        f = GaussianSection(st)
        t1, t2 = theorem1_check(f).verdict, theorem2_check(f).verdict
        both += t1 is Verdict.HOLDS and t2 is Verdict.HOLDS
    rng = np.random.default_rng(4)
    for _ in range(100):
        f = _even_mixture(rng)
        t1, t2 = theorem1_check(f).verdict, theorem2_check(f).verdict
        both += t1 is Verdict.HOLDS and t2 is Verdict.HOLDS
        key = "prune" if t1 is Verdict.HOLDS else "finite" if t2 is Verdict.HOLDS else "neither"
        verdicts[key] += 1
    elapsed = time.perf_counter() - start
    report(f"co-occurrences {both}; mixtures {verdicts}; {elapsed:.2f}s")
    assert both == 0
    assert elapsed < 60


def test_solver_monotone_on_planted_problems(report):
    spec = SyntheticSpec(n=100, m=256, k=10, snr_db=30.0, dictionary_kind="gaussian_iid", seed=0)
    result = bench(100, spec, SolverConfig(kappa=1.0))
    report(f"min update delta {result['min_update_delta']:.3g}, exact recoveries "
           f"{result['exact_recoveries']}/100 (reported, target 95), median nmse "
           f"{result['median_nmse']:.3g}, {result['wall_time']:.1f}s")
    assert result["min_update_delta"] >= -MONOTONE_TOL
    assert result["wall_time"] < 300


def test_closed_form_and_quadrature_agree(report):
    start = time.perf_counter()
    # likelihoods reach ~1e-20 on this lattice, so only the relative test may stop the integrator
    spec = QuadratureSpec(abs_tol=1e-300)
    worst_ell = 0.0
    for mu in np.linspace(-3.0, 3.0, 10):
        for s2 in np.linspace(0.1, 4.0, 5):
            st = SectionStats(float(mu), float(s2))
            f = GaussianSection(st)
            for gamma in np.logspace(-3, 6, 10):
                exact = section_likelihood_closed_form(st, gamma)
                numeric = section_likelihood_quadrature(f, GAUSSIAN, gamma, spec)
                worst_ell = max(worst_ell, abs(numeric - exact) / exact)

    worst_r1 = 0.0
    for st in random_sections(200, seed=5):
        xs = scan_grid(GaussianSection(st), n_grid=256)
        generic = r1bar_generic(GenericSection(GaussianSection(st), st.mu, st.sigma), xs)
        worst_r1 = max(worst_r1, float(np.max(np.abs(generic - r1bar_gaussian(st, xs)))))
    elapsed = time.perf_counter() - start
    report(f"500-point lattice worst relative gap {worst_ell:.3g}, remainder worst gap "
           f"{worst_r1:.3g}, {elapsed:.2f}s")
    assert worst_ell < 1e-9
    assert worst_r1 < 1e-10
    assert elapsed < 30
