"""Concentration bounds for the incomplete-data residual and Monte Carlo
checks of the three supporting lemmas.

All logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coherence import subspace_coherence, vector_coherence
from .errors import GammaTooLarge, InvalidParameter
from .sampling import SeedSpec, draw_with_replacement
from .vecspace import SubspaceBasis, as_vector, restrict

# Slack for coherence values computed in floating point (e.g. 1 - 1e-16).
_MU_SLACK = 1e-9


@dataclass(frozen=True)
class TheoremParams:
    n: int
    r: int
    m: int
    delta: float
    mu_S: float
    mu_y: float
    alpha: float
    beta: float
    gamma: float


@dataclass(frozen=True)
class SandwichBound:
    lower: float
    upper: float
    full_residual: float
    confidence: float
    lower_valid: bool = True

    def contains(self, t: float) -> bool:
        return self.lower <= t <= self.upper


@dataclass(frozen=True)
class LemmaValidationReport:
    lemma_id: int
    trials: int
    failures: int
    certified_rate: float

    @property
    def empirical_rate(self) -> float:
        return self.failures / self.trials

    @property
    def slack(self) -> float:
        """Three binomial standard deviations at the certified rate."""
        c = self.certified_rate
        return 3.0 * math.sqrt(c * (1.0 - c) / self.trials)

    @property
    def within_certificate(self) -> bool:
        return self.empirical_rate <= self.certified_rate + self.slack


def _check_delta(delta):
    if not 0.0 < delta < 1.0:
        raise InvalidParameter(f"delta must lie in (0, 1), got {delta}")


def theorem_params(n: int, r: int, m: int, delta: float, mu_S: float, mu_y: float) -> TheoremParams:
    _check_delta(delta)
    if not 1 <= r <= n:
        raise InvalidParameter(f"need 1 <= r <= n, got n={n}, r={r}")
    if m < 1:
        raise InvalidParameter(f"m must be positive, got {m}")
    if not 1.0 - _MU_SLACK <= mu_S <= n / r + _MU_SLACK:
        raise InvalidParameter(f"mu_S must lie in [1, n/r] = [1, {n / r}], got {mu_S}")
    if not 1.0 - _MU_SLACK <= mu_y <= n + _MU_SLACK:
        raise InvalidParameter(f"mu_y must lie in [1, n] = [1, {n}], got {mu_y}")
    log_inv = math.log(1.0 / delta)
    alpha = math.sqrt(2.0 * mu_y**2 * log_inv / m)
    beta = math.sqrt(2.0 * mu_y * log_inv)
    gamma = math.sqrt(8.0 * r * mu_S * math.log(2.0 * r / delta) / (3.0 * m))
    return TheoremParams(n, r, m, delta, mu_S, mu_y, alpha, beta, gamma)


def min_samples(r: int, mu_S: float, delta: float) -> int:
    """Smallest m with m >= (8/3) r mu_S log(2r/delta)."""
    _check_delta(delta)
    if r < 1 or mu_S < 1.0 - _MU_SLACK:
        raise InvalidParameter(f"need r >= 1 and mu_S >= 1, got r={r}, mu_S={mu_S}")
    return max(1, math.ceil(8.0 / 3.0 * r * mu_S * math.log(2.0 * r / delta)))


def sandwich(
    params: TheoremParams,
    full_residual: float,
    *,
    squared: bool = False,
    allow_vacuous: bool = False,
) -> SandwichBound:
    """High-probability bounds on ||v_omega - P v_omega||^2 given ||v - P_S v||^2.

    ``squared=True`` swaps the (1 -/+ alpha) factors for the (1 -/+ alpha)^2
    forms that appear at the end of the proof, for comparison.  With
    ``allow_vacuous=True`` a gamma >= 1 yields an upper-only bound (lower is
    -inf, ``lower_valid`` False) instead of raising.
    """
    if full_residual < 0:
        raise InvalidParameter(f"full_residual must be non-negative, got {full_residual}")
    p = params
    lo_factor = (1 - p.alpha) ** 2 if squared else 1 - p.alpha
    hi_factor = (1 + p.alpha) ** 2 if squared else 1 + p.alpha
    upper = hi_factor * p.m / p.n * full_residual
    confidence = 1.0 - 4.0 * p.delta
    if p.gamma >= 1.0:
        if not allow_vacuous:
            raise GammaTooLarge(f"gamma = {p.gamma:.4g} >= 1; the lower bound is vacuous")
        return SandwichBound(-math.inf, upper, full_residual, confidence, lower_valid=False)
    lower = (p.m * lo_factor - p.r * p.mu_S * (1 + p.beta) ** 2 / (1 - p.gamma)) / p.n * full_residual
    return SandwichBound(lower, upper, full_residual, confidence)


def _validator_setup(basis, m, delta, trials):
    _check_delta(delta)
    if trials < 1:
        raise InvalidParameter(f"trials must be positive, got {trials}")
    if m < 1:
        raise InvalidParameter(f"m must be positive, got {m}")
    return subspace_coherence(basis).mu


def _trial_rng(seed, t):
    return SeedSpec(int(seed), t).rng()


def validate_lemma1(basis: SubspaceBasis, y, m: int, delta: float, trials: int, seed: int) -> LemmaValidationReport:
    """Count draws where ||y_omega||^2 leaves (1 -/+ alpha)(m/n)||y||^2."""
    mu_S = _validator_setup(basis, m, delta, trials)
    y = as_vector(y, "y")
    if y.size != basis.n:
        raise InvalidParameter(f"y has length {y.size}, basis has n={basis.n}")
    if not np.any(y):
        raise InvalidParameter("y must be nonzero")
    p = theorem_params(basis.n, basis.r, m, delta, mu_S, vector_coherence(y).mu)
    target = m / basis.n * float(y @ y)
    lo, hi = (1 - p.alpha) * target, (1 + p.alpha) * target
    failures = 0
    for t in range(trials):
        omega = draw_with_replacement(_trial_rng(seed, t), basis.n, m)
        y_om = y[omega.indices]
        e = float(y_om @ y_om)
        failures += not lo <= e <= hi
    return LemmaValidationReport(1, trials, failures, 2 * delta)


def validate_lemma2(basis: SubspaceBasis, y, m: int, delta: float, trials: int, seed: int) -> LemmaValidationReport:
    """Count draws where ||U_omega^T y_omega||^2 exceeds (beta+1)^2 (m/n)(r mu_S/n)||y||^2."""
    mu_S = _validator_setup(basis, m, delta, trials)
    y = as_vector(y, "y")
    if y.size != basis.n:
        raise InvalidParameter(f"y has length {y.size}, basis has n={basis.n}")
    if not np.any(y):
        raise InvalidParameter("y must be nonzero")
    n, r = basis.n, basis.r
    p = theorem_params(n, r, m, delta, mu_S, vector_coherence(y).mu)
    bound = (p.beta + 1) ** 2 * (m / n) * (r * mu_S / n) * float(y @ y)
    U = basis.matrix
    failures = 0
    for t in range(trials):
        omega = draw_with_replacement(_trial_rng(seed, t), n, m)
        proj = U[omega.indices].T @ y[omega.indices]
        failures += float(proj @ proj) > bound
    return LemmaValidationReport(2, trials, failures, delta)


def validate_lemma3(basis: SubspaceBasis, m: int, delta: float, trials: int, seed: int) -> LemmaValidationReport:
    """Count draws where lambda_min(U_omega^T U_omega) < (1 - gamma) m / n."""
    mu_S = _validator_setup(basis, m, delta, trials)
    n, r = basis.n, basis.r
    # mu_y does not enter gamma; 1.0 is a placeholder within its valid range.
    p = theorem_params(n, r, m, delta, mu_S, 1.0)
    if p.gamma >= 1.0:
        raise GammaTooLarge(f"gamma = {p.gamma:.4g} >= 1 at m={m}; need m >= {min_samples(r, mu_S, delta)}")
    floor = (1 - p.gamma) * m / n
    failures = 0
    for t in range(trials):
        omega = draw_with_replacement(_trial_rng(seed, t), n, m)
        failures += min_gram_eigenvalue(restrict(basis, omega).matrix) < floor
    return LemmaValidationReport(3, trials, failures, delta)


def min_gram_eigenvalue(A: np.ndarray) -> float:
    """Smallest eigenvalue of A^T A; zero when A has fewer rows than columns."""
    if A.shape[0] < A.shape[1]:
        return 0.0
    s = np.linalg.svd(A, compute_uv=False)
    return float(s[-1] ** 2)
