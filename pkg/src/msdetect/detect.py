"""Matched subspace tests on incomplete observations, with and without noise."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy import special

from .errors import InvalidParameter
from .estimator import ResidualReport, residual_energy
from .vecspace import SampleIndexSet, SubspaceBasis, restrict, restrict_vector, restricted_residual

NOISELESS_RTOL = 1e-9
QUANTILE_TOL = 1e-12
POISSON_TAIL = 1e-12

RESIDUAL_DOF = "residual"
PAPER_DOF = "paper-r"


class Hypothesis(str, enum.Enum):
    H0 = "H0"
    H1 = "H1"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class TestConfig:
    """Noisy-test settings.

    ``dof_policy`` is ``"residual"`` (m - rank(U_omega)), ``"paper-r"``
    (the subspace dimension r) or a fixed positive integer.
    """

    __test__ = False  # not a pytest class

    lambda_fa: float
    noise_sigma: float = 1.0
    dof_policy: Union[str, int] = RESIDUAL_DOF

    def __post_init__(self):
        if not 0.0 < self.lambda_fa < 1.0:
            raise InvalidParameter(f"lambda_fa must lie in (0, 1), got {self.lambda_fa}")
        if not self.noise_sigma >= 0.0:
            raise InvalidParameter(f"noise_sigma must be non-negative, got {self.noise_sigma}")
        pol = self.dof_policy
        if isinstance(pol, str):
            if pol not in (RESIDUAL_DOF, PAPER_DOF):
                raise InvalidParameter(f"unknown dof policy {pol!r}")
        elif isinstance(pol, bool) or int(pol) != pol or pol < 1:
            raise InvalidParameter(f"fixed dof must be a positive integer, got {pol!r}")


@dataclass(frozen=True)
class DetectionOutcome:
    statistic: float
    threshold: float
    dof: int
    noncentrality: Optional[float] = None

    @property
    def decision(self) -> Hypothesis:
        return Hypothesis.H1 if self.statistic > self.threshold else Hypothesis.H0


def resolve_dof(policy, m: int, rank: int, r: int) -> int:
    if policy == RESIDUAL_DOF:
        return m - rank
    if policy == PAPER_DOF:
        return r
    return int(policy)


def noiseless_test(basis: SubspaceBasis, v, omega: SampleIndexSet) -> DetectionOutcome:
    """Residual energy against a scale-relative numerical zero."""
    rep = residual_energy(basis, v, omega)
    v_omega = restrict_vector(v, omega)
    threshold = NOISELESS_RTOL * float(v_omega @ v_omega)
    return DetectionOutcome(rep.t, threshold, rep.m - rep.rank, rep.t)


def _check_dof(dof):
    if isinstance(dof, bool) or int(dof) != dof or dof < 1:
        raise InvalidParameter(f"degrees of freedom must be a positive integer, got {dof!r}")


def chi2_cdf(x: float, dof: int) -> float:
    _check_dof(dof)
    if x <= 0:
        return 0.0
    return float(special.gammainc(dof / 2.0, x / 2.0))


def chi2_sf(x: float, dof: int) -> float:
    _check_dof(dof)
    if x <= 0:
        return 1.0
    return float(special.gammaincc(dof / 2.0, x / 2.0))


def _chi2_logpdf(x: float, dof: int) -> float:
    k = dof / 2.0
    return (k - 1.0) * math.log(x) - x / 2.0 - k * math.log(2.0) - math.lgamma(k)


@lru_cache(maxsize=4096)
def chi2_quantile(p: float, dof: int) -> float:
    """x with P(chi2_dof <= x) = p, by safeguarded Newton iteration on a bracket."""
    if not 0.0 < p < 1.0:
        raise InvalidParameter(f"p must lie in (0, 1), got {p}")
    _check_dof(dof)
    lo, hi = 0.0, max(1.0, float(dof))
    while chi2_cdf(hi, dof) < p:
        lo, hi = hi, 2.0 * hi
    x = 0.5 * (lo + hi)
    for _ in range(200):
        f = chi2_cdf(x, dof) - p
        if abs(f) <= QUANTILE_TOL:
            return x
        if f < 0:
            lo = x
        else:
            hi = x
        step = f / math.exp(_chi2_logpdf(x, dof)) if x > 0 else math.inf
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if x_new == x or hi - lo <= 4 * math.ulp(hi):
            return x_new
        x = x_new
    return x


def _poisson_weights(lam: float):
    """Poisson(j; lam) for j = 0..J with the omitted tail below POISSON_TAIL."""
    J = int(math.ceil(lam + 12.0 * math.sqrt(lam) + 30.0))
    while True:
        j = np.arange(J + 1)
        w = np.exp(-lam + j * math.log(lam) - special.gammaln(j + 1.0))
        if 1.0 - w.sum() < POISSON_TAIL:
            return j, w
        J *= 2


def noncentral_chi2_sf(x: float, dof: int, noncentrality: float) -> float:
    """Survival function of the noncentral chi-square as a Poisson mixture of
    central chi-squares with dof + 2j degrees of freedom."""
    _check_dof(dof)
    if not noncentrality >= 0.0:
        raise InvalidParameter(f"noncentrality must be non-negative, got {noncentrality}")
    if x < 0:
        raise InvalidParameter(f"x must be non-negative, got {x}")
    if x == 0:
        return 1.0
    if noncentrality == 0.0:
        return chi2_sf(x, dof)
    j, w = _poisson_weights(noncentrality / 2.0)
    tails = special.gammaincc(dof / 2.0 + j, x / 2.0)
    return float(min(1.0, np.dot(w, tails)))


def detection_probability(noncentrality: float, dof: int, eta: float) -> float:
    return noncentral_chi2_sf(eta, dof, noncentrality)


def noisy_threshold(lambda_fa: float, dof: int, sigma: float) -> float:
    if dof <= 0:
        # the residual is identically zero; nothing can exceed a zero threshold
        return 0.0
    return sigma**2 * chi2_quantile(1.0 - lambda_fa, dof)


def noisy_test(
    basis: SubspaceBasis,
    v_observed,
    omega: SampleIndexSet,
    cfg: TestConfig,
    noncentrality: Optional[float] = None,
    *,
    restricted: bool = False,
) -> DetectionOutcome:
    """Threshold the residual energy of noisy observations at the chi-square
    level that fixes the false-alarm rate at ``cfg.lambda_fa``.

    ``v_observed`` is a length-n vector of which only the entries at
    ``omega`` are used, or, with ``restricted=True``, the m observed values
    themselves (needed when repeated indices carry independent noise).  A
    known noncentrality (residual energy of the clean signal) can be passed
    through for reporting.
    """
    if not cfg.noise_sigma > 0:
        raise InvalidParameter("noisy_test needs noise_sigma > 0; use noiseless_test instead")
    if restricted:
        rb = restrict(basis, omega)
        res = restricted_residual(rb, v_observed)
        rep = ResidualReport(float(res @ res), omega.m, basis.n, rb.rank)
    else:
        rep = residual_energy(basis, v_observed, omega)
    dof = resolve_dof(cfg.dof_policy, rep.m, rep.rank, basis.r)
    threshold = noisy_threshold(cfg.lambda_fa, dof, cfg.noise_sigma)
    return DetectionOutcome(rep.t, threshold, dof, noncentrality)
