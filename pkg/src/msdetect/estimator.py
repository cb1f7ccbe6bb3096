"""Residual energy of a partially observed vector outside a known subspace."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .vecspace import (
    SampleIndexSet,
    SubspaceBasis,
    as_vector,
    decompose,
    restrict,
    restrict_vector,
    restricted_residual,
)


@dataclass(frozen=True)
class ResidualReport:
    t: float
    m: int
    n: int
    rank: int

    @property
    def rescaled(self) -> float:
        """(n/m) * t, which concentrates around the full-data residual energy."""
        return self.n / self.m * self.t


def full_residual_energy(basis: SubspaceBasis, v) -> float:
    _, y = decompose(basis, v)
    return float(y @ y)


def residual_energy(basis: SubspaceBasis, v, omega: SampleIndexSet) -> ResidualReport:
    """Squared norm of the least-squares residual of v_omega against U_omega.

    The residual vector is formed explicitly and then squared; subtracting
    the fitted energy from ||v_omega||^2 would cancel catastrophically when v
    is nearly in the subspace.
    """
    rb = restrict(basis, omega)
    res = restricted_residual(rb, restrict_vector(v, omega))
    return ResidualReport(float(res @ res), omega.m, basis.n, rb.rank)


def zero_fill_residual(basis: SubspaceBasis, v, omega: SampleIndexSet) -> float:
    """||v_omega - (P_S v0)_omega||^2 where v0 is v with unobserved entries set to 0."""
    v = as_vector(v)
    v_omega = restrict_vector(v, omega)
    v0 = np.zeros(basis.n)
    v0[omega.indices] = v_omega
    U = basis.matrix
    fit = U[omega.indices] @ (U.T @ v0)
    diff = v_omega - fit
    return float(diff @ diff)
