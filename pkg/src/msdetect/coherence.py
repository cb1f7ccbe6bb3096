"""Coherence of subspaces and vectors with respect to the standard basis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ZeroVector
from .vecspace import SubspaceBasis, as_vector


@dataclass(frozen=True)
class CoherenceReport:
    mu: float
    argmax_index: int


def subspace_coherence(basis: SubspaceBasis) -> CoherenceReport:
    """(n/r) * max_j ||P_S e_j||^2, read off the row norms of the orthonormal basis."""
    row_energy = np.einsum("ij,ij->i", basis.matrix, basis.matrix)
    # argmax returns the first maximizer, i.e. the smallest index on ties
    j = int(np.argmax(row_energy))
    return CoherenceReport(basis.n / basis.r * float(row_energy[j]), j)


def vector_coherence(z) -> CoherenceReport:
    z = as_vector(z, "z")
    energy = float(z @ z)
    if energy == 0.0:
        raise ZeroVector("coherence of the zero vector is undefined")
    j = int(np.argmax(np.abs(z)))
    return CoherenceReport(z.size * float(z[j]) ** 2 / energy, j)
