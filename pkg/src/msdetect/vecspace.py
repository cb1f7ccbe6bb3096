"""Dense linear algebra on subspace bases: orthonormalization, row restriction,
full and restricted projections.

Vectors are plain 1-D float arrays; indices are 0-based everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, InvalidSize, RankDeficient

ORTHO_TOL = 1e-10
RANK_RTOL = 1e-10

WITH = "with"
WITHOUT = "without"


def as_vector(v, name="v") -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionMismatch(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def numerical_rank(singular_values: np.ndarray) -> int:
    if singular_values.size == 0 or singular_values[0] == 0.0:
        return 0
    return int(np.count_nonzero(singular_values > RANK_RTOL * singular_values[0]))


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """An n x r matrix with orthonormal columns."""

    matrix: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.matrix, dtype=float)
        if U.ndim != 2:
            raise DimensionMismatch(f"basis must be 2-D, got shape {U.shape}")
        n, r = U.shape
        if not 1 <= r <= n:
            raise InvalidSize(f"need 1 <= r <= n, got n={n}, r={r}")
        dev = np.max(np.abs(U.T @ U - np.eye(r)))
        if not dev <= ORTHO_TOL:
            raise ValueError(f"columns are not orthonormal (max |U^T U - I| = {dev:.3g})")
        object.__setattr__(self, "matrix", _frozen(U))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def r(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True, eq=False)
class SampleIndexSet:
    """Ordered observation indices into [0, n).

    ``mode`` is ``"with"`` or ``"without"`` (replacement).
    """

    indices: np.ndarray
    n: int
    mode: str = WITHOUT

    def __post_init__(self):
        idx = np.asarray(self.indices)
        if idx.ndim != 1 or idx.size == 0:
            raise InvalidSize("index set must be a non-empty 1-D list")
        if not np.issubdtype(idx.dtype, np.integer):
            if not np.all(np.equal(np.mod(idx, 1), 0)):
                raise InvalidSize("indices must be integers")
        idx = idx.astype(np.int64)
        if self.mode not in (WITH, WITHOUT):
            raise ValueError(f"mode must be {WITH!r} or {WITHOUT!r}, got {self.mode!r}")
        if self.n < 1 or idx.min() < 0 or idx.max() >= self.n:
            raise InvalidSize(f"indices must lie in [0, {self.n})")
        if self.mode == WITHOUT and np.unique(idx).size != idx.size:
            raise InvalidSize("duplicate indices in a without-replacement set")
        object.__setattr__(self, "indices", _frozen(idx))

    @property
    def m(self) -> int:
        return self.indices.size

    def __len__(self):
        return self.m


@dataclass(frozen=True, eq=False)
class RestrictedBasis:
    """Rows of a basis selected by an index set, in index-set order."""

    matrix: np.ndarray
    n: int

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def r(self) -> int:
        return self.matrix.shape[1]

    @cached_property
    def _range(self):
        # Orthonormal basis of the column space via thin SVD; the rank cutoff
        # gives pseudoinverse semantics when U_omega^T U_omega is singular.
        W, s, _ = np.linalg.svd(self.matrix, full_matrices=False)
        k = numerical_rank(s)
        return W[:, :k], s

    @property
    def rank(self) -> int:
        return self._range[0].shape[1]

    @property
    def singular_values(self) -> np.ndarray:
        return self._range[1]


def orthonormalize(raw) -> SubspaceBasis:
    A = np.asarray(raw, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.shape[1] > A.shape[0] or A.shape[1] == 0:
        raise DimensionMismatch(f"expected an n x r matrix with r <= n, got shape {A.shape}")
    s = np.linalg.svd(A, compute_uv=False)
    if numerical_rank(s) < A.shape[1]:
        raise RankDeficient(f"numerical rank {numerical_rank(s)} < {A.shape[1]} columns")
    Q, _ = np.linalg.qr(A)
    return SubspaceBasis(Q)


def restrict(basis: SubspaceBasis, omega: SampleIndexSet) -> RestrictedBasis:
    if omega.n != basis.n:
        raise DimensionMismatch(f"index set is over n={omega.n}, basis has n={basis.n}")
    return RestrictedBasis(basis.matrix[omega.indices], basis.n)


def restrict_vector(v, omega: SampleIndexSet) -> np.ndarray:
    v = as_vector(v)
    if omega.n != v.size:
        raise DimensionMismatch(f"index set is over n={omega.n}, vector has length {v.size}")
    return v[omega.indices]


def _check_len(basis_n, v):
    if v.size != basis_n:
        raise DimensionMismatch(f"vector length {v.size} != ambient dimension {basis_n}")


def project_full(basis: SubspaceBasis, v) -> np.ndarray:
    v = as_vector(v)
    _check_len(basis.n, v)
    U = basis.matrix
    return U @ (U.T @ v)


def restricted_residual(rb: RestrictedBasis, v_omega) -> np.ndarray:
    """v_omega minus its least-squares fit on the columns of ``rb``."""
    v_omega = as_vector(v_omega, "v_omega")
    if v_omega.size != rb.m:
        raise DimensionMismatch(f"v_omega has length {v_omega.size}, restricted basis has {rb.m} rows")
    Q = rb._range[0]
    res = v_omega - Q @ (Q.T @ v_omega)
    # One reorthogonalization pass cleans up the residual when v_omega is
    # nearly in the span.
    return res - Q @ (Q.T @ res)


def project_restricted(rb: RestrictedBasis, v_omega) -> np.ndarray:
    v_omega = as_vector(v_omega, "v_omega")
    return v_omega - restricted_residual(rb, v_omega)


def decompose(basis: SubspaceBasis, v) -> tuple[np.ndarray, np.ndarray]:
    """Split v into (x in S, y in S-perp) with x + y == v."""
    v = as_vector(v)
    x = project_full(basis, v)
    return x, v - x


def read_matrix(path) -> np.ndarray:
    return np.loadtxt(Path(path), delimiter=",", ndmin=2, dtype=float)


def read_vector(path) -> np.ndarray:
    M = read_matrix(path)
    if M.shape[1] != 1 and M.shape[0] != 1:
        raise DimensionMismatch(f"{path}: expected a single-column vector, got shape {M.shape}")
    return as_vector(M.ravel())


def read_indices(path) -> np.ndarray:
    M = np.loadtxt(Path(path), delimiter=",", ndmin=1, dtype=float).ravel()
    if not np.all(M == np.round(M)):
        raise InvalidSize(f"{path}: indices must be integers")
    return M.astype(np.int64)


def write_matrix(path, M) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    lines = [",".join(repr(float(x)) for x in row) for row in M]
    Path(path).write_text("\n".join(lines) + "\n")


def write_vector(path, v) -> None:
    write_matrix(path, np.asarray(v, dtype=float)[:, None])
