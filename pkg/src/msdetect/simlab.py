"""Experiment harness: basis/vector generators, residual and zero-fill sweeps,
and empirical ROC points.

Randomness is keyed by (seed, stream).  Trial ``t`` at grid position ``k``
uses stream ``k * 2**32 + t``; the basis and test vectors use reserved
streams at the top of the 64-bit range.  Trials run on a thread pool, but
results are collected in trial order, so output does not depend on the
number of threads.
"""
from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .coherence import subspace_coherence, vector_coherence
from .detect import RESIDUAL_DOF, TestConfig, noisy_test, noisy_threshold
from .errors import DegenerateSubspace, InvalidParameter, RankDeficient
from .estimator import residual_energy, zero_fill_residual
from .sampling import SeedSpec, draw
from .vecspace import WITH, WITHOUT, SubspaceBasis, orthonormalize, project_full, restrict_vector

BASIS_STREAM = 2**64 - 1
VECTOR_STREAM = 2**64 - 2
PERP_STREAM = 2**64 - 3
_TRIAL_STRIDE = 2**32

BASIS_KINDS = ("gaussian", "fourier", "coherent")
VECTOR_KINDS = ("in_perp", "in_subspace")


def trial_stream(m_index: int, t: int) -> int:
    return m_index * _TRIAL_STRIDE + t


# -- generators --------------------------------------------------------------

def _gaussian_matrix(n, r, seed):
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed), BASIS_STREAM)
    return seed.rng().standard_normal((n, r))


def gen_gaussian_basis(n: int, r: int, seed) -> SubspaceBasis:
    """Orthonormalized n x r standard Gaussian matrix.

    An integer ``seed`` uses the reserved basis stream of that seed.
    """
    if not 1 <= r <= n:
        raise InvalidParameter(f"need 1 <= r <= n, got n={n}, r={r}")
    G = _gaussian_matrix(n, r, seed)
    try:
        return orthonormalize(G)
    except RankDeficient:
        # Probability zero in exact arithmetic; one redraw before giving up.
        seed = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed), BASIS_STREAM)
        return orthonormalize(SeedSpec(seed.seed, seed.stream ^ 1).rng().standard_normal((n, r)))


def fourier_frequencies(r: int) -> list[int]:
    """Lowest frequencies whose realified columns number exactly r."""
    return ([0] if r % 2 else []) + list(range(1, r // 2 + 1))


def gen_fourier_basis(n: int, r: int, column_indices: Optional[Sequence[int]] = None) -> SubspaceBasis:
    """Real basis spanning selected DFT frequencies, with every row of equal norm.

    Frequency 0 contributes the constant column, n/2 (n even) the alternating
    column, and any other k the cosine/sine pair scaled by sqrt(2/n).  Indices
    k and n-k name the same pair.  The resulting column count must equal r.
    """
    if column_indices is None:
        column_indices = fourier_frequencies(r)
    freqs = [min(int(k) % n, n - int(k) % n) for k in column_indices]
    if len(set(freqs)) != len(freqs):
        raise InvalidParameter(f"duplicate frequencies in {list(column_indices)}")
    j = np.arange(n)
    cols = []
    for k in freqs:
        if k == 0:
            cols.append(np.full(n, 1.0 / math.sqrt(n)))
        elif 2 * k == n:
            cols.append(np.where(j % 2 == 0, 1.0, -1.0) / math.sqrt(n))
        else:
            # (k*j) mod n keeps the angle argument small and exact
            angle = 2.0 * math.pi * ((k * j) % n) / n
            cols.append(math.sqrt(2.0 / n) * np.cos(angle))
            cols.append(math.sqrt(2.0 / n) * np.sin(angle))
    if len(cols) != r:
        raise InvalidParameter(f"frequencies {freqs} give {len(cols)} real columns, expected r={r}")
    return SubspaceBasis(np.column_stack(cols))


def gen_coherent_basis(n: int, r: int, spike: float, seed) -> SubspaceBasis:
    """Gaussian basis with its first r rows amplified by (1 + spike) before
    orthonormalization.  ``spike=0`` reproduces ``gen_gaussian_basis``."""
    if spike < 0:
        raise InvalidParameter(f"spike must be non-negative, got {spike}")
    if not 1 <= r <= n:
        raise InvalidParameter(f"need 1 <= r <= n, got n={n}, r={r}")
    G = _gaussian_matrix(n, r, seed)
    G[:r] *= 1.0 + spike
    return orthonormalize(G)


def calibrate_spike(n: int, r: int, target_mu: float, seed, *, tol: float = 0.05, max_iter: int = 60) -> float:
    """Bisect on spike until the coherent basis has mu(S) within ``tol`` of the target."""
    if not 1.0 < target_mu < n / r:
        raise InvalidParameter(f"target mu must lie in (1, n/r), got {target_mu}")

    def mu(s):
        return subspace_coherence(gen_coherent_basis(n, r, s, seed)).mu

    lo, hi = 0.0, 1.0
    while mu(hi) < target_mu:
        lo, hi = hi, 2.0 * hi
        if hi > 1e8:
            raise InvalidParameter(f"cannot reach mu = {target_mu}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        val = mu(mid)
        if abs(val - target_mu) <= tol:
            return mid
        if val < target_mu:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gen_perp_vector(basis: SubspaceBasis, seed) -> np.ndarray:
    """Unit vector in the orthogonal complement of the basis span."""
    if basis.r >= basis.n:
        raise DegenerateSubspace("the orthogonal complement of the full space is {0}")
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed), PERP_STREAM)
    g = seed.rng().standard_normal(basis.n)
    for _ in range(2):
        g = g - project_full(basis, g)
    return g / np.linalg.norm(g)


def gen_subspace_vector(basis: SubspaceBasis, seed) -> np.ndarray:
    """Unit vector drawn from the span of the basis."""
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed), VECTOR_STREAM)
    v = basis.matrix @ seed.rng().standard_normal(basis.r)
    return v / np.linalg.norm(v)


# -- configuration and summaries --------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    r: int
    m_grid: tuple
    basis_kind: str = "gaussian"
    spike: float = 0.0
    target_mu_S: Optional[float] = None
    fourier_frequencies: Optional[tuple] = None
    trials_per_m: int = 100
    sampling_mode: str = WITHOUT
    seed: int = 0
    vector_kind: str = "in_perp"
    vector_scale: float = 1.0
    # ROC-only settings
    noise_sigma: float = 1.0
    lambda_grid: tuple = (0.01, 0.05, 0.1)
    dof_policy: object = RESIDUAL_DOF

    def __post_init__(self):
        object.__setattr__(self, "m_grid", tuple(int(m) for m in self.m_grid))
        object.__setattr__(self, "lambda_grid", tuple(float(x) for x in self.lambda_grid))
        if self.fourier_frequencies is not None:
            object.__setattr__(self, "fourier_frequencies", tuple(int(k) for k in self.fourier_frequencies))

        def check(ok, key, msg):
            if not ok:
                raise InvalidParameter(msg, field=key)

        check(self.n >= 1, "n", f"n must be positive, got {self.n}")
        check(1 <= self.r <= self.n, "r", f"need 1 <= r <= n, got n={self.n}, r={self.r}")
        grid = self.m_grid
        check(len(grid) > 0, "m_grid", "m_grid must not be empty")
        check(all(b > a for a, b in zip(grid, grid[1:])), "m_grid", f"m_grid must be strictly increasing, got {list(grid)}")
        check(grid[0] >= 1, "m_grid", "m_grid entries must be positive")
        check(self.sampling_mode in (WITH, WITHOUT), "sampling_mode",
              f"sampling_mode must be 'with' or 'without', got {self.sampling_mode!r}")
        check(self.sampling_mode == WITH or grid[-1] <= self.n, "m_grid",
              f"m = {grid[-1]} exceeds n = {self.n} without replacement")
        check(self.trials_per_m >= 1, "trials_per_m", "trials_per_m must be at least 1")
        check(self.basis_kind in BASIS_KINDS, "basis_kind",
              f"basis_kind must be one of {BASIS_KINDS}, got {self.basis_kind!r}")
        check(self.vector_kind in VECTOR_KINDS, "vector_kind",
              f"vector_kind must be one of {VECTOR_KINDS}, got {self.vector_kind!r}")
        check(0 <= self.seed < 2**64, "seed", "seed must be a 64-bit unsigned integer")
        check(self.spike >= 0, "spike", "spike must be non-negative")
        check(self.noise_sigma > 0, "noise_sigma", "noise_sigma must be positive")
        check(all(0 < lam < 1 for lam in self.lambda_grid), "lambda_grid", "lambda values must lie in (0, 1)")
        try:
            TestConfig(0.5, self.noise_sigma, self.dof_policy)
        except InvalidParameter as exc:
            raise InvalidParameter(str(exc), field="dof_policy") from exc

    def build_basis(self) -> SubspaceBasis:
        if self.basis_kind == "gaussian":
            return gen_gaussian_basis(self.n, self.r, self.seed)
        if self.basis_kind == "fourier":
            return gen_fourier_basis(self.n, self.r, self.fourier_frequencies)
        spike = self.spike
        if self.target_mu_S is not None:
            spike = calibrate_spike(self.n, self.r, self.target_mu_S, self.seed)
        return gen_coherent_basis(self.n, self.r, spike, self.seed)

    def build_vector(self, basis: SubspaceBasis) -> np.ndarray:
        if self.vector_kind == "in_perp":
            v = gen_perp_vector(basis, self.seed)
        else:
            v = gen_subspace_vector(basis, self.seed)
        return self.vector_scale * v


@dataclass(frozen=True)
class TrialSummary:
    m: int
    min: float
    mean: float
    max: float
    mu_S: float
    mu_y: float
    trials: int
    mode: str
    seed: int


@dataclass(frozen=True)
class RocPoint:
    m: int
    lambda_fa: float
    p_fa: float
    p_d: float
    trials_h0: int
    trials_h1: int


def _map_ordered(fn: Callable, tasks, threads: int):
    if threads <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def _summarize(m, values, mu_S, mu_y, cfg) -> TrialSummary:
    values = np.asarray(values, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    mean = math.fsum(values) / values.size
    return TrialSummary(m, lo, min(max(mean, lo), hi), hi, mu_S, mu_y, values.size, cfg.sampling_mode, cfg.seed)


def _sweep(cfg: ExperimentConfig, statistic, threads: int, basis=None, v=None):
    basis = cfg.build_basis() if basis is None else basis
    v = cfg.build_vector(basis) if v is None else v
    mu_S = subspace_coherence(basis).mu
    mu_y = vector_coherence(v).mu if np.any(v) else math.nan

    def one(task):
        k, t = task
        omega = draw(SeedSpec(cfg.seed, trial_stream(k, t)).rng(), basis.n, cfg.m_grid[k], cfg.sampling_mode)
        return statistic(basis, v, omega)

    out = []
    for k, m in enumerate(cfg.m_grid):
        values = _map_ordered(one, [(k, t) for t in range(cfg.trials_per_m)], threads)
        out.append(_summarize(m, values, mu_S, mu_y, cfg))
    return out


def run_residual_sweep(cfg: ExperimentConfig, *, threads: int = 1, basis=None, v=None) -> list[TrialSummary]:
    """Min/mean/max of the incomplete-data residual energy for each m."""
    if cfg.vector_kind != "in_perp":
        raise InvalidParameter("the residual sweep needs vector_kind = in_perp")
    return _sweep(cfg, lambda b, vec, om: residual_energy(b, vec, om).t, threads, basis, v)


def run_zero_fill_sweep(cfg: ExperimentConfig, *, threads: int = 1, basis=None, v=None) -> list[TrialSummary]:
    """Min/mean/max of the zero-filled residual for an in-subspace vector.

    ``mu_y`` in the summaries is the coherence of v itself.
    """
    if cfg.vector_kind != "in_subspace":
        raise InvalidParameter("the zero-fill sweep needs vector_kind = in_subspace")
    return _sweep(cfg, zero_fill_residual, threads, basis, v)


def run_roc(
    cfg: ExperimentConfig,
    noise_sigma: Optional[float] = None,
    lambda_grid: Optional[Sequence[float]] = None,
    trials: Optional[int] = None,
    *,
    dof_policy=None,
    threads: int = 1,
    basis=None,
) -> list[RocPoint]:
    """Empirical false-alarm and detection rates of the noisy test.

    For every m in the grid and every trial, one index set is drawn and two
    noisy observations are tested: a unit vector in S (H0) and the same
    vector plus a vector in S-perp of norm ``cfg.vector_scale`` (H1).  Noise
    is i.i.d. per observation, including repeated indices.
    """
    sigma = cfg.noise_sigma if noise_sigma is None else noise_sigma
    lambdas = cfg.lambda_grid if lambda_grid is None else tuple(lambda_grid)
    trials = cfg.trials_per_m if trials is None else trials
    policy = cfg.dof_policy if dof_policy is None else dof_policy
    if not sigma > 0:
        raise InvalidParameter("run_roc needs noise_sigma > 0")
    if trials < 1:
        raise InvalidParameter("trials must be at least 1")
    test_cfg = TestConfig(lambdas[0], sigma, policy)
    for lam in lambdas:
        TestConfig(lam, sigma, policy)
    basis = cfg.build_basis() if basis is None else basis
    v0 = gen_subspace_vector(basis, cfg.seed)
    v1 = v0 + cfg.vector_scale * gen_perp_vector(basis, cfg.seed)
    n = basis.n

    def one(task):
        k, t = task
        rng = SeedSpec(cfg.seed, trial_stream(k, t)).rng()
        omega = draw(rng, n, cfg.m_grid[k], cfg.sampling_mode)
        m = omega.m
        h0 = restrict_vector(v0, omega) + sigma * rng.standard_normal(m)
        h1 = restrict_vector(v1, omega) + sigma * rng.standard_normal(m)
        o0 = noisy_test(basis, h0, omega, test_cfg, restricted=True)
        o1 = noisy_test(basis, h1, omega, test_cfg, restricted=True)
        return o0.statistic, o1.statistic, o0.dof

    points = []
    for k, m in enumerate(cfg.m_grid):
        rows = _map_ordered(one, [(k, t) for t in range(trials)], threads)
        s0 = np.array([row[0] for row in rows])
        s1 = np.array([row[1] for row in rows])
        dofs = [row[2] for row in rows]
        for lam in lambdas:
            eta = np.array([noisy_threshold(lam, d, sigma) for d in dofs])
            points.append(
                RocPoint(m, lam, float(np.mean(s0 > eta)), float(np.mean(s1 > eta)), trials, trials)
            )
    return points


# -- CSV rendering -------------------------------------------------------------

SUMMARY_HEADER = "m,min,mean,max,mu_S,mu_y,trials,mode,seed"
ROC_HEADER = "m,lambda,p_fa,p_d,trials_h0,trials_h1"


def _num(x) -> str:
    # repr gives the shortest string that round-trips to the same double
    return repr(float(x))


def summaries_to_csv(rows: Sequence[TrialSummary]) -> str:
    buf = io.StringIO()
    buf.write(SUMMARY_HEADER + "\n")
    for s in rows:
        buf.write(
            f"{s.m},{_num(s.min)},{_num(s.mean)},{_num(s.max)},{_num(s.mu_S)},{_num(s.mu_y)},"
            f"{s.trials},{s.mode},{s.seed}\n"
        )
    return buf.getvalue()


def roc_to_csv(points: Sequence[RocPoint]) -> str:
    buf = io.StringIO()
    buf.write(ROC_HEADER + "\n")
    for p in points:
        buf.write(f"{p.m},{_num(p.lambda_fa)},{_num(p.p_fa)},{_num(p.p_d)},{p.trials_h0},{p.trials_h1}\n")
    return buf.getvalue()
