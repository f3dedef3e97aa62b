"""Problem instances: Gaussian sensing matrices, sparse signals, noisy observations.

All randomness is drawn from :class:`numpy.random.Generator` objects seeded by
``(seed, stream)`` pairs, so the matrix, the signal and the noise of one trial
can share a seed without sharing a random stream.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

# stream tags keep the generators independent when they share a seed
_MATRIX_STREAM = 0x4D
_SIGNAL_STREAM = 0x53
_NOISE_STREAM = 0x45

SIGNAL_DISTS = ("gaussian", "rademacher")


def _rng(seed: int, stream: int, *extra: int) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.default_rng([int(seed), stream, *extra])


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SensingMatrix:
    """Dense ``m x N`` observation operator with unit-norm columns."""

    entries: np.ndarray
    seed: int = 0

    def __post_init__(self):
        a = _frozen(self.entries)
        if a.ndim != 2:
            raise ValueError("sensing matrix must be two-dimensional")
        object.__setattr__(self, "entries", a)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def column_norm_defect(self) -> float:
        """Largest deviation of a column norm from 1."""
        return float(np.max(np.abs(np.linalg.norm(self.entries, axis=0) - 1.0)))

    @cached_property
    def lipschitz(self) -> float:
        """``||A||_2^2`` estimated by power iteration (cached)."""
        from .solver import spectral_norm_sq

        return spectral_norm_sq(self.entries)

    def __matmul__(self, x):
        return self.entries @ x

    @classmethod
    def from_array(cls, a, seed: int = 0, normalize: bool = False) -> "SensingMatrix":
        a = np.array(a, dtype=float)
        if normalize:
            norms = np.linalg.norm(a, axis=0)
            if np.any(norms == 0):
                raise ValueError("cannot normalize a zero column")
            a = a / norms
        return cls(a, seed)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """The unknown signal, its support and its best-k-term error ledger."""

    signal: np.ndarray
    support: np.ndarray
    k: int
    sigma_k_values: dict = field(default_factory=dict)

    @property
    def best_k_l1(self) -> float:
        """``||x*(k)||_1``, the l1 norm of the best k-term approximation."""
        return float(np.abs(best_k(self.signal, self.k)).sum())

    @classmethod
    def from_signal(cls, signal) -> "GroundTruth":
        x = _frozen(signal)
        support = np.flatnonzero(x)
        support.setflags(write=False)
        k = int(support.size)
        ledger = {j: sigma_k(x, j) for j in range(k + 1)}
        return cls(x, support, k, ledger)


@dataclass(frozen=True, eq=False)
class Observation:
    """Measured data ``y = A x* + eps`` with the small scale ``mu``."""

    y: np.ndarray
    noise: np.ndarray
    noise_norm: float
    mu: float


def gen_gaussian_matrix(m: int, N: int, seed: int) -> SensingMatrix:
    """Draw an ``m x N`` standard normal matrix and normalize its columns.

    Draws are consumed column by column, so column ``j`` is the ``j``-th block
    of ``m`` normals in the stream. A zero column (probability zero) is redrawn
    from a sub-stream keyed on its index and an attempt counter.
    """
    if m < 1 or N < m:
        raise ValueError(f"need 1 <= m <= N, got m={m}, N={N}")
    a = _rng(seed, _MATRIX_STREAM).standard_normal((N, m)).T.copy()
    norms = np.linalg.norm(a, axis=0)
    for j in np.flatnonzero(norms == 0):
        attempt = 1
        while norms[j] == 0:
            a[:, j] = _rng(seed, _MATRIX_STREAM, int(j), attempt).standard_normal(m)
            norms[j] = np.linalg.norm(a[:, j])
            attempt += 1
    a /= norms
    return SensingMatrix(a, seed)


def gen_sparse_signal(N: int, k: int, seed: int, dist: str = "gaussian") -> GroundTruth:
    """k-sparse signal with a uniformly random support.

    Nonzeros are standard normal (``dist="gaussian"``) or random signs
    (``dist="rademacher"``). Exact-zero Gaussian draws are redrawn so that the
    support always has ``k`` elements.
    """
    if k < 0 or k > N:
        raise ValueError(f"need 0 <= k <= N, got k={k}, N={N}")
    if dist not in SIGNAL_DISTS:
        raise ValueError(f"unknown signal distribution {dist!r}")
    rng = _rng(seed, _SIGNAL_STREAM)
    support = np.sort(rng.choice(N, size=k, replace=False))
    if dist == "gaussian":
        values = rng.standard_normal(k)
        while np.any(values == 0):
            values[values == 0] = rng.standard_normal(int(np.sum(values == 0)))
    else:
        values = rng.choice([-1.0, 1.0], size=k)
    x = np.zeros(N)
    x[support] = values
    return GroundTruth.from_signal(x)


def make_observation(
    A: SensingMatrix, truth: GroundTruth, noise_norm: float, seed: int
) -> Observation:
    """Observe ``truth`` through ``A`` with noise of exactly ``noise_norm``."""
    if noise_norm < 0:
        raise ValueError("noise_norm must be nonnegative")
    if A.cols != truth.signal.size:
        raise ValueError(f"matrix has {A.cols} columns, signal has length {truth.signal.size}")
    eps = np.zeros(A.rows)
    if noise_norm > 0:
        direction = _rng(seed, _NOISE_STREAM).standard_normal(A.rows)
        eps = direction * (noise_norm / np.linalg.norm(direction))
    y = A.entries @ truth.signal + eps
    mu = sigma_k(truth.signal, truth.k) + noise_norm
    return Observation(_frozen(y), _frozen(eps), float(noise_norm), float(mu))


def _magnitude_order(x: np.ndarray) -> np.ndarray:
    # descending magnitude; stable sort keeps lower indices first among ties
    return np.argsort(-np.abs(x), kind="stable")


def best_k(x, k: int) -> np.ndarray:
    """Keep the ``k`` largest-magnitude entries of ``x`` (lowest index wins ties)."""
    x = np.asarray(x, dtype=float)
    if k < 0 or k > x.size:
        raise ValueError(f"need 0 <= k <= {x.size}, got {k}")
    out = np.zeros_like(x)
    keep = _magnitude_order(x)[:k]
    out[keep] = x[keep]
    return out


def sigma_k(x, k: int) -> float:
    """Best k-term l1 approximation error of ``x``."""
    x = np.asarray(x, dtype=float)
    if k < 0 or k > x.size:
        raise ValueError(f"need 0 <= k <= {x.size}, got {k}")
    # cumulative sums of ascending magnitudes are exactly monotone in k
    tail = np.cumsum(np.sort(np.abs(x)))
    return float(tail[x.size - k - 1]) if k < x.size else 0.0


def lambda_inf(A: SensingMatrix, y) -> float:
    """``||A^T y||_inf``: the smallest lambda whose LASSO minimizer is zero."""
    a = A.entries if isinstance(A, SensingMatrix) else np.asarray(A)
    y = np.asarray(y, dtype=float)
    if a.shape[0] != y.size:
        raise ValueError("dimension mismatch between A and y")
    return float(np.max(np.abs(a.T @ y))) if a.shape[1] else 0.0
