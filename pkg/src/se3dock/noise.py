"""Gaussian uncertainty defined in the tangent space at the identity of SE(3).

A draw ``m ~ N(0, Sigma)`` is pushed to the group with ``exp`` and applied to a
configuration by left multiplication, so perturbed poses stay on the manifold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from .liegroup import Pose, exp_se3, log_se3

DEFAULT_COVARIANCE = np.diag([0.01, 0.01, 0.01, 0.05, 0.05, 0.05])


class CholeskyFailure(np.linalg.LinAlgError):
    pass


def psd_factor(cov: np.ndarray) -> np.ndarray:
    """Pivoted Cholesky factor ``F`` with ``F F^T = cov`` (rank-deficient allowed)."""
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (6, 6):
        raise CholeskyFailure("covariance must be 6x6")
    if not np.all(np.isfinite(cov)):
        raise CholeskyFailure("covariance has non-finite entries")
    if np.max(np.abs(cov - cov.T)) > 1e-12:
        raise CholeskyFailure("covariance is not symmetric")
    scale = max(float(np.max(np.abs(cov))), 1e-300)
    if np.min(np.linalg.eigvalsh(cov)) < -1e-12 * scale:
        raise CholeskyFailure("covariance is not positive semidefinite")
    if not np.any(cov):
        return np.zeros((6, 6))
    c, piv, rank, info = lapack.dpstrf(cov, lower=1, tol=-1.0)
    if info < 0:
        raise CholeskyFailure(f"dpstrf failed with info={info}")
    L = np.tril(c)
    L[:, rank:] = 0.0
    F = np.zeros((6, 6))
    F[piv - 1, :] = L
    return F


@dataclass(frozen=True)
class TangentNoiseModel:
    covariance: np.ndarray = field(default_factory=lambda: DEFAULT_COVARIANCE.copy())
    seed: int = 0
    factor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "covariance", np.asarray(self.covariance, dtype=float))
        object.__setattr__(self, "factor", psd_factor(self.covariance))

    def stream(self, index: int = 0) -> "NoiseStream":
        return NoiseStream(self, index)


class NoiseStream:
    """Reproducible sequence of tangent draws; one stream per simulation."""

    def __init__(self, model: TangentNoiseModel, index: int = 0):
        self.model = model
        self.index = index
        seq = np.random.SeedSequence(model.seed, spawn_key=(index,))
        self._rng = np.random.Generator(np.random.PCG64(seq))
        self.draws = 0

    def sample(self) -> np.ndarray:
        z = self._rng.standard_normal(6)
        self.draws += 1
        return self.model.factor @ z

    def samples(self, n: int) -> np.ndarray:
        z = self._rng.standard_normal((n, 6))
        self.draws += n
        return z @ self.model.factor.T


def perturb(x: Pose | np.ndarray, m: np.ndarray) -> Pose | np.ndarray:
    """Left-multiply by ``exp(m)``.

    A :class:`Pose` is perturbed directly. A 6-vector is read as the error
    coordinate ``rho = log(h)``; the result is ``log(exp(m) exp(rho))``.
    """
    if isinstance(x, Pose):
        if not np.any(m):
            return x
        return exp_se3(m) @ x
    if not np.any(m):
        return np.array(x, dtype=float)
    return log_se3(exp_se3(m) @ exp_se3(x))
