"""Zero-mean complex Gaussian snapshot likelihoods.

A snapshot block Z (M x J complex) is scored against a Hermitian
positive-definite covariance

    C = sum_n w_n * g_n * a_n a_n^H + eta * I

built from weighted rank-one contributions plus a white noise floor.  The
log-likelihood of the block is

    sum_j [ -M*ln(pi) - ln det C - z_j^H C^{-1} z_j ].

Per-particle scoring avoids refactorizing C: with u = C^{-1} a and
q = a^H u, adding g * a a^H changes the block log-likelihood by

    delta = -J * ln(1 + g*q) + g / (1 + g*q) * sum_j |u^H z_j|^2,

which is exact and costs O(M^2 + M*J) per query against a cached
triangular factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular

_LOG_PI = float(np.log(np.pi))


@dataclass(frozen=True)
class CovarianceModel:
    """Hermitian PD covariance with its lower Cholesky factor cached."""

    matrix: np.ndarray
    chol: np.ndarray
    log_det: float

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "CovarianceModel":
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("covariance must be a square matrix")
        if not np.all(np.isfinite(matrix.view(float))):
            raise ValueError("covariance has non-finite entries")
        scale = max(np.abs(matrix).max(), 1.0)
        if np.abs(matrix - matrix.conj().T).max() > 1e-10 * scale:
            raise ValueError("covariance is not Hermitian")
        try:
            factor = cholesky(matrix, lower=True)
        except np.linalg.LinAlgError as err:
            raise ValueError("covariance is not positive definite") from err
        log_det = 2.0 * float(np.sum(np.log(np.real(np.diag(factor)))))
        return cls(matrix=matrix, chol=factor, log_det=log_det)

    @property
    def num_elements(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SufficientStats:
    """Whitened snapshots L^{-1} Z for one tone's block under one model."""

    whitened: np.ndarray
    num_snapshots: int


def assemble_covariance(contributors, noise_power: float, num_elements: int) -> CovarianceModel:
    """Build C = sum (weight * power) a a^H + noise_power * I.

    ``contributors`` is an iterable of (weight, power, steering_vector)
    with weight in [0, 1] and power >= 0; weight generalizes a binary
    existence indicator to its expectation.
    """
    if not (noise_power > 0 and np.isfinite(noise_power)):
        raise ValueError("noise_power must be positive and finite")
    cov = noise_power * np.eye(num_elements, dtype=complex)
    for weight, power, atom in contributors:
        if not (np.isfinite(weight) and np.isfinite(power)):
            raise ValueError("contributor weight/power must be finite")
        if not 0.0 <= weight <= 1.0:
            raise ValueError("contributor weight must lie in [0, 1]")
        if power < 0:
            raise ValueError("contributor power must be non-negative")
        scale = weight * power
        if scale == 0.0:
            continue
        atom = np.asarray(atom, dtype=complex)
        if atom.shape != (num_elements,):
            raise ValueError("steering vector dimension mismatch")
        if not np.all(np.isfinite(atom.view(float))):
            raise ValueError("steering vector has non-finite entries")
        cov += scale * np.outer(atom, atom.conj())
    return CovarianceModel.from_matrix(cov)


def sufficient_stats(model: CovarianceModel, block: np.ndarray) -> SufficientStats:
    """Whiten a snapshot block against the model's triangular factor."""
    block = np.asarray(block, dtype=complex)
    if block.ndim == 1:
        block = block[:, None]
    if block.shape[0] != model.num_elements:
        raise ValueError("snapshot dimension does not match covariance")
    whitened = solve_triangular(model.chol, block, lower=True)
    return SufficientStats(whitened=whitened, num_snapshots=block.shape[1])


def log_likelihood(block: np.ndarray, model: CovarianceModel) -> float:
    """Joint log-likelihood of all snapshots in the block under the model."""
    stats = sufficient_stats(model, block)
    quad = float(np.sum(np.abs(stats.whitened) ** 2))
    j = stats.num_snapshots
    m = model.num_elements
    return -j * (m * _LOG_PI + model.log_det) - quad


def rank1_delta_loglik_batch(
    model: CovarianceModel,
    stats: SufficientStats,
    atoms: np.ndarray,
    powers: np.ndarray,
) -> np.ndarray:
    """Log-likelihood change from adding g_p * a_p a_p^H, per column.

    ``atoms`` is (M, P) and ``powers`` is (P,); returns (P,) deltas
    relative to the base model, each exact up to floating point.
    """
    atoms = np.asarray(atoms, dtype=complex)
    if atoms.ndim == 1:
        atoms = atoms[:, None]
    powers = np.atleast_1d(np.asarray(powers, dtype=float))
    if np.any(powers < 0):
        raise ValueError("powers must be non-negative")
    white_atoms = solve_triangular(model.chol, atoms, lower=True)   # L^{-1} A
    q = np.sum(np.abs(white_atoms) ** 2, axis=0)                    # a^H C^{-1} a
    cross = white_atoms.conj().T @ stats.whitened                   # (P, J)
    energy = np.sum(np.abs(cross) ** 2, axis=1)                     # sum_j |u^H z_j|^2
    denom = 1.0 + powers * q
    if np.any(denom <= 0):
        raise ValueError("1 + power * quadratic form is non-positive; corrupted inputs")
    return -stats.num_snapshots * np.log(denom) + powers / denom * energy


def rank1_delta_loglik(
    model: CovarianceModel,
    stats: SufficientStats,
    atom: np.ndarray,
    power: float,
) -> float:
    """Scalar form of :func:`rank1_delta_loglik_batch` for one steering vector."""
    return float(rank1_delta_loglik_batch(model, stats, atom, np.array([power]))[0])
