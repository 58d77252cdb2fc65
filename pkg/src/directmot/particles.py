"""Shared weighted-particle utilities.

Weight arithmetic is done in the log domain with max-subtraction so that
adding any constant to all log-weights leaves the normalized weights
unchanged.
"""

from __future__ import annotations

import numpy as np


class WeightUnderflowError(RuntimeError):
    """All particle weights vanished; signals model mismatch upstream."""


def normalize_log_weights(log_weights: np.ndarray) -> tuple[np.ndarray, float]:
    """Return normalized weights and the log normalizer log(sum exp).

    Raises :class:`WeightUnderflowError` when every entry is -inf or NaN.
    """
    logw = np.asarray(log_weights, dtype=float)
    if logw.size == 0:
        raise ValueError("empty weight vector")
    top = np.max(logw)
    if not np.isfinite(top):
        raise WeightUnderflowError("all log-weights are -inf or NaN")
    shifted = np.exp(logw - top)
    total = shifted.sum()
    return shifted / total, float(top + np.log(total))


def effective_sample_size(weights: np.ndarray) -> float:
    weights = np.asarray(weights, dtype=float)
    return float(1.0 / np.sum(weights ** 2))


def systematic_resample(weights: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Systematic resampling: indices drawn with one uniform offset.

    Guarantees each index appears between floor(count * w) and
    ceil(count * w) times.
    """
    weights = np.asarray(weights, dtype=float)
    if count < 1:
        raise ValueError("count must be at least 1")
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0  # guard accumulated rounding
    points = (rng.random() + np.arange(count)) / count
    return np.searchsorted(cdf, points, side="right").clip(0, weights.size - 1)


def weighted_mean(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted average over the leading axis of ``values``."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    return np.tensordot(weights, values, axes=(0, 0))
