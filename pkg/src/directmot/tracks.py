"""Track beliefs and estimate records shared by both trackers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .particles import weighted_mean


@dataclass
class PoBelief:
    """Weighted particle belief over one potential object.

    ``powers`` is (N, num_tones) for the direct tracker and None for the
    point-measurement tracker, which does not model transmit power.
    """

    label: int
    kinematic: np.ndarray           # (N, 4)
    weights: np.ndarray             # (N,) normalized
    existence: float
    powers: np.ndarray | None = None

    @property
    def num_particles(self) -> int:
        return self.kinematic.shape[0]

    def mean_state(self) -> np.ndarray:
        return weighted_mean(self.kinematic, self.weights)

    def mean_powers(self) -> np.ndarray | None:
        if self.powers is None:
            return None
        return weighted_mean(self.powers, self.weights)


@dataclass
class NoiseBelief:
    """Independent weighted particle sets over each tone's noise power."""

    samples: np.ndarray             # (num_tones, N)
    weights: np.ndarray             # (num_tones, N) normalized per tone

    def mean(self) -> np.ndarray:
        return np.sum(self.samples * self.weights, axis=1)


@dataclass(frozen=True)
class Estimate:
    """Posterior-mean summary of one potential object at one step."""

    label: int
    declared: bool
    state: np.ndarray               # (4,) MMSE kinematic state
    powers: np.ndarray              # (num_tones,) MMSE transmit power
    existence: float


def declare_and_prune_beliefs(beliefs, declare_threshold, prune_threshold, num_tones):
    """Emit estimates for declared objects and drop the near-dead ones.

    Declaration requires existence strictly above the threshold; pruning
    removes beliefs strictly below theirs.
    """
    estimates = []
    kept = []
    for belief in beliefs:
        if belief.existence > declare_threshold:
            powers = belief.mean_powers()
            estimates.append(Estimate(
                label=belief.label,
                declared=True,
                state=belief.mean_state(),
                powers=np.zeros(num_tones) if powers is None else powers,
                existence=belief.existence,
            ))
        if belief.existence >= prune_threshold:
            kept.append(belief)
    return kept, estimates
