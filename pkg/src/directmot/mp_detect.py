"""Grid matching pursuit over the steering dictionary.

Scores every grid cell by the residual energy captured by its steering
vector, summed incoherently across tones and snapshots, then greedily
selects the best cell, records per-tone power estimates, and subtracts the
per-tone projections from the residual.  Selected cells are excluded from
later iterations, so the detections are always distinct cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import BirthModel
from .steering import SteeringField, steering_matrix


@dataclass(frozen=True)
class Dictionary:
    """Unit-norm steering vectors at the birth-grid cell centers."""

    grid: BirthModel
    centers: np.ndarray     # (Q, 2)
    atoms: np.ndarray       # (num_tones, M, Q)

    @property
    def num_cells(self) -> int:
        return self.centers.shape[0]


@dataclass(frozen=True)
class Detection:
    cell: int
    center: np.ndarray      # (range, depth)
    powers: np.ndarray      # per-tone power estimate
    score: float


def build_dictionary(field: SteeringField, grid: BirthModel) -> Dictionary:
    """Evaluate the field at every cell center for every tone."""
    centers = grid.cell_centers()
    if centers.shape[0] == 0:
        raise ValueError("grid has no cells")
    atoms = np.stack(
        [steering_matrix(field, centers, i) for i in range(field.num_tones)]
    )
    return Dictionary(grid=grid, centers=centers, atoms=atoms)


def matching_pursuit(frame, dictionary: Dictionary, num_detections: int) -> list:
    """Greedy residual pursuit returning ``num_detections`` cells in selection order.

    Ties are broken toward the lowest cell index.  Raises when more
    detections are requested than the grid has cells.
    """
    if num_detections < 1:
        raise ValueError("num_detections must be at least 1")
    if num_detections > dictionary.num_cells:
        raise ValueError(
            f"requested {num_detections} detections from a "
            f"{dictionary.num_cells}-cell grid"
        )
    data = frame.data if hasattr(frame, "data") else np.asarray(frame, dtype=complex)
    n_tones, n_elem, n_snap = data.shape
    if n_tones != dictionary.atoms.shape[0] or n_elem != dictionary.atoms.shape[1]:
        raise ValueError("frame dimensions do not match the dictionary")

    # corr[i] holds a_q^H r_j for every cell and snapshot of tone i;
    # subtracting the projection onto atom b updates it algebraically:
    # corr <- corr - (A^H a_b) (a_b^H r)
    corr = [dictionary.atoms[i].conj().T @ data[i] for i in range(n_tones)]
    available = np.ones(dictionary.num_cells, dtype=bool)
    detections = []
    for _ in range(num_detections):
        energy = np.zeros((n_tones, dictionary.num_cells))
        for i in range(n_tones):
            energy[i] = np.sum(np.abs(corr[i]) ** 2, axis=1)
        scores = energy.sum(axis=0)
        scores[~available] = -np.inf
        best = int(np.argmax(scores))
        available[best] = False
        detections.append(Detection(
            cell=best,
            center=dictionary.centers[best].copy(),
            powers=energy[:, best] / n_snap,
            score=float(scores[best]),
        ))
        for i in range(n_tones):
            gram_col = dictionary.atoms[i].conj().T @ dictionary.atoms[i, :, best]
            corr[i] = corr[i] - np.outer(gram_col, corr[i][best])
    return detections
