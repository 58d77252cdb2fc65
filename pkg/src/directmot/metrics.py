"""GOSPA evaluation of estimated position sets against ground truth.

The metric solves an optimal assignment between truth and estimate
positions with Euclidean distances truncated at the cutoff, then adds a
cardinality penalty of cutoff^p / alpha per unassigned point.  Component
values (localization, missed, false) are reported in the p-th power
domain; at order p = 1 and alpha = 2 they sum exactly to the total.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist


@dataclass(frozen=True)
class GospaParams:
    cutoff: float = 200.0
    order: float = 1.0
    alpha: float = 2.0

    def __post_init__(self):
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")
        if not self.order >= 1:
            raise ValueError("order must be at least 1")
        if not 0 < self.alpha <= 2:
            raise ValueError("alpha must lie in (0, 2]")


@dataclass(frozen=True)
class GospaResult:
    total: float
    localization: float
    missed: float
    false_alarm: float


def _as_positions(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        return np.empty((0, 2))
    arr = np.atleast_2d(arr)
    if not np.all(np.isfinite(arr)):
        raise ValueError("positions must be finite")
    return arr


def gospa(truth, estimates, params: GospaParams) -> GospaResult:
    """GOSPA distance between two position sets.

    Positions are (n, 2) arrays of (range, depth); rows are unordered.
    """
    truth = _as_positions(truth)
    est = _as_positions(estimates)
    c_p = params.cutoff ** params.order
    miss_cost = c_p / params.alpha

    pair_costs = []
    n_assigned = 0
    if truth.shape[0] > 0 and est.shape[0] > 0:
        cost = np.minimum(cdist(truth, est), params.cutoff) ** params.order
        rows, cols = linear_sum_assignment(cost)
        for r, q in zip(rows, cols):
            # pairs at the cutoff count as one missed plus one false target
            if cost[r, q] < c_p:
                pair_costs.append(cost[r, q])
                n_assigned += 1
    n_missed = truth.shape[0] - n_assigned
    n_false = est.shape[0] - n_assigned
    localization = math.fsum(pair_costs)
    missed = miss_cost * n_missed
    false_alarm = miss_cost * n_false
    total = math.fsum([localization, missed, false_alarm]) ** (1.0 / params.order)
    return GospaResult(total=total, localization=localization,
                       missed=missed, false_alarm=false_alarm)


def gospa_series(truth_per_step, estimates_per_step, params: GospaParams) -> list:
    """Per-step GOSPA over aligned truth/estimate sequences."""
    if len(truth_per_step) != len(estimates_per_step):
        raise ValueError("truth and estimate sequences differ in length")
    return [gospa(t, e, params) for t, e in zip(truth_per_step, estimates_per_step)]


def mean_gospa(series: list) -> GospaResult:
    """Arithmetic mean of each component across a series."""
    n = len(series)
    if n == 0:
        raise ValueError("empty series")
    return GospaResult(
        total=math.fsum(r.total for r in series) / n,
        localization=math.fsum(r.localization for r in series) / n,
        missed=math.fsum(r.missed for r in series) / n,
        false_alarm=math.fsum(r.false_alarm for r in series) / n,
    )


GOSPA_CSV_HEADER = ("step", "total", "localization", "missed", "false")


def write_series_csv(path, series: list) -> None:
    """Write one row per step with the stable column order."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(GOSPA_CSV_HEADER)
        for step, res in enumerate(series):
            writer.writerow([step, repr(res.total), repr(res.localization),
                             repr(res.missed), repr(res.false_alarm)])
