"""Detect-then-track reference: point measurements with association BP.

Matching pursuit reduces each frame to range-depth point measurements.
Objects are then tracked with the standard Bernoulli formulation: a
Gaussian point-measurement likelihood, iterated belief propagation over
the object-measurement association variables, measurement-driven births,
and the same motion, survival, birth-grid, and threshold machinery as the
direct tracker.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .dynamics import BirthModel, MotionModel, predict_kinematic, transition_existence
from .mp_detect import build_dictionary, matching_pursuit
from .particles import systematic_resample
from .steering import SteeringField
from .tracks import PoBelief, declare_and_prune_beliefs

_EDGE_MARGIN = 1e-6


@dataclass(frozen=True)
class PointMeasurement:
    range_m: float
    depth_m: float
    score: float


@dataclass(frozen=True)
class BaselineConfig:
    motion: MotionModel
    birth: BirthModel
    survival: float = 0.95
    declare_threshold: float = 0.5
    prune_threshold: float = 1e-2
    detection_prob: float = 0.9
    clutter_mean: float = 2.0
    sigma_range: float = 12.5
    sigma_depth: float = 1.0
    num_particles: int = 1000
    num_detections: int = 10
    score_threshold: float = 0.0
    assoc_iterations: int = 50
    assoc_tolerance: float = 1e-6

    def __post_init__(self):
        if not 0 < self.detection_prob <= 1:
            raise ValueError("detection_prob must lie in (0, 1]")
        if self.clutter_mean < 0:
            raise ValueError("clutter_mean must be non-negative")
        if self.sigma_range <= 0 or self.sigma_depth <= 0:
            raise ValueError("measurement noise deviations must be positive")

    @property
    def roi_area(self) -> float:
        return ((self.birth.range_lim[1] - self.birth.range_lim[0])
                * (self.birth.depth_lim[1] - self.birth.depth_lim[0]))

    @property
    def clutter_density(self) -> float:
        # floor keeps likelihood ratios finite when clutter is disabled
        return max(self.clutter_mean / self.roi_area, np.finfo(float).tiny)


@dataclass
class BaselineState:
    step_index: int
    beliefs: list
    rng: np.random.Generator
    next_label: int
    diagnostics: dict = dataclass_field(default_factory=dict)


def _certain_share(values: np.ndarray) -> np.ndarray:
    """shares v_i / (1 + sum v) with infinite entries taking the whole mass."""
    if np.any(np.isinf(values)):
        certain = np.isinf(values)
        return certain / certain.sum()
    return values / (1.0 + values.sum())


def bp_association(q_missed: np.ndarray, q_matrix: np.ndarray,
                   num_iterations: int, tolerance: float = 1e-6):
    """Iterate object/measurement association messages to a fixed point.

    ``q_missed[n]`` is the no-detection mass of object n and
    ``q_matrix[n, m]`` the mass of pairing it with measurement m (already
    scaled by the clutter density).  Returns the object-side marginals
    (N, M+1) with column 0 the no-detection hypothesis, the
    measurement-side marginals (M, N+1) with column 0 clutter-or-new, and
    the final object-to-measurement messages (N, M).
    """
    n_obj, n_meas = q_matrix.shape
    phi = np.ones((n_meas, n_obj))
    nu = np.zeros((n_obj, n_meas))
    for _ in range(max(num_iterations, 1)):
        scaled = q_matrix * phi.T
        denom = q_missed[:, None] + scaled.sum(axis=1, keepdims=True) - scaled
        with np.errstate(divide="ignore", invalid="ignore"):
            nu = np.where(q_matrix > 0, q_matrix / denom, 0.0)
        total = 1.0 + nu.sum(axis=0)
        new_phi = 1.0 / (total[:, None] - nu.T)
        if np.max(np.abs(new_phi - phi)) < tolerance:
            phi = new_phi
            break
        phi = new_phi

    obj_marginals = np.zeros((n_obj, n_meas + 1))
    for n in range(n_obj):
        row = np.concatenate(([q_missed[n]], q_matrix[n] * phi[:, n]))
        obj_marginals[n] = row / row.sum()
    meas_marginals = np.zeros((n_meas, n_obj + 1))
    for m in range(n_meas):
        shares = _certain_share(nu[:, m])
        meas_marginals[m, 1:] = shares
        meas_marginals[m, 0] = 1.0 - shares.sum()
    return obj_marginals, meas_marginals, nu, phi


class BaselineTracker:
    """Conventional tracker over the same field and grid as the direct one."""

    def __init__(self, field: SteeringField, config: BaselineConfig):
        self.field = field
        self.config = config
        self.dictionary = build_dictionary(field, config.birth)

    # ------------------------------------------------------------------
    def init(self, seed: int) -> BaselineState:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(3,)))
        return BaselineState(step_index=0, beliefs=[], rng=rng, next_label=0)

    # ------------------------------------------------------------------
    def detect(self, frame) -> list:
        """Matching-pursuit point measurements above the score threshold."""
        detections = matching_pursuit(frame, self.dictionary, self.config.num_detections)
        return [
            PointMeasurement(range_m=d.center[0], depth_m=d.center[1], score=d.score)
            for d in detections if d.score > self.config.score_threshold
        ]

    # ------------------------------------------------------------------
    def _measurement_likelihoods(self, belief: PoBelief, points: np.ndarray) -> np.ndarray:
        """Gaussian density of each measurement at each particle, (N, M)."""
        cfg = self.config
        d_r = (points[None, :, 0] - belief.kinematic[:, None, 0]) / cfg.sigma_range
        d_z = (points[None, :, 1] - belief.kinematic[:, None, 1]) / cfg.sigma_depth
        norm = 2.0 * np.pi * cfg.sigma_range * cfg.sigma_depth
        return np.exp(-0.5 * (d_r ** 2 + d_z ** 2)) / norm

    def track_step(self, state: BaselineState, measurements: list):
        """Predict, associate, update, spawn, and declare for one step."""
        cfg = self.config
        rng = state.rng
        for belief in state.beliefs:
            belief.kinematic = predict_kinematic(belief.kinematic, cfg.motion, rng)
            belief.existence = transition_existence(belief.existence, cfg.survival)
            inside = cfg.birth.contains(belief.kinematic[:, :2])
            if not np.all(inside):
                weights = np.where(inside, belief.weights, 0.0)
                total = weights.sum()
                if total > 0:
                    belief.weights = weights / total
                else:
                    belief.existence = 0.0

        points = np.array([[m.range_m, m.depth_m] for m in measurements]) \
            if measurements else np.empty((0, 2))
        n_meas = points.shape[0]
        n_obj = len(state.beliefs)
        clutter = cfg.clutter_density

        ratios = []     # per object: (N, M) likelihood over clutter density
        q_matrix = np.zeros((n_obj, n_meas))
        q_missed = np.zeros(n_obj)
        for n, belief in enumerate(state.beliefs):
            like = self._measurement_likelihoods(belief, points) if n_meas else \
                np.zeros((belief.num_particles, 0))
            ratio = like / clutter
            ratios.append(ratio)
            q_missed[n] = 1.0 - belief.existence * cfg.detection_prob
            if n_meas:
                q_matrix[n] = (belief.existence * cfg.detection_prob
                               * (belief.weights @ ratio))

        if n_obj:
            _, _, nu, phi = bp_association(q_missed, q_matrix,
                                           cfg.assoc_iterations, cfg.assoc_tolerance)
            for n, belief in enumerate(state.beliefs):
                per_particle = np.full(belief.num_particles, 1.0 - cfg.detection_prob)
                if n_meas:
                    per_particle = per_particle + cfg.detection_prob * (ratios[n] @ phi[:, n])
                mean_like = float(belief.weights @ per_particle)
                prior = belief.existence
                belief.existence = (prior * mean_like
                                    / (prior * mean_like + (1.0 - prior)))
                weights = belief.weights * per_particle
                total = weights.sum()
                if total > 0:
                    belief.weights = weights / total
                idx = systematic_resample(belief.weights, belief.num_particles, rng)
                belief.kinematic = belief.kinematic[idx]
                belief.weights = np.full(belief.num_particles, 1.0 / belief.num_particles)
            unassoc = np.array([1.0 - _certain_share(nu[:, m]).sum()
                                for m in range(n_meas)])
        else:
            unassoc = np.ones(n_meas)

        birth_ratio = (cfg.birth.mean_births * cfg.detection_prob
                       / (cfg.birth.mean_births * cfg.detection_prob + cfg.clutter_mean)
                       if cfg.clutter_mean > 0 else 1.0)
        for m, meas in enumerate(measurements):
            existence = float(birth_ratio * unassoc[m])
            if existence <= 0:
                continue
            n = cfg.num_particles
            kin = np.column_stack([
                meas.range_m + cfg.sigma_range * rng.standard_normal(n),
                meas.depth_m + cfg.sigma_depth * rng.standard_normal(n),
                rng.uniform(*cfg.birth.range_rate_lim, n),
                rng.uniform(*cfg.birth.depth_rate_lim, n),
            ])
            kin[:, 0] = np.clip(kin[:, 0], cfg.birth.range_lim[0] + _EDGE_MARGIN,
                                cfg.birth.range_lim[1] - _EDGE_MARGIN)
            kin[:, 1] = np.clip(kin[:, 1], cfg.birth.depth_lim[0] + _EDGE_MARGIN,
                                cfg.birth.depth_lim[1] - _EDGE_MARGIN)
            state.beliefs.append(PoBelief(
                label=state.next_label,
                kinematic=kin,
                weights=np.full(n, 1.0 / n),
                existence=existence,
            ))
            state.next_label += 1

        state.beliefs, estimates = declare_and_prune_beliefs(
            state.beliefs, cfg.declare_threshold, cfg.prune_threshold,
            self.field.num_tones)
        state.diagnostics = {
            "measurements": n_meas,
            "object_count": len(state.beliefs),
            "declared": len(estimates),
        }
        state.step_index += 1
        return state, estimates

    # ------------------------------------------------------------------
    def step(self, state: BaselineState, frame):
        """Detect on the raw frame, then run the point-measurement update."""
        return self.track_step(state, self.detect(frame))


def calibrate_score_threshold(dictionary, noise_power, snapshots: int,
                              clutter_mean: float, num_detections: int = 10,
                              num_frames: int = 30, seed: int = 0) -> float:
    """Score threshold whose noise-only pass rate is about ``clutter_mean``.

    Runs matching pursuit on synthetic noise-only frames and returns the
    cut that keeps on average ``clutter_mean`` detections per frame.
    Deterministic given the seed.
    """
    n_tones = dictionary.atoms.shape[0]
    n_elem = dictionary.atoms.shape[1]
    noise = np.broadcast_to(np.asarray(noise_power, dtype=float), (n_tones,))
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(4,)))
    scores = []
    for _ in range(num_frames):
        scale = np.sqrt(noise[:, None, None] / 2.0)
        data = scale * (rng.standard_normal((n_tones, n_elem, snapshots))
                        + 1j * rng.standard_normal((n_tones, n_elem, snapshots)))
        for det in matching_pursuit(data, dictionary, num_detections):
            scores.append(det.score)
    scores = np.sort(scores)[::-1]
    keep = int(round(clutter_mean * num_frames))
    if keep <= 0:
        return float(scores[0] * (1.0 + 1e-9))
    if keep >= scores.size:
        return 0.0
    return float(0.5 * (scores[keep - 1] + scores[keep]))
