"""Direct tracker: particle belief propagation on raw snapshot blocks.

Each potential object carries joint particles over (kinematic state,
per-tone transmit power) plus a scalar existence probability; per-tone
noise powers carry their own particle sets.  A step runs

    predict -> birth -> update -> declare_and_prune.

The measurement update iterates a plug-in scheme: each object is scored
against an interference covariance assembled from every *other* object's
posterior-expected signal covariance (particle average of gamma * a a^H,
scaled by existence), which keeps the object's own exists/not-exists
Bayes factor exact while the surrounding scene enters through its
expectation.  Averaging over the particle cloud rather than plugging in a
point estimate matters at high SNR: the residual of a point plug-in is
coherent and would spawn duplicate objects on the sidelobes.  Objects are
swept sequentially within an iteration so later updates see earlier ones'
refreshed plug-ins, and all weight arithmetic stays in the log domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .dynamics import (
    SMOOTH,
    BirthModel,
    GammaChain,
    MotionModel,
    birth_cells,
    predict_kinematic,
    transition_existence,
    transition_power,
)
from .likelihood import CovarianceModel, rank1_delta_loglik_batch, sufficient_stats
from .mp_detect import build_dictionary, matching_pursuit
from .particles import (
    WeightUnderflowError,
    effective_sample_size,
    normalize_log_weights,
    systematic_resample,
)
from .steering import SteeringField, steering_matrix
from .tracks import Estimate, NoiseBelief, PoBelief, declare_and_prune_beliefs

RESAMPLE_ALWAYS = "always"
RESAMPLE_ESS = "ess"
RESAMPLE_NEVER = "never"

# particles clamped back into the ROI keep a strictly valid field evaluation
_EDGE_MARGIN = 1e-6


@dataclass(frozen=True)
class DirectTrackerConfig:
    motion: MotionModel
    birth: BirthModel
    power_chain: GammaChain = GammaChain(1e4, kind=SMOOTH)
    noise_chain: GammaChain = GammaChain(1e2, kind=SMOOTH)
    survival: float = 0.95
    declare_threshold: float = 0.5
    prune_threshold: float = 1e-2
    num_particles: int = 1000
    num_noise_particles: int = 200
    bp_iterations: int = 3
    mp_seeds: int = 10
    noise_prior_max: float = 2e-4
    resample_policy: str = RESAMPLE_ALWAYS
    ess_fraction: float = 0.5
    birth_coherence_gate: float = 0.3

    def __post_init__(self):
        if not 0 < self.declare_threshold < 1 or not 0 < self.prune_threshold < 1:
            raise ValueError("thresholds must lie in (0, 1)")
        if not 0 <= self.survival <= 1:
            raise ValueError("survival must lie in [0, 1]")
        if min(self.num_particles, self.num_noise_particles, self.bp_iterations,
               self.mp_seeds) < 1:
            raise ValueError("counts must be at least 1")
        if self.resample_policy not in (RESAMPLE_ALWAYS, RESAMPLE_ESS, RESAMPLE_NEVER):
            raise ValueError(f"unknown resample policy: {self.resample_policy!r}")
        if not self.noise_prior_max > 0:
            raise ValueError("noise_prior_max must be positive")


@dataclass
class TrackerState:
    step_index: int
    beliefs: list
    noise: NoiseBelief
    rng: np.random.Generator
    next_label: int
    diagnostics: dict = dataclass_field(default_factory=dict)


def _existence_posterior(prior: float, log_bayes: float) -> float:
    if prior <= 0.0:
        return 0.0
    if prior >= 1.0:
        return 1.0
    log_num = np.log(prior) + log_bayes
    return float(np.exp(log_num - np.logaddexp(log_num, np.log1p(-prior))))


class DirectTracker:
    """Sequential tracker over a fixed field and configuration.

    A tracker instance is stateless across runs; all mutable quantities
    live in the :class:`TrackerState` passed through the step methods.
    One state must not be advanced concurrently.
    """

    def __init__(self, field: SteeringField, config: DirectTrackerConfig):
        self.field = field
        self.config = config
        self.dictionary = build_dictionary(field, config.birth)
        self.birth_cells = birth_cells(config.birth)

    # ------------------------------------------------------------------
    def init(self, seed: int) -> TrackerState:
        """Fresh state: no objects, noise particles from the uniform prior."""
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2,)))
        n_tones = self.field.num_tones
        n_eta = self.config.num_noise_particles
        samples = rng.uniform(0.0, self.config.noise_prior_max, size=(n_tones, n_eta))
        weights = np.full((n_tones, n_eta), 1.0 / n_eta)
        return TrackerState(
            step_index=0,
            beliefs=[],
            noise=NoiseBelief(samples=samples, weights=weights),
            rng=rng,
            next_label=0,
        )

    # ------------------------------------------------------------------
    def predict(self, state: TrackerState) -> TrackerState:
        """Push every belief through the transition models."""
        cfg = self.config
        rng = state.rng
        for belief in state.beliefs:
            belief.kinematic = predict_kinematic(belief.kinematic, cfg.motion, rng)
            belief.powers = transition_power(belief.powers, cfg.power_chain, rng)
            belief.existence = transition_existence(belief.existence, cfg.survival)
            inside = cfg.birth.contains(belief.kinematic[:, :2])
            if not np.all(inside):
                self._retire_escaped(belief, inside)
        state.noise.samples = transition_power(state.noise.samples, cfg.noise_chain, rng)
        return state

    def _clip_to_roi(self, kinematic: np.ndarray) -> np.ndarray:
        """Clamp positions just inside the ROI box (keeps the field valid)."""
        birth = self.config.birth
        kinematic[:, 0] = np.clip(
            kinematic[:, 0],
            birth.range_lim[0] + _EDGE_MARGIN, birth.range_lim[1] - _EDGE_MARGIN)
        kinematic[:, 1] = np.clip(
            kinematic[:, 1],
            birth.depth_lim[0] + _EDGE_MARGIN, birth.depth_lim[1] - _EDGE_MARGIN)
        return kinematic

    def _retire_escaped(self, belief: PoBelief, inside: np.ndarray) -> None:
        """Zero out particles that left the ROI and clamp them back inside."""
        belief.kinematic = self._clip_to_roi(belief.kinematic)
        weights = np.where(inside, belief.weights, 0.0)
        total = weights.sum()
        if total > 0:
            belief.weights = weights / total
        else:
            belief.weights = np.full(belief.num_particles, 1.0 / belief.num_particles)
            belief.existence = 0.0

    def _occupied_cells(self, beliefs) -> set:
        """Cells blocked for births around the existing objects.

        Each belief blocks its posterior-mean cell, a small guard
        neighborhood (1 range cell, 2 depth cells) against boundary
        jitter, and every cell whose steering vector is strongly coherent
        with its own (mean squared correlation over tones above the
        ambiguity threshold).  The coherent cells are the object's range
        aliases: energy there cannot be told apart from the object itself,
        so seeding them would only spawn ghosts on plug-in residuals.
        """
        birth = self.config.birth
        occupied = set()
        for belief in beliefs:
            cell = birth.cell_of(belief.mean_state()[:2])
            if cell is None:
                continue
            ri, zi = divmod(cell, birth.num_depth_cells)
            for dr in range(-1, 2):
                for dz in range(-2, 3):
                    r, z = ri + dr, zi + dz
                    if 0 <= r < birth.num_range_cells and 0 <= z < birth.num_depth_cells:
                        occupied.add(r * birth.num_depth_cells + z)
            mean_state = belief.mean_state()[:2]
            coherence = np.zeros(self.dictionary.num_cells)
            for i in range(self.field.num_tones):
                atom = steering_matrix(self.field, mean_state.reshape(1, -1), i)[:, 0]
                coherence += np.abs(self.dictionary.atoms[i].conj().T @ atom) ** 2
            coherence /= self.field.num_tones
            occupied.update(np.flatnonzero(
                coherence > self.config.birth_coherence_gate).tolist())
        return occupied

    # ------------------------------------------------------------------
    def birth(self, state: TrackerState, frame) -> TrackerState:
        """Seed new objects at the best matching-pursuit cells.

        Cells in the guard neighborhood of an existing object's
        posterior-mean position are skipped, so at most one object
        occupies a birth cell.
        """
        cfg = self.config
        rng = state.rng
        detections = matching_pursuit(frame, self.dictionary, cfg.mp_seeds)
        occupied = self._occupied_cells(state.beliefs)
        n_tones = self.field.num_tones
        n = cfg.num_particles
        born = 0
        for det in detections:
            if det.cell in occupied:
                continue
            occupied.add(det.cell)
            (r_lo, r_hi), (z_lo, z_hi) = cfg.birth.cell_bounds(det.cell)
            kin = np.column_stack([
                rng.uniform(r_lo, r_hi, n),
                rng.uniform(z_lo, z_hi, n),
                rng.uniform(*cfg.birth.range_rate_lim, n),
                rng.uniform(*cfg.birth.depth_rate_lim, n),
            ])
            powers = rng.uniform(*cfg.birth.power_lim, size=(n, n_tones))
            state.beliefs.append(PoBelief(
                label=state.next_label,
                kinematic=kin,
                weights=np.full(n, 1.0 / n),
                existence=float(self.birth_cells.birth_prob[det.cell]),
                powers=powers,
            ))
            state.next_label += 1
            born += 1
        state.diagnostics["born"] = born
        return state

    # ------------------------------------------------------------------
    def _particle_atoms(self, beliefs) -> list:
        """Per-tone response vectors of every belief's particles.

        All clouds are stacked into one field evaluation per tone; returns
        ``atoms[n][i]`` of shape (M, N_particles).
        """
        n_tones = self.field.num_tones
        if not beliefs:
            return []
        stacked = np.concatenate([b.kinematic for b in beliefs], axis=0)
        per_tone = [steering_matrix(self.field, stacked, i) for i in range(n_tones)]
        atoms = []
        offset = 0
        for belief in beliefs:
            stop = offset + belief.num_particles
            atoms.append([per_tone[i][:, offset:stop] for i in range(n_tones)])
            offset = stop
        return atoms

    @staticmethod
    def _expected_signal_cov(atoms_i: np.ndarray, weights: np.ndarray,
                             powers_i: np.ndarray) -> np.ndarray:
        """Posterior-expected gamma * a a^H over one particle cloud."""
        scaled = atoms_i * (weights * powers_i)
        cov = scaled @ atoms_i.conj().T
        return 0.5 * (cov + cov.conj().T)

    def update(self, state: TrackerState, frame) -> TrackerState:
        """Iterated plug-in measurement update followed by resampling."""
        cfg = self.config
        data = frame.data
        n_tones = self.field.num_tones
        n_elem = self.field.num_elements
        beliefs = state.beliefs
        underflows = 0

        # particle positions are fixed during the update; evaluate once
        atoms = self._particle_atoms(beliefs)
        with np.errstate(divide="ignore"):
            pred_logw = [np.log(b.weights) for b in beliefs]
        pred_existence = [b.existence for b in beliefs]
        pred_noise_logw = np.log(state.noise.weights)

        cur_weights = [b.weights.copy() for b in beliefs]
        cur_existence = list(pred_existence)
        cur_noise_w = state.noise.weights.copy()
        signal_cov = [
            [self._expected_signal_cov(atoms[n][i], b.weights, b.powers[:, i])
             for i in range(n_tones)]
            for n, b in enumerate(beliefs)
        ]

        eye = np.eye(n_elem)
        for _ in range(cfg.bp_iterations):
            eta_bar = np.sum(state.noise.samples * cur_noise_w, axis=1)
            for n, belief in enumerate(beliefs):
                delta = np.zeros(belief.num_particles)
                for i in range(n_tones):
                    interference = eta_bar[i] * eye
                    for m in range(len(beliefs)):
                        if m != n and cur_existence[m] > 0:
                            interference = interference + cur_existence[m] * signal_cov[m][i]
                    model = CovarianceModel.from_matrix(interference)
                    stats = sufficient_stats(model, data[i])
                    delta += rank1_delta_loglik_batch(
                        model, stats, atoms[n][i], belief.powers[:, i])
                try:
                    weights, log_bayes = normalize_log_weights(pred_logw[n] + delta)
                    cur_existence[n] = _existence_posterior(pred_existence[n], log_bayes)
                except WeightUnderflowError:
                    weights = np.full(belief.num_particles, 1.0 / belief.num_particles)
                    cur_existence[n] = pred_existence[n]
                    underflows += 1
                cur_weights[n] = weights
                signal_cov[n] = [
                    self._expected_signal_cov(atoms[n][i], weights, belief.powers[:, i])
                    for i in range(n_tones)
                ]
            cur_noise_w, noise_underflows = self._reweight_noise(
                state, data, pred_noise_logw, cur_existence, signal_cov)
            underflows += noise_underflows

        for n, belief in enumerate(beliefs):
            belief.weights = cur_weights[n]
            belief.existence = cur_existence[n]
        state.noise.weights = cur_noise_w
        if underflows:
            state.diagnostics["weight_underflows"] = underflows
        self._resample(state)
        return state

    def _reweight_noise(self, state, data, pred_logw, existence, signal_cov):
        """Score each tone's noise particles under the full plug-in covariance.

        Eigendecomposing the object contribution turns every noise
        hypothesis into a diagonal evaluation.
        """
        n_tones, n_elem, n_snap = data.shape
        new_weights = np.empty_like(state.noise.weights)
        underflows = 0
        for i in range(n_tones):
            signal = np.zeros((n_elem, n_elem), dtype=complex)
            for n in range(len(existence)):
                if existence[n] > 0:
                    signal += existence[n] * signal_cov[n][i]
            lam, vecs = np.linalg.eigh(signal)
            lam = np.maximum(lam, 0.0)
            rotated = vecs.conj().T @ data[i]
            energy = np.sum(np.abs(rotated) ** 2, axis=1)
            denom = lam[:, None] + state.noise.samples[i][None, :]
            with np.errstate(divide="ignore"):
                loglik = (-n_snap * np.sum(np.log(denom), axis=0)
                          - np.sum(energy[:, None] / denom, axis=0))
            try:
                new_weights[i], _ = normalize_log_weights(pred_logw[i] + loglik)
            except WeightUnderflowError:
                new_weights[i] = 1.0 / state.noise.weights.shape[1]
                underflows += 1
        return new_weights, underflows

    def _resample(self, state: TrackerState) -> None:
        """Systematic resampling with kernel roughening.

        The measurement is often sharp enough that a handful of particles
        carry all the weight; bare resampling would then collapse the
        unobservable components (the rates, on a first sighting) to
        whatever those few particles happened to hold.  Jittering the
        resampled cloud with a Silverman-bandwidth Gaussian kernel keeps
        those marginals explorable and anneals away as the posterior
        tightens.
        """
        cfg = self.config
        if cfg.resample_policy == RESAMPLE_NEVER:
            return
        rng = state.rng
        for belief in state.beliefs:
            n = belief.num_particles
            if (cfg.resample_policy == RESAMPLE_ESS
                    and effective_sample_size(belief.weights) >= cfg.ess_fraction * n):
                continue
            joint = np.hstack([belief.kinematic, belief.powers])
            mean = belief.weights @ joint
            var = belief.weights @ (joint - mean) ** 2
            dims = joint.shape[1]
            bandwidth = (4.0 / (dims + 2.0)) ** (1.0 / (dims + 4.0)) * n ** (-1.0 / (dims + 4.0))
            idx = systematic_resample(belief.weights, n, rng)
            joint = joint[idx] + bandwidth * np.sqrt(var) * rng.standard_normal((n, dims))
            belief.kinematic = self._clip_to_roi(joint[:, :4])
            belief.powers = np.maximum(joint[:, 4:], 0.0)
            belief.weights = np.full(n, 1.0 / n)
        n_eta = cfg.num_noise_particles
        for i in range(self.field.num_tones):
            if (cfg.resample_policy == RESAMPLE_ESS
                    and effective_sample_size(state.noise.weights[i]) >= cfg.ess_fraction * n_eta):
                continue
            idx = systematic_resample(state.noise.weights[i], n_eta, rng)
            state.noise.samples[i] = state.noise.samples[i][idx]
            state.noise.weights[i] = 1.0 / n_eta

    # ------------------------------------------------------------------
    def declare_and_prune(self, state: TrackerState):
        cfg = self.config
        before = len(state.beliefs)
        state.beliefs, estimates = declare_and_prune_beliefs(
            state.beliefs, cfg.declare_threshold, cfg.prune_threshold,
            self.field.num_tones)
        state.diagnostics["pruned"] = before - len(state.beliefs)
        state.diagnostics["object_count"] = len(state.beliefs)
        state.diagnostics["declared"] = len(estimates)
        return state, estimates

    # ------------------------------------------------------------------
    def step(self, state: TrackerState, frame):
        """Advance one time step; returns the state and declared estimates."""
        state.diagnostics = {}
        state = self.predict(state)
        state = self.birth(state, frame)
        state = self.update(state, frame)
        state, estimates = self.declare_and_prune(state)
        state.step_index += 1
        return state, estimates
