"""Synthetic ground truth and raw array measurements.

Each time step produces, per tone i, a complex M x J snapshot block

    z_j = sum_l rho_{l,j} a_i(x_l) + eps_j,

with per-snapshot amplitudes rho_{l,j} ~ CN(0, gamma_l_i) drawn
independently across snapshots, tones, and steps, and white noise
eps_j ~ CN(0, eta_i I).

Every object owns an independent RNG substream keyed by its ``rng_tag``
and the noise owns another, so a multi-object scene equals the sum of the
single-object noiseless scenes plus one noise realization, seed for seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .steering import SteeringField, steering_vector


@dataclass
class GroundTruthObject:
    """One true source: active interval, per-step states and tone powers."""

    appear_step: int
    disappear_step: int
    trajectory: np.ndarray          # (n_active, 4)
    powers: np.ndarray              # (n_active, num_tones), linear power
    transmit: np.ndarray | None = None   # (n_active,) bool mask, default all on
    rng_tag: int | None = None      # substream key; defaults to list position

    def __post_init__(self):
        if self.appear_step > self.disappear_step:
            raise ValueError("appear_step must not exceed disappear_step")
        n_active = self.disappear_step - self.appear_step + 1
        self.trajectory = np.asarray(self.trajectory, dtype=float)
        self.powers = np.asarray(self.powers, dtype=float)
        if self.trajectory.shape != (n_active, 4):
            raise ValueError("trajectory length must match the active interval")
        if self.powers.shape[0] != n_active or self.powers.ndim != 2:
            raise ValueError("powers must be (n_active, num_tones)")
        if np.any(self.powers < 0):
            raise ValueError("powers must be non-negative")
        if self.transmit is not None:
            self.transmit = np.asarray(self.transmit, dtype=bool)
            if self.transmit.shape != (n_active,):
                raise ValueError("transmit mask length must match the active interval")

    def active_at(self, step: int) -> bool:
        return self.appear_step <= step <= self.disappear_step

    def state_at(self, step: int) -> np.ndarray:
        return self.trajectory[step - self.appear_step]

    def powers_at(self, step: int) -> np.ndarray:
        return self.powers[step - self.appear_step]

    def transmitting_at(self, step: int) -> bool:
        if self.transmit is None:
            return True
        return bool(self.transmit[step - self.appear_step])


@dataclass
class ScenarioConfig:
    field: SteeringField
    objects: list
    noise_power: np.ndarray         # (num_tones,)
    snapshots: int
    num_steps: int
    step_duration: float
    rng_seed: int

    def __post_init__(self):
        self.noise_power = np.broadcast_to(
            np.asarray(self.noise_power, dtype=float), (self.field.num_tones,)
        ).copy()
        if np.any(self.noise_power <= 0):
            raise ValueError("noise power must be positive for every tone")
        if self.snapshots < 1 or self.num_steps < 1:
            raise ValueError("snapshots and num_steps must be at least 1")
        if self.step_duration <= 0:
            raise ValueError("step_duration must be positive")


@dataclass
class MeasurementFrame:
    """All tones of one time step: complex data of shape (I, M, J)."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim != 3:
            raise ValueError("frame data must be (num_tones, num_elements, snapshots)")


@dataclass
class GroundTruth:
    """Generation record consumed by evaluation."""

    objects: list
    num_steps: int

    def active_at(self, step: int) -> list:
        return [obj for obj in self.objects if obj.active_at(step)]

    def positions_at(self, step: int) -> np.ndarray:
        active = self.active_at(step)
        if not active:
            return np.empty((0, 2))
        return np.array([obj.state_at(step)[:2] for obj in active])


def _object_stream(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, tag)))


def _noise_stream(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))


def _complex_normal(rng: np.random.Generator, variance, shape) -> np.ndarray:
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def generate(config: ScenarioConfig, include_noise: bool = True):
    """Simulate one scenario; returns (frames, ground_truth).

    Deterministic given ``config.rng_seed``.  Amplitude draws are consumed
    for every active step regardless of the transmit mask, so masking a
    step does not shift any stream.
    """
    fld = config.field
    n_tones, n_elem, n_snap = fld.num_tones, fld.num_elements, config.snapshots
    streams = []
    for idx, obj in enumerate(config.objects):
        tag = obj.rng_tag if obj.rng_tag is not None else idx
        streams.append(_object_stream(config.rng_seed, tag))
    noise_rng = _noise_stream(config.rng_seed)

    frames = []
    for k in range(config.num_steps):
        data = np.zeros((n_tones, n_elem, n_snap), dtype=complex)
        for obj, rng in zip(config.objects, streams):
            if not obj.active_at(k):
                continue
            state = obj.state_at(k)
            gains = obj.powers_at(k)
            amps = _complex_normal(rng, gains[:, None], (n_tones, n_snap))
            if not obj.transmitting_at(k):
                continue
            for i in range(n_tones):
                try:
                    atom = steering_vector(fld, state, i)
                except ValueError as err:
                    raise ValueError(
                        f"object with tag {obj.rng_tag} leaves the field validity "
                        f"region at step {k}: {err}"
                    ) from err
                data[i] += np.outer(atom, amps[i])
        if include_noise:
            data += _complex_normal(
                noise_rng, config.noise_power[:, None, None], (n_tones, n_elem, n_snap)
            )
        frames.append(MeasurementFrame(data=data))
    return frames, GroundTruth(objects=list(config.objects), num_steps=config.num_steps)


def superpose(frames_a: list, frames_b: list, power_scale_db: float = 0.0) -> list:
    """Element-wise sum of two frame sequences.

    The second sequence's amplitudes are scaled by 10^(db/20), i.e. its
    power by 10^(db/10), before the addition.
    """
    if len(frames_a) != len(frames_b):
        raise ValueError("frame sequences differ in length")
    amp = 10.0 ** (power_scale_db / 20.0)
    out = []
    for fa, fb in zip(frames_a, frames_b):
        if fa.data.shape != fb.data.shape:
            raise ValueError("frame dimensions do not match")
        out.append(MeasurementFrame(data=fa.data + amp * fb.data))
    return out


def constant_velocity_trajectory(start_state, num_steps: int, step_duration: float) -> np.ndarray:
    """Straight-line trajectory from a (range, depth, rates) start state."""
    start = np.asarray(start_state, dtype=float)
    steps = np.arange(num_steps)[:, None] * step_duration
    out = np.tile(start, (num_steps, 1))
    out[:, :2] += steps * start[2:]
    return out


SWELLEX_LIKE_TONES = (49.0, 79.0, 112.0, 148.0, 201.0, 283.0, 388.0)


def swellex_like_preset(num_steps: int = 100, rng_seed: int = 0) -> ScenarioConfig:
    """Shallow-water two-source scene on a 21-element vertical array.

    Seven tones, three snapshots per 4.096 s step, one static source at the
    middle of the region of interest and one slowly opening moving source
    whose power is 3 dB below the static one.
    """
    from .steering import ArrayGeometry, WaveguideEnv, ISOVELOCITY_MODES

    geometry = ArrayGeometry(element_positions=np.linspace(10.0, 210.0, 21))
    env = WaveguideEnv(water_depth=216.5, sound_speed=1500.0)
    fld = SteeringField(variant=ISOVELOCITY_MODES, geometry=geometry,
                        tones=SWELLEX_LIKE_TONES, env=env)
    dt = 4.096
    n_tones = len(SWELLEX_LIKE_TONES)
    static_power = 5e-3
    moving_power = static_power * 10.0 ** (-3.0 / 10.0)
    static = GroundTruthObject(
        appear_step=0,
        disappear_step=num_steps - 1,
        trajectory=constant_velocity_trajectory((2512.5, 99.0, 0.0, 0.0), num_steps, dt),
        powers=np.full((num_steps, n_tones), static_power),
        rng_tag=0,
    )
    moving = GroundTruthObject(
        appear_step=0,
        disappear_step=num_steps - 1,
        trajectory=constant_velocity_trajectory((1112.5, 55.0, 3.0, 0.0), num_steps, dt),
        powers=np.full((num_steps, n_tones), moving_power),
        rng_tag=1,
    )
    return ScenarioConfig(
        field=fld,
        objects=[static, moving],
        noise_power=np.full(n_tones, 1e-4),
        snapshots=3,
        num_steps=num_steps,
        step_duration=dt,
        rng_seed=rng_seed,
    )
