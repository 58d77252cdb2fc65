"""Array response fields.

Each field maps a source state (range, depth, range rate, depth rate) and a
tone index to the complex response vector of an M-element receive array.
Two analytic propagation models are provided behind one interface:

* ``plane-wave``: far-field plane wave on a line array, the angle taken
  from the position components of the state.
* ``isovelocity-modes``: normal modes of an isovelocity waveguide with a
  pressure-release surface and a rigid bottom, summed at each element
  depth with cylindrical spreading.

All response vectors are scaled to unit Euclidean norm, so transmit power
carries the full amplitude semantics and the physical field magnitude is
absorbed into it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PLANE_WAVE = "plane-wave"
ISOVELOCITY_MODES = "isovelocity-modes"


@dataclass(frozen=True)
class ArrayGeometry:
    """Sensor positions along the array axis, in meters.

    For a vertical line array these are element depths; for the plane-wave
    model they are offsets along the array axis (may be negative).
    """

    element_positions: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.element_positions, dtype=float)
        if pos.ndim != 1 or pos.size < 1:
            raise ValueError("element_positions must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(pos)):
            raise ValueError("element_positions must be finite")
        if pos.size > 1 and not np.all(np.diff(pos) > 0):
            raise ValueError("element_positions must be strictly increasing")
        object.__setattr__(self, "element_positions", pos)

    @property
    def num_elements(self) -> int:
        return self.element_positions.size


@dataclass(frozen=True)
class WaveguideEnv:
    """Isovelocity water column: depth in meters, sound speed in m/s."""

    water_depth: float
    sound_speed: float

    def __post_init__(self):
        if not (self.water_depth > 0 and np.isfinite(self.water_depth)):
            raise ValueError("water_depth must be positive and finite")
        if not (self.sound_speed > 0 and np.isfinite(self.sound_speed)):
            raise ValueError("sound_speed must be positive and finite")


@dataclass(frozen=True)
class SteeringField:
    """A propagation model, an array geometry, and the tone frequencies.

    ``env`` supplies the sound speed for both variants; the water depth is
    only used by the isovelocity-mode model.
    """

    variant: str
    geometry: ArrayGeometry
    tones: tuple
    env: WaveguideEnv

    def __post_init__(self):
        if self.variant not in (PLANE_WAVE, ISOVELOCITY_MODES):
            raise ValueError(f"unknown field variant: {self.variant!r}")
        tones = tuple(float(f) for f in self.tones)
        if len(tones) < 1:
            raise ValueError("at least one tone frequency is required")
        if any(not (f > 0 and np.isfinite(f)) for f in tones):
            raise ValueError("tone frequencies must be positive and finite")
        if len(set(tones)) != len(tones):
            raise ValueError("tone frequencies must be distinct")
        object.__setattr__(self, "tones", tones)

    @property
    def num_tones(self) -> int:
        return len(self.tones)

    @property
    def num_elements(self) -> int:
        return self.geometry.num_elements


def mode_set(env: WaveguideEnv, frequency: float) -> np.ndarray:
    """Propagating modes of the waveguide at one frequency.

    Pressure-release surface and rigid bottom give vertical wavenumbers
    k_z,m = (m - 1/2) * pi / D.  A mode propagates when its radial
    wavenumber k_r,m = sqrt((2*pi*f/c)^2 - k_z,m^2) is real and strictly
    positive.

    Returns an (n_modes, 2) array of (k_z, k_r) pairs ordered by mode
    number; empty if nothing propagates.
    """
    if not (frequency > 0 and np.isfinite(frequency)):
        raise ValueError("frequency must be positive and finite")
    k = 2.0 * np.pi * frequency / env.sound_speed
    # largest m with (m - 1/2) * pi / D < k  (strict inequality)
    m_max = int(np.floor(k * env.water_depth / np.pi + 0.5))
    if m_max >= 1:
        kz = (np.arange(1, m_max + 1) - 0.5) * np.pi / env.water_depth
        # floor arithmetic can admit kz == k; enforce the strict cutoff
        kz = kz[kz < k]
    else:
        kz = np.empty(0)
    kr = np.sqrt(np.maximum(k * k - kz * kz, 0.0))
    keep = kr > 0.0
    return np.column_stack((kz[keep], kr[keep]))


def steering_matrix(field: SteeringField, states: np.ndarray, tone_index: int) -> np.ndarray:
    """Unit-norm response vectors for a batch of states at one tone.

    ``states`` is (P, d) with d >= 2; only the leading (range, depth)
    position components enter the response.  Returns a complex (M, P)
    matrix whose columns have unit Euclidean norm.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if states.shape[1] < 2:
        raise ValueError("states must carry at least (range, depth) components")
    if not 0 <= tone_index < field.num_tones:
        raise ValueError(f"tone_index {tone_index} out of range for {field.num_tones} tones")
    freq = field.tones[tone_index]
    positions = field.geometry.element_positions
    rng_m = states[:, 0]
    depth_m = states[:, 1]

    if field.variant == PLANE_WAVE:
        hyp = np.hypot(rng_m, depth_m)
        sin_theta = np.divide(depth_m, hyp, out=np.zeros_like(hyp), where=hyp > 0)
        phase = (-2.0 * np.pi * freq / field.env.sound_speed) * np.outer(positions, sin_theta)
        atoms = np.exp(1j * phase)
    else:
        if np.any(rng_m <= 0):
            raise ValueError("isovelocity-mode field requires strictly positive range")
        modes = mode_set(field.env, freq)
        if modes.shape[0] == 0:
            raise ValueError(f"no propagating modes at tone {tone_index} ({freq} Hz)")
        kz = modes[:, 0]
        kr = modes[:, 1]
        elem = np.sin(np.outer(kz, positions))              # (n_modes, M)
        src = np.sin(np.outer(kz, depth_m))                 # (n_modes, P)
        kr_r = np.outer(kr, rng_m)
        radial = np.exp(-1j * kr_r) / np.sqrt(kr_r)         # (n_modes, P)
        atoms = elem.T @ (src * radial / field.env.water_depth)

    norms = np.linalg.norm(atoms, axis=0)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        raise ValueError("degenerate response vector (zero or non-finite norm)")
    return atoms / norms


def steering_vector(field: SteeringField, state: np.ndarray, tone_index: int) -> np.ndarray:
    """Unit-norm response vector a(x) for a single state at one tone."""
    return steering_matrix(field, np.asarray(state, dtype=float).reshape(1, -1), tone_index)[:, 0]
