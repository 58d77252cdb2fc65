"""State-transition and birth models.

Kinematic states are (range, depth, range_rate, depth_rate).  Motion is
the constant-rate model x' = F x + W q with white Gaussian driving noise
q on the two rate components.  Transmit power and noise power evolve by
mean-preserving Gamma chains.  Births follow a Poisson process with mean
``mean_births`` spread uniformly over a rectangular region of interest
partitioned into a regular range-depth grid of cells.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DIFFUSE = "diffuse"
SMOOTH = "smooth"


@dataclass(frozen=True)
class MotionModel:
    """Constant-rate kinematics: transition F, noise gain W, drive variances."""

    transition: np.ndarray      # (4, 4)
    noise_gain: np.ndarray      # (4, 2)
    drive_var: np.ndarray       # (2,) diagonal of the driving-noise covariance
    step_duration: float


def constant_rate_model(step_duration: float, drive_var=(1e-2, 1e-5)) -> MotionModel:
    """Build the constant-rate model for a given step duration in seconds."""
    if not (step_duration > 0 and np.isfinite(step_duration)):
        raise ValueError("step_duration must be positive and finite")
    drive = np.asarray(drive_var, dtype=float)
    if drive.shape != (2,) or np.any(drive < 0):
        raise ValueError("drive_var must be two non-negative variances")
    dt = float(step_duration)
    transition = np.array([
        [1.0, 0.0, dt, 0.0],
        [0.0, 1.0, 0.0, dt],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ])
    noise_gain = np.array([
        [0.5 * dt * dt, 0.0],
        [0.0, 0.5 * dt * dt],
        [dt, 0.0],
        [0.0, dt],
    ])
    return MotionModel(transition=transition, noise_gain=noise_gain,
                       drive_var=drive, step_duration=dt)


def predict_kinematic(states: np.ndarray, model: MotionModel, rng: np.random.Generator) -> np.ndarray:
    """One motion step x' = F x + W q for a state or a batch of states."""
    states = np.asarray(states, dtype=float)
    single = states.ndim == 1
    batch = np.atleast_2d(states)
    if not np.all(np.isfinite(batch)):
        raise ValueError("kinematic states must be finite")
    drive = rng.standard_normal((batch.shape[0], 2)) * np.sqrt(model.drive_var)
    out = batch @ model.transition.T + drive @ model.noise_gain.T
    return out[0] if single else out


@dataclass(frozen=True)
class GammaChain:
    """Mean-preserving Gamma transition with spread parameter c.

    Two parameter conventions are supported; both satisfy
    E[x_k | x_{k-1}] = x_{k-1} and differ only in the variance:

    * ``diffuse``: shape = prev / c, scale = c   (Var = prev * c)
    * ``smooth``:  shape = c, scale = prev / c   (Var = prev^2 / c)
    """

    spread: float
    kind: str = DIFFUSE

    def __post_init__(self):
        if not (self.spread > 0 and np.isfinite(self.spread)):
            raise ValueError("spread must be positive and finite")
        if self.kind not in (DIFFUSE, SMOOTH):
            raise ValueError(f"unknown Gamma chain kind: {self.kind!r}")


def transition_power(prev, chain: GammaChain, rng: np.random.Generator):
    """Draw the next power value(s); zero stays exactly zero."""
    prev_arr = np.asarray(prev, dtype=float)
    if np.any(prev_arr < 0):
        raise ValueError("power values must be non-negative")
    if chain.kind == DIFFUSE:
        draw = rng.gamma(shape=prev_arr / chain.spread, scale=chain.spread)
    else:
        draw = rng.gamma(shape=chain.spread, scale=prev_arr / chain.spread)
    out = np.where(prev_arr > 0, draw, 0.0)
    return float(out) if np.isscalar(prev) or prev_arr.ndim == 0 else out


def transition_existence(p_exist_prev: float, survival: float) -> float:
    """Predicted existence probability: dead hypotheses never revive."""
    if not (0.0 <= p_exist_prev <= 1.0 and 0.0 <= survival <= 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    return survival * p_exist_prev


@dataclass(frozen=True)
class BirthModel:
    """Poisson births uniform over a rectangular ROI with a regular grid.

    The grid cells partition the position box exactly, so the spans must be
    integer multiples of the resolutions.  Velocity and power priors are
    uniform over their boxes.
    """

    mean_births: float
    range_lim: tuple = (0.0, 5000.0)
    depth_lim: tuple = (0.0, 200.0)
    range_res: float = 25.0
    depth_res: float = 2.0
    range_rate_lim: tuple = (-4.0, 4.0)
    depth_rate_lim: tuple = (-1.0, 1.0)
    power_lim: tuple = (0.0, 1.0)
    num_range_cells: int = field(init=False)
    num_depth_cells: int = field(init=False)

    def __post_init__(self):
        if not (self.mean_births > 0 and np.isfinite(self.mean_births)):
            raise ValueError("mean_births must be positive and finite")
        for lo, hi in (self.range_lim, self.depth_lim,
                       self.range_rate_lim, self.depth_rate_lim, self.power_lim):
            if not hi > lo:
                raise ValueError("interval bounds must satisfy hi > lo")
        n_range = (self.range_lim[1] - self.range_lim[0]) / self.range_res
        n_depth = (self.depth_lim[1] - self.depth_lim[0]) / self.depth_res
        if abs(n_range - round(n_range)) > 1e-9 or abs(n_depth - round(n_depth)) > 1e-9:
            raise ValueError("grid resolution must evenly divide the ROI spans")
        object.__setattr__(self, "num_range_cells", int(round(n_range)))
        object.__setattr__(self, "num_depth_cells", int(round(n_depth)))

    @property
    def num_cells(self) -> int:
        return self.num_range_cells * self.num_depth_cells

    def cell_centers(self) -> np.ndarray:
        """(Q, 2) array of cell-center (range, depth) in cell-index order."""
        r = self.range_lim[0] + (np.arange(self.num_range_cells) + 0.5) * self.range_res
        z = self.depth_lim[0] + (np.arange(self.num_depth_cells) + 0.5) * self.depth_res
        rr, zz = np.meshgrid(r, z, indexing="ij")
        return np.column_stack((rr.ravel(), zz.ravel()))

    def cell_bounds(self, cell: int) -> tuple:
        """((r_lo, r_hi), (z_lo, z_hi)) of one cell."""
        ri, zi = divmod(int(cell), self.num_depth_cells)
        r_lo = self.range_lim[0] + ri * self.range_res
        z_lo = self.depth_lim[0] + zi * self.depth_res
        return (r_lo, r_lo + self.range_res), (z_lo, z_lo + self.depth_res)

    def contains(self, positions: np.ndarray) -> np.ndarray:
        """Boolean mask of (range, depth) rows inside the ROI box."""
        pos = np.atleast_2d(np.asarray(positions, dtype=float))
        return ((pos[:, 0] >= self.range_lim[0]) & (pos[:, 0] <= self.range_lim[1])
                & (pos[:, 1] >= self.depth_lim[0]) & (pos[:, 1] <= self.depth_lim[1]))

    def cell_of(self, position) -> int | None:
        """Cell index of a (range, depth) position, or None outside the ROI.

        Points on interior cell edges belong to the higher-index cell; the
        far ROI edges fold into the last cell so the grid stays an exact
        partition of the closed box.
        """
        r, z = float(position[0]), float(position[1])
        if not self.contains(np.array([[r, z]]))[0]:
            return None
        ri = min(int((r - self.range_lim[0]) / self.range_res), self.num_range_cells - 1)
        zi = min(int((z - self.depth_lim[0]) / self.depth_res), self.num_depth_cells - 1)
        return ri * self.num_depth_cells + zi


@dataclass(frozen=True)
class BirthCells:
    """Per-cell birth quantities in cell-index order."""

    centers: np.ndarray       # (Q, 2)
    mass: np.ndarray          # (Q,) expected births within the cell
    birth_prob: np.ndarray    # (Q,) mass / (mass + 1)
    density: float            # uniform spatial density inside each cell


def birth_cells(model: BirthModel) -> BirthCells:
    """Split the Poisson birth mass over the grid cells.

    With the uniform spatial prior every cell receives mass
    mean_births / Q, and a cell hosts at most one new object with
    probability mass / (mass + 1).
    """
    q = model.num_cells
    mass = np.full(q, model.mean_births / q)
    cell_area = model.range_res * model.depth_res
    return BirthCells(
        centers=model.cell_centers(),
        mass=mass,
        birth_prob=mass / (mass + 1.0),
        density=1.0 / cell_area,
    )
