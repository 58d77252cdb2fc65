"""Run configuration: flat key-value text with a versioned schema.

The format is one ``key = value`` pair per line, ``#`` comments, blank
lines ignored.  Keys are dotted section paths; list values are
space-separated.  Unknown keys are rejected and every violation names the
offending key path.  Source definitions use numbered sections
(``scenario.sources.1.range`` etc.) up to ``scenario.sources.count``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .dynamics import BirthModel, GammaChain, constant_rate_model
from .metrics import GospaParams
from .scenario import (
    GroundTruthObject,
    ScenarioConfig,
    SWELLEX_LIKE_TONES,
    constant_velocity_trajectory,
)
from .steering import ISOVELOCITY_MODES, PLANE_WAVE, ArrayGeometry, SteeringField, WaveguideEnv
from .tracker_baseline import BaselineConfig
from .tracker_direct import DirectTrackerConfig

SCHEMA_VERSION = "directmot/1"

TRACKER_DIRECT = "direct"
TRACKER_BASELINE = "baseline-mp"
TRACKER_NAMES = (TRACKER_DIRECT, TRACKER_BASELINE)


class ConfigError(ValueError):
    """Configuration violation; the message names the key path."""


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_PARSERS = {
    "str": str,
    "int": int,
    "float": float,
    "bool": _parse_bool,
    "int_list": lambda s: tuple(int(t) for t in s.split()),
    "float_list": lambda s: tuple(float(t) for t in s.split()),
}

# key -> (type name, default); defaults of None mark per-source keys that
# are filled by the preset or must be given explicitly
_SCHEMA = {
    "schema": ("str", SCHEMA_VERSION),
    "run.seeds": ("int_list", (0,)),
    "scenario.preset": ("str", "swellex-like"),
    "scenario.num_steps": ("int", 100),
    "scenario.snapshots": ("int", 3),
    "scenario.step_duration": ("float", 4.096),
    "scenario.tones": ("float_list", SWELLEX_LIKE_TONES),
    "scenario.noise_power": ("float", 1e-4),
    "scenario.field": ("str", ISOVELOCITY_MODES),
    "scenario.array.num_elements": ("int", 21),
    "scenario.array.first_position": ("float", 10.0),
    "scenario.array.last_position": ("float", 210.0),
    "scenario.env.water_depth": ("float", 216.5),
    "scenario.env.sound_speed": ("float", 1500.0),
    "scenario.sources.count": ("int", None),
    "roi.max_range": ("float", 5000.0),
    "roi.max_depth": ("float", 200.0),
    "birth.mean": ("float", 1e-4),
    "birth.range_res": ("float", 25.0),
    "birth.depth_res": ("float", 2.0),
    "birth.max_range_rate": ("float", 4.0),
    "birth.max_depth_rate": ("float", 1.0),
    "birth.max_power": ("float", 1.0),
    "motion.drive_range_var": ("float", 1e-2),
    "motion.drive_depth_var": ("float", 1e-5),
    "tracker.survival": ("float", 0.95),
    "tracker.declare_threshold": ("float", 0.5),
    "tracker.prune_threshold": ("float", 1e-2),
    "tracker.direct.num_particles": ("int", 1000),
    "tracker.direct.noise_particles": ("int", 200),
    "tracker.direct.bp_iterations": ("int", 3),
    "tracker.direct.mp_seeds": ("int", 10),
    "tracker.direct.power_spread": ("float", 1e4),
    "tracker.direct.noise_spread": ("float", 1e2),
    "tracker.direct.power_chain": ("str", "smooth"),
    "tracker.direct.noise_prior_max": ("float", 2e-4),
    "tracker.direct.resample": ("str", "always"),
    "tracker.direct.ess_fraction": ("float", 0.5),
    "tracker.baseline.num_particles": ("int", 1000),
    "tracker.baseline.detection_prob": ("float", 0.9),
    "tracker.baseline.clutter_mean": ("float", 2.0),
    "tracker.baseline.sigma_range": ("float", 12.5),
    "tracker.baseline.sigma_depth": ("float", 1.0),
    "tracker.baseline.detections": ("int", 10),
    # negative threshold requests noise-only calibration at track time
    "tracker.baseline.score_threshold": ("float", -1.0),
    "tracker.baseline.assoc_iterations": ("int", 50),
    "metrics.cutoff": ("float", 200.0),
    "metrics.order": ("float", 1.0),
    "metrics.alpha": ("float", 2.0),
}

_SOURCE_KEYS = {
    "range": "float",
    "depth": "float",
    "range_rate": "float",
    "depth_rate": "float",
    "power": "float",
    "appear": "int",
    "disappear": "int",
}
_SOURCE_PATTERN = re.compile(r"^scenario\.sources\.(\d+)\.([a-z_]+)$")

_PRESET_SOURCES = {
    "swellex-like": (
        # (range, depth, range_rate, depth_rate, power); the moving source
        # runs 3 dB below the static one
        (2512.5, 99.0, 0.0, 0.0, 5e-3),
        (1112.5, 55.0, 3.0, 0.0, 5e-3 * 10.0 ** (-3.0 / 10.0)),
    ),
}


def parse_config_text(text: str) -> dict:
    """Raw key -> string-value mapping; duplicate keys are rejected."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in values:
            raise ConfigError(f"duplicate key: {key}")
        values[key] = value
    return values


@dataclass
class RunConfig:
    """Fully resolved configuration with typed values."""

    values: dict

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def seeds(self) -> tuple:
        return self.values["run.seeds"]

    # ------------------------------------------------------------------
    def steering_field(self) -> SteeringField:
        v = self.values
        geometry = ArrayGeometry(element_positions=np.linspace(
            v["scenario.array.first_position"], v["scenario.array.last_position"],
            v["scenario.array.num_elements"]))
        env = WaveguideEnv(water_depth=v["scenario.env.water_depth"],
                           sound_speed=v["scenario.env.sound_speed"])
        if v["scenario.field"] not in (ISOVELOCITY_MODES, PLANE_WAVE):
            raise ConfigError(f"scenario.field: unknown variant {v['scenario.field']!r}")
        return SteeringField(variant=v["scenario.field"], geometry=geometry,
                             tones=v["scenario.tones"], env=env)

    def scenario_config(self, seed: int) -> ScenarioConfig:
        v = self.values
        field = self.steering_field()
        n_tones = field.num_tones
        num_steps = v["scenario.num_steps"]
        dt = v["scenario.step_duration"]
        objects = []
        for idx in range(v["scenario.sources.count"]):
            base = f"scenario.sources.{idx + 1}"
            appear = v[f"{base}.appear"]
            disappear = v[f"{base}.disappear"]
            if disappear < 0:
                disappear = num_steps - 1
            if not 0 <= appear <= disappear <= num_steps - 1:
                raise ConfigError(f"{base}.appear/disappear out of range")
            n_active = disappear - appear + 1
            start = (v[f"{base}.range"], v[f"{base}.depth"],
                     v[f"{base}.range_rate"], v[f"{base}.depth_rate"])
            objects.append(GroundTruthObject(
                appear_step=appear,
                disappear_step=disappear,
                trajectory=constant_velocity_trajectory(start, n_active, dt),
                powers=np.full((n_active, n_tones), v[f"{base}.power"]),
                rng_tag=idx,
            ))
        return ScenarioConfig(
            field=field,
            objects=objects,
            noise_power=np.full(n_tones, v["scenario.noise_power"]),
            snapshots=v["scenario.snapshots"],
            num_steps=num_steps,
            step_duration=dt,
            rng_seed=seed,
        )

    # ------------------------------------------------------------------
    def birth_model(self) -> BirthModel:
        v = self.values
        return BirthModel(
            mean_births=v["birth.mean"],
            range_lim=(0.0, v["roi.max_range"]),
            depth_lim=(0.0, v["roi.max_depth"]),
            range_res=v["birth.range_res"],
            depth_res=v["birth.depth_res"],
            range_rate_lim=(-v["birth.max_range_rate"], v["birth.max_range_rate"]),
            depth_rate_lim=(-v["birth.max_depth_rate"], v["birth.max_depth_rate"]),
            power_lim=(0.0, v["birth.max_power"]),
        )

    def direct_tracker_config(self) -> DirectTrackerConfig:
        v = self.values
        if v["tracker.direct.power_chain"] not in ("smooth", "diffuse"):
            raise ConfigError("tracker.direct.power_chain must be smooth or diffuse")
        kind = v["tracker.direct.power_chain"]
        return DirectTrackerConfig(
            motion=constant_rate_model(v["scenario.step_duration"],
                                       (v["motion.drive_range_var"],
                                        v["motion.drive_depth_var"])),
            birth=self.birth_model(),
            power_chain=GammaChain(v["tracker.direct.power_spread"], kind=kind),
            noise_chain=GammaChain(v["tracker.direct.noise_spread"], kind=kind),
            survival=v["tracker.survival"],
            declare_threshold=v["tracker.declare_threshold"],
            prune_threshold=v["tracker.prune_threshold"],
            num_particles=v["tracker.direct.num_particles"],
            num_noise_particles=v["tracker.direct.noise_particles"],
            bp_iterations=v["tracker.direct.bp_iterations"],
            mp_seeds=v["tracker.direct.mp_seeds"],
            noise_prior_max=v["tracker.direct.noise_prior_max"],
            resample_policy=v["tracker.direct.resample"],
            ess_fraction=v["tracker.direct.ess_fraction"],
        )

    def baseline_tracker_config(self, score_threshold: float | None = None) -> BaselineConfig:
        v = self.values
        threshold = v["tracker.baseline.score_threshold"] \
            if score_threshold is None else score_threshold
        return BaselineConfig(
            motion=constant_rate_model(v["scenario.step_duration"],
                                       (v["motion.drive_range_var"],
                                        v["motion.drive_depth_var"])),
            birth=self.birth_model(),
            survival=v["tracker.survival"],
            declare_threshold=v["tracker.declare_threshold"],
            prune_threshold=v["tracker.prune_threshold"],
            detection_prob=v["tracker.baseline.detection_prob"],
            clutter_mean=v["tracker.baseline.clutter_mean"],
            sigma_range=v["tracker.baseline.sigma_range"],
            sigma_depth=v["tracker.baseline.sigma_depth"],
            num_particles=v["tracker.baseline.num_particles"],
            num_detections=v["tracker.baseline.detections"],
            score_threshold=threshold,
            assoc_iterations=v["tracker.baseline.assoc_iterations"],
        )

    def gospa_params(self) -> GospaParams:
        v = self.values
        return GospaParams(cutoff=v["metrics.cutoff"], order=v["metrics.order"],
                           alpha=v["metrics.alpha"])

    # ------------------------------------------------------------------
    def resolved_text(self) -> str:
        """Canonical snapshot: sorted keys, repr-stable values."""
        lines = []
        for key in sorted(self.values):
            value = self.values[key]
            if isinstance(value, tuple):
                rendered = " ".join(repr(x) for x in value)
            else:
                rendered = repr(value) if isinstance(value, float) else str(value)
            lines.append(f"{key} = {rendered}")
        return "\n".join(lines) + "\n"


def _source_key_schema(key: str):
    match = _SOURCE_PATTERN.match(key)
    if match is None:
        return None
    field_name = match.group(2)
    if field_name not in _SOURCE_KEYS:
        raise ConfigError(f"unknown key: {key}")
    return _SOURCE_KEYS[field_name]


def resolve_config(raw: dict) -> RunConfig:
    """Apply the schema to raw string values and expand the preset."""
    for key in raw:
        if key not in _SCHEMA and _source_key_schema(key) is None:
            raise ConfigError(f"unknown key: {key}")

    values = {}
    for key, text in raw.items():
        type_name = _SCHEMA[key][0] if key in _SCHEMA else _source_key_schema(key)
        try:
            values[key] = _PARSERS[type_name](text)
        except ValueError as err:
            raise ConfigError(f"{key}: {err}") from err

    schema = values.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"schema: expected {SCHEMA_VERSION!r}, got {schema!r}")

    for key, (_, default) in _SCHEMA.items():
        if key not in values and default is not None:
            values[key] = default

    preset = values["scenario.preset"]
    if preset == "swellex-like":
        # newborn-power box matched to the preset's physical power scale
        values.setdefault("birth.max_power", 0.02)
        values.setdefault("scenario.sources.count", len(_PRESET_SOURCES[preset]))
        for idx, source in enumerate(_PRESET_SOURCES[preset]):
            base = f"scenario.sources.{idx + 1}"
            defaults = dict(zip(("range", "depth", "range_rate", "depth_rate", "power"),
                                source))
            defaults["appear"] = 0
            defaults["disappear"] = -1   # resolved to the last step
            for name, val in defaults.items():
                values.setdefault(f"{base}.{name}", val)
    elif preset == "none":
        values.setdefault("scenario.sources.count", 0)
    else:
        raise ConfigError(f"scenario.preset: unknown preset {preset!r}")

    for idx in range(values["scenario.sources.count"]):
        base = f"scenario.sources.{idx + 1}"
        values.setdefault(f"{base}.appear", 0)
        values.setdefault(f"{base}.disappear", -1)
        for name in ("range", "depth", "range_rate", "depth_rate", "power"):
            key = f"{base}.{name}"
            if key not in values:
                raise ConfigError(f"missing required key: {key}")

    # reject source keys beyond the declared count
    count = values["scenario.sources.count"]
    for key in values:
        match = _SOURCE_PATTERN.match(key)
        if match and not 1 <= int(match.group(1)) <= max(count, 0):
            raise ConfigError(f"{key}: source index exceeds scenario.sources.count")

    values["schema"] = SCHEMA_VERSION
    return RunConfig(values=values)


def load_config(path, seed_override: int | None = None) -> RunConfig:
    with open(path, "r") as handle:
        raw = parse_config_text(handle.read())
    config = resolve_config(raw)
    if seed_override is not None:
        config.values["run.seeds"] = (int(seed_override),)
    return config
