"""Experiment runner: simulate, track, evaluate, sweep.

A run archive is one directory produced by ``simulate`` and enriched by
``track`` and ``evaluate``; every artifact except the diagnostics log is
fully determined by (config, seed).  ``sweep`` fans a config out over its
seed list, running the full pipeline per seed, and pools the summaries.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import sys
import time
from pathlib import Path

from . import archive as arc
from .config import (
    ConfigError,
    RunConfig,
    TRACKER_BASELINE,
    TRACKER_DIRECT,
    TRACKER_NAMES,
    load_config,
    parse_config_text,
    resolve_config,
)
from .metrics import gospa_series, mean_gospa, write_series_csv
from .scenario import generate
from .tracker_baseline import BaselineTracker, calibrate_score_threshold
from .tracker_direct import DirectTracker


def run_simulate(config: RunConfig, seed: int, out_dir) -> Path:
    """Generate frames and truth for one seed into a fresh archive."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    scenario = config.scenario_config(seed)
    frames, truth = generate(scenario)
    snapshot = RunConfig(values=dict(config.values))
    snapshot.values["run.seeds"] = (seed,)
    (out / arc.CONFIG_FILE).write_text(snapshot.resolved_text())
    arc.write_frames(out / arc.FRAMES_FILE, frames)
    arc.write_truth_csv(out / arc.TRUTH_FILE, truth, scenario.field.num_tones)
    arc.append_diagnostics(out, [
        f"simulate seed={seed} steps={scenario.num_steps} "
        f"elapsed={time.perf_counter() - started:.3f}s",
    ])
    return out


def _load_archive_config(archive_dir) -> RunConfig:
    path = Path(archive_dir) / arc.CONFIG_FILE
    if not path.exists():
        raise FileNotFoundError(f"{archive_dir}: not a run archive (missing {arc.CONFIG_FILE})")
    return load_config(path)


def run_track(archive_dir, tracker_name: str) -> None:
    """Run one tracker over an existing archive's frames."""
    if tracker_name not in TRACKER_NAMES:
        raise ConfigError(
            f"unknown tracker {tracker_name!r}; choices: {', '.join(TRACKER_NAMES)}")
    out = Path(archive_dir)
    config = _load_archive_config(out)
    seed = config.seeds[0]
    frames = arc.read_frames(out / arc.FRAMES_FILE)
    field = config.steering_field()
    started = time.perf_counter()
    lines = []
    estimates_per_step = []

    if tracker_name == TRACKER_DIRECT:
        tracker = DirectTracker(field, config.direct_tracker_config())
        state = tracker.init(seed)
        for step, frame in enumerate(frames):
            tick = time.perf_counter()
            state, estimates = tracker.step(state, frame)
            estimates_per_step.append(estimates)
            lines.append(f"track {tracker_name} step={step} "
                         f"objects={state.diagnostics.get('object_count', 0)} "
                         f"declared={len(estimates)} "
                         f"elapsed={time.perf_counter() - tick:.3f}s")
    else:
        threshold = config.values["tracker.baseline.score_threshold"]
        base_cfg = config.baseline_tracker_config()
        tracker = BaselineTracker(field, base_cfg)
        if threshold < 0:
            threshold = calibrate_score_threshold(
                tracker.dictionary, config.values["scenario.noise_power"],
                config.values["scenario.snapshots"], base_cfg.clutter_mean,
                base_cfg.num_detections, seed=seed)
            tracker = BaselineTracker(
                field, config.baseline_tracker_config(score_threshold=threshold))
            lines.append(f"track {tracker_name} calibrated score_threshold={threshold!r}")
        state = tracker.init(seed)
        detections_per_step = []
        for step, frame in enumerate(frames):
            tick = time.perf_counter()
            measurements = tracker.detect(frame)
            detections_per_step.append(measurements)
            state, estimates = tracker.track_step(state, measurements)
            estimates_per_step.append(estimates)
            lines.append(f"track {tracker_name} step={step} "
                         f"measurements={len(measurements)} "
                         f"declared={len(estimates)} "
                         f"elapsed={time.perf_counter() - tick:.3f}s")
        arc.write_detections_csv(out / arc.detections_file(tracker_name),
                                 detections_per_step)

    arc.write_estimates_csv(out / arc.estimates_file(tracker_name),
                            estimates_per_step, field.num_tones)
    lines.append(f"track {tracker_name} total_elapsed={time.perf_counter() - started:.3f}s")
    arc.append_diagnostics(out, lines)


def run_evaluate(archive_dir) -> list:
    """GOSPA every tracked result in the archive; returns the summary rows."""
    out = Path(archive_dir)
    config = _load_archive_config(out)
    seed = config.seeds[0]
    num_steps = config.values["scenario.num_steps"]
    params = config.gospa_params()
    truth = arc.read_truth_positions(out / arc.TRUTH_FILE, num_steps)
    rows = []
    for tracker_name in TRACKER_NAMES:
        est_path = out / arc.estimates_file(tracker_name)
        if not est_path.exists():
            continue
        estimates = arc.read_estimate_positions(est_path, num_steps)
        series = gospa_series(truth, estimates, params)
        write_series_csv(out / arc.metrics_file(tracker_name), series)
        rows.append((tracker_name, seed, mean_gospa(series)))
    if not rows:
        raise FileNotFoundError(f"{archive_dir}: no tracked results to evaluate")
    arc.write_summary_csv(out / arc.SUMMARY_FILE, rows)
    arc.append_diagnostics(out, [f"evaluate trackers={len(rows)}"])
    return rows


def _sweep_one(config_values: dict, seed: int, seed_dir: str, trackers: tuple) -> list:
    config = RunConfig(values=dict(config_values))
    run_simulate(config, seed, seed_dir)
    for name in trackers:
        run_track(seed_dir, name)
    return run_evaluate(seed_dir)


def run_sweep(config: RunConfig, out_dir, trackers=TRACKER_NAMES, workers: int = 1) -> list:
    """Full pipeline per seed, in parallel processes, plus a pooled summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = config.seeds
    jobs = [(dict(config.values), seed, str(out / f"seed_{seed}"), tuple(trackers))
            for seed in seeds]
    if workers > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, *zip(*jobs)))
    else:
        results = [_sweep_one(*job) for job in jobs]

    rows = [row for per_seed in results for row in per_seed]
    rows.sort(key=lambda row: (row[0], row[1]))
    pooled = []
    for name in trackers:
        tracker_rows = [r for r in rows if r[0] == name]
        if not tracker_rows:
            continue
        n = len(tracker_rows)
        from .metrics import GospaResult
        pooled.append((name, "pooled", GospaResult(
            total=sum(r[2].total for r in tracker_rows) / n,
            localization=sum(r[2].localization for r in tracker_rows) / n,
            missed=sum(r[2].missed for r in tracker_rows) / n,
            false_alarm=sum(r[2].false_alarm for r in tracker_rows) / n,
        )))
    arc.write_summary_csv(out / arc.SUMMARY_FILE, rows + pooled)
    return rows + pooled


# ----------------------------------------------------------------------
def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="directmot",
        description="Simulate, track, and evaluate multitone array scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate frames and ground truth")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", required=True)
    sim.add_argument("--seed", type=int, default=None)

    trk = sub.add_parser("track", help="run a tracker over an archive")
    trk.add_argument("--out", required=True, help="run archive directory")
    trk.add_argument("--tracker", required=True)

    ev = sub.add_parser("evaluate", help="score tracked results against truth")
    ev.add_argument("--out", required=True, help="run archive directory")

    swp = sub.add_parser("sweep", help="full pipeline over all configured seeds")
    swp.add_argument("--config", required=True)
    swp.add_argument("--out", required=True)
    swp.add_argument("--seed", type=int, default=None)
    swp.add_argument("--trackers", default=",".join(TRACKER_NAMES),
                     help="comma-separated tracker names")
    swp.add_argument("--workers", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            config = load_config(args.config, seed_override=args.seed)
            for seed in config.seeds:
                target = Path(args.out) if len(config.seeds) == 1 \
                    else Path(args.out) / f"seed_{seed}"
                run_simulate(config, seed, target)
        elif args.command == "track":
            run_track(args.out, args.tracker)
        elif args.command == "evaluate":
            rows = run_evaluate(args.out)
            for name, seed, result in rows:
                print(f"{name} seed={seed} mean_gospa={result.total:.3f}")
        elif args.command == "sweep":
            config = load_config(args.config, seed_override=args.seed)
            trackers = tuple(t.strip() for t in args.trackers.split(",") if t.strip())
            for name in trackers:
                if name not in TRACKER_NAMES:
                    raise ConfigError(
                        f"unknown tracker {name!r}; choices: {', '.join(TRACKER_NAMES)}")
            rows = run_sweep(config, args.out, trackers=trackers, workers=args.workers)
            for name, seed, result in rows:
                print(f"{name} seed={seed} mean_gospa={result.total:.3f}")
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # noqa: BLE001 - CLI boundary
        print(f"error: {err}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
