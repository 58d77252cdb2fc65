"""Run-archive persistence.

One directory per run:

    config.txt        resolved configuration snapshot
    frames.bin        raw measurement frames (binary, layout below)
    truth.csv         ground-truth states and powers per step
    estimates_<t>.csv declared tracks per tracker
    detections_<t>.csv point detections (baseline)
    metrics_<t>.csv   per-step GOSPA rows
    summary.csv       per-tracker mean GOSPA
    diagnostics.log   timings and counters (the only file with timestamps)

``frames.bin`` layout: the 8-byte magic ``DMOTFRM1``, four little-endian
uint32 values (num_steps K, num_tones I, num_elements M, snapshots J),
then K*I*M*J little-endian complex64 samples in C order (step, tone,
element, snapshot), real part first.

Floats in CSV files are written with ``repr`` so re-runs are
byte-identical.
"""

from __future__ import annotations

import csv
import datetime
import struct
from pathlib import Path

import numpy as np

from .scenario import MeasurementFrame
from .tracks import Estimate

FRAME_MAGIC = b"DMOTFRM1"

CONFIG_FILE = "config.txt"
FRAMES_FILE = "frames.bin"
TRUTH_FILE = "truth.csv"
SUMMARY_FILE = "summary.csv"
DIAGNOSTICS_FILE = "diagnostics.log"


def estimates_file(tracker: str) -> str:
    return f"estimates_{tracker}.csv"


def detections_file(tracker: str) -> str:
    return f"detections_{tracker}.csv"


def metrics_file(tracker: str) -> str:
    return f"metrics_{tracker}.csv"


# ----------------------------------------------------------------------
def write_frames(path, frames: list) -> None:
    arr = np.stack([f.data for f in frames]).astype(np.complex64)
    k, i, m, j = arr.shape
    with open(path, "wb") as handle:
        handle.write(FRAME_MAGIC)
        handle.write(struct.pack("<4I", k, i, m, j))
        handle.write(arr.astype("<c8").tobytes(order="C"))


def read_frames(path) -> list:
    with open(path, "rb") as handle:
        magic = handle.read(8)
        if magic != FRAME_MAGIC:
            raise ValueError(f"{path}: not a frame archive (bad magic {magic!r})")
        k, i, m, j = struct.unpack("<4I", handle.read(16))
        data = np.frombuffer(handle.read(), dtype="<c8")
    expected = k * i * m * j
    if data.size != expected:
        raise ValueError(f"{path}: expected {expected} samples, found {data.size}")
    arr = data.reshape(k, i, m, j).astype(np.complex128)
    return [MeasurementFrame(data=arr[step]) for step in range(k)]


# ----------------------------------------------------------------------
def write_truth_csv(path, truth, num_tones: int) -> None:
    header = (["step", "object", "range", "depth", "range_rate", "depth_rate"]
              + [f"power_{i + 1}" for i in range(num_tones)])
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for step in range(truth.num_steps):
            for obj_idx, obj in enumerate(truth.objects):
                if not obj.active_at(step):
                    continue
                state = obj.state_at(step)
                powers = obj.powers_at(step)
                writer.writerow([step, obj_idx]
                                + [repr(float(x)) for x in state]
                                + [repr(float(p)) for p in powers])


def read_truth_positions(path, num_steps: int) -> list:
    """Per-step (n, 2) position arrays from a truth CSV."""
    per_step = [[] for _ in range(num_steps)]
    with open(path, "r", newline="") as handle:
        for row in csv.DictReader(handle):
            per_step[int(row["step"])].append(
                (float(row["range"]), float(row["depth"])))
    return [np.array(rows) if rows else np.empty((0, 2)) for rows in per_step]


# ----------------------------------------------------------------------
def write_estimates_csv(path, estimates_per_step: list, num_tones: int) -> None:
    header = (["step", "label", "declared", "range", "depth",
               "range_rate", "depth_rate", "existence"]
              + [f"power_{i + 1}" for i in range(num_tones)])
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for step, estimates in enumerate(estimates_per_step):
            for est in estimates:
                writer.writerow([step, est.label, int(est.declared)]
                                + [repr(float(x)) for x in est.state]
                                + [repr(float(est.existence))]
                                + [repr(float(p)) for p in est.powers])


def read_estimate_positions(path, num_steps: int) -> list:
    """Per-step (n, 2) declared-track positions from an estimates CSV."""
    per_step = [[] for _ in range(num_steps)]
    with open(path, "r", newline="") as handle:
        for row in csv.DictReader(handle):
            if int(row["declared"]):
                per_step[int(row["step"])].append(
                    (float(row["range"]), float(row["depth"])))
    return [np.array(rows) if rows else np.empty((0, 2)) for rows in per_step]


# ----------------------------------------------------------------------
def write_detections_csv(path, detections_per_step: list) -> None:
    header = ["step", "range", "depth", "score"]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for step, detections in enumerate(detections_per_step):
            for det in detections:
                writer.writerow([step, repr(float(det.range_m)),
                                 repr(float(det.depth_m)), repr(float(det.score))])


def write_summary_csv(path, rows: list) -> None:
    """Rows of (tracker, seed, mean_total, mean_loc, mean_missed, mean_false)."""
    header = ["tracker", "seed", "mean_total", "mean_localization",
              "mean_missed", "mean_false"]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for tracker, seed, result in rows:
            writer.writerow([tracker, seed, repr(result.total),
                             repr(result.localization), repr(result.missed),
                             repr(result.false_alarm)])


def append_diagnostics(directory, lines) -> None:
    stamp = datetime.datetime.now().isoformat(timespec="milliseconds")
    path = Path(directory) / DIAGNOSTICS_FILE
    with open(path, "a") as handle:
        for line in lines:
            handle.write(f"[{stamp}] {line}\n")
