"""Load training tensors from the pipeline's file interfaces: window
manifest CSVs plus raw CSV recordings."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

STAGE_ORDER = ("WAKE", "REM", "LIGHT", "DEEP")


def load_recording_csv(path) -> tuple[int, np.ndarray]:
    with open(path) as f:
        header = f.readline().strip()
        if not header.startswith("sample_rate_hz="):
            raise ValueError(f"malformed recording header: {header!r}")
        rate = int(header.split("=", 1)[1])
        samples = np.array([float(line) for line in f if line.strip()], dtype=np.float32)
    return rate, samples


def load_windows(
    manifest_path, recording_path, mode: str = "DL", split: str | None = None
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Window tensors (n, length, 1), class indices, and split names."""
    _, samples = load_recording_csv(recording_path)
    X, y, splits = [], [], []
    with open(manifest_path) as f:
        for row in csv.DictReader(f):
            if row["mode"] != mode:
                continue
            if split is not None and row["split"] != split:
                continue
            start, length = int(row["start_sample"]), int(row["length"])
            X.append(samples[start : start + length, None])
            y.append(STAGE_ORDER.index(row["label"]))
            splits.append(row["split"])
    if not X:
        raise ValueError(f"no {mode} windows in {Path(manifest_path).name}")
    return np.stack(X), np.array(y, dtype=np.int64), splits
