"""Sliding-window segmentation and dataset splitting.

Two windowing presets drive the pipeline: 5-minute windows with a
30-second step for the handcrafted-feature models (ML mode, 30-s
temporal resolution) and 30-second windows with a 10-second step for the
CNN path (DL mode, 10-s resolution). Windows are (offset, length) views
into the recording, never copies.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .ingest import EPOCH_SECONDS, EcgRecording, SleepStage, StageAnnotation


class WindowMode(Enum):
    ML = "ML"
    DL = "DL"


# (window_s, step_s) presets per mode.
_PRESETS = {WindowMode.ML: (300, 30), WindowMode.DL: (30, 10)}


class WindowingError(ValueError):
    pass


class WindowExcludedError(WindowingError):
    """Window overlaps an ARTIFACT/INDET epoch or leaves annotated signal."""


@dataclass(frozen=True)
class WindowingConfig:
    mode: WindowMode
    window_s: int
    step_s: int

    def __post_init__(self):
        if not (self.window_s > self.step_s > 0):
            raise WindowingError("need window_s > step_s > 0")
        if int(self.window_s) != self.window_s or int(self.step_s) != self.step_s:
            raise WindowingError("window_s and step_s must be whole seconds")

    @classmethod
    def ml(cls) -> "WindowingConfig":
        return cls(WindowMode.ML, *_PRESETS[WindowMode.ML])

    @classmethod
    def dl(cls) -> "WindowingConfig":
        return cls(WindowMode.DL, *_PRESETS[WindowMode.DL])

    @classmethod
    def for_mode(cls, mode: WindowMode) -> "WindowingConfig":
        return cls(mode, *_PRESETS[mode])


@dataclass(frozen=True)
class Window:
    start_sample: int
    length_samples: int
    label: SleepStage
    mode: WindowMode


@dataclass(frozen=True)
class WindowSet:
    """Labeled windows of one recording. Immutable after construction."""

    subject_id: str
    sample_rate_hz: int
    config: WindowingConfig
    windows: tuple[Window, ...]
    dropped: int = 0  # enumerated windows that overlapped excluded/unannotated signal

    def __len__(self) -> int:
        return len(self.windows)

    def labels(self) -> list[SleepStage]:
        return [w.label for w in self.windows]

    def slice(self, recording: EcgRecording, window: Window) -> np.ndarray:
        """View (no copy) of the window's samples."""
        return recording.samples[
            window.start_sample : window.start_sample + window.length_samples
        ]


def window_count(total_samples: int, window_samples: int, step_samples: int) -> int:
    """floor((L - W) / S) + 1 for L >= W, else 0."""
    if total_samples < window_samples:
        return 0
    return (total_samples - window_samples) // step_samples + 1


def iter_window_offsets(total_samples: int, window_samples: int, step_samples: int):
    return range(0, total_samples - window_samples + 1, step_samples)


def assign_window_label(
    start_sample: int,
    length_samples: int,
    mode: WindowMode,
    annotations: tuple[StageAnnotation, ...],
    sample_rate_hz: int,
) -> SleepStage:
    """Label one window from the mapped 30-s epochs it covers.

    ML mode takes the epoch coinciding with the window's first 30 s.
    DL mode takes the majority stage by covered samples, ties broken by
    the epoch containing the window midpoint. Raises WindowExcludedError
    if the window touches an excluded epoch or unannotated signal.
    """
    epoch = EPOCH_SECONDS * sample_rate_hz
    end = start_sample + length_samples
    if start_sample < 0 or len(annotations) * epoch < end:
        raise WindowExcludedError("window outside annotated region")
    first = start_sample // epoch
    last = (end - 1) // epoch
    covered = annotations[first : last + 1]
    if any(a.excluded or a.mapped is None for a in covered):
        raise WindowExcludedError("window overlaps an excluded epoch")

    if mode is WindowMode.ML:
        return annotations[first].mapped

    # DL: samples of coverage per stage
    votes: dict[SleepStage, int] = {}
    for i, ann in enumerate(covered, start=first):
        lo = max(start_sample, i * epoch)
        hi = min(end, (i + 1) * epoch)
        votes[ann.mapped] = votes.get(ann.mapped, 0) + (hi - lo)
    best = max(votes.values())
    winners = [s for s, v in votes.items() if v == best]
    if len(winners) == 1:
        return winners[0]
    midpoint_epoch = (start_sample + length_samples // 2) // epoch
    return annotations[midpoint_epoch].mapped


def generate_windows(recording: EcgRecording, config: WindowingConfig) -> WindowSet:
    """Enumerate windows at every step offset and label them.

    Enumerated count follows floor((L - W) / S) + 1; windows overlapping
    excluded epochs or unannotated trailing signal are dropped (counted
    in ``dropped``).
    """
    rate = recording.sample_rate_hz
    w = config.window_s * rate
    s = config.step_s * rate
    n = len(recording.samples)
    if n < w:
        raise WindowingError(
            f"recording shorter than one window ({n} < {w} samples)"
        )
    windows = []
    dropped = 0
    for start in iter_window_offsets(n, w, s):
        try:
            label = assign_window_label(
                start, w, config.mode, recording.annotations, rate
            )
        except WindowExcludedError:
            dropped += 1
            continue
        windows.append(Window(start, w, label, config.mode))
    return WindowSet(recording.subject_id, rate, config, tuple(windows), dropped)


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[int, ...]
    validation: tuple[int, ...]
    test: tuple[int, ...]
    seed: int

    def membership(self, n: int) -> list[str]:
        out = [""] * n
        for name, idx in (("train", self.train), ("validation", self.validation), ("test", self.test)):
            for i in idx:
                out[i] = name
        return out


def split_dataset(
    windows: WindowSet | list[SleepStage],
    seed: int,
    test_fraction: float = 0.2,
    validation_fraction: float = 0.1,
) -> DatasetSplit:
    """Stratified train/validation/test partition of window indices.

    Test takes ~``test_fraction`` of each class (within one window);
    validation takes ~``validation_fraction`` of the remaining training
    portion. Deterministic given ``seed``.
    """
    labels = windows.labels() if isinstance(windows, WindowSet) else list(windows)
    n = len(labels)
    if n < 10:
        raise WindowingError(f"need at least 10 labeled windows, have {n}")

    present = {lab for lab in labels}
    for stage in SleepStage:
        if stage not in present:
            warnings.warn(f"class {stage.name} absent; stratification skips it")

    rng = np.random.default_rng(seed)
    train, validation, test = [], [], []
    for stage in SleepStage:
        idx = np.array([i for i, lab in enumerate(labels) if lab == stage], dtype=int)
        if idx.size == 0:
            continue
        idx = idx[rng.permutation(idx.size)]
        n_test = round(test_fraction * idx.size)
        test.extend(idx[:n_test])
        remaining = idx[n_test:]
        n_val = round(validation_fraction * remaining.size)
        validation.extend(remaining[:n_val])
        train.extend(remaining[n_val:])
    return DatasetSplit(
        tuple(sorted(train)), tuple(sorted(validation)), tuple(sorted(test)), seed
    )


def export_manifest(windowset: WindowSet, path, split: DatasetSplit | None = None) -> None:
    """Write the window manifest CSV: subject,start_sample,length,mode,label,split."""
    member = split.membership(len(windowset)) if split else [""] * len(windowset)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["subject", "start_sample", "length", "mode", "label", "split"])
        for i, w in enumerate(windowset.windows):
            writer.writerow(
                [
                    windowset.subject_id,
                    w.start_sample,
                    w.length_samples,
                    w.mode.value,
                    w.label.name,
                    member[i],
                ]
            )
