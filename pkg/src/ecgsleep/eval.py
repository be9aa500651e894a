"""Evaluation metrics and hypnogram emission.

Macro metrics average per-class precision/recall/F1 over the fixed class
order; macro F1 is the mean of per-class F1 values (not the F1 of macro
precision/recall). Classes absent from the truth contribute zero with a
warning.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .ingest import STAGE_ORDER, SleepStage
from .windowing import WindowSet


@dataclass(frozen=True)
class MetricsResult:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: np.ndarray  # (true, predicted) counts in class order
    classes: tuple

    @property
    def per_class_f1(self) -> np.ndarray:
        return _per_class(self.confusion)[2]


def _per_class(cm: np.ndarray):
    tp = np.diag(cm).astype(float)
    pred_tot = cm.sum(axis=0).astype(float)
    true_tot = cm.sum(axis=1).astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(pred_tot > 0, tp / pred_tot, 0.0)
        recall = np.where(true_tot > 0, tp / true_tot, 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / denom, 0.0)
    return precision, recall, f1


def compute_metrics(truth, pred, classes=None) -> MetricsResult:
    """Accuracy, macro precision/recall/F1, and the confusion matrix."""
    truth = list(truth)
    pred = list(pred)
    if len(truth) != len(pred):
        raise ValueError("truth and predictions must have equal length")
    if len(truth) == 0:
        raise ValueError("need at least one sample")
    if classes is None:
        classes = (
            STAGE_ORDER
            if isinstance(truth[0], SleepStage)
            else tuple(sorted(set(truth) | set(pred)))
        )
    classes = tuple(classes)
    index = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    cm = np.zeros((k, k), dtype=int)
    for t, p in zip(truth, pred):
        cm[index[t], index[p]] += 1

    absent = [c for i, c in enumerate(classes) if cm[i].sum() == 0]
    for c in absent:
        name = c.name if isinstance(c, SleepStage) else c
        warnings.warn(f"class {name} absent from truth; contributes zero to macro metrics")

    precision, recall, f1 = _per_class(cm)
    return MetricsResult(
        accuracy=float(np.trace(cm) / cm.sum()),
        macro_precision=float(np.mean(precision)),
        macro_recall=float(np.mean(recall)),
        macro_f1=float(np.mean(f1)),
        confusion=cm,
        classes=classes,
    )


@dataclass(frozen=True)
class Hypnogram:
    """Stage predictions on the step-cadence grid; None marks a gap
    (dropped window), never interpolated."""

    entries: tuple[tuple[float, SleepStage | None], ...]
    step_s: int

    def __post_init__(self):
        times = [t for t, _ in self.entries]
        if any(abs((b - a) - self.step_s) > 1e-9 for a, b in zip(times, times[1:])):
            raise ValueError("hypnogram timestamps must step uniformly")


def emit_hypnogram(windows: WindowSet, predictions) -> Hypnogram:
    """One entry per window at the mode's step cadence (10 s for DL,
    30 s for ML). Windows missing from the step grid become gap markers."""
    predictions = list(predictions)
    if len(predictions) != len(windows.windows):
        raise ValueError("one prediction per window required")
    step_s = windows.config.step_s
    step = step_s * windows.sample_rate_hz
    by_offset = {
        w.start_sample: predictions[i] for i, w in enumerate(windows.windows)
    }
    if not by_offset:
        return Hypnogram(entries=(), step_s=step_s)
    first = min(by_offset)
    last = max(by_offset)
    entries = []
    for start in range(first, last + 1, step):
        t = start / windows.sample_rate_hz
        entries.append((t, by_offset.get(start)))
    return Hypnogram(entries=tuple(entries), step_s=step_s)


def export_hypnogram_csv(hyp: Hypnogram, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["timestamp_s", "stage"])
        for t, stage in hyp.entries:
            writer.writerow([t, stage.name if stage is not None else "GAP"])


def plot_hypnogram(hyp: Hypnogram, path) -> None:
    """Render the classic step plot (Wake on top, Deep at the bottom)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    level = {
        SleepStage.WAKE: 3,
        SleepStage.REM: 2,
        SleepStage.LIGHT: 1,
        SleepStage.DEEP: 0,
    }
    times = [t for t, _ in hyp.entries]
    values = [level[s] if s is not None else np.nan for _, s in hyp.entries]
    fig, ax = plt.subplots(figsize=(10, 3))
    ax.step(times, values, where="post")
    ax.set_yticks([0, 1, 2, 3])
    ax.set_yticklabels(["Deep", "Light", "REM", "Wake"])
    ax.set_xlabel("time (s)")
    ax.set_title(f"Hypnogram ({hyp.step_s}-s resolution)")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
