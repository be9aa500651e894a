"""Handcrafted feature extraction over dual-scale ECG windows.

Each 5-minute analysis window yields two feature sets computed by the
same four families (EDR statistics, HRV time domain, HRV frequency
domain, HRV nonlinear): one over the 30-second step segment at the start
of the window and one over the full 300-second window. Names follow
``<scale>.<family>.<name>`` with scale in {step30, win300}; the global
ordering is fixed and hash-stable.
"""

from __future__ import annotations

import csv
import hashlib
import warnings
from dataclasses import dataclass

import numpy as np

from ..cardio import (
    InsufficientBeatsError,
    RR_MAX_MS,
    RR_MIN_MS,
    derive_edr_series,
    derive_rr_series,
    detect_rpeaks,
)
from ..ingest import EcgRecording, SleepStage
from ..windowing import WindowSet
from . import freq_domain, nonlinear
from .edr import EDR_FEATURE_NAMES, compute_edr_features
from .freq_domain import FREQ_FEATURE_NAMES, compute_hrv_freq_features
from .nonlinear import NONLINEAR_FEATURE_NAMES, compute_hrv_nonlinear_features
from .selection import RfeSelection, RfeSelector, rfe_select
from .time_domain import TIME_FEATURE_NAMES, compute_hrv_time_features

STEP_SCALE = "step30"
WINDOW_SCALE = "win300"
STEP_SECONDS = 30

_FAMILIES = (
    ("edr", EDR_FEATURE_NAMES),
    ("time", TIME_FEATURE_NAMES),
    ("freq", FREQ_FEATURE_NAMES),
    ("nonlinear", NONLINEAR_FEATURE_NAMES),
)


def scale_feature_names(scale: str) -> tuple[str, ...]:
    return tuple(
        f"{scale}.{family}.{name}" for family, names in _FAMILIES for name in names
    )


def feature_catalog() -> tuple[str, ...]:
    """The full ordered feature-name catalog (step30 block then win300)."""
    return scale_feature_names(STEP_SCALE) + scale_feature_names(WINDOW_SCALE)


def catalog_hash() -> str:
    """SHA-256 of the ordered catalog; stable across runs and platforms."""
    return hashlib.sha256("\n".join(feature_catalog()).encode()).hexdigest()


@dataclass(frozen=True)
class FeatureVector:
    names: tuple[str, ...]
    values: np.ndarray
    window_id: int

    def __post_init__(self):
        if len(self.names) != len(self.values):
            raise ValueError("names and values must have equal length")
        if len(set(self.names)) != len(self.names):
            raise ValueError("feature names must be unique")


@dataclass(frozen=True)
class FeatureParams:
    """Tunable extraction knobs surfaced in the pipeline config file."""

    lf_band: tuple[float, float] = freq_domain.LF_BAND
    hf_band: tuple[float, float] = freq_domain.HF_BAND
    vhf_band: tuple[float, float] = freq_domain.VHF_BAND
    entropy_m: int = nonlinear.ENTROPY_M
    entropy_r_factor: float = nonlinear.ENTROPY_R_FACTOR
    mse_scale_max: int = max(nonlinear.MSE_SCALES)


def compute_scale_features(
    segment: np.ndarray, rate: int, welch: bool, params: FeatureParams | None = None
) -> dict[str, float]:
    """All four families on one segment. Raises InsufficientBeatsError
    when the detector finds fewer than 3 beats (the window is skipped)."""
    params = params or FeatureParams()
    peaks = detect_rpeaks(segment, rate)
    rr = derive_rr_series(peaks)
    rr_times = _rr_times(peaks)
    edr = derive_edr_series(segment, peaks)

    out = dict(compute_edr_features(edr.values))
    out = {f"edr.{k}": v for k, v in out.items()}
    out.update({f"time.{k}": v for k, v in compute_hrv_time_features(rr).items()})
    try:
        freq = compute_hrv_freq_features(
            rr, rr_times, welch=welch,
            bands=(params.lf_band, params.hf_band, params.vhf_band),
        )
    except ValueError:
        freq = {name: float("nan") for name in FREQ_FEATURE_NAMES}
    out.update({f"freq.{k}": v for k, v in freq.items()})
    out.update(
        {
            f"nonlinear.{k}": v
            for k, v in compute_hrv_nonlinear_features(
                rr,
                m=params.entropy_m,
                r_factor=params.entropy_r_factor,
                scales=tuple(range(1, params.mse_scale_max + 1)),
            ).items()
        }
    )
    return out


def _rr_times(peaks) -> np.ndarray:
    """Times (s) of the second beat of each physiologically kept interval."""
    rr_all = np.diff(peaks.peak_indices) * (1000.0 / peaks.sample_rate_hz)
    keep = (rr_all > RR_MIN_MS) & (rr_all < RR_MAX_MS)
    return peaks.times_s[1:][keep]


def assemble_feature_vector(
    step_features: dict[str, float], window_features: dict[str, float], window_id: int = -1
) -> FeatureVector:
    """Concatenate the two scales into the fixed global ordering."""
    names = feature_catalog()
    values = np.empty(len(names))
    for i, name in enumerate(names):
        scale, rest = name.split(".", 1)
        source = step_features if scale == STEP_SCALE else window_features
        values[i] = source[rest]
    return FeatureVector(names=names, values=values, window_id=window_id)


@dataclass(frozen=True)
class FeatureMatrix:
    names: tuple[str, ...]
    values: np.ndarray  # (n_windows, n_features)
    window_ids: tuple[int, ...]
    labels: tuple[SleepStage, ...]
    skipped: tuple[int, ...] = ()  # window ids dropped for insufficient beats


def extract_features(
    recording: EcgRecording, windows: WindowSet, params: FeatureParams | None = None
) -> FeatureMatrix:
    """Feature matrix over all ML-mode windows of one recording."""
    rate = recording.sample_rate_hz
    step_len = STEP_SECONDS * rate
    rows, ids, labels, skipped = [], [], [], []
    for wid, window in enumerate(windows.windows):
        segment = windows.slice(recording, window)
        try:
            step = compute_scale_features(segment[:step_len], rate, welch=False, params=params)
            full = compute_scale_features(segment, rate, welch=True, params=params)
        except InsufficientBeatsError:
            skipped.append(wid)
            continue
        rows.append(assemble_feature_vector(step, full, wid).values)
        ids.append(wid)
        labels.append(window.label)
    values = np.vstack(rows) if rows else np.empty((0, len(feature_catalog())))
    return FeatureMatrix(
        names=feature_catalog(),
        values=values,
        window_ids=tuple(ids),
        labels=tuple(labels),
        skipped=tuple(skipped),
    )


def export_feature_csv(matrix: FeatureMatrix, path, split_names=None) -> None:
    """CSV export: ordered feature columns, then label and split."""
    split_names = split_names or [""] * len(matrix.window_ids)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(list(matrix.names) + ["label", "split"])
        for row, label, split in zip(matrix.values, matrix.labels, split_names):
            writer.writerow([repr(float(v)) for v in row] + [label.name, split])


class MedianImputer:
    """Impute NaN-flagged entries with training-split medians.

    Columns that are entirely NaN in the training split fall back to 0.
    Fit on training rows only so no test information leaks in.
    """

    def __init__(self):
        self.medians_ = None

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN columns
            med = np.nanmedian(X, axis=0)
        self.medians_ = np.where(np.isnan(med), 0.0, med)
        return self

    def transform(self, X):
        if self.medians_ is None:
            raise RuntimeError("imputer not fitted")
        X = np.array(X, dtype=np.float64, copy=True)
        nan_mask = np.isnan(X)
        X[nan_mask] = np.broadcast_to(self.medians_, X.shape)[nan_mask]
        return X

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)


__all__ = [
    "FeatureMatrix",
    "FeatureParams",
    "FeatureVector",
    "MedianImputer",
    "RfeSelection",
    "RfeSelector",
    "assemble_feature_vector",
    "catalog_hash",
    "compute_edr_features",
    "compute_hrv_freq_features",
    "compute_hrv_nonlinear_features",
    "compute_hrv_time_features",
    "compute_scale_features",
    "export_feature_csv",
    "extract_features",
    "feature_catalog",
    "rfe_select",
    "scale_feature_names",
]
