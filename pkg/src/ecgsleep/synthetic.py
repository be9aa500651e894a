"""Synthetic ECG recordings with stage-dependent beat statistics.

Used by the test suite and the CLI demo path so the whole pipeline runs
without clinical recordings. Each sleep stage gets its own RR mean,
beat-to-beat jitter, and respiratory modulation frequency; beats are
narrow Gaussian spikes whose amplitude is modulated at the respiration
rate (so the EDR surrogate carries signal too).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import EPOCH_SECONDS, EcgRecording, SleepStage, StageAnnotation


@dataclass(frozen=True)
class StageProfile:
    mean_rr_s: float
    jitter_rr_s: float
    resp_hz: float


STAGE_PROFILES = {
    SleepStage.WAKE: StageProfile(0.75, 0.050, 0.28),
    SleepStage.REM: StageProfile(0.85, 0.065, 0.24),
    SleepStage.LIGHT: StageProfile(0.95, 0.025, 0.22),
    SleepStage.DEEP: StageProfile(1.10, 0.010, 0.18),
}

_RAW_LABEL = {
    SleepStage.WAKE: "W",
    SleepStage.REM: "REM",
    SleepStage.LIGHT: "S2",
    SleepStage.DEEP: "S3",
}


def generate_recording(
    stages,
    sample_rate_hz: int = 128,
    seed: int = 0,
    noise_std: float = 0.02,
    resp_depth: float = 0.2,
    subject_id: str = "synthetic",
) -> EcgRecording:
    """Build a recording whose epochs follow ``stages`` (one SleepStage,
    or None for an artifact epoch, per 30-s epoch)."""
    stages = list(stages)
    rng = np.random.default_rng(seed)
    duration_s = len(stages) * EPOCH_SECONDS
    n = duration_s * sample_rate_hz
    samples = rng.normal(0.0, noise_std, size=n)

    t = 0.35  # first beat offset; clears the detector's filter transient
    while t < duration_s - 0.1:
        stage = stages[int(t // EPOCH_SECONDS)]
        profile = STAGE_PROFILES[stage if stage is not None else SleepStage.WAKE]
        amplitude = 1.0 + resp_depth * np.sin(2 * np.pi * profile.resp_hz * t)
        _add_spike(samples, t, amplitude, sample_rate_hz)
        rr = rng.normal(profile.mean_rr_s, profile.jitter_rr_s)
        t += float(np.clip(rr, 0.4, 2.0))

    annotations = tuple(
        StageAnnotation(
            start_sample=i * EPOCH_SECONDS * sample_rate_hz,
            raw_label=_RAW_LABEL[s] if s is not None else "ARTIFACT",
            mapped=s,
        )
        for i, s in enumerate(stages)
    )
    return EcgRecording(subject_id, sample_rate_hz, samples, annotations)


def _add_spike(samples: np.ndarray, t_s: float, amplitude: float, rate: int) -> None:
    center = int(round(t_s * rate))
    sigma = 0.006 * rate  # ~6 ms QRS-like width
    half = int(round(0.03 * rate))
    lo = max(0, center - half)
    hi = min(len(samples), center + half + 1)
    idx = np.arange(lo, hi)
    samples[idx] += amplitude * np.exp(-0.5 * ((idx - center) / sigma) ** 2)


def block_stages(block_minutes: float, pattern=None, repeats: int = 1):
    """Stage sequence of equal blocks, e.g. 5-minute Wake/Light/Deep/REM."""
    pattern = pattern or [
        SleepStage.WAKE,
        SleepStage.LIGHT,
        SleepStage.DEEP,
        SleepStage.REM,
    ]
    per_block = int(block_minutes * 60 // EPOCH_SECONDS)
    out = []
    for _ in range(repeats):
        for stage in pattern:
            out.extend([stage] * per_block)
    return out
