import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ecgsleep.ingest import EcgRecording, SleepStage, StageAnnotation


def make_spike_train(
    rate: int,
    duration_s: float,
    period_s: float,
    start_s: float = 0.35,
    amplitude=1.0,
    width_s: float = 0.012,
    n_spikes: int | None = None,
) -> np.ndarray:
    """Zero signal with narrow Gaussian spikes every `period_s`."""
    n = int(round(duration_s * rate))
    x = np.zeros(n)
    sigma = width_s * rate / 2.0
    count = 0
    t = start_s
    while t < duration_s - 0.05 and (n_spikes is None or count < n_spikes):
        center = int(round(t * rate))
        amp = amplitude(t) if callable(amplitude) else amplitude
        half = int(round(3 * sigma))
        idx = np.arange(max(0, center - half), min(n, center + half + 1))
        x[idx] += amp * np.exp(-0.5 * ((idx - center) / sigma) ** 2)
        count += 1
        t += period_s
    return x


def recording_with_stages(stage_per_epoch, rate: int = 128, seed: int = 0) -> EcgRecording:
    """Recording of plain noise whose annotations follow stage_per_epoch
    (SleepStage or None for excluded epochs)."""
    raw = {
        SleepStage.WAKE: "W",
        SleepStage.REM: "REM",
        SleepStage.LIGHT: "S1",
        SleepStage.DEEP: "S4",
    }
    rng = np.random.default_rng(seed)
    n = len(stage_per_epoch) * 30 * rate
    annotations = tuple(
        StageAnnotation(i * 30 * rate, raw[s] if s is not None else "INDET", s)
        for i, s in enumerate(stage_per_epoch)
    )
    return EcgRecording("fixture", rate, rng.normal(0, 1, n), annotations)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
