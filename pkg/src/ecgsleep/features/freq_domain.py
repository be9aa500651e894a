"""Frequency-domain HRV features from the resampled RR tachogram.

The irregular RR series is resampled to an even 4 Hz grid by cubic
interpolation. Window-scale segments use a Welch PSD (64-s Hann
segments, 50% overlap); step-scale segments use a single periodogram.
Band powers integrate disjoint half-open bands so LF + HF + VHF equals
total power on [0.04, 0.5) Hz exactly.
"""

from __future__ import annotations

import numpy as np
from scipy import interpolate as _interp
from scipy import signal as _sig

FREQ_FEATURE_NAMES = ("LF", "HF", "VHF", "LFHF", "LFn", "HFn", "LnHF")

# HRV task-force band edges (Hz); VHF capped at the 0.5 Hz band limit.
LF_BAND = (0.04, 0.15)
HF_BAND = (0.15, 0.40)
VHF_BAND = (0.40, 0.50)

TACHOGRAM_RATE_HZ = 4.0
WELCH_SEGMENT_S = 64.0


def resample_tachogram(
    rr_ms: np.ndarray, times_s: np.ndarray, rate_hz: float = TACHOGRAM_RATE_HZ
) -> np.ndarray:
    """Cubic-interpolate the RR tachogram onto an even grid."""
    rr = np.asarray(rr_ms, dtype=np.float64)
    t = np.asarray(times_s, dtype=np.float64)
    if rr.size != t.size:
        raise ValueError("rr_ms and times_s must have equal length")
    if rr.size < 4:
        raise ValueError("need at least 4 intervals for spectral analysis")
    grid = np.arange(t[0], t[-1], 1.0 / rate_hz)
    spline = _interp.CubicSpline(t, rr)
    return np.asarray(spline(grid), dtype=np.float64)


def tachogram_psd(
    even_rr: np.ndarray, rate_hz: float = TACHOGRAM_RATE_HZ, welch: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    x = even_rr - np.mean(even_rr)
    if welch and x.size >= int(WELCH_SEGMENT_S * rate_hz):
        nperseg = int(WELCH_SEGMENT_S * rate_hz)
        return _sig.welch(x, fs=rate_hz, window="hann", nperseg=nperseg)
    return _sig.periodogram(x, fs=rate_hz, window="hann")


def band_power(freqs: np.ndarray, psd: np.ndarray, band: tuple[float, float]) -> float:
    """Rectangle-rule power over the half-open band [lo, hi)."""
    if freqs.size < 2:
        return 0.0
    df = freqs[1] - freqs[0]
    mask = (freqs >= band[0]) & (freqs < band[1])
    return float(np.sum(psd[mask]) * df)


def compute_hrv_freq_features(
    rr_ms: np.ndarray,
    times_s: np.ndarray,
    welch: bool = True,
    bands: tuple[tuple[float, float], ...] = (LF_BAND, HF_BAND, VHF_BAND),
) -> dict[str, float]:
    """LF/HF/VHF band powers plus the derived ratios.

    Zero-power bands make the ratio features NaN-flagged rather than
    infinite, so downstream learners stay total.
    """
    even = resample_tachogram(rr_ms, times_s)
    if even.size < 8:
        return {name: float("nan") for name in FREQ_FEATURE_NAMES}
    freqs, psd = tachogram_psd(even, welch=welch)
    lf = band_power(freqs, psd, bands[0])
    hf = band_power(freqs, psd, bands[1])
    vhf = band_power(freqs, psd, bands[2])
    total = lf + hf
    return {
        "LF": lf,
        "HF": hf,
        "VHF": vhf,
        "LFHF": lf / hf if hf > 0 else float("nan"),
        "LFn": lf / total if total > 0 else float("nan"),
        "HFn": hf / total if total > 0 else float("nan"),
        "LnHF": float(np.log(hf)) if hf > 0 else float("nan"),
    }
