"""R-peak detection and beat-derived series.

The detector is a Pan-Tompkins-style pipeline: causal 5-15 Hz band-pass,
derivative, squaring, moving-window integration, then an adaptive
threshold with a 200 ms refractory period. All thresholds are relative
(fractions of running peak estimates), so detected peak positions are
invariant to positive amplitude scaling and equivariant to time shifts.
Detection runs on the raw, un-denoised signal; the internal band-pass is
part of detection, not stored preprocessing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as _sig

RR_MIN_MS = 200.0
RR_MAX_MS = 4000.0
REFRACTORY_S = 0.2
_MWI_S = 0.15  # moving-window integration width
_BAND_HZ = (5.0, 15.0)


class InsufficientBeatsError(ValueError):
    """Fewer beats than the downstream computation needs."""


@dataclass(frozen=True)
class RPeakSeries:
    """Detected R-peaks of one segment."""

    peak_indices: np.ndarray  # strictly increasing sample indices
    sample_rate_hz: int

    def __post_init__(self):
        idx = np.asarray(self.peak_indices, dtype=int)
        if idx.size and np.any(np.diff(idx) <= 0):
            raise ValueError("peak indices must be strictly increasing")
        object.__setattr__(self, "peak_indices", idx)

    def __len__(self) -> int:
        return len(self.peak_indices)

    @property
    def times_s(self) -> np.ndarray:
        return self.peak_indices / self.sample_rate_hz

    @property
    def rr_ms(self) -> np.ndarray:
        return derive_rr_series(self)


@dataclass(frozen=True)
class EdrSeries:
    """Respiration surrogate: detrended R-wave amplitudes at peak times."""

    values: np.ndarray
    times_s: np.ndarray

    def __post_init__(self):
        if len(self.values) != len(self.times_s):
            raise ValueError("values and times must have equal length")

    def __len__(self) -> int:
        return len(self.values)


def detect_rpeaks(segment: np.ndarray, rate: int) -> RPeakSeries:
    """Detect R-peaks in ``segment`` sampled at ``rate`` Hz.

    Raises InsufficientBeatsError when fewer than 3 peaks are found, in
    which case feature extraction for the window is skipped.
    """
    x = np.asarray(segment, dtype=np.float64)
    if x.size < 2 * rate:
        raise ValueError("segment must be at least 2 s long")

    mwi = _integrated_energy(x, rate)
    spacing = max(1, int(round(REFRACTORY_S * rate)))
    candidates, _ = _sig.find_peaks(mwi, distance=spacing)
    if candidates.size == 0:
        raise InsufficientBeatsError("insufficient beats: no candidate peaks")

    peak_max = float(mwi.max())
    # Running signal/noise peak estimates (relative, hence scale-invariant).
    spki = 0.25 * peak_max
    npki = 0.0
    accepted = []
    for c in candidates:
        v = mwi[c]
        threshold = npki + 0.25 * (spki - npki)
        if v >= threshold:
            accepted.append(c)
            spki = 0.125 * v + 0.875 * spki
        else:
            npki = 0.125 * v + 0.875 * npki

    # Map integrated-energy peaks back to raw R-wave samples.
    lookback = int(round((_MWI_S + 0.06) * rate))
    raw_peaks = []
    for c in accepted:
        lo = max(0, c - lookback)
        r = lo + int(np.argmax(np.abs(x[lo : c + 1])))
        raw_peaks.append(r)

    # Refractory on final indices; keep the earlier peak of a close pair.
    refractory = int(round(REFRACTORY_S * rate))
    kept = []
    for r in sorted(set(raw_peaks)):
        if not kept or r - kept[-1] >= refractory:
            kept.append(r)

    if len(kept) < 3:
        raise InsufficientBeatsError(f"insufficient beats: {len(kept)} peaks")
    return RPeakSeries(np.asarray(kept, dtype=int), rate)


def _integrated_energy(x: np.ndarray, rate: int) -> np.ndarray:
    """Band-pass -> derivative -> square -> moving-window integration.

    Every stage is causal and LTI (squaring pointwise), which preserves
    time-shift equivariance of downstream peak positions.
    """
    nyq = rate / 2.0
    lo = min(_BAND_HZ[0] / nyq, 0.95)
    hi = min(_BAND_HZ[1] / nyq, 0.99)
    b, a = _sig.butter(2, [lo, hi], btype="band")
    filtered = _sig.lfilter(b, a, x)
    # Five-point derivative (causal form).
    deriv = _sig.lfilter(np.array([1.0, 2.0, 0.0, -2.0, -1.0]) / 8.0, [1.0], filtered)
    squared = deriv * deriv
    w = max(1, int(round(_MWI_S * rate)))
    return _sig.lfilter(np.ones(w) / w, [1.0], squared)


def derive_rr_series(peaks: RPeakSeries) -> np.ndarray:
    """Successive peak differences in milliseconds, physiologically
    filtered to (200, 4000) ms. The filter is idempotent."""
    if len(peaks) < 2:
        raise InsufficientBeatsError("insufficient beats: need >= 2 peaks")
    rr = np.diff(peaks.peak_indices) * (1000.0 / peaks.sample_rate_hz)
    rr = rr[(rr > RR_MIN_MS) & (rr < RR_MAX_MS)]
    if rr.size == 0:
        raise InsufficientBeatsError("insufficient beats: all intervals rejected")
    return rr


def dump_peaks_csv(recording, windows, path) -> None:
    """Debug dump: detected peaks per window as
    ``window_id,peak_sample,rr_ms`` (rr_ms empty for the first beat and
    for intervals outside the physiologic band)."""
    with open(path, "w") as f:
        f.write("window_id,peak_sample,rr_ms\n")
        for wid, window in enumerate(windows.windows):
            segment = windows.slice(recording, window)
            try:
                peaks = detect_rpeaks(segment, recording.sample_rate_hz)
            except InsufficientBeatsError:
                continue
            rr = np.diff(peaks.peak_indices) * (1000.0 / peaks.sample_rate_hz)
            for i, idx in enumerate(peaks.peak_indices):
                interval = rr[i - 1] if i > 0 else None
                cell = ""
                if interval is not None and RR_MIN_MS < interval < RR_MAX_MS:
                    cell = repr(float(interval))
                f.write(f"{wid},{window.start_sample + int(idx)},{cell}\n")


def derive_edr_series(segment: np.ndarray, peaks: RPeakSeries) -> EdrSeries:
    """Raw amplitude at each peak, linearly detrended across the segment."""
    x = np.asarray(segment, dtype=np.float64)
    amps = x[peaks.peak_indices]
    t = peaks.times_s
    if len(peaks) >= 2:
        coeffs = np.polyfit(t, amps, 1)
        amps = amps - np.polyval(coeffs, t)
    else:
        amps = amps - amps.mean()
    return EdrSeries(values=amps, times_s=t)
