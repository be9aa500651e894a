"""Time-domain HRV statistics over an RR-interval series (milliseconds)."""

from __future__ import annotations

import numpy as np

TIME_FEATURE_NAMES = (
    "MeanNN",
    "SDNN",
    "RMSSD",
    "SDSD",
    "CVNN",
    "CVSD",
    "MedianNN",
    "MadNN",
    "MCVNN",
    "IQRNN",
    "SDRMSSD",
    "Prc20NN",
    "Prc80NN",
    "pNN50",
    "pNN20",
    "MinNN",
    "MaxNN",
    "HTI",
    "TINN",
)

# Robust-scale constant relating MAD to the standard deviation of a normal.
_MAD_SCALE = 1.4826
# Histogram bin width tied to the 128 Hz acquisition grid: 1/128 s in ms.
HIST_BIN_MS = 1000.0 / 128.0
_GEOMETRIC_MIN_N = 20


def compute_hrv_time_features(rr_ms: np.ndarray) -> dict[str, float]:
    """The 19 time-domain features. pNN50/pNN20 are percentages in [0, 100].

    HTI and TINN are geometric-histogram measures and need at least 20
    intervals; below that they are NaN-flagged. Fewer than 4 intervals
    flags the whole vector.
    """
    rr = np.asarray(rr_ms, dtype=np.float64)
    if rr.size == 0:
        raise ValueError("empty RR series")
    if rr.size < 4:
        return {name: float("nan") for name in TIME_FEATURE_NAMES}

    diff = np.diff(rr)
    mean = float(np.mean(rr))
    sdnn = float(np.std(rr, ddof=1))
    rmssd = float(np.sqrt(np.mean(diff**2)))
    median = float(np.median(rr))
    mad = float(np.median(np.abs(rr - median))) * _MAD_SCALE

    out = {
        "MeanNN": mean,
        "SDNN": sdnn,
        "RMSSD": rmssd,
        "SDSD": float(np.std(diff, ddof=1)),
        "CVNN": _ratio(sdnn, mean),
        "CVSD": _ratio(rmssd, mean),
        "MedianNN": median,
        "MadNN": mad,
        "MCVNN": _ratio(mad, median),
        "IQRNN": float(np.percentile(rr, 75) - np.percentile(rr, 25)),
        "SDRMSSD": _ratio(sdnn, rmssd),
        "Prc20NN": float(np.percentile(rr, 20)),
        "Prc80NN": float(np.percentile(rr, 80)),
        "pNN50": 100.0 * float(np.mean(np.abs(diff) > 50.0)),
        "pNN20": 100.0 * float(np.mean(np.abs(diff) > 20.0)),
        "MinNN": float(np.min(rr)),
        "MaxNN": float(np.max(rr)),
    }
    if rr.size >= _GEOMETRIC_MIN_N:
        counts, edges = _rr_histogram(rr)
        out["HTI"] = rr.size / float(counts.max())
        out["TINN"] = _tinn(counts, edges)
    else:
        out["HTI"] = float("nan")
        out["TINN"] = float("nan")
    return out


def _rr_histogram(rr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo = np.floor(rr.min() / HIST_BIN_MS) * HIST_BIN_MS
    hi = np.ceil(rr.max() / HIST_BIN_MS) * HIST_BIN_MS
    nbins = max(1, int(round((hi - lo) / HIST_BIN_MS)))
    counts, edges = np.histogram(rr, bins=nbins, range=(lo, lo + nbins * HIST_BIN_MS))
    return counts, edges


def _tinn(counts: np.ndarray, edges: np.ndarray) -> float:
    """Baseline width M - N of the best least-squares triangular fit to
    the RR histogram, with the apex fixed at the modal bin."""
    centers = (edges[:-1] + edges[1:]) / 2.0
    k = int(np.argmax(counts))
    peak = float(counts[k])
    n_bins = len(counts)
    if n_bins == 1:
        return 0.0

    best = (np.inf, 0.0)
    for i in range(0, k + 1):
        for j in range(k, n_bins):
            tri = np.zeros(n_bins)
            if k > i:
                left = np.arange(i, k + 1)
                tri[left] = peak * (left - i) / (k - i)
            if j > k:
                right = np.arange(k, j + 1)
                tri[right] = peak * (j - right) / (j - k)
            tri[k] = peak
            err = float(np.sum((counts - tri) ** 2))
            if err < best[0]:
                best = (err, centers[j] - centers[i])
    return best[1]


def _ratio(num: float, den: float) -> float:
    return num / den if den != 0.0 else float("nan")
