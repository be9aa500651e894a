"""Statistical features of the ECG-derived respiration (EDR) series."""

from __future__ import annotations

import numpy as np

EDR_FEATURE_NAMES = (
    "max",
    "min",
    "mean",
    "median",
    "std",
    "var",
    "peak_to_peak",
    "rmse",
    "kurtosis",
    "skewness",
    "waveform_factor",
    "peak_factor",
    "impulse_factor",
    "margin_factor",
    "rms",
)


def compute_edr_features(values: np.ndarray) -> dict[str, float]:
    """The 15 EDR amplitude-distribution features.

    Ratio features with a zero denominator come back NaN (flagged for
    imputation downstream). Fewer than 2 points yields an all-NaN vector
    (dispersion is undefined below that).
    """
    x = np.asarray(values, dtype=np.float64)
    if x.size < 2:
        return {name: float("nan") for name in EDR_FEATURE_NAMES}

    mean = float(np.mean(x))
    std = float(np.std(x, ddof=1))
    var = float(np.var(x, ddof=1))
    p2p = float(np.max(x) - np.min(x))
    rms = float(np.sqrt(np.mean(x * x)))
    rmse = float(np.sqrt(np.mean((x - mean) ** 2)))
    centered = x - mean
    m2 = float(np.mean(centered**2))
    if m2 > 0:
        kurtosis = float(np.mean(centered**4) / m2**2 - 3.0)
        skewness = float(np.mean(centered**3) / m2**1.5)
    else:
        kurtosis = float("nan")
        skewness = float("nan")

    return {
        "max": float(np.max(x)),
        "min": float(np.min(x)),
        "mean": mean,
        "median": float(np.median(x)),
        "std": std,
        "var": var,
        "peak_to_peak": p2p,
        "rmse": rmse,
        "kurtosis": kurtosis,
        "skewness": skewness,
        "waveform_factor": _ratio(rmse, mean),
        "peak_factor": _ratio(p2p, rmse),
        "impulse_factor": _ratio(p2p, mean),
        "margin_factor": _ratio(p2p, rms),
        "rms": rms,
    }


def _ratio(num: float, den: float) -> float:
    return num / den if den != 0.0 else float("nan")
