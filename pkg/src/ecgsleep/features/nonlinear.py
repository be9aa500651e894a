"""Nonlinear HRV measures: Poincare geometry, fragmentation, heart-rate
asymmetry, detrended fluctuation analysis (mono- and multifractal),
entropies, and fractal/complexity indices.

Short-range measures (Poincare, fragmentation, asymmetry, single-scale
entropies, fractal dimensions) need at least 10 intervals; long-range
measures (DFA, MFDFA, multiscale entropies) need at least 100. Anything
below its threshold is NaN-flagged; the vector is never aborted.

Conventions: entropies use embedding m = 2 and tolerance r = 0.2 x SD;
multiscale entropies run over scales 1-5 (kept short so 30-second step
segments stay feasible); DFA alpha1 fits box sizes 4-16 beats.
"""

from __future__ import annotations

import math

import numpy as np

ENTROPY_M = 2
ENTROPY_R_FACTOR = 0.2
MSE_SCALES = (1, 2, 3, 4, 5)
DFA_ALPHA1_SCALES = tuple(range(4, 17))
_MFDFA_Q = np.array([-5, -4, -3, -2, -1, 1, 2, 3, 4, 5], dtype=np.float64)
SHORT_MIN_N = 10
LONG_MIN_N = 100

POINCARE_NAMES = ("SD1", "SD2", "SD1SD2", "S", "CSI", "CVI", "CSI_Modified")
FRAGMENTATION_NAMES = ("PIP", "IALS", "PSS", "PAS")
ASYMMETRY_NAMES = (
    "GI",
    "SI",
    "AI",
    "PI",
    "C1d",
    "C1a",
    "SD1d",
    "SD1a",
    "C2d",
    "C2a",
    "SD2d",
    "SD2a",
    "Cd",
    "Ca",
    "SDNNd",
    "SDNNa",
)
MFDFA_NAMES = tuple(
    "MFDFA_alpha1_" + s
    for s in ("Width", "Peak", "Mean", "Max", "Delta", "Asymmetry", "Fluctuation", "Increment")
)
ENTROPY_NAMES = ("ApEn", "SampEn", "ShanEn", "FuzzyEn", "MSEn", "CMSEn", "RCMSEn")
FRACTAL_NAMES = ("CD", "HFD", "KFD", "LZC")

NONLINEAR_FEATURE_NAMES = (
    POINCARE_NAMES
    + FRAGMENTATION_NAMES
    + ASYMMETRY_NAMES
    + ("DFA_alpha1",)
    + MFDFA_NAMES
    + ENTROPY_NAMES
    + FRACTAL_NAMES
)


def compute_hrv_nonlinear_features(
    rr_ms: np.ndarray,
    m: int = ENTROPY_M,
    r_factor: float = ENTROPY_R_FACTOR,
    scales=MSE_SCALES,
) -> dict[str, float]:
    rr = np.asarray(rr_ms, dtype=np.float64)
    out = {name: float("nan") for name in NONLINEAR_FEATURE_NAMES}
    if rr.size < SHORT_MIN_N:
        return out

    out.update(poincare_features(rr))
    out.update(fragmentation_features(rr))
    out.update(asymmetry_features(rr))
    r = r_factor * float(np.std(rr, ddof=1))
    out["ApEn"] = approximate_entropy(rr, m, r)
    out["SampEn"] = sample_entropy(rr, m, r)
    out["ShanEn"] = shannon_entropy(rr)
    out["FuzzyEn"] = fuzzy_entropy(rr, m, r)
    out["CD"] = correlation_dimension(rr)
    out["HFD"] = higuchi_fd(rr)
    out["KFD"] = katz_fd(rr)
    out["LZC"] = lempel_ziv_complexity(rr)

    if rr.size >= LONG_MIN_N:
        out["DFA_alpha1"] = dfa_alpha1(rr)
        out.update(mfdfa_alpha1_features(rr))
        out["MSEn"] = multiscale_entropy(rr, r, scales, m)
        out["CMSEn"] = composite_multiscale_entropy(rr, r, scales, m)
        out["RCMSEn"] = refined_composite_multiscale_entropy(rr, r, scales, m)
    return out


# ---------------------------------------------------------------------------
# Poincare plot geometry


def poincare_features(rr: np.ndarray) -> dict[str, float]:
    x, y = rr[:-1], rr[1:]
    # dividing after the std keeps constant series at exactly zero
    sd1 = float(np.std(y - x, ddof=1)) / math.sqrt(2)
    sd2 = float(np.std(y + x, ddof=1)) / math.sqrt(2)
    return {
        "SD1": sd1,
        "SD2": sd2,
        "SD1SD2": sd1 / sd2 if sd2 != 0 else float("nan"),
        "S": math.pi * sd1 * sd2,
        "CSI": sd2 / sd1 if sd1 != 0 else float("nan"),
        "CVI": math.log10(16 * sd1 * sd2) if sd1 * sd2 > 0 else float("nan"),
        "CSI_Modified": 4.0 * sd2**2 / sd1 if sd1 != 0 else float("nan"),
    }


# ---------------------------------------------------------------------------
# Fragmentation (sign structure of successive RR differences)


def _sign_runs(signs: np.ndarray) -> list[int]:
    runs = []
    count = 1
    for i in range(1, signs.size):
        if signs[i] == signs[i - 1]:
            count += 1
        else:
            runs.append(count)
            count = 1
    runs.append(count)
    return runs


def fragmentation_features(rr: np.ndarray) -> dict[str, float]:
    d = np.diff(rr)
    s = np.sign(d)
    n = d.size
    pip = float(np.sum(s[1:] != s[:-1])) / n
    runs = _sign_runs(s)
    ials = len(runs) / n
    pss = sum(length for length in runs if length < 3) / n

    # Alternation runs: maximal stretches of strictly alternating nonzero signs.
    alt_total = 0
    i = 0
    while i < n:
        j = i
        while j + 1 < n and s[j] != 0 and s[j + 1] == -s[j]:
            j += 1
        length = j - i + 1
        if length >= 4:
            alt_total += length
        i = j + 1
    pas = alt_total / n
    return {"PIP": pip, "IALS": ials, "PSS": pss, "PAS": pas}


# ---------------------------------------------------------------------------
# Heart-rate asymmetry (deceleration/acceleration partition of the
# Poincare cloud; uncentered short-axis distances, centroid-referenced
# long-axis distances; points on the identity line split evenly)


def asymmetry_features(rr: np.ndarray) -> dict[str, float]:
    x, y = rr[:-1], rr[1:]
    n = x.size
    d = (y - x) / math.sqrt(2)
    a = (x + y - np.mean(x) - np.mean(y)) / math.sqrt(2)
    dec = d > 0
    acc = d < 0
    noch = d == 0

    out = {name: float("nan") for name in ASYMMETRY_NAMES}

    sd1_sq_total = float(np.sum(d**2)) / n
    sd1d_sq = float(np.sum(d[dec] ** 2)) / n
    sd1a_sq = float(np.sum(d[acc] ** 2)) / n
    sd2_sq_total = float(np.sum(a**2)) / n
    half_noch = 0.5 * float(np.sum(a[noch] ** 2))
    sd2d_sq = (float(np.sum(a[dec] ** 2)) + half_noch) / n
    sd2a_sq = (float(np.sum(a[acc] ** 2)) + half_noch) / n

    out["SD1d"] = math.sqrt(sd1d_sq)
    out["SD1a"] = math.sqrt(sd1a_sq)
    out["SD2d"] = math.sqrt(sd2d_sq)
    out["SD2a"] = math.sqrt(sd2a_sq)
    if sd1_sq_total > 0:
        out["C1d"] = sd1d_sq / sd1_sq_total
        out["C1a"] = sd1a_sq / sd1_sq_total
    if sd2_sq_total > 0:
        out["C2d"] = sd2d_sq / sd2_sq_total
        out["C2a"] = sd2a_sq / sd2_sq_total
    sdnnd_sq = 0.5 * (sd1d_sq + sd2d_sq)
    sdnna_sq = 0.5 * (sd1a_sq + sd2a_sq)
    out["SDNNd"] = math.sqrt(sdnnd_sq)
    out["SDNNa"] = math.sqrt(sdnna_sq)
    if sdnnd_sq + sdnna_sq > 0:
        out["Cd"] = sdnnd_sq / (sdnnd_sq + sdnna_sq)
        out["Ca"] = sdnna_sq / (sdnnd_sq + sdnna_sq)

    off = ~noch
    dist_sum = float(np.sum(np.abs(d[off])))
    if dist_sum > 0:
        out["GI"] = 100.0 * float(np.sum(np.abs(d[dec]))) / dist_sum
    theta = np.arctan2(y, x) - math.pi / 4
    theta_sum = float(np.sum(np.abs(theta[off])))
    if theta_sum > 0:
        out["SI"] = 100.0 * float(np.sum(np.abs(theta[dec]))) / theta_sum
    sector = 0.5 * (x**2 + y**2) * np.abs(theta)
    sector_sum = float(np.sum(sector[off]))
    if sector_sum > 0:
        out["AI"] = 100.0 * float(np.sum(sector[dec])) / sector_sum
    n_off = int(np.sum(off))
    if n_off > 0:
        out["PI"] = 100.0 * float(np.sum(acc)) / n_off
    return out


# ---------------------------------------------------------------------------
# Detrended fluctuation analysis


def _dfa_fluctuations(series: np.ndarray, scales) -> tuple[np.ndarray, np.ndarray]:
    """Per-scale arrays of squared segment fluctuations (forward and
    backward segmentations, linear detrend)."""
    y = np.cumsum(series - np.mean(series))
    n_total = y.size
    per_scale = []
    kept_scales = []
    for scale in scales:
        n_seg = n_total // scale
        if n_seg < 2:
            continue
        t = np.arange(scale, dtype=np.float64)
        f2 = []
        for segs in (
            y[: n_seg * scale].reshape(n_seg, scale),
            y[n_total - n_seg * scale :].reshape(n_seg, scale),
        ):
            coeffs = np.polynomial.polynomial.polyfit(t, segs.T, 1)
            trend = coeffs.T @ np.vstack([np.ones_like(t), t])
            f2.extend(np.mean((segs - trend) ** 2, axis=1))
        per_scale.append(np.asarray(f2))
        kept_scales.append(scale)
    return np.asarray(kept_scales, dtype=np.float64), per_scale


def dfa_alpha1(rr: np.ndarray, scales=DFA_ALPHA1_SCALES) -> float:
    """Short-range DFA scaling exponent (box sizes 4-16 beats)."""
    kept, per_scale = _dfa_fluctuations(rr, scales)
    if len(kept) < 2:
        return float("nan")
    fluct = np.array([math.sqrt(np.mean(f2)) for f2 in per_scale])
    if np.any(fluct <= 0):
        return float("nan")
    slope = np.polyfit(np.log(kept), np.log(fluct), 1)[0]
    return float(slope)


def mfdfa_alpha1_features(rr: np.ndarray, scales=DFA_ALPHA1_SCALES) -> dict[str, float]:
    """Summary statistics of the short-range multifractal singularity
    spectrum: q-order fluctuations over boxes 4-16, Legendre transform of
    tau(q), then descriptors of the (alpha, f(alpha)) curve."""
    out = {name: float("nan") for name in MFDFA_NAMES}
    kept, per_scale = _dfa_fluctuations(rr, scales)
    if len(kept) < 3:
        return out

    q = _MFDFA_Q
    log_fq = np.empty((q.size, kept.size))
    for si, f2 in enumerate(per_scale):
        # floor far below physiologic RR fluctuation so q<0 moments stay finite
        f2 = np.maximum(f2, 1e-10)
        for qi, qv in enumerate(q):
            log_fq[qi, si] = math.log(np.mean(f2 ** (qv / 2.0))) / qv
    log_n = np.log(kept)
    h = np.array([np.polyfit(log_n, log_fq[qi], 1)[0] for qi in range(q.size)])
    tau = q * h - 1.0
    alpha = np.gradient(tau, q)
    f_alpha = q * alpha - tau

    width = float(np.max(alpha) - np.min(alpha))
    peak = float(alpha[int(np.argmax(f_alpha))])
    out["MFDFA_alpha1_Width"] = width
    out["MFDFA_alpha1_Peak"] = peak
    out["MFDFA_alpha1_Mean"] = float(np.mean(alpha))
    out["MFDFA_alpha1_Max"] = float(np.max(alpha))
    out["MFDFA_alpha1_Delta"] = float(alpha[0] - alpha[-1])
    if width > 0:
        left = peak - float(np.min(alpha))
        right = float(np.max(alpha)) - peak
        out["MFDFA_alpha1_Asymmetry"] = (left - right) / width
    out["MFDFA_alpha1_Fluctuation"] = float(np.max(f_alpha) - np.min(f_alpha))
    out["MFDFA_alpha1_Increment"] = float(np.mean(np.abs(np.diff(alpha))))
    return out


# ---------------------------------------------------------------------------
# Entropies


def _embed(x: np.ndarray, m: int) -> np.ndarray:
    n = x.size - m + 1
    return np.lib.stride_tricks.sliding_window_view(x, m)[:n]


def _chebyshev_counts(templates: np.ndarray, r: float) -> np.ndarray:
    """For each template, how many templates lie within Chebyshev
    distance r (self included)."""
    diff = np.abs(templates[:, None, :] - templates[None, :, :]).max(axis=2)
    return np.sum(diff <= r, axis=1)


def approximate_entropy(x: np.ndarray, m: int = ENTROPY_M, r: float | None = None) -> float:
    x = np.asarray(x, dtype=np.float64)
    if r is None:
        r = ENTROPY_R_FACTOR * float(np.std(x, ddof=1))
    if x.size < m + 2:
        return float("nan")

    def phi(mm: int) -> float:
        counts = _chebyshev_counts(_embed(x, mm), r)
        return float(np.mean(np.log(counts / counts.size)))

    return phi(m) - phi(m + 1)


def _sampen_counts(x: np.ndarray, m: int, r: float) -> tuple[int, int]:
    """Pair counts (B at length m, A at length m+1), self-matches excluded,
    both over the N - m templates that extend to length m + 1."""
    n = x.size
    if n < m + 2:
        return 0, 0
    tm = _embed(x, m)[: n - m]
    tm1 = _embed(x, m + 1)
    db = np.abs(tm[:, None, :] - tm[None, :, :]).max(axis=2)
    da = np.abs(tm1[:, None, :] - tm1[None, :, :]).max(axis=2)
    iu = np.triu_indices(n - m, k=1)
    b = int(np.sum(db[iu] <= r))
    a = int(np.sum(da[iu] <= r))
    return a, b


def sample_entropy(x: np.ndarray, m: int = ENTROPY_M, r: float | None = None) -> float:
    x = np.asarray(x, dtype=np.float64)
    if r is None:
        r = ENTROPY_R_FACTOR * float(np.std(x, ddof=1))
    a, b = _sampen_counts(x, m, r)
    if a == 0 or b == 0:
        return float("nan")
    return -math.log(a / b)


def shannon_entropy(x: np.ndarray) -> float:
    """Shannon entropy (bits) of the value histogram with ceil(sqrt(n))
    equal-width bins."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        return float("nan")
    nbins = max(1, math.ceil(math.sqrt(x.size)))
    counts, _ = np.histogram(x, bins=nbins)
    p = counts[counts > 0] / x.size
    return float(-np.sum(p * np.log2(p)))


def fuzzy_entropy(x: np.ndarray, m: int = ENTROPY_M, r: float | None = None) -> float:
    """Fuzzy entropy with exponential membership exp(-(d/r)^2) on
    baseline-removed templates."""
    x = np.asarray(x, dtype=np.float64)
    if r is None:
        r = ENTROPY_R_FACTOR * float(np.std(x, ddof=1))
    if x.size < m + 2 or r <= 0:
        return float("nan")

    def phi(mm: int) -> float:
        t = _embed(x, mm)
        t = t - t.mean(axis=1, keepdims=True)
        d = np.abs(t[:, None, :] - t[None, :, :]).max(axis=2)
        mu = np.exp(-((d / r) ** 2))
        iu = np.triu_indices(t.shape[0], k=1)
        return float(np.mean(mu[iu]))

    p_m, p_m1 = phi(m), phi(m + 1)
    if p_m <= 0 or p_m1 <= 0:
        return float("nan")
    return math.log(p_m / p_m1)


def _coarse_grain(x: np.ndarray, scale: int, offset: int = 0) -> np.ndarray:
    n = (x.size - offset) // scale
    if n < 1:
        return np.empty(0)
    return x[offset : offset + n * scale].reshape(n, scale).mean(axis=1)


def multiscale_entropy(x: np.ndarray, r: float, scales=MSE_SCALES, m: int = ENTROPY_M) -> float:
    vals = [sample_entropy(_coarse_grain(x, s), m, r) for s in scales]
    vals = [v for v in vals if not math.isnan(v)]
    return float(np.mean(vals)) if vals else float("nan")


def composite_multiscale_entropy(
    x: np.ndarray, r: float, scales=MSE_SCALES, m: int = ENTROPY_M
) -> float:
    per_scale = []
    for s in scales:
        vals = [sample_entropy(_coarse_grain(x, s, off), m, r) for off in range(s)]
        vals = [v for v in vals if not math.isnan(v)]
        if vals:
            per_scale.append(float(np.mean(vals)))
    return float(np.mean(per_scale)) if per_scale else float("nan")


def refined_composite_multiscale_entropy(
    x: np.ndarray, r: float, scales=MSE_SCALES, m: int = ENTROPY_M
) -> float:
    per_scale = []
    for s in scales:
        a_total = b_total = 0
        for off in range(s):
            a, b = _sampen_counts(_coarse_grain(x, s, off), m, r)
            a_total += a
            b_total += b
        if a_total > 0 and b_total > 0:
            per_scale.append(-math.log(a_total / b_total))
    return float(np.mean(per_scale)) if per_scale else float("nan")


# ---------------------------------------------------------------------------
# Fractal / complexity


def correlation_dimension(x: np.ndarray, m: int = 2) -> float:
    """Grassberger-Procaccia slope of log C(r) over log r, embedding
    dimension 2, radii spanning the 10th-50th percentile of pairwise
    distances."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < m + 2:
        return float("nan")
    pts = _embed(x, m)
    n = pts.shape[0]
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
    iu = np.triu_indices(n, k=1)
    dists = d[iu]
    positive = dists[dists > 0]
    if positive.size < 10:
        return float("nan")
    r_lo, r_hi = np.percentile(positive, [10, 50])
    if not (r_hi > r_lo > 0):
        return float("nan")
    radii = np.geomspace(r_lo, r_hi, 8)
    c = np.array([np.mean(dists < r) for r in radii])
    if np.any(c <= 0):
        return float("nan")
    return float(np.polyfit(np.log(radii), np.log(c), 1)[0])


def higuchi_fd(x: np.ndarray, kmax: int = 10) -> float:
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < kmax + 2:
        return float("nan")
    lengths = []
    ks = []
    for k in range(1, kmax + 1):
        lk = []
        for start in range(k):
            idx = np.arange(start, n, k)
            if idx.size < 2:
                continue
            dist = np.sum(np.abs(np.diff(x[idx])))
            norm = (n - 1) / ((idx.size - 1) * k)
            lk.append(dist * norm / k)
        if lk:
            lengths.append(np.mean(lk))
            ks.append(k)
    lengths = np.asarray(lengths)
    if np.any(lengths <= 0) or len(ks) < 2:
        return float("nan")
    slope = np.polyfit(np.log(1.0 / np.asarray(ks)), np.log(lengths), 1)[0]
    return float(slope)


def katz_fd(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.size < 3:
        return float("nan")
    length = float(np.sum(np.abs(np.diff(x))))
    d = float(np.max(np.abs(x - x[0])))
    n = x.size - 1
    if length <= 0 or d <= 0:
        return float("nan")
    return math.log10(n) / (math.log10(n) + math.log10(d / length))


def lempel_ziv_complexity(x: np.ndarray) -> float:
    """LZ76 phrase count (Kaspar-Schuster scan) of the median-binarized
    series, normalized by log2(n) / n."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < 4:
        return float("nan")
    s = bytes(int(v) for v in (x > np.median(x)))
    c, i, k, l, k_max = 1, 0, 1, 1, 1
    while True:
        if s[i + k - 1] == s[l + k - 1]:
            k += 1
            if l + k > n:
                c += 1
                break
        else:
            k_max = max(k, k_max)
            i += 1
            if i == l:
                c += 1
                l += k_max
                if l + 1 > n:
                    break
                i, k, k_max = 0, 1, 1
            else:
                k = 1
    return c * math.log2(n) / n
