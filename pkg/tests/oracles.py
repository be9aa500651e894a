"""Naive, independent reference implementations used as test oracles.

Everything here is deliberately written in plain Python (math module,
explicit loops) so it shares no code path with the package: closed-form
statistics, exhaustive enumeration, direct DFTs, triple-loop
convolutions, and a scalar integer inference engine.
"""

from __future__ import annotations

import cmath
import math


# ---------------------------------------------------------------------------
# Closed-form statistics


def mean(xs):
    return sum(xs) / len(xs)


def variance(xs, ddof=0):
    m = mean(xs)
    return sum((x - m) ** 2 for x in xs) / (len(xs) - ddof)


def std(xs, ddof=0):
    return math.sqrt(variance(xs, ddof))


def median(xs):
    return percentile(xs, 50.0)


def percentile(xs, q):
    """Linear-interpolation percentile (numpy default method)."""
    s = sorted(xs)
    if len(s) == 1:
        return s[0]
    h = (len(s) - 1) * q / 100.0
    lo = math.floor(h)
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (h - lo) * (s[hi] - s[lo])


def mad(xs, scale=1.4826):
    med = median(xs)
    return median([abs(x - med) for x in xs]) * scale


def rms(xs):
    return math.sqrt(mean([x * x for x in xs]))


def rmse(xs):
    m = mean(xs)
    return math.sqrt(mean([(x - m) ** 2 for x in xs]))


def peak_to_peak(xs):
    return max(xs) - min(xs)


def kurtosis_excess(xs):
    m = mean(xs)
    m2 = mean([(x - m) ** 2 for x in xs])
    m4 = mean([(x - m) ** 4 for x in xs])
    return m4 / (m2 * m2) - 3.0


def skewness(xs):
    m = mean(xs)
    m2 = mean([(x - m) ** 2 for x in xs])
    m3 = mean([(x - m) ** 3 for x in xs])
    return m3 / m2**1.5


def rmssd(rr):
    diffs = [b - a for a, b in zip(rr, rr[1:])]
    return math.sqrt(mean([d * d for d in diffs]))


def sdsd(rr):
    diffs = [b - a for a, b in zip(rr, rr[1:])]
    return std(diffs, ddof=1)


def pnn(rr, threshold_ms):
    diffs = [abs(b - a) for a, b in zip(rr, rr[1:])]
    return 100.0 * sum(1 for d in diffs if d > threshold_ms) / len(diffs)


def hti(rr, bin_ms):
    """Histogram triangular index: n / max bin count. Callers should use
    values away from bin edges so binning is float-robust."""
    lo = math.floor(min(rr) / bin_ms) * bin_ms
    hi = math.ceil(max(rr) / bin_ms) * bin_ms
    nbins = max(1, round((hi - lo) / bin_ms))
    counts = [0] * nbins
    for x in rr:
        b = min(int((x - lo) // bin_ms), nbins - 1)
        counts[b] += 1
    return len(rr) / max(counts)


# Poincare geometry, covariance form.
def sd1(rr):
    diffs = [b - a for a, b in zip(rr, rr[1:])]
    return math.sqrt(variance(diffs, ddof=1) / 2.0)


def sd2(rr):
    sums = [a + b for a, b in zip(rr, rr[1:])]
    return math.sqrt(variance(sums, ddof=1) / 2.0)


def poincare(rr):
    s1, s2 = sd1(rr), sd2(rr)
    return {
        "SD1": s1,
        "SD2": s2,
        "SD1SD2": s1 / s2,
        "S": math.pi * s1 * s2,
        "CSI": s2 / s1,
        "CVI": math.log10(16.0 * s1 * s2),
        "CSI_Modified": 4.0 * s2 * s2 / s1,
    }


def approximate_entropy(xs, m=2, r=None):
    """Naive ApEn (Pincus): self-matches included, Chebyshev distance."""
    n = len(xs)
    if r is None:
        r = 0.2 * std(xs, ddof=1)

    def phi(mm):
        count = n - mm + 1
        logs = []
        for i in range(count):
            c = 0
            for j in range(count):
                if max(abs(xs[i + k] - xs[j + k]) for k in range(mm)) <= r:
                    c += 1
            logs.append(math.log(c / count))
        return mean(logs)

    return phi(m) - phi(m + 1)


def sample_entropy(xs, m=2, r=None):
    """Naive O(n^2) SampEn, Chebyshev distance, self-matches excluded."""
    n = len(xs)
    if r is None:
        r = 0.2 * std(xs, ddof=1)
    a = b = 0
    for i in range(n - m):
        for j in range(i + 1, n - m):
            d_m = max(abs(xs[i + k] - xs[j + k]) for k in range(m))
            if d_m <= r:
                b += 1
                d_m1 = max(abs(xs[i + k] - xs[j + k]) for k in range(m + 1))
                if d_m1 <= r:
                    a += 1
    if a == 0 or b == 0:
        return float("nan")
    return -math.log(a / b)


# ---------------------------------------------------------------------------
# Windowing


def enumerate_windows(total, window, step):
    """Exhaustive start-offset enumeration."""
    starts = []
    s = 0
    while s + window <= total:
        starts.append(s)
        s += step
    return starts


def majority_label_by_seconds(start_s, length_s, epoch_stages, epoch_s=30):
    """Covered-seconds vote; returns list of tied winners."""
    votes: dict[object, float] = {}
    t = start_s
    end = start_s + length_s
    while t < end:
        epoch = int(t // epoch_s)
        boundary = min(end, (epoch + 1) * epoch_s)
        votes[epoch_stages[epoch]] = votes.get(epoch_stages[epoch], 0) + (boundary - t)
        t = boundary
    best = max(votes.values())
    return [s for s, v in votes.items() if v == best]


# ---------------------------------------------------------------------------
# Spectra


def dft_band_fraction(xs, rate_hz, band, total_band):
    """Fraction of DFT power inside `band` relative to `total_band`."""
    n = len(xs)
    m = mean(xs)
    centered = [x - m for x in xs]
    band_p = total_p = 0.0
    for k in range(1, n // 2 + 1):
        f = k * rate_hz / n
        coeff = sum(
            centered[t] * cmath.exp(-2j * math.pi * k * t / n) for t in range(n)
        )
        p = abs(coeff) ** 2
        if total_band[0] <= f < total_band[1]:
            total_p += p
            if band[0] <= f < band[1]:
                band_p += p
    return band_p / total_p if total_p > 0 else float("nan")


def dominant_frequency(xs, times):
    """Peak-|X| frequency of an unevenly sampled series via direct DTFT
    on a fine grid."""
    m = mean(xs)
    centered = [x - m for x in xs]
    best = (0.0, 0.0)
    f = 0.05
    while f <= 0.5:
        coeff = sum(
            x * cmath.exp(-2j * math.pi * f * t) for x, t in zip(centered, times)
        )
        if abs(coeff) > best[1]:
            best = (f, abs(coeff))
        f += 0.005
    return best[0]


# ---------------------------------------------------------------------------
# Neural network reference kernels


def conv1d_loops(x, w, b, stride=1, padding=0):
    """x: list of [channels] rows; w: [filters][channels][kernel]."""
    length = len(x)
    channels = len(x[0])
    filters = len(w)
    kernel = len(w[0][0])
    padded = (
        [[0.0] * channels for _ in range(padding)]
        + [list(row) for row in x]
        + [[0.0] * channels for _ in range(padding)]
    )
    out_len = (length + 2 * padding - kernel) // stride + 1
    out = []
    for o in range(out_len):
        row = []
        for f in range(filters):
            acc = b[f]
            for c in range(channels):
                for k in range(kernel):
                    acc += w[f][c][k] * padded[o * stride + k][c]
            row.append(acc)
        out.append(row)
    return out


def dense_loops(x, w, b):
    return [b[u] + sum(w[u][i] * x[i] for i in range(len(x))) for u in range(len(w))]


def maxpool_loops(x, pool, stride):
    out_len = (len(x) - pool) // stride + 1
    return [
        [max(x[o * stride + k][c] for k in range(pool)) for c in range(len(x[0]))]
        for o in range(out_len)
    ]


def count_conv_macs_loops(length, kernel, stride, padding, in_ch, out_ch):
    out_len = (length + 2 * padding - kernel) // stride + 1
    macs = 0
    for _ in range(out_len):
        for _ in range(out_ch):
            for _ in range(in_ch):
                for _ in range(kernel):
                    macs += 1
    return macs


def parameter_count_by_shapes(config):
    """Shape-walking parameter count for the CNN builder config:
    (filters, kernels, pools, hidden, input_length, input_channels, classes)."""
    filters, kernels, pools, hidden, length, channels, classes = config
    total = 2 * channels  # batchnorm gamma+beta
    for f, k, p in zip(filters, kernels, pools):
        total += k * channels * f + f
        length = length - k + 1
        length = (length - p) // p + 1
        channels = f
    flat = length * channels
    total += flat * hidden + hidden
    total += hidden * classes + classes
    return total


# ---------------------------------------------------------------------------
# Scalar integer inference (mirrors the quantized engine contract with
# pure Python ints)


def _round_half_even_div(value: int, shift: int) -> int:
    base = value >> shift
    rem = value - (base << shift)
    half = 1 << (shift - 1)
    if rem > half or (rem == half and (base & 1)):
        return base + 1
    return base


def _rescale_scalar(acc: int, d: int) -> int:
    if d >= 0:
        v = max(-512, min(512, acc)) << d
    else:
        v = _round_half_even_div(acc, -d)
    return max(-128, min(127, v))


def _quantize_scalar(x: float, exponent: int) -> int:
    scaled = x / 2.0**exponent
    # Python's round() is round-half-to-even
    return max(-128, min(127, round(scaled)))


def scalar_quantized_inference(model, x):
    """Pure-Python mirror of infer_quantized (no numpy).

    model: ecgsleep QuantizedModel; x: nested list (length, channels).
    Returns the probability list.
    """
    q = [[_quantize_scalar(v, model.input_exponent) for v in row] for row in x]
    in_exp = model.input_exponent
    logits = None
    n = len(model.layers)
    for i, layer in enumerate(model.layers):
        kind = layer.kind
        if kind in ("conv1d", "depthwise_conv1d", "dense"):
            acc = _linear_scalar(layer, q)
            for row in acc:
                for v in row:
                    if abs(v) > 2**31 - 1:
                        raise OverflowError("int32 accumulator overflow")
            acc_exp = layer.exponents["weight"] + in_exp
            last = i + 1 >= n or model.layers[i + 1].kind == "softmax"
            if last:
                logits = [v * 2.0**acc_exp for row in acc for v in row]
                q = None
            else:
                d = acc_exp - layer.out_exponent
                q = [[_rescale_scalar(v, d) for v in row] for row in acc]
        elif kind == "relu":
            q = [[max(0, v) for v in row] for row in q]
        elif kind == "maxpool1d":
            pool = layer.params["pool"]
            stride = layer.params.get("stride", pool)
            out_len = (len(q) - pool) // stride + 1
            q = [
                [max(q[o * stride + k][c] for k in range(pool)) for c in range(len(q[0]))]
                for o in range(out_len)
            ]
        elif kind == "flatten":
            q = [[v] for row in q for v in row]
        elif kind == "softmax":
            if logits is None:
                logits = [v * 2.0**in_exp for row in q for v in row]
            mx = max(logits)
            exps = [math.exp(v - mx) for v in logits]
            s = sum(exps)
            return [e / s for e in exps]
        else:
            raise ValueError(f"unsupported kind {kind}")
        in_exp = layer.out_exponent
    if logits is not None:
        return logits
    return [v * 2.0**in_exp for row in q for v in row]


def _linear_scalar(layer, q):
    w = layer.q_weights["weight"].tolist()
    b = layer.q_weights["bias"].tolist()
    p = layer.params
    if layer.kind == "dense":
        flat = [row[0] for row in q]
        return [[b[u] + sum(int(w[u][i]) * flat[i] for i in range(len(flat)))] for u in range(len(w))]
    stride = p.get("stride", 1)
    padding = p.get("padding", 0)
    channels = len(q[0])
    if padding:
        q = [[0] * channels for _ in range(padding)] + q + [[0] * channels for _ in range(padding)]
    if layer.kind == "conv1d":
        kernel = p["kernel"]
        filters = p["filters"]
        out_len = (len(q) - kernel) // stride + 1
        return [
            [
                b[f]
                + sum(
                    int(w[f][c][k]) * q[o * stride + k][c]
                    for c in range(channels)
                    for k in range(kernel)
                )
                for f in range(filters)
            ]
            for o in range(out_len)
        ]
    kernel = p["kernel"]
    out_len = (len(q) - kernel) // stride + 1
    return [
        [
            b[c] + sum(int(w[c][k]) * q[o * stride + k][c] for k in range(kernel))
            for c in range(channels)
        ]
        for o in range(out_len)
    ]


# ---------------------------------------------------------------------------
# Classifier oracle


def knn_brute_force(train_X, train_y, query, k, n_classes):
    """Exhaustive scan; vote ties break toward the lowest class index."""
    dists = []
    for i, row in enumerate(train_X):
        d = math.sqrt(sum((a - b) ** 2 for a, b in zip(row, query)))
        dists.append((d, i))
    dists.sort(key=lambda t: (t[0], t[1]))
    votes = [0] * n_classes
    for _, i in dists[:k]:
        votes[train_y[i]] += 1
    best = max(votes)
    return votes.index(best)


def macro_f1(truth, pred, classes):
    scores = []
    for c in classes:
        tp = sum(1 for t, p in zip(truth, pred) if t == c and p == c)
        fp = sum(1 for t, p in zip(truth, pred) if t != c and p == c)
        fn = sum(1 for t, p in zip(truth, pred) if t == c and p != c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        scores.append(f1)
    return sum(scores) / len(scores)
