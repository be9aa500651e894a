"""8-bit integer quantization and integer-only inference.

Scheme: symmetric per-tensor quantization with power-of-two scales
(value = q * 2^e), round-half-to-even, clamp to [-128, 127]. Power-of-
two scales make every inter-layer rescale a plain bit shift, so the
integer path is exactly reproducible across platforms and thread
counts. Batch normalization is folded into the adjacent convolution or
dense layer before quantization; biases are stored as int32 at the
scale 2^(e_w + e_in); accumulators are 32-bit with overflow detection
(int64 math internally, never silent wraparound). The final softmax
runs in real arithmetic on dequantized logits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import GraphError, LayerGraph, LayerSpec, edge_shapes
from .infer import capture_edges, softmax

SCALE_EXP_MIN = -16
SCALE_EXP_MAX = 16
_INT32_MAX = 2**31 - 1
_PARAMETERIZED = ("conv1d", "depthwise_conv1d", "dense")


class QuantizationError(ValueError):
    pass


class AccumulatorOverflowError(ArithmeticError):
    """A 32-bit accumulator would have overflowed."""


@dataclass(frozen=True)
class ActivationRanges:
    """Per-edge max-abs statistics of the batchnorm-folded graph."""

    ranges: tuple[float, ...]  # input edge first, then one per layer output
    n_layers: int


@dataclass
class QuantLayer:
    kind: str
    params: dict
    q_weights: dict = field(default_factory=dict)  # int8 weights, int32 bias
    exponents: dict = field(default_factory=dict)  # per-tensor scale exponents
    out_exponent: int = SCALE_EXP_MIN


@dataclass
class QuantizedModel:
    layers: list[QuantLayer]
    input_shape: tuple[int, int]
    input_exponent: int
    metadata: dict = field(default_factory=dict)

    @property
    def class_count(self) -> int:
        return int(np.prod(_q_output_shape(self)))


def _q_output_shape(model: QuantizedModel) -> tuple[int, int]:
    ref = LayerGraph(
        [_dequantized_layer_spec(l) for l in model.layers], model.input_shape
    )
    return edge_shapes(ref)[-1]


def scale_exponent(max_abs: float) -> int:
    """Smallest power-of-two exponent whose int8 range covers max_abs:
    the least e with 127 * 2^e >= max_abs, clamped to [-16, 16]."""
    if not math.isfinite(max_abs):
        raise QuantizationError("non-finite calibration range")
    if max_abs <= 0:
        return SCALE_EXP_MIN
    e = math.ceil(math.log2(max_abs / 127.0))
    return int(min(max(e, SCALE_EXP_MIN), SCALE_EXP_MAX))


def quantize_tensor(values: np.ndarray, exponent: int) -> np.ndarray:
    """Round-half-to-even at scale 2^exponent, saturated to int8."""
    q = np.rint(np.asarray(values, dtype=np.float64) / 2.0**exponent)
    return np.clip(q, -128, 127).astype(np.int8)


def dequantize_tensor(q: np.ndarray, exponent: int) -> np.ndarray:
    return np.asarray(q, dtype=np.float64) * 2.0**exponent


def fold_batchnorm(graph: LayerGraph) -> LayerGraph:
    """Fold every batchnorm into the neighboring conv/dense layer.

    conv -> bn folds backward (output-channel rescale); bn -> conv folds
    forward (input-channel rescale plus a bias shift, which requires the
    conv to be unpadded). An unfoldable batchnorm raises GraphError.
    """
    layers = [
        LayerSpec(l.kind, dict(l.params), {k: np.array(v) for k, v in l.weights.items()})
        for l in graph.layers
    ]
    out: list[LayerSpec] = []
    i = 0
    while i < len(layers):
        layer = layers[i]
        if layer.kind != "batchnorm":
            out.append(layer)
            i += 1
            continue
        a, c = _bn_affine(layer)
        if out and out[-1].kind in _PARAMETERIZED:
            _fold_backward(out[-1], a, c)
            i += 1
        elif i + 1 < len(layers) and layers[i + 1].kind in _PARAMETERIZED:
            _fold_forward(layers[i + 1], a, c)
            i += 1
        else:
            raise GraphError("batchnorm has no adjacent conv/dense layer to fold into")
    return LayerGraph(out, graph.input_shape, dict(graph.metadata))


def _bn_affine(layer: LayerSpec) -> tuple[np.ndarray, np.ndarray]:
    gamma = np.asarray(layer.weights["gamma"], dtype=np.float64)
    beta = np.asarray(layer.weights["beta"], dtype=np.float64)
    mean = np.asarray(layer.weights["mean"], dtype=np.float64)
    var = np.asarray(layer.weights["var"], dtype=np.float64)
    eps = layer.params.get("epsilon", 1e-3)
    a = gamma / np.sqrt(var + eps)
    return a, beta - mean * a


def _fold_backward(layer: LayerSpec, a: np.ndarray, c: np.ndarray) -> None:
    w = np.asarray(layer.weights["weight"], dtype=np.float64)
    b = np.asarray(layer.weights["bias"], dtype=np.float64)
    if layer.kind == "conv1d":
        layer.weights["weight"] = w * a[:, None, None]
    elif layer.kind == "depthwise_conv1d":
        layer.weights["weight"] = w * a[:, None]
    else:
        layer.weights["weight"] = w * a[:, None]
    layer.weights["bias"] = b * a + c


def _fold_forward(layer: LayerSpec, a: np.ndarray, c: np.ndarray) -> None:
    if layer.params.get("padding", 0):
        raise GraphError("cannot fold batchnorm forward into a padded convolution")
    w = np.asarray(layer.weights["weight"], dtype=np.float64)
    b = np.asarray(layer.weights["bias"], dtype=np.float64)
    if layer.kind == "conv1d":
        layer.weights["weight"] = w * a[None, :, None]
        layer.weights["bias"] = b + np.einsum("fck,c->f", w, c)
    elif layer.kind == "depthwise_conv1d":
        layer.weights["weight"] = w * a[:, None]
        layer.weights["bias"] = b + w.sum(axis=1) * c
    else:
        layer.weights["weight"] = w * a[None, :]
        layer.weights["bias"] = b + w @ c


def calibrate(graph: LayerGraph, sample_inputs) -> ActivationRanges:
    """Max-abs per edge of the folded graph over the calibration set."""
    folded = fold_batchnorm(graph)
    maxima = None
    count = 0
    for x in sample_inputs:
        edges = capture_edges(folded, x)
        abs_max = [float(np.max(np.abs(e))) if e.size else 0.0 for e in edges]
        maxima = abs_max if maxima is None else [max(a, b) for a, b in zip(maxima, abs_max)]
        count += 1
    if count == 0:
        raise QuantizationError("empty calibration set")
    return ActivationRanges(ranges=tuple(maxima), n_layers=len(folded.layers))


def quantize_model(graph: LayerGraph, calibration: ActivationRanges) -> QuantizedModel:
    """Quantize a (foldable) float graph to the integer-only form."""
    folded = fold_batchnorm(graph)
    if calibration.n_layers != len(folded.layers):
        raise QuantizationError("calibration does not match the folded graph")
    ranges = calibration.ranges

    input_exp = scale_exponent(ranges[0])
    layers: list[QuantLayer] = []
    in_exp = input_exp
    for i, layer in enumerate(folded.layers):
        out_exp = scale_exponent(ranges[i + 1])
        if layer.kind in _PARAMETERIZED:
            w = np.asarray(layer.weights["weight"], dtype=np.float64)
            if not np.all(np.isfinite(w)):
                raise QuantizationError("non-finite weights")
            e_w = scale_exponent(float(np.max(np.abs(w))))
            q_w = quantize_tensor(w, e_w)
            b = np.asarray(layer.weights["bias"], dtype=np.float64)
            e_b = e_w + in_exp
            q_b = np.clip(np.rint(b / 2.0**e_b), -_INT32_MAX - 1, _INT32_MAX).astype(np.int64)
            layers.append(
                QuantLayer(
                    kind=layer.kind,
                    params=dict(layer.params),
                    q_weights={"weight": q_w, "bias": q_b},
                    exponents={"weight": e_w, "bias": e_b},
                    out_exponent=out_exp,
                )
            )
        else:
            # Parameter-free layers pass their input scale through: no rescale.
            layers.append(
                QuantLayer(kind=layer.kind, params=dict(layer.params), out_exponent=in_exp)
            )
        in_exp = layers[-1].out_exponent
    return QuantizedModel(
        layers=layers,
        input_shape=tuple(graph.input_shape),
        input_exponent=input_exp,
        metadata=dict(graph.metadata),
    )


def _rshift_round_half_even(v: np.ndarray, n: int) -> np.ndarray:
    base = v >> n
    rem = v - (base << n)
    half = np.int64(1) << (n - 1)
    up = (rem > half) | ((rem == half) & ((base & 1) == 1))
    return base + up


def _rescale(acc: np.ndarray, d: int) -> np.ndarray:
    """q_out = round_half_even(acc * 2^d), saturated to int8 range."""
    if d >= 0:
        v = np.clip(acc, -512, 512) << d  # anything beyond saturates regardless
    else:
        v = _rshift_round_half_even(acc, -d)
    return np.clip(v, -128, 127)


def _check_acc(acc: np.ndarray) -> None:
    if acc.size and int(np.max(np.abs(acc))) > _INT32_MAX:
        raise AccumulatorOverflowError(
            "32-bit accumulator overflow; recalibrate or reduce layer width"
        )


def quantize_input(model: QuantizedModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape != tuple(model.input_shape):
        raise GraphError(f"input shape {x.shape} does not match {model.input_shape}")
    q = np.rint(x / 2.0**model.input_exponent)
    return np.clip(q, -128, 127).astype(np.int64)


def infer_quantized(model: QuantizedModel, x: np.ndarray) -> np.ndarray:
    """Integer-only forward pass; returns class probabilities."""
    q = quantize_input(model, x)
    in_exp = model.input_exponent
    logits: np.ndarray | None = None
    n = len(model.layers)
    for i, layer in enumerate(model.layers):
        if layer.kind in _PARAMETERIZED:
            acc = _int_linear(layer, q)
            _check_acc(acc)
            acc_exp = layer.exponents["weight"] + in_exp
            is_last = i + 1 >= n or model.layers[i + 1].kind == "softmax"
            if is_last:
                logits = acc.astype(np.float64) * 2.0**acc_exp
                q = None
            else:
                q = _rescale(acc, acc_exp - layer.out_exponent)
        elif layer.kind == "relu":
            q = np.maximum(q, 0)
        elif layer.kind == "maxpool1d":
            pool = layer.params["pool"]
            stride = layer.params.get("stride", pool)
            windows = np.lib.stride_tricks.sliding_window_view(q, pool, axis=0)[::stride]
            q = windows.max(axis=2)
        elif layer.kind == "flatten":
            q = q.reshape(-1, 1)
        elif layer.kind == "softmax":
            if logits is None:
                logits = dequantize_tensor(q, in_exp)
            return softmax(logits).reshape(-1)
        else:
            raise QuantizationError(f"unsupported quantized layer {layer.kind!r}")
        in_exp = layer.out_exponent
    final = logits if logits is not None else dequantize_tensor(q, in_exp)
    return np.asarray(final, dtype=np.float64).reshape(-1)


def _int_linear(layer: QuantLayer, q: np.ndarray) -> np.ndarray:
    w = layer.q_weights["weight"].astype(np.int64)
    b = layer.q_weights["bias"]
    p = layer.params
    if layer.kind == "dense":
        return (w @ q[:, 0] + b)[:, None]
    stride = p.get("stride", 1)
    padding = p.get("padding", 0)
    if padding:
        q = np.pad(q, ((padding, padding), (0, 0)))
    if layer.kind == "conv1d":
        windows = np.lib.stride_tricks.sliding_window_view(q, w.shape[2], axis=0)[::stride]
        out = np.einsum("lck,fck->lf", windows, w)
    else:  # depthwise_conv1d
        windows = np.lib.stride_tricks.sliding_window_view(q, w.shape[1], axis=0)[::stride]
        out = np.einsum("lck,ck->lc", windows, w)
    return out + b


def _dequantized_layer_spec(layer: QuantLayer) -> LayerSpec:
    """Float view of a quantized layer (shape checking and profiling)."""
    weights = {}
    if layer.kind in _PARAMETERIZED:
        weights["weight"] = dequantize_tensor(
            layer.q_weights["weight"], layer.exponents["weight"]
        )
        weights["bias"] = dequantize_tensor(
            layer.q_weights["bias"], layer.exponents["bias"]
        )
    return LayerSpec(layer.kind, dict(layer.params), weights)


def dequantized_graph(model: QuantizedModel) -> LayerGraph:
    """The float graph induced by the stored integer weights."""
    return LayerGraph(
        [_dequantized_layer_spec(l) for l in model.layers],
        model.input_shape,
        dict(model.metadata),
    )
