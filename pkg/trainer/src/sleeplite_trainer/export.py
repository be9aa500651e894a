"""SLCW container writer (independent implementation of the documented
interchange layout) plus probe-set emission.

Layout (little-endian): magic "SLCW", u16 version 1, u8 precision
(0 float32, 1 int8), u16 layer count, i32 input length, i32 input
channels, f32 dropout annotation, then for int8 files an i8 input scale
exponent; per layer a u8 kind tag, kind-specific i32 params (batchnorm:
f32 epsilon), each tensor as u8 ndim + i32 dims (+ i8 scale exponent in
int8 files) + raw bytes (f32; int8 weights with i32 biases), and for
int8 files a trailing i8 output scale exponent per layer.

Exported graphs end at the 4-unit dense layer: the engine dequantizes
the final accumulator, so probes compare logits directly.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import torch

from .model import PARAM_COUNT_BAND, trainable_parameter_count
from .qat import QatSleepLiteNet, pow2_exponent

MAGIC = b"SLCW"
VERSION = 1
PRECISION_FLOAT32 = 0
PRECISION_INT8 = 1

# kind tags per the container documentation
KIND_CONV1D = 0
KIND_MAXPOOL1D = 2
KIND_RELU = 3
KIND_FLATTEN = 5
KIND_DENSE = 6


def _folded_layers(model: QatSleepLiteNet):
    """(kind, params, weight, bias) records with batchnorm folded into
    the first convolution; pooling/activation layers carry params only."""
    a, c = (t.detach() for t in model.folded_input_affine())
    records = []
    convs = [m for m in model.net.features if isinstance(m, torch.nn.Conv1d)]
    pools = [m for m in model.net.features if isinstance(m, torch.nn.MaxPool1d)]
    for i, (conv, pool) in enumerate(zip(convs, pools)):
        w = conv.weight.detach()
        b = conv.bias.detach()
        if i == 0:
            w = w * a[None, :, None]
            b = b + torch.einsum("fck,c->f", conv.weight.detach(), c)
        records.append(
            (
                KIND_CONV1D,
                {"kernel": w.shape[2], "stride": 1, "padding": 0, "filters": w.shape[0]},
                w.numpy().astype(np.float64),
                b.numpy().astype(np.float64),
            )
        )
        records.append((KIND_RELU, {}, None, None))
        records.append(
            (KIND_MAXPOOL1D, {"pool": pool.kernel_size, "stride": pool.kernel_size}, None, None)
        )
    records.append((KIND_FLATTEN, {}, None, None))
    records.append(
        (
            KIND_DENSE,
            {"units": model.net.hidden.out_features},
            model.net.hidden.weight.detach().numpy().astype(np.float64),
            model.net.hidden.bias.detach().numpy().astype(np.float64),
        )
    )
    records.append((KIND_RELU, {}, None, None))
    records.append(
        (
            KIND_DENSE,
            {"units": model.net.head.out_features},
            model.net.head.weight.detach().numpy().astype(np.float64),
            model.net.head.bias.detach().numpy().astype(np.float64),
        )
    )
    return records


def _param_fields(kind: int, params: dict) -> bytes:
    if kind == KIND_CONV1D:
        order = ("kernel", "stride", "padding", "filters")
    elif kind == KIND_MAXPOOL1D:
        order = ("pool", "stride")
    elif kind == KIND_DENSE:
        order = ("units",)
    else:
        order = ()
    return b"".join(struct.pack("<i", int(params[k])) for k in order)


def _dims(shape) -> bytes:
    return struct.pack("<B", len(shape)) + b"".join(
        struct.pack("<i", int(d)) for d in shape
    )


def _header(precision: int, n_layers: int, config) -> bytes:
    return (
        MAGIC
        + struct.pack("<H", VERSION)
        + struct.pack("<B", precision)
        + struct.pack("<H", n_layers)
        + struct.pack("<ii", config.input_length, config.input_channels)
        + struct.pack("<f", config.dropout_rate)
    )


def _check_contract(model: QatSleepLiteNet) -> None:
    count = trainable_parameter_count(model.net)
    lo, hi = PARAM_COUNT_BAND
    if not (lo <= count <= hi):
        raise ValueError(f"parameter count {count} outside [{lo}, {hi}]")


def export_weights(model: QatSleepLiteNet, path) -> None:
    """Write the float32 SLCW file (batchnorm folded, logits head)."""
    _check_contract(model)
    records = _folded_layers(model)
    out = [_header(PRECISION_FLOAT32, len(records), model.config)]
    for kind, params, w, b in records:
        out.append(struct.pack("<B", kind))
        out.append(_param_fields(kind, params))
        if w is not None:
            for tensor in (w, b):
                data = np.ascontiguousarray(tensor, dtype=np.float32)
                out.append(_dims(data.shape))
                out.append(data.tobytes())
    Path(path).write_bytes(b"".join(out))


def export_weights_int8(model: QatSleepLiteNet, path) -> None:
    """Write the int8 SLCW file using the QAT observers' scale exponents."""
    _check_contract(model)
    if model.quantization_mode != "qat-8bit":
        raise ValueError("int8 export needs a qat-8bit model")
    records = _folded_layers(model)
    input_exp = model.input_observer.exponent
    conv_exps = [obs.exponent for obs in model.conv_observers]
    hidden_exp = model.hidden_observer.exponent
    logit_exp = model.logit_observer.exponent

    # per-layer output-edge exponents; parameter-free layers pass theirs on
    out_exps = []
    conv_i = 0
    dense_i = 0
    cur = input_exp
    for kind, _, w, _ in records:
        if kind == KIND_CONV1D:
            cur = conv_exps[conv_i]
            conv_i += 1
        elif kind == KIND_DENSE:
            cur = hidden_exp if dense_i == 0 else logit_exp
            dense_i += 1
        out_exps.append(cur)

    out = [
        _header(PRECISION_INT8, len(records), model.config),
        struct.pack("<b", input_exp),
    ]
    in_exp = input_exp
    for (kind, params, w, b), out_exp in zip(records, out_exps):
        out.append(struct.pack("<B", kind))
        out.append(_param_fields(kind, params))
        if w is not None:
            e_w = pow2_exponent(float(np.max(np.abs(w))))
            q_w = np.clip(np.rint(w / 2.0**e_w), -128, 127).astype(np.int8)
            e_b = e_w + in_exp
            q_b = np.clip(
                np.rint(b / 2.0**e_b), -(2**31), 2**31 - 1
            ).astype("<i4")
            out.append(_dims(q_w.shape))
            out.append(struct.pack("<b", e_w))
            out.append(q_w.tobytes())
            out.append(_dims(q_b.shape))
            out.append(struct.pack("<b", e_b))
            out.append(q_b.tobytes())
        out.append(struct.pack("<b", out_exp))
        in_exp = out_exp
    Path(path).write_bytes(b"".join(out))


def write_probe_csv(inputs: np.ndarray, logits: np.ndarray, path) -> None:
    """Probe set: one row per probe, input samples then `logit<i>` columns."""
    inputs = np.asarray(inputs, dtype=np.float64)
    logits = np.asarray(logits, dtype=np.float64)
    n, length = inputs.shape[0], inputs.shape[1]
    with open(path, "w") as f:
        f.write(
            ",".join([f"x{i}" for i in range(length)] + [f"logit{c}" for c in range(logits.shape[1])])
            + "\n"
        )
        for i in range(n):
            row = [repr(float(v)) for v in inputs[i].reshape(-1)]
            row += [repr(float(v)) for v in logits[i]]
            f.write(",".join(row) + "\n")


def read_probe_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path) as f:
        header = f.readline().strip().split(",")
        n_logits = sum(1 for h in header if h.startswith("logit"))
        rows = [[float(v) for v in line.split(",")] for line in f if line.strip()]
    arr = np.array(rows)
    return arr[:, :-n_logits], arr[:, -n_logits:]
