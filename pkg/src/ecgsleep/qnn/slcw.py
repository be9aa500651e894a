"""SLCW weight container: the interchange format between trainers and
this inference engine.

Little-endian layout:

    magic   4 bytes  b"SLCW"
    u16     version (currently 1)
    u8      precision: 0 = float32, 1 = int8
    u16     layer count
    i32     input length
    i32     input channels
    f32     dropout rate annotation (identity at inference)
    i8      input activation scale exponent        [int8 files only]
    then per layer:
      u8    kind tag (index into graph.KINDS)
      i32.. kind-specific params:
              conv1d: kernel, stride, padding, filters
              depthwise_conv1d: kernel, stride, padding
              maxpool1d: pool, stride
              dense: units
              batchnorm: f32 epsilon
      per tensor in document order (see graph.TENSOR_ORDER):
              u8 ndim, i32 dims...
              i8 scale exponent                    [int8 files only]
              raw bytes: f32 (float32 files); int8 weights and
              i32 biases (int8 files)
      i8    output activation scale exponent       [int8 files only]

Round-trips are byte-identical for int8 models and exact at float32
precision for float models.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .graph import KINDS, TENSOR_ORDER, GraphError, LayerGraph, LayerSpec
from .quantize import QuantLayer, QuantizedModel

MAGIC = b"SLCW"
VERSION = 1
PRECISION_FLOAT32 = 0
PRECISION_INT8 = 1

_PARAM_FIELDS = {
    "conv1d": ("kernel", "stride", "padding", "filters"),
    "depthwise_conv1d": ("kernel", "stride", "padding"),
    "maxpool1d": ("pool", "stride"),
    "dense": ("units",),
}


class FormatError(ValueError):
    pass


def save_model(model, path) -> None:
    if isinstance(model, QuantizedModel):
        blob = _encode_quantized(model)
    elif isinstance(model, LayerGraph):
        blob = _encode_float(model)
    else:
        raise FormatError(f"cannot serialize {type(model).__name__}")
    Path(path).write_bytes(blob)


def load_model(path):
    """Load a float graph or a quantized model, validating shapes."""
    return decode_model(Path(path).read_bytes())


def _header(precision: int, n_layers: int, input_shape, dropout: float) -> bytes:
    return (
        MAGIC
        + struct.pack("<H", VERSION)
        + struct.pack("<B", precision)
        + struct.pack("<H", n_layers)
        + struct.pack("<ii", int(input_shape[0]), int(input_shape[1]))
        + struct.pack("<f", float(dropout))
    )


def _encode_params(kind: str, params: dict) -> bytes:
    if kind == "batchnorm":
        return struct.pack("<f", float(params.get("epsilon", 1e-3)))
    fields = _PARAM_FIELDS.get(kind, ())
    defaults = {"stride": _default_stride(kind, params), "padding": 0}
    return b"".join(
        struct.pack("<i", int(params.get(f, defaults.get(f, 0)))) for f in fields
    )


def _default_stride(kind: str, params: dict) -> int:
    return params.get("pool", 1) if kind == "maxpool1d" else 1


def _encode_float(graph: LayerGraph) -> bytes:
    out = [
        _header(
            PRECISION_FLOAT32,
            len(graph.layers),
            graph.input_shape,
            graph.metadata.get("dropout_rate", 0.0),
        )
    ]
    for layer in graph.layers:
        out.append(struct.pack("<B", KINDS.index(layer.kind)))
        out.append(_encode_params(layer.kind, layer.params))
        for name in TENSOR_ORDER.get(layer.kind, ()):
            tensor = np.ascontiguousarray(layer.weights[name], dtype=np.float32)
            out.append(_encode_dims(tensor.shape))
            out.append(tensor.tobytes())
    return b"".join(out)


def _encode_quantized(model: QuantizedModel) -> bytes:
    out = [
        _header(
            PRECISION_INT8,
            len(model.layers),
            model.input_shape,
            model.metadata.get("dropout_rate", 0.0),
        ),
        struct.pack("<b", model.input_exponent),
    ]
    for layer in model.layers:
        out.append(struct.pack("<B", KINDS.index(layer.kind)))
        out.append(_encode_params(layer.kind, layer.params))
        for name in TENSOR_ORDER.get(layer.kind, ()):
            dtype = np.int32 if name == "bias" else np.int8
            tensor = np.ascontiguousarray(layer.q_weights[name], dtype=dtype)
            out.append(_encode_dims(tensor.shape))
            out.append(struct.pack("<b", int(layer.exponents[name])))
            out.append(tensor.tobytes())
        out.append(struct.pack("<b", int(layer.out_exponent)))
    return b"".join(out)


def _encode_dims(shape) -> bytes:
    return struct.pack("<B", len(shape)) + b"".join(
        struct.pack("<i", int(d)) for d in shape
    )


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        chunk = self.blob[self.pos : self.pos + n]
        if len(chunk) != n:
            raise FormatError("truncated file")
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_model(blob: bytes):
    r = _Reader(blob)
    if r.take(4) != MAGIC:
        raise FormatError("bad magic")
    (version,) = r.unpack("<H")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    (precision,) = r.unpack("<B")
    if precision not in (PRECISION_FLOAT32, PRECISION_INT8):
        raise FormatError(f"unknown precision flag {precision}")
    (n_layers,) = r.unpack("<H")
    input_len, input_ch = r.unpack("<ii")
    (dropout,) = r.unpack("<f")
    metadata = {"dropout_rate": float(dropout)}

    if precision == PRECISION_FLOAT32:
        layers = [_decode_float_layer(r) for _ in range(n_layers)]
        try:
            return LayerGraph(layers, (input_len, input_ch), metadata)
        except GraphError as exc:
            raise FormatError(f"shape inconsistency: {exc}") from None

    (input_exp,) = r.unpack("<b")
    layers = [_decode_quant_layer(r) for _ in range(n_layers)]
    model = QuantizedModel(layers, (input_len, input_ch), input_exp, metadata)
    from .quantize import dequantized_graph

    try:
        dequantized_graph(model)  # shape consistency check
    except GraphError as exc:
        raise FormatError(f"shape inconsistency: {exc}") from None
    return model


def _decode_kind_params(r: _Reader) -> tuple[str, dict]:
    (tag,) = r.unpack("<B")
    if tag >= len(KINDS):
        raise FormatError(f"unknown layer kind tag {tag}")
    kind = KINDS[tag]
    if kind == "batchnorm":
        (eps,) = r.unpack("<f")
        return kind, {"epsilon": float(eps)}
    fields = _PARAM_FIELDS.get(kind, ())
    params = {}
    for f in fields:
        (params[f],) = r.unpack("<i")
    return kind, params


def _decode_dims(r: _Reader) -> tuple[int, ...]:
    (ndim,) = r.unpack("<B")
    return tuple(r.unpack("<i")[0] for _ in range(ndim))


def _decode_float_layer(r: _Reader) -> LayerSpec:
    kind, params = _decode_kind_params(r)
    weights = {}
    for name in TENSOR_ORDER.get(kind, ()):
        shape = _decode_dims(r)
        count = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(shape)
        weights[name] = data.copy()
    try:
        return LayerSpec(kind, params, weights)
    except GraphError as exc:
        raise FormatError(f"shape inconsistency: {exc}") from None


def _decode_quant_layer(r: _Reader) -> QuantLayer:
    kind, params = _decode_kind_params(r)
    q_weights, exponents = {}, {}
    for name in TENSOR_ORDER.get(kind, ()):
        shape = _decode_dims(r)
        count = int(np.prod(shape)) if shape else 1
        (exp,) = r.unpack("<b")
        if name == "bias":
            data = np.frombuffer(r.take(4 * count), dtype="<i4").reshape(shape)
            q_weights[name] = data.astype(np.int64)
        else:
            data = np.frombuffer(r.take(count), dtype=np.int8).reshape(shape)
            q_weights[name] = data.copy()
        exponents[name] = int(exp)
    (out_exp,) = r.unpack("<b")
    return QuantLayer(kind, params, q_weights, exponents, out_exponent=int(out_exp))
