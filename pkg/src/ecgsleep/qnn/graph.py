"""1-D layer-graph intermediate representation.

A graph is an ordered list of layer specs over a (length, channels)
input. Construction validates weight shapes and walks shapes end to end,
so a graph that validates never hits a runtime shape error. Depthwise
convolutions are first-class, which makes depthwise-separable stacks
(MobileNet-style) expressible.

Weight conventions (document order, used by the wire format too):
  conv1d            weight (filters, in_channels, kernel), bias (filters,)
  depthwise_conv1d  weight (channels, kernel), bias (channels,)
  dense             weight (units, in_features), bias (units,)
  batchnorm         gamma, beta, mean, var -- each (channels,)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINDS = (
    "conv1d",
    "depthwise_conv1d",
    "maxpool1d",
    "relu",
    "batchnorm",
    "flatten",
    "dense",
    "softmax",
)

# Tensor names per kind, in document order.
TENSOR_ORDER = {
    "conv1d": ("weight", "bias"),
    "depthwise_conv1d": ("weight", "bias"),
    "dense": ("weight", "bias"),
    "batchnorm": ("gamma", "beta", "mean", "var"),
}

# Trainable tensors (batchnorm running stats are not trainable).
TRAINABLE = {
    "conv1d": ("weight", "bias"),
    "depthwise_conv1d": ("weight", "bias"),
    "dense": ("weight", "bias"),
    "batchnorm": ("gamma", "beta"),
}


class GraphError(ValueError):
    pass


@dataclass
class LayerSpec:
    kind: str
    params: dict = field(default_factory=dict)
    weights: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GraphError(f"unknown layer kind {self.kind!r}")
        expected = TENSOR_ORDER.get(self.kind, ())
        if set(self.weights) != set(expected):
            raise GraphError(
                f"{self.kind} expects tensors {expected}, got {tuple(self.weights)}"
            )


@dataclass
class LayerGraph:
    layers: list[LayerSpec]
    input_shape: tuple[int, int]  # (length, channels)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        validate_graph(self)

    @property
    def class_count(self) -> int:
        length, channels = output_shape(self)
        return length * channels


def conv_output_length(length: int, kernel: int, stride: int, padding: int) -> int:
    out = (length + 2 * padding - kernel) // stride + 1
    if out < 1:
        raise GraphError(
            f"kernel {kernel} (stride {stride}, padding {padding}) does not fit length {length}"
        )
    return out


def layer_output_shape(layer: LayerSpec, shape: tuple[int, int]) -> tuple[int, int]:
    """Shape transition of one layer; validates weights against shape."""
    length, channels = shape
    kind = layer.kind
    p = layer.params
    if kind == "conv1d":
        w = layer.weights["weight"]
        expected = (p["filters"], channels, p["kernel"])
        if w.shape != expected:
            raise GraphError(f"conv1d weight shape {w.shape}, expected {expected}")
        if layer.weights["bias"].shape != (p["filters"],):
            raise GraphError("conv1d bias shape mismatch")
        return (
            conv_output_length(length, p["kernel"], p.get("stride", 1), p.get("padding", 0)),
            p["filters"],
        )
    if kind == "depthwise_conv1d":
        w = layer.weights["weight"]
        expected = (channels, p["kernel"])
        if w.shape != expected:
            raise GraphError(f"depthwise weight shape {w.shape}, expected {expected}")
        if layer.weights["bias"].shape != (channels,):
            raise GraphError("depthwise bias shape mismatch")
        return (
            conv_output_length(length, p["kernel"], p.get("stride", 1), p.get("padding", 0)),
            channels,
        )
    if kind == "maxpool1d":
        pool = p["pool"]
        stride = p.get("stride", pool)
        return conv_output_length(length, pool, stride, 0), channels
    if kind == "relu":
        return shape
    if kind == "batchnorm":
        for name in ("gamma", "beta", "mean", "var"):
            if layer.weights[name].shape != (channels,):
                raise GraphError(f"batchnorm {name} shape mismatch for {channels} channels")
        return shape
    if kind == "flatten":
        return (length * channels, 1)
    if kind == "dense":
        if channels != 1:
            raise GraphError("dense needs flattened input (channels == 1)")
        w = layer.weights["weight"]
        expected = (p["units"], length)
        if w.shape != expected:
            raise GraphError(f"dense weight shape {w.shape}, expected {expected}")
        if layer.weights["bias"].shape != (p["units"],):
            raise GraphError("dense bias shape mismatch")
        return (p["units"], 1)
    if kind == "softmax":
        return shape
    raise GraphError(f"unknown layer kind {kind!r}")


def edge_shapes(graph: LayerGraph) -> list[tuple[int, int]]:
    """Shapes of every edge: input first, then each layer's output."""
    shapes = [tuple(graph.input_shape)]
    for layer in graph.layers:
        shapes.append(layer_output_shape(layer, shapes[-1]))
    return shapes


def output_shape(graph: LayerGraph) -> tuple[int, int]:
    return edge_shapes(graph)[-1]


def validate_graph(graph: LayerGraph) -> None:
    length, channels = graph.input_shape
    if length < 1 or channels < 1:
        raise GraphError(f"bad input shape {graph.input_shape}")
    for layer in graph.layers:
        for name, tensor in layer.weights.items():
            if not np.all(np.isfinite(np.asarray(tensor, dtype=np.float64))):
                raise GraphError(f"non-finite values in {layer.kind}.{name}")
    edge_shapes(graph)


def parameter_count(graph: LayerGraph) -> int:
    """Trainable parameters (batchnorm running stats excluded)."""
    total = 0
    for layer in graph.layers:
        for name in TRAINABLE.get(layer.kind, ()):
            total += int(np.asarray(layer.weights[name]).size)
    return total
