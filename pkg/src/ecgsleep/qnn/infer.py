"""Float reference inference over a layer graph.

Weights may be stored float32 (the wire precision); arithmetic runs in
float64. Deterministic: no randomness, no data-dependent dispatch.
"""

from __future__ import annotations

import numpy as np

from .graph import GraphError, LayerGraph, edge_shapes


def infer_float(graph: LayerGraph, x: np.ndarray) -> np.ndarray:
    """Class probabilities for one input of shape (length, channels)."""
    x = _check_input(graph, x)
    for layer in graph.layers:
        x = apply_layer_float(layer, x)
    return x.reshape(-1)


def capture_edges(graph: LayerGraph, x: np.ndarray) -> list[np.ndarray]:
    """All edge activations (input included); feeds calibration."""
    x = _check_input(graph, x)
    edges = [x]
    for layer in graph.layers:
        x = apply_layer_float(layer, x)
        edges.append(x)
    return edges


def _check_input(graph: LayerGraph, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape != tuple(graph.input_shape):
        raise GraphError(f"input shape {x.shape} does not match {graph.input_shape}")
    return x


def apply_layer_float(layer, x: np.ndarray) -> np.ndarray:
    kind = layer.kind
    p = layer.params
    if kind == "conv1d":
        return conv1d(
            x,
            np.asarray(layer.weights["weight"], dtype=np.float64),
            np.asarray(layer.weights["bias"], dtype=np.float64),
            p.get("stride", 1),
            p.get("padding", 0),
        )
    if kind == "depthwise_conv1d":
        return depthwise_conv1d(
            x,
            np.asarray(layer.weights["weight"], dtype=np.float64),
            np.asarray(layer.weights["bias"], dtype=np.float64),
            p.get("stride", 1),
            p.get("padding", 0),
        )
    if kind == "maxpool1d":
        return maxpool1d(x, p["pool"], p.get("stride", p["pool"]))
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "batchnorm":
        gamma = np.asarray(layer.weights["gamma"], dtype=np.float64)
        beta = np.asarray(layer.weights["beta"], dtype=np.float64)
        mean = np.asarray(layer.weights["mean"], dtype=np.float64)
        var = np.asarray(layer.weights["var"], dtype=np.float64)
        eps = p.get("epsilon", 1e-3)
        return (x - mean) / np.sqrt(var + eps) * gamma + beta
    if kind == "flatten":
        return x.reshape(-1, 1)
    if kind == "dense":
        w = np.asarray(layer.weights["weight"], dtype=np.float64)
        b = np.asarray(layer.weights["bias"], dtype=np.float64)
        return (w @ x[:, 0] + b)[:, None]
    if kind == "softmax":
        return softmax(x)
    raise GraphError(f"unknown layer kind {kind!r}")


def conv1d(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int, padding: int) -> np.ndarray:
    if padding:
        x = np.pad(x, ((padding, padding), (0, 0)))
    # windows: (positions, channels, kernel)
    windows = np.lib.stride_tricks.sliding_window_view(x, w.shape[2], axis=0)[::stride]
    return np.einsum("lck,fck->lf", windows, w) + b


def depthwise_conv1d(x, w, b, stride: int, padding: int) -> np.ndarray:
    if padding:
        x = np.pad(x, ((padding, padding), (0, 0)))
    windows = np.lib.stride_tricks.sliding_window_view(x, w.shape[1], axis=0)[::stride]
    return np.einsum("lck,ck->lc", windows, w) + b


def maxpool1d(x: np.ndarray, pool: int, stride: int) -> np.ndarray:
    windows = np.lib.stride_tricks.sliding_window_view(x, pool, axis=0)[::stride]
    return windows.max(axis=2)


def softmax(x: np.ndarray) -> np.ndarray:
    flat = x.reshape(-1)
    shifted = flat - flat.max()
    e = np.exp(shifted)
    return (e / e.sum()).reshape(x.shape)
