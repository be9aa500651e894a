"""SleepLiteCNN graph builder.

Three convolution blocks with 5, 45, and 25 filters (each conv -> relu
-> maxpool), batch normalization on the raw input, then a small dense
head. Kernel sizes, pool sizes, and the hidden width are configurable;
the defaults land the trainable parameter count at 47,396, inside the
enforced [45,000, 49,000] band. Dropout (rate 0.5) is a training-time
annotation carried in graph metadata; inference treats it as identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import GraphError, LayerGraph, LayerSpec, parameter_count

PARAM_COUNT_BAND = (45_000, 49_000)


@dataclass(frozen=True)
class SleepLiteCnnConfig:
    filters: tuple[int, int, int] = (5, 45, 25)
    kernel_sizes: tuple[int, int, int] = (7, 7, 7)
    pool_sizes: tuple[int, int, int] = (4, 4, 4)
    hidden_units: int = 26
    dropout_rate: float = 0.5
    input_length: int = 3840  # 30 s at 128 Hz
    input_channels: int = 1
    class_count: int = 4


def build_sleeplitecnn(config: SleepLiteCnnConfig = SleepLiteCnnConfig(), seed: int = 0) -> LayerGraph:
    """Build the graph with Glorot-uniform initialized weights.

    Raises GraphError if the configured shape leaves the parameter-count
    band (the architecture contract is "about 47K parameters").
    """
    rng = np.random.default_rng(seed)
    layers = [_batchnorm(config.input_channels)]
    channels = config.input_channels
    for filters, kernel, pool in zip(config.filters, config.kernel_sizes, config.pool_sizes):
        layers.append(_conv(rng, filters, channels, kernel))
        layers.append(LayerSpec("relu"))
        layers.append(LayerSpec("maxpool1d", params={"pool": pool, "stride": pool}))
        channels = filters
    layers.append(LayerSpec("flatten"))

    flat = _flat_size(config)
    layers.append(_dense(rng, config.hidden_units, flat))
    layers.append(LayerSpec("relu"))
    layers.append(_dense(rng, config.class_count, config.hidden_units))
    layers.append(LayerSpec("softmax"))

    graph = LayerGraph(
        layers,
        input_shape=(config.input_length, config.input_channels),
        metadata={"dropout_rate": config.dropout_rate, "architecture": "SleepLiteCNN"},
    )
    count = parameter_count(graph)
    lo, hi = PARAM_COUNT_BAND
    if not (lo <= count <= hi):
        raise GraphError(
            f"parameter count {count} outside [{lo}, {hi}]; adjust the configuration"
        )
    return graph


def _flat_size(config: SleepLiteCnnConfig) -> int:
    length = config.input_length
    for kernel, pool in zip(config.kernel_sizes, config.pool_sizes):
        length = length - kernel + 1
        length = (length - pool) // pool + 1
    return length * config.filters[-1]


def _glorot(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(np.float32)


def _conv(rng, filters: int, in_channels: int, kernel: int) -> LayerSpec:
    weight = _glorot(rng, (filters, in_channels, kernel), in_channels * kernel, filters * kernel)
    return LayerSpec(
        "conv1d",
        params={"kernel": kernel, "stride": 1, "padding": 0, "filters": filters},
        weights={"weight": weight, "bias": np.zeros(filters, dtype=np.float32)},
    )


def _dense(rng, units: int, in_features: int) -> LayerSpec:
    weight = _glorot(rng, (units, in_features), in_features, units)
    return LayerSpec(
        "dense",
        params={"units": units},
        weights={"weight": weight, "bias": np.zeros(units, dtype=np.float32)},
    )


def _batchnorm(channels: int) -> LayerSpec:
    return LayerSpec(
        "batchnorm",
        params={"epsilon": 1e-3},
        weights={
            "gamma": np.ones(channels, dtype=np.float32),
            "beta": np.zeros(channels, dtype=np.float32),
            "mean": np.zeros(channels, dtype=np.float32),
            "var": np.ones(channels, dtype=np.float32),
        },
    )
