"""1-D layer-graph inference: float reference path, 8-bit integer path,
the SleepLiteCNN builder, and the SLCW weight container."""

from .builder import PARAM_COUNT_BAND, SleepLiteCnnConfig, build_sleeplitecnn
from .graph import (
    KINDS,
    GraphError,
    LayerGraph,
    LayerSpec,
    edge_shapes,
    output_shape,
    parameter_count,
    validate_graph,
)
from .infer import infer_float
from .quantize import (
    AccumulatorOverflowError,
    ActivationRanges,
    QuantizationError,
    QuantizedModel,
    calibrate,
    dequantized_graph,
    fold_batchnorm,
    infer_quantized,
    quantize_model,
    quantize_tensor,
    scale_exponent,
)
from .slcw import FormatError, load_model, save_model

__all__ = [
    "AccumulatorOverflowError",
    "ActivationRanges",
    "FormatError",
    "GraphError",
    "KINDS",
    "LayerGraph",
    "LayerSpec",
    "PARAM_COUNT_BAND",
    "QuantizationError",
    "QuantizedModel",
    "SleepLiteCnnConfig",
    "build_sleeplitecnn",
    "calibrate",
    "dequantized_graph",
    "edge_shapes",
    "fold_batchnorm",
    "infer_float",
    "infer_quantized",
    "load_model",
    "output_shape",
    "parameter_count",
    "quantize_model",
    "quantize_tensor",
    "save_model",
    "scale_exponent",
    "validate_graph",
]
