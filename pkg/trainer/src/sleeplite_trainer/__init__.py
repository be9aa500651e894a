"""Quantization-aware SleepLiteCNN trainer.

Trains the same architecture the inference engine builds (shape-for-
shape, same 45-49K parameter band) with power-of-two 8-bit fake
quantization, and exports float32/int8 SLCW weight containers plus a
probe set (inputs + logits) for cross-checking the deployed engine.
"""

from .data import STAGE_ORDER, load_recording_csv, load_windows
from .export import (
    export_weights,
    export_weights_int8,
    read_probe_csv,
    write_probe_csv,
)
from .model import ArchitectureConfig, SleepLiteNet, trainable_parameter_count
from .qat import QatSleepLiteNet, fake_quantize, pow2_exponent
from .train import TrainingConfig, TrainingResult, train_qat

__all__ = [
    "ArchitectureConfig",
    "QatSleepLiteNet",
    "STAGE_ORDER",
    "SleepLiteNet",
    "TrainingConfig",
    "TrainingResult",
    "export_weights",
    "export_weights_int8",
    "fake_quantize",
    "load_recording_csv",
    "load_windows",
    "pow2_exponent",
    "read_probe_csv",
    "train_qat",
    "trainable_parameter_count",
    "write_probe_csv",
]
