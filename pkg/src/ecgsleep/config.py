"""Plain key=value pipeline configuration.

Holds every tunable default in one editable file: spectral band edges,
entropy parameters, split fractions, RFE budget, the CNN shape, and the
energy-table path. Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .features import FeatureParams


@dataclass
class PipelineConfig:
    seed: int = 0
    test_fraction: float = 0.2
    validation_fraction: float = 0.1
    lf_low_hz: float = 0.04
    lf_high_hz: float = 0.15
    hf_high_hz: float = 0.40
    vhf_high_hz: float = 0.50
    entropy_m: int = 2
    entropy_r_factor: float = 0.2
    mse_scale_max: int = 5
    rfe_target: int = 30
    rfe_drop_fraction: float = 0.1
    cnn_filters: str = "5,45,25"
    cnn_kernel_sizes: str = "7,7,7"
    cnn_pool_sizes: str = "4,4,4"
    cnn_hidden_units: int = 26
    cnn_dropout_rate: float = 0.5
    energy_table_path: str = ""  # empty -> built-in 45 nm defaults
    edf_channel: str = ""  # empty -> auto-select V2/ECG-like label

    def feature_params(self) -> FeatureParams:
        return FeatureParams(
            lf_band=(self.lf_low_hz, self.lf_high_hz),
            hf_band=(self.lf_high_hz, self.hf_high_hz),
            vhf_band=(self.hf_high_hz, self.vhf_high_hz),
            entropy_m=self.entropy_m,
            entropy_r_factor=self.entropy_r_factor,
            mse_scale_max=self.mse_scale_max,
        )

    def cnn_config(self):
        from .qnn.builder import SleepLiteCnnConfig

        return SleepLiteCnnConfig(
            filters=_int3(self.cnn_filters),
            kernel_sizes=_int3(self.cnn_kernel_sizes),
            pool_sizes=_int3(self.cnn_pool_sizes),
            hidden_units=self.cnn_hidden_units,
            dropout_rate=self.cnn_dropout_rate,
        )


def _int3(text: str) -> tuple[int, int, int]:
    parts = tuple(int(p) for p in text.split(","))
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated integers, got {text!r}")
    return parts


def load_config(path) -> PipelineConfig:
    cfg = PipelineConfig()
    types = {f.name: f.type for f in fields(PipelineConfig)}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in types:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        kind = types[key]
        if kind == "int":
            setattr(cfg, key, int(value))
        elif kind == "float":
            setattr(cfg, key, float(value))
        else:
            setattr(cfg, key, value)
    return cfg


def save_config(cfg: PipelineConfig, path) -> None:
    lines = [f"{k}={v}" for k, v in asdict(cfg).items()]
    Path(path).write_text("\n".join(lines) + "\n")
