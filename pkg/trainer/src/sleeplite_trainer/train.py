"""Quantization-aware training loop for SleepLiteCNN."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .model import ArchitectureConfig
from .qat import QatSleepLiteNet

N_CLASSES = 4


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 1e-3
    dropout_rate: float = 0.5
    seed: int = 0
    quantization_mode: str = "qat-8bit"  # or "float"
    probe_count: int = 32
    architecture: ArchitectureConfig = field(default_factory=ArchitectureConfig)


@dataclass
class TrainingResult:
    model: QatSleepLiteNet
    history: list[dict]
    probe_inputs: np.ndarray
    probe_float_logits: np.ndarray  # plain float forward, batchnorm folded
    probe_fq_logits: np.ndarray  # fake-quantized forward (deployed behavior)

    @property
    def training_accuracy(self) -> float:
        return self.history[-1]["accuracy"] if self.history else float("nan")


def train_qat(X, y, config: TrainingConfig = TrainingConfig()) -> TrainingResult:
    """Train on windows (n, length, 1) with 4-class labels.

    The last ``probe_count`` windows are held out as the probe set; their
    float and fake-quant logits ship with the exported weights so the
    inference engine can be cross-checked.
    """
    X = np.asarray(X, dtype=np.float32)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 3 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, length, channels) aligned with y")
    present = set(np.unique(y).tolist())
    missing = [c for c in range(N_CLASSES) if c not in present]
    if missing:
        raise ValueError(f"class missing from training data: {missing}")
    if X.shape[0] <= config.probe_count:
        raise ValueError("need more windows than the probe count")

    torch.manual_seed(config.seed)
    torch.use_deterministic_algorithms(True)

    arch = ArchitectureConfig(
        **{
            **config.architecture.__dict__,
            "dropout_rate": config.dropout_rate,
            "input_length": X.shape[1],
            "input_channels": X.shape[2],
        }
    )
    model = QatSleepLiteNet(arch, quantization_mode=config.quantization_mode)

    probe_inputs = X[-config.probe_count :]
    train_X = torch.from_numpy(X[: -config.probe_count])
    train_y = torch.from_numpy(y[: -config.probe_count])

    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    loss_fn = nn.CrossEntropyLoss()
    generator = torch.Generator().manual_seed(config.seed)

    history = []
    n = train_X.shape[0]
    for epoch in range(config.epochs):
        model.train()
        order = torch.randperm(n, generator=generator)
        total_loss = 0.0
        correct = 0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            optimizer.zero_grad()
            logits = model(train_X[idx])
            loss = loss_fn(logits, train_y[idx])
            loss.backward()
            optimizer.step()
            total_loss += float(loss.detach()) * len(idx)
            correct += int((logits.argmax(dim=1) == train_y[idx]).sum())
        history.append(
            {"epoch": epoch, "loss": total_loss / n, "accuracy": correct / n}
        )

    model.eval()
    probes = torch.from_numpy(probe_inputs)
    float_logits = model.float_logits(probes).numpy()
    with torch.no_grad():
        fq_logits = model(probes).numpy()
    return TrainingResult(
        model=model,
        history=history,
        probe_inputs=probe_inputs.astype(np.float64),
        probe_float_logits=float_logits.astype(np.float64),
        probe_fq_logits=fq_logits.astype(np.float64),
    )
