"""Torch mirror of the SleepLiteCNN architecture.

Shapes must match the inference engine's builder exactly: input
batchnorm, three conv/relu/maxpool blocks with 5/45/25 filters, then a
small dense head. The trainable parameter count is enforced to the same
[45,000, 49,000] band.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

PARAM_COUNT_BAND = (45_000, 49_000)


@dataclass(frozen=True)
class ArchitectureConfig:
    filters: tuple[int, int, int] = (5, 45, 25)
    kernel_sizes: tuple[int, int, int] = (7, 7, 7)
    pool_sizes: tuple[int, int, int] = (4, 4, 4)
    hidden_units: int = 26
    dropout_rate: float = 0.5
    input_length: int = 3840
    input_channels: int = 1
    class_count: int = 4

    def flat_size(self) -> int:
        length = self.input_length
        for kernel, pool in zip(self.kernel_sizes, self.pool_sizes):
            length = length - kernel + 1
            length = (length - pool) // pool + 1
        return length * self.filters[-1]


class SleepLiteNet(nn.Module):
    """Float SleepLiteCNN; emits logits (softmax lives in the loss)."""

    def __init__(self, config: ArchitectureConfig = ArchitectureConfig()):
        super().__init__()
        self.config = config
        self.input_norm = nn.BatchNorm1d(config.input_channels, eps=1e-3)
        blocks = []
        channels = config.input_channels
        for filters, kernel, pool in zip(
            config.filters, config.kernel_sizes, config.pool_sizes
        ):
            blocks += [
                nn.Conv1d(channels, filters, kernel),
                nn.ReLU(),
                nn.MaxPool1d(pool),
            ]
            channels = filters
        self.features = nn.Sequential(*blocks)
        self.hidden = nn.Linear(config.flat_size(), config.hidden_units)
        self.dropout = nn.Dropout(config.dropout_rate)
        self.head = nn.Linear(config.hidden_units, config.class_count)

        count = trainable_parameter_count(self)
        lo, hi = PARAM_COUNT_BAND
        if not (lo <= count <= hi):
            raise ValueError(
                f"parameter count {count} outside [{lo}, {hi}]; "
                "configuration does not mirror the inference architecture"
            )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        # x: (batch, length, channels) -> torch channel-first
        x = x.transpose(1, 2)
        x = self.input_norm(x)
        x = self.features(x)
        # length-major flatten, matching the inference engine's layout
        x = torch.flatten(x.transpose(1, 2), 1)
        x = torch.relu(self.hidden(x))
        x = self.dropout(x)
        return self.head(x)


def trainable_parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters() if p.requires_grad)
