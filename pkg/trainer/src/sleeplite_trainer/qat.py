"""Power-of-two fake quantization for quantization-aware training.

Mirrors the inference engine's 8-bit scheme: symmetric per-tensor scales
2^e with e = ceil(log2(max_abs / 127)) clamped to [-16, 16], round-half-
to-even, saturation to [-128, 127]. The QAT forward simulates the
deployed integer pipeline: the raw input and every conv/dense output
edge pass through a fake-quantizer (relu/maxpool preserve the quantized
grid), batchnorm is applied in its folded inference form, and the final
logits stay unquantized (the engine dequantizes the last accumulator).
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .model import ArchitectureConfig, SleepLiteNet

SCALE_EXP_MIN = -16
SCALE_EXP_MAX = 16


def pow2_exponent(max_abs: float) -> int:
    if max_abs <= 0 or math.isnan(max_abs):
        return SCALE_EXP_MIN
    e = math.ceil(math.log2(max_abs / 127.0))
    return int(min(max(e, SCALE_EXP_MIN), SCALE_EXP_MAX))


def fake_quantize(x: torch.Tensor, exponent: int) -> torch.Tensor:
    """Round-to-grid with a straight-through gradient."""
    scale = 2.0**exponent
    q = torch.clamp(torch.round(x / scale), -128, 127) * scale
    return x + (q - x).detach()


def fake_quantize_weight(w: torch.Tensor) -> torch.Tensor:
    e = pow2_exponent(float(w.detach().abs().max()))
    return fake_quantize(w, e)


class MaxAbsObserver(nn.Module):
    """Cumulative max-abs tracker (matches the engine's calibration)."""

    def __init__(self):
        super().__init__()
        self.register_buffer("max_abs", torch.zeros(()))

    def update(self, x: torch.Tensor) -> None:
        with torch.no_grad():
            self.max_abs.fill_(max(float(self.max_abs), float(x.abs().max())))

    @property
    def exponent(self) -> int:
        return pow2_exponent(float(self.max_abs))


class QatSleepLiteNet(nn.Module):
    """SleepLiteCNN with simulated 8-bit arithmetic in the forward pass.

    quantization_mode "float" trains the plain network through the same
    code path (observers still record ranges, no fake-quant applied).
    """

    def __init__(
        self,
        config: ArchitectureConfig = ArchitectureConfig(),
        quantization_mode: str = "qat-8bit",
    ):
        super().__init__()
        if quantization_mode not in ("float", "qat-8bit"):
            raise ValueError(f"unknown quantization mode {quantization_mode!r}")
        self.quantization_mode = quantization_mode
        self.net = SleepLiteNet(config)
        self.input_observer = MaxAbsObserver()
        self.conv_observers = nn.ModuleList(
            MaxAbsObserver() for _ in config.filters
        )
        self.hidden_observer = MaxAbsObserver()
        self.logit_observer = MaxAbsObserver()
        self.bn_momentum = 0.1

    @property
    def config(self) -> ArchitectureConfig:
        return self.net.config

    def _update_running_stats(self, x: torch.Tensor) -> None:
        # x: (batch, channels, length); unbiased running variance as in
        # standard batchnorm bookkeeping
        bn = self.net.input_norm
        with torch.no_grad():
            mean = x.mean(dim=(0, 2))
            var = x.var(dim=(0, 2), unbiased=True)
            bn.running_mean.mul_(1 - self.bn_momentum).add_(self.bn_momentum * mean)
            bn.running_var.mul_(1 - self.bn_momentum).add_(self.bn_momentum * var)

    def folded_input_affine(self) -> tuple[torch.Tensor, torch.Tensor]:
        """Per-channel (a, c) with bn(x) = a*x + c from running stats."""
        bn = self.net.input_norm
        a = bn.weight / torch.sqrt(bn.running_var + bn.eps)
        c = bn.bias - bn.running_mean * a
        return a, c

    def _fq(self, x: torch.Tensor, observer: MaxAbsObserver) -> torch.Tensor:
        if self.training:
            observer.update(x)
        if self.quantization_mode == "float":
            return x
        return fake_quantize(x, observer.exponent)

    def _fq_weight(self, w: torch.Tensor) -> torch.Tensor:
        if self.quantization_mode == "float":
            return w
        return fake_quantize_weight(w)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        # x: (batch, length, channels)
        x = x.transpose(1, 2)
        if self.training:
            self._update_running_stats(x)
        x = self._fq(x, self.input_observer)

        a, c = self.folded_input_affine()
        convs = [m for m in self.net.features if isinstance(m, nn.Conv1d)]
        pools = [m for m in self.net.features if isinstance(m, nn.MaxPool1d)]
        for i, (conv, pool) in enumerate(zip(convs, pools)):
            if i == 0:
                # batchnorm folded forward into the first convolution
                w_eff = conv.weight * a[None, :, None]
                b_eff = conv.bias + torch.einsum("fck,c->f", conv.weight, c)
            else:
                w_eff, b_eff = conv.weight, conv.bias
            x = nn.functional.conv1d(x, self._fq_weight(w_eff), b_eff)
            x = self._fq(x, self.conv_observers[i])
            x = torch.relu(x)
            x = pool(x)

        # length-major flatten, matching the inference engine's layout
        x = torch.flatten(x.transpose(1, 2), 1)
        x = nn.functional.linear(x, self._fq_weight(self.net.hidden.weight), self.net.hidden.bias)
        x = self._fq(x, self.hidden_observer)
        x = torch.relu(x)
        x = self.net.dropout(x)
        logits = nn.functional.linear(
            x, self._fq_weight(self.net.head.weight), self.net.head.bias
        )
        if self.training:
            self.logit_observer.update(logits)
        return logits

    def float_logits(self, x: torch.Tensor) -> torch.Tensor:
        """Plain float forward (folded batchnorm, no fake quantization)."""
        mode = self.quantization_mode
        training = self.training
        self.quantization_mode = "float"
        self.eval()
        try:
            with torch.no_grad():
                return self.forward(x)
        finally:
            self.quantization_mode = mode
            self.train(training)
