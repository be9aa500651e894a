"""Test-only EDF byte builder (the package itself never writes EDF)."""

from __future__ import annotations

import numpy as np


def _field(value, width: int) -> bytes:
    s = str(value)
    if len(s) > width:
        raise ValueError(f"{value!r} wider than {width}")
    return s.ljust(width).encode("ascii")


def build_edf(
    signals: dict[str, np.ndarray],
    record_duration_s: float,
    n_records: int,
    physical_range=(-32.768, 32.767),
    digital_range=(-32768, 32767),
) -> bytes:
    """Assemble an EDF file from digital int16 sample arrays.

    Each array must hold n_records * samples_per_record values; the
    per-record sample count is inferred per signal.
    """
    labels = list(signals)
    ns = len(labels)
    spr = {}
    for lab in labels:
        total = len(signals[lab])
        if total % n_records:
            raise ValueError("samples not divisible by record count")
        spr[lab] = total // n_records

    header = b"".join(
        [
            _field(0, 8),
            _field("test patient", 80),
            _field("test recording", 80),
            _field("01.01.24", 8),
            _field("00.00.00", 8),
            _field(256 + ns * 256, 8),
            _field("", 44),
            _field(n_records, 8),
            _field(record_duration_s, 8),
            _field(ns, 4),
        ]
    )
    per_signal = b"".join(
        [
            b"".join(_field(lab, 16) for lab in labels),
            b"".join(_field("transducer", 80) for _ in labels),
            b"".join(_field("mV", 8) for _ in labels),
            b"".join(_field(physical_range[0], 8) for _ in labels),
            b"".join(_field(physical_range[1], 8) for _ in labels),
            b"".join(_field(digital_range[0], 8) for _ in labels),
            b"".join(_field(digital_range[1], 8) for _ in labels),
            b"".join(_field("", 80) for _ in labels),
            b"".join(_field(spr[lab], 8) for lab in labels),
            b"".join(_field("", 32) for _ in labels),
        ]
    )

    records = []
    for r in range(n_records):
        for lab in labels:
            n = spr[lab]
            chunk = np.asarray(signals[lab][r * n : (r + 1) * n], dtype="<i2")
            records.append(chunk.tobytes())
    return header + per_signal + b"".join(records)


def digital_to_physical(digital, physical_range=(-32.768, 32.767), digital_range=(-32768, 32767)):
    scale = (physical_range[1] - physical_range[0]) / (digital_range[1] - digital_range[0])
    return np.asarray(digital, dtype=np.float64) * scale + (
        physical_range[1] - scale * digital_range[1]
    )
