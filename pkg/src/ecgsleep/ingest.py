"""Recording and annotation ingestion.

Reads single-lead ECG recordings from a small CSV format or from a
read-only EDF subset (one selected signal, 16-bit little-endian samples,
uniform rate), plus plain-text expert stage annotations at a 30-second
grid. Raw stage labels are mapped to the 4-class scheme
Wake / REM / Light / Deep.

The signal is kept exactly as read: no denoising, no normalization.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

EPOCH_SECONDS = 30

RAW_LABELS = ("W", "REM", "S1", "S2", "S3", "S4", "ARTIFACT", "INDET")


class SleepStage(Enum):
    """The 4-class staging scheme. Member order is the fixed class order
    used everywhere (confusion-matrix axes, score columns, tie-breaking)."""

    WAKE = 0
    REM = 1
    LIGHT = 2
    DEEP = 3


STAGE_ORDER = (SleepStage.WAKE, SleepStage.REM, SleepStage.LIGHT, SleepStage.DEEP)

# W -> Wake, REM -> REM, S1/S2 -> Light, S3/S4 -> Deep.
# ARTIFACT / INDET carry no stage and are excluded downstream.
_STAGE_MAP = {
    "W": SleepStage.WAKE,
    "REM": SleepStage.REM,
    "S1": SleepStage.LIGHT,
    "S2": SleepStage.LIGHT,
    "S3": SleepStage.DEEP,
    "S4": SleepStage.DEEP,
    "ARTIFACT": None,
    "INDET": None,
}


class IngestError(ValueError):
    """Malformed recording or annotation input."""


@dataclass(frozen=True)
class StageAnnotation:
    """One 30-second expert-scored epoch."""

    start_sample: int
    raw_label: str
    mapped: SleepStage | None = None

    @property
    def excluded(self) -> bool:
        """True for ARTIFACT/INDET epochs (no 4-class stage)."""
        return self.raw_label in ("ARTIFACT", "INDET")


@dataclass(frozen=True)
class EcgRecording:
    """A raw single-lead ECG recording with optional 30-s annotations.

    ``samples`` is stored exactly as read and is treated as immutable;
    slices taken from it are views, never copies.
    """

    subject_id: str
    sample_rate_hz: int
    samples: np.ndarray
    annotations: tuple[StageAnnotation, ...] = ()

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise IngestError("sample-rate mismatch: rate must be positive")
        if len(self.samples) == 0:
            raise IngestError("recording has no samples")
        epoch = EPOCH_SECONDS * self.sample_rate_hz
        for i, ann in enumerate(self.annotations):
            if ann.start_sample != i * epoch:
                raise IngestError(
                    f"annotation {i} off the 30-s grid (start {ann.start_sample})"
                )
        self.samples.setflags(write=False)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    @property
    def epoch_samples(self) -> int:
        return EPOCH_SECONDS * self.sample_rate_hz

    def with_annotations(self, annotations) -> "EcgRecording":
        return replace(self, annotations=tuple(annotations))


def read_recording(
    path, format: str, channel_label: str | None = None, subject_id: str | None = None
) -> EcgRecording:
    """Read an ECG recording from ``path``.

    ``format`` is "csv" or "edf". For EDF, ``channel_label`` selects the
    signal; by default the first label containing "V2" is used, then the
    first containing "ECG", then a lone signal if the file has only one.
    """
    path = Path(path)
    if not path.exists():
        raise IngestError(f"no such file: {path}")
    if subject_id is None:
        subject_id = path.stem
    if format == "csv":
        return _read_csv(path, subject_id)
    if format == "edf":
        return _read_edf(path, subject_id, channel_label)
    raise IngestError(f"unknown format: {format!r}")


def _read_csv(path: Path, subject_id: str) -> EcgRecording:
    with open(path, "r") as f:
        header = f.readline().strip()
        if not header.startswith("sample_rate_hz="):
            raise IngestError(f"malformed header: {header!r}")
        try:
            rate = int(header.split("=", 1)[1])
        except ValueError:
            raise IngestError(f"malformed header: {header!r}") from None
        if rate <= 0:
            raise IngestError("sample-rate mismatch: rate must be positive")
        try:
            samples = np.array([float(line) for line in f if line.strip()])
        except ValueError as exc:
            raise IngestError(f"bad amplitude line: {exc}") from None
    if samples.size == 0:
        raise IngestError("recording has no samples")
    return EcgRecording(subject_id, rate, samples)


def write_recording_csv(recording: EcgRecording, path) -> None:
    """Write the CSV recording format. Uses shortest round-tripping float
    representation so read -> write -> read is bit-exact."""
    with open(path, "w") as f:
        f.write(f"sample_rate_hz={recording.sample_rate_hz}\n")
        for v in recording.samples:
            f.write(repr(float(v)) + "\n")


# EDF header layout: 256-byte fixed part, then ns per-signal fields,
# then data records of int16 little-endian samples.
_EDF_FIXED = (
    ("version", 8),
    ("patient", 80),
    ("recording", 80),
    ("startdate", 8),
    ("starttime", 8),
    ("header_bytes", 8),
    ("reserved", 44),
    ("n_records", 8),
    ("record_duration", 8),
    ("n_signals", 4),
)
_EDF_PER_SIGNAL = (
    ("label", 16),
    ("transducer", 80),
    ("dimension", 8),
    ("physical_min", 8),
    ("physical_max", 8),
    ("digital_min", 8),
    ("digital_max", 8),
    ("prefilter", 80),
    ("samples_per_record", 8),
    ("reserved2", 32),
)


def _read_edf(path: Path, subject_id: str, channel_label: str | None) -> EcgRecording:
    with open(path, "rb") as f:
        raw = f.read()

    def take(offset, n):
        chunk = raw[offset : offset + n]
        if len(chunk) != n:
            raise IngestError("malformed header: truncated file")
        return chunk.decode("ascii", errors="replace"), offset + n

    header = {}
    pos = 0
    for name, width in _EDF_FIXED:
        header[name], pos = take(pos, width)
    if header["version"].strip() != "0":
        raise IngestError(f"malformed header: bad EDF version {header['version']!r}")
    try:
        n_records = int(header["n_records"])
        record_duration = float(header["record_duration"])
        ns = int(header["n_signals"])
    except ValueError:
        raise IngestError("malformed header: non-numeric header field") from None
    if n_records < 0 or record_duration <= 0 or ns <= 0:
        raise IngestError("malformed header: bad record geometry")

    sig = {name: [] for name, _ in _EDF_PER_SIGNAL}
    for name, width in _EDF_PER_SIGNAL:
        for _ in range(ns):
            value, pos = take(pos, width)
            sig[name].append(value)
    labels = [s.strip() for s in sig["label"]]

    idx = _select_channel(labels, channel_label)
    try:
        spr = [int(s) for s in sig["samples_per_record"]]
        pmin = float(sig["physical_min"][idx])
        pmax = float(sig["physical_max"][idx])
        dmin = int(sig["digital_min"][idx])
        dmax = int(sig["digital_max"][idx])
    except ValueError:
        raise IngestError("malformed header: non-numeric signal field") from None

    rate = spr[idx] / record_duration
    if rate <= 0 or rate != int(rate):
        raise IngestError(
            f"sample-rate mismatch: non-integer rate {rate} for 30-s annotation grid"
        )

    record_bytes = 2 * sum(spr)
    data = raw[pos:]
    if len(data) < n_records * record_bytes:
        raise IngestError("malformed header: data shorter than declared records")
    chan_offset = 2 * sum(spr[:idx])

    chunks = []
    for r in range(n_records):
        start = r * record_bytes + chan_offset
        chunks.append(np.frombuffer(data, dtype="<i2", count=spr[idx], offset=start))
    digital = np.concatenate(chunks).astype(np.float64)

    if dmax != dmin:
        scale = (pmax - pmin) / (dmax - dmin)
        samples = digital * scale + (pmax - scale * dmax)
    else:
        samples = digital
    return EcgRecording(subject_id, int(rate), samples)


def _select_channel(labels: list[str], requested: str | None) -> int:
    if requested is not None:
        for i, lab in enumerate(labels):
            if lab == requested.strip():
                return i
        raise IngestError(f"channel not found: {requested!r} (have {labels})")
    for needle in ("V2", "ECG"):
        for i, lab in enumerate(labels):
            if needle.lower() in lab.lower():
                return i
    if len(labels) == 1:
        return 0
    raise IngestError(f"channel not found: no V2/ECG-like label among {labels}")


def parse_annotations(path, recording: EcgRecording) -> tuple[StageAnnotation, ...]:
    """Parse one raw stage token per 30-s epoch, in temporal order.

    Tokens beyond the recording's whole-epoch count raise "annotation
    overrun"; a trailing partial epoch of signal is simply not annotated.
    """
    tokens = Path(path).read_text().split()
    return annotations_from_tokens(tokens, recording)


def annotations_from_tokens(tokens, recording: EcgRecording) -> tuple[StageAnnotation, ...]:
    max_epochs = int(recording.duration_s // EPOCH_SECONDS)
    if len(tokens) > max_epochs:
        raise IngestError(
            f"annotation overrun: {len(tokens)} labels for {max_epochs} whole epochs"
        )
    epoch = recording.epoch_samples
    anns = []
    for i, tok in enumerate(tokens):
        tok = tok.upper()
        if tok not in RAW_LABELS:
            raise IngestError(f"unknown label: {tok!r}")
        anns.append(StageAnnotation(start_sample=i * epoch, raw_label=tok))
    return tuple(anns)


def map_stage_labels(annotations) -> tuple[StageAnnotation, ...]:
    """Map raw labels to the 4-class scheme. Total and idempotent;
    ARTIFACT/INDET epochs stay unmapped (excluded downstream)."""
    return tuple(replace(a, mapped=_STAGE_MAP[a.raw_label]) for a in annotations)


def load_recording(
    signal_path, annotation_path=None, format: str = "csv", channel_label=None
) -> EcgRecording:
    """Read a recording and, if given, attach mapped annotations."""
    rec = read_recording(signal_path, format, channel_label=channel_label)
    if annotation_path is not None:
        anns = map_stage_labels(parse_annotations(annotation_path, rec))
        rec = rec.with_annotations(anns)
    return rec
