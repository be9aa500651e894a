"""Operation counting and per-inference energy estimation.

Counting rules: a multiply-accumulate contributes one multiply and one
add (the bias seeds the accumulator, adding nothing extra); conv1d MACs
are kernel x in_channels x out_channels x output_length, depthwise
drops the out_channels factor, dense is in x out; parameter-free layers
contribute memory traffic only. The memory model reads every weight
once per inference and reads/writes every activation edge once; each
tensor is costed at the tier its own byte size falls into.

Per-op energies live in an editable key=value table (45 nm defaults
from published figures), never in code. Estimates at 45 nm scale to
180 nm with the configured x50 factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .qnn.graph import LayerGraph, edge_shapes
from .qnn.quantize import QuantizedModel, dequantized_graph

DEFAULT_TABLE_TEXT = """\
# Per-operation energies, 45 nm node. Editable; estimate_energy reads
# whatever is configured here.
node_nm=45
fp32_mult_pj=3.7
fp32_add_pj=0.9
int8_mult_pj=0.2
int8_add_pj=0.03
mem_tier1_limit_bytes=32768
mem_tier1_pj_per_byte=1.25
mem_tier2_limit_bytes=524288
mem_tier2_pj_per_byte=6.0
mem_tier3_pj_per_byte=12.5
scale_45_to_180=50
"""

SUPPORTED_NODES = (45, 180)


class EnergyError(ValueError):
    pass


@dataclass(frozen=True)
class LayerOps:
    name: str
    kind: str
    multiplies: int
    adds: int
    weight_bytes: int
    act_in_bytes: int
    act_out_bytes: int


@dataclass(frozen=True)
class OpProfile:
    layers: tuple[LayerOps, ...]
    precision: str  # "float32" | "int8"

    @property
    def total_multiplies(self) -> int:
        return sum(l.multiplies for l in self.layers)

    @property
    def total_adds(self) -> int:
        return sum(l.adds for l in self.layers)


@dataclass(frozen=True)
class EnergyTable:
    node_nm: int
    fp32_mult_pj: float
    fp32_add_pj: float
    int8_mult_pj: float
    int8_add_pj: float
    # ((byte limit or None, pJ/byte), ...) smallest tier first
    mem_tiers: tuple[tuple[int | None, float], ...]
    scale_45_to_180: float

    def __post_init__(self):
        rates = [
            self.fp32_mult_pj,
            self.fp32_add_pj,
            self.int8_mult_pj,
            self.int8_add_pj,
            self.scale_45_to_180,
        ] + [rate for _, rate in self.mem_tiers]
        if any(r <= 0 for r in rates):
            raise EnergyError("all energy-table entries must be positive")
        if self.int8_mult_pj >= self.fp32_mult_pj:
            raise EnergyError("int8 multiply must cost less than fp32 multiply")

    def mem_rate(self, nbytes: int) -> float:
        for limit, rate in self.mem_tiers:
            if limit is None or nbytes <= limit:
                return rate
        return self.mem_tiers[-1][1]

    def op_rates(self, precision: str) -> tuple[float, float]:
        if precision == "float32":
            return self.fp32_mult_pj, self.fp32_add_pj
        if precision == "int8":
            return self.int8_mult_pj, self.int8_add_pj
        raise EnergyError(f"no table entries for precision {precision!r}")


def load_energy_table(path=None) -> EnergyTable:
    text = Path(path).read_text() if path is not None else DEFAULT_TABLE_TEXT
    values: dict[str, float] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise EnergyError(f"bad energy-table line: {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = float(value.strip())
    try:
        tiers = []
        i = 1
        while f"mem_tier{i}_pj_per_byte" in values:
            limit = values.get(f"mem_tier{i}_limit_bytes")
            tiers.append(
                (int(limit) if limit is not None else None, values[f"mem_tier{i}_pj_per_byte"])
            )
            i += 1
        return EnergyTable(
            node_nm=int(values["node_nm"]),
            fp32_mult_pj=values["fp32_mult_pj"],
            fp32_add_pj=values["fp32_add_pj"],
            int8_mult_pj=values["int8_mult_pj"],
            int8_add_pj=values["int8_add_pj"],
            mem_tiers=tuple(tiers),
            scale_45_to_180=values.get("scale_45_to_180", 50.0),
        )
    except KeyError as exc:
        raise EnergyError(f"energy table missing key {exc.args[0]}") from None


def write_energy_table(path) -> None:
    Path(path).write_text(DEFAULT_TABLE_TEXT)


# Bytes per stored value: (weight, bias, activation)
_SIZES = {"float32": (4, 4, 4), "int8": (1, 4, 1)}


def profile_ops(model: LayerGraph | QuantizedModel) -> OpProfile:
    """Closed-form per-layer operation and traffic counts."""
    if isinstance(model, QuantizedModel):
        graph = dequantized_graph(model)
        precision = "int8"
    else:
        graph = model
        precision = "float32"
    w_size, b_size, a_size = _SIZES[precision]

    shapes = edge_shapes(graph)
    layers = []
    for i, layer in enumerate(graph.layers):
        in_len, in_ch = shapes[i]
        out_len, out_ch = shapes[i + 1]
        kind = layer.kind
        p = layer.params
        if kind == "conv1d":
            macs = p["kernel"] * in_ch * p["filters"] * out_len
            weight_bytes = p["kernel"] * in_ch * p["filters"] * w_size + p["filters"] * b_size
        elif kind == "depthwise_conv1d":
            macs = p["kernel"] * in_ch * out_len
            weight_bytes = p["kernel"] * in_ch * w_size + in_ch * b_size
        elif kind == "dense":
            macs = in_len * p["units"]
            weight_bytes = in_len * p["units"] * w_size + p["units"] * b_size
        elif kind == "batchnorm":
            # inference-mode affine: one multiply and one add per element
            macs = in_len * in_ch
            weight_bytes = 4 * in_ch * w_size
        else:
            macs = 0
            weight_bytes = 0
        layers.append(
            LayerOps(
                name=f"{i}:{kind}",
                kind=kind,
                multiplies=macs,
                adds=macs,
                weight_bytes=weight_bytes,
                act_in_bytes=in_len * in_ch * a_size,
                act_out_bytes=out_len * out_ch * a_size,
            )
        )
    return OpProfile(layers=tuple(layers), precision=precision)


@dataclass(frozen=True)
class EnergyReport:
    per_layer_uj: tuple[tuple[str, float], ...]
    total_uj: float
    node_nm: int
    precision: str


def estimate_energy(profile: OpProfile, table: EnergyTable) -> EnergyReport:
    mult_pj, add_pj = table.op_rates(profile.precision)
    rows = []
    total_pj = 0.0
    for layer in profile.layers:
        pj = layer.multiplies * mult_pj + layer.adds * add_pj
        pj += layer.weight_bytes * table.mem_rate(layer.weight_bytes)
        pj += layer.act_in_bytes * table.mem_rate(layer.act_in_bytes)
        pj += layer.act_out_bytes * table.mem_rate(layer.act_out_bytes)
        rows.append((layer.name, pj * 1e-6))
        total_pj += pj
    return EnergyReport(
        per_layer_uj=tuple(rows),
        total_uj=total_pj * 1e-6,
        node_nm=table.node_nm,
        precision=profile.precision,
    )


def scale_to_node(report: EnergyReport, target_nm: int, table: EnergyTable | None = None) -> EnergyReport:
    """Rescale a report to another technology node (45 <-> 180)."""
    if target_nm not in SUPPORTED_NODES:
        raise EnergyError(f"unsupported node {target_nm} nm (supported: {SUPPORTED_NODES})")
    if report.node_nm not in SUPPORTED_NODES:
        raise EnergyError(f"report node {report.node_nm} nm is unsupported")
    if target_nm == report.node_nm:
        return report
    factor = (table or load_energy_table()).scale_45_to_180
    if (report.node_nm, target_nm) == (45, 180):
        k = factor
    else:
        k = 1.0 / factor
    return EnergyReport(
        per_layer_uj=tuple((name, uj * k) for name, uj in report.per_layer_uj),
        total_uj=report.total_uj * k,
        node_nm=target_nm,
        precision=report.precision,
    )


def export_report_csv(report: EnergyReport, path) -> None:
    with open(path, "w") as f:
        f.write("layer,energy_uj\n")
        for name, uj in report.per_layer_uj:
            f.write(f"{name},{uj!r}\n")
        f.write(f"total,{report.total_uj!r}\n")
