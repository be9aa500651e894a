import numpy as np
import pytest

import oracles
from ecgsleep.energy import (
    EnergyError,
    EnergyReport,
    EnergyTable,
    LayerOps,
    OpProfile,
    estimate_energy,
    load_energy_table,
    profile_ops,
    scale_to_node,
    write_energy_table,
)
from ecgsleep.qnn import (
    LayerGraph,
    LayerSpec,
    build_sleeplitecnn,
    calibrate,
    quantize_model,
)


def default_table():
    return load_energy_table()


def conv_graph(length=3840, kernel=7, filters=5):
    rng = np.random.default_rng(0)
    return LayerGraph(
        [
            LayerSpec(
                "conv1d",
                params={"kernel": kernel, "stride": 1, "padding": 0, "filters": filters},
                weights={"weight": rng.normal(0, 1, (filters, 1, kernel)),
                         "bias": rng.normal(0, 1, filters)},
            )
        ],
        input_shape=(length, 1),
    )


class TestProfiling:
    def test_conv_mac_count_matches_loop_oracle(self):
        profile = profile_ops(conv_graph())
        want = oracles.count_conv_macs_loops(3840, 7, 1, 0, 1, 5)
        assert want == 134_190
        assert profile.layers[0].multiplies == want
        assert profile.layers[0].adds == want

    def test_dense_mac_count(self, rng):
        graph = LayerGraph(
            [LayerSpec("dense", params={"units": 4},
                       weights={"weight": rng.normal(0, 1, (4, 1500)),
                                "bias": np.zeros(4)})],
            input_shape=(1500, 1),
        )
        assert profile_ops(graph).layers[0].multiplies == 6000

    def test_relu_contributes_no_arithmetic(self):
        graph = LayerGraph([LayerSpec("relu")], input_shape=(100, 2))
        ops = profile_ops(graph).layers[0]
        assert ops.multiplies == 0
        assert ops.adds == 0
        assert ops.act_in_bytes > 0

    def test_depthwise_drops_filter_factor(self, rng):
        graph = LayerGraph(
            [LayerSpec("depthwise_conv1d", params={"kernel": 3, "stride": 1, "padding": 0},
                       weights={"weight": rng.normal(0, 1, (4, 3)),
                                "bias": np.zeros(4)})],
            input_shape=(50, 4),
        )
        assert profile_ops(graph).layers[0].multiplies == 3 * 4 * 48

    def test_precision_changes_byte_counts(self):
        graph = build_sleeplitecnn(seed=0)
        rng = np.random.default_rng(0)
        qm = quantize_model(graph, calibrate(graph, [rng.normal(0, 1, (3840, 1))]))
        p_f = profile_ops(graph)
        p_q = profile_ops(qm)
        assert p_f.precision == "float32"
        assert p_q.precision == "int8"
        conv_f = next(l for l in p_f.layers if l.kind == "conv1d")
        conv_q = next(l for l in p_q.layers if l.kind == "conv1d")
        assert conv_f.act_in_bytes == 4 * conv_q.act_in_bytes


class TestEstimation:
    def test_linearity(self):
        table = default_table()
        layer = LayerOps("0:conv1d", "conv1d", 1000, 1000, 64, 64, 64)
        double = LayerOps("0:conv1d", "conv1d", 2000, 2000, 128, 128, 128)
        one = estimate_energy(OpProfile((layer,), "int8"), table)
        two = estimate_energy(OpProfile((double,), "int8"), table)
        assert two.total_uj == pytest.approx(2 * one.total_uj, rel=1e-12)

    def test_total_equals_layer_sum(self):
        table = default_table()
        report = estimate_energy(profile_ops(build_sleeplitecnn(seed=0)), table)
        assert report.total_uj == pytest.approx(
            sum(uj for _, uj in report.per_layer_uj), rel=1e-9
        )

    def test_monotone_in_layers(self):
        table = default_table()
        graph = build_sleeplitecnn(seed=0)
        report_full = estimate_energy(profile_ops(graph), table)
        trimmed = LayerGraph(graph.layers[:4], graph.input_shape)
        report_trim = estimate_energy(profile_ops(trimmed), table)
        assert report_full.total_uj > report_trim.total_uj

    def test_int8_anchor_and_ratio(self):
        table = default_table()
        graph = build_sleeplitecnn(seed=0)
        rng = np.random.default_rng(0)
        qm = quantize_model(graph, calibrate(graph, [rng.normal(0, 1, (3840, 1))]))
        int8 = estimate_energy(profile_ops(qm), table)
        fp32 = estimate_energy(profile_ops(graph), table)
        assert 5.48 / 5 <= int8.total_uj <= 5.48 * 5
        assert fp32.total_uj / int8.total_uj >= 8.0

    def test_int8_below_fp32_for_any_graph(self, rng):
        for _ in range(5):
            length = int(rng.integers(32, 128))
            units = int(rng.integers(2, 8))
            graph = LayerGraph(
                [LayerSpec("dense", params={"units": units},
                           weights={"weight": rng.normal(0, 1, (units, length)),
                                    "bias": np.zeros(units)})],
                input_shape=(length, 1),
            )
            qm = quantize_model(graph, calibrate(graph, [rng.normal(0, 1, (length, 1))]))
            table = default_table()
            assert (
                estimate_energy(profile_ops(qm), table).total_uj
                < estimate_energy(profile_ops(graph), table).total_uj
            )


class TestNodeScaling:
    def _report(self, uj):
        return EnergyReport((("total", uj),), uj, 45, "int8")

    def test_node_scaling_small_model_anchor(self):
        scaled = scale_to_node(self._report(5.48), 180)
        assert scaled.total_uj == pytest.approx(5.48 * 50, rel=1e-12)
        assert abs(scaled.total_uj - 280.0) / 280.0 < 0.03  # ~0.28 mJ
        assert scaled.node_nm == 180

    def test_node_scaling_larger_model_anchor(self):
        scaled = scale_to_node(self._report(30.84), 180)
        assert scaled.total_uj == pytest.approx(30.84 * 50, rel=1e-12)
        assert abs(scaled.total_uj - 1600.0) / 1600.0 < 0.04  # ~1.6 mJ

    def test_identity_same_node(self):
        report = self._report(7.7)
        assert scale_to_node(report, 45) is report

    def test_inverse_scaling(self):
        up = scale_to_node(self._report(2.0), 180)
        down = scale_to_node(up, 45)
        assert down.total_uj == pytest.approx(2.0, rel=1e-12)

    def test_unsupported_node(self):
        with pytest.raises(EnergyError, match="unsupported node"):
            scale_to_node(self._report(1.0), 28)


class TestTableIO:
    def test_write_then_load(self, tmp_path):
        path = tmp_path / "table.txt"
        write_energy_table(path)
        table = load_energy_table(path)
        assert table.node_nm == 45
        assert table.int8_mult_pj < table.fp32_mult_pj
        assert len(table.mem_tiers) == 3

    def test_validation_positive_entries(self):
        with pytest.raises(EnergyError, match="positive"):
            EnergyTable(45, 3.7, -0.9, 0.2, 0.03, ((None, 1.0),), 50.0)

    def test_validation_int8_cheaper(self):
        with pytest.raises(EnergyError, match="less than fp32"):
            EnergyTable(45, 0.2, 0.9, 3.7, 0.03, ((None, 1.0),), 50.0)

    def test_bad_line_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("node_nm 45\n")
        with pytest.raises(EnergyError, match="bad energy-table line"):
            load_energy_table(path)

    def test_missing_key_rejected(self, tmp_path):
        path = tmp_path / "partial.txt"
        path.write_text("node_nm=45\n")
        with pytest.raises(EnergyError, match="missing key"):
            load_energy_table(path)

    def test_tier_selection(self):
        table = default_table()
        assert table.mem_rate(100) == 1.25
        assert table.mem_rate(40_000) == 6.0
        assert table.mem_rate(10**7) == 12.5
