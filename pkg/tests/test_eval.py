import numpy as np
import pytest

import oracles
from conftest import recording_with_stages
from ecgsleep.eval import (
    Hypnogram,
    compute_metrics,
    emit_hypnogram,
    export_hypnogram_csv,
    plot_hypnogram,
)
from ecgsleep.ingest import SleepStage
from ecgsleep.windowing import WindowingConfig, generate_windows

W, R, L, D = SleepStage.WAKE, SleepStage.REM, SleepStage.LIGHT, SleepStage.DEEP


class TestMetrics:
    def test_perfect_predictions(self):
        truth = [W, R, L, D] * 5
        m = compute_metrics(truth, truth)
        assert m.accuracy == 1.0
        assert m.macro_f1 == 1.0
        assert np.array_equal(np.diag(m.confusion), [5, 5, 5, 5])
        assert m.confusion.sum() == np.trace(m.confusion)

    def test_all_one_class_predictions(self):
        truth = [W] * 10 + [R] * 10 + [L] * 10 + [D] * 10
        pred = [L] * 40
        m = compute_metrics(truth, pred)
        assert m.accuracy == 0.25
        # per-class F1 = (0, 0, 0.4, 0) -> macro 0.1
        assert m.macro_f1 == pytest.approx(0.1, abs=1e-12)
        assert m.per_class_f1[2] == pytest.approx(0.4, abs=1e-12)
        assert m.macro_f1 == pytest.approx(
            oracles.macro_f1(truth, pred, [W, R, L, D]), abs=1e-12
        )

    def test_single_correct_sample(self):
        with pytest.warns(UserWarning) as records:
            m = compute_metrics([W], [W])
        assert m.accuracy == 1.0
        # absent-class warnings for REM, LIGHT, DEEP
        absent = [r for r in records if "absent" in str(r.message)]
        assert len(absent) == 3

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="equal length"):
            compute_metrics([W], [W, R])

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            compute_metrics([], [])

    def test_row_sums_equal_truth_counts(self, rng):
        stages = list(SleepStage)
        truth = [stages[i] for i in rng.integers(0, 4, 200)]
        pred = [stages[i] for i in rng.integers(0, 4, 200)]
        m = compute_metrics(truth, pred)
        for i, s in enumerate(stages):
            assert m.confusion[i].sum() == truth.count(s)
        assert m.accuracy == np.trace(m.confusion) / 200

    def test_macro_f1_invariant_under_class_permutation(self, rng):
        stages = list(SleepStage)
        truth = [stages[i] for i in rng.integers(0, 4, 300)]
        pred = [stages[i] for i in rng.integers(0, 4, 300)]
        m1 = compute_metrics(truth, pred)
        perm = {W: D, D: W, R: L, L: R}
        m2 = compute_metrics([perm[t] for t in truth], [perm[p] for p in pred])
        assert m1.macro_f1 == pytest.approx(m2.macro_f1, rel=1e-12)

    def test_pure_function(self):
        truth, pred = [W, R, L, D], [W, W, L, D]
        a = compute_metrics(truth, pred)
        b = compute_metrics(truth, pred)
        assert a.accuracy == b.accuracy
        assert np.array_equal(a.confusion, b.confusion)

    def test_generic_labels(self):
        m = compute_metrics([0, 1, 1, 0], [0, 1, 0, 0])
        assert m.accuracy == 0.75


class TestHypnogram:
    def test_one_hour_dl_cadence(self):
        rec = recording_with_stages([W] * 120)
        ws = generate_windows(rec, WindowingConfig.dl())
        assert len(ws) == 358
        hyp = emit_hypnogram(ws, [W] * len(ws))
        assert len(hyp.entries) == 358
        times = [t for t, _ in hyp.entries]
        assert np.allclose(np.diff(times), 10.0)

    def test_constant_predictions_constant_levels(self):
        rec = recording_with_stages([L] * 10)
        ws = generate_windows(rec, WindowingConfig.ml())
        hyp = emit_hypnogram(ws, [W] * len(ws))
        assert all(s == W for _, s in hyp.entries)
        assert hyp.step_s == 30

    def test_dropped_window_becomes_gap(self):
        # excluded epoch 4 drops DL windows overlapping it
        rec = recording_with_stages([W, W, W, W, None, W, W, W])
        ws = generate_windows(rec, WindowingConfig.dl())
        assert ws.dropped > 0
        hyp = emit_hypnogram(ws, [W] * len(ws))
        gaps = [t for t, s in hyp.entries if s is None]
        assert len(gaps) == ws.dropped
        times = [t for t, _ in hyp.entries]
        assert np.allclose(np.diff(times), 10.0)  # cadence holds across gaps

    def test_prediction_count_must_match(self):
        rec = recording_with_stages([W] * 10)
        ws = generate_windows(rec, WindowingConfig.ml())
        with pytest.raises(ValueError, match="one prediction per window"):
            emit_hypnogram(ws, [W] * (len(ws) - 1))

    def test_nonuniform_timestamps_rejected(self):
        with pytest.raises(ValueError, match="uniformly"):
            Hypnogram(entries=((0.0, W), (10.0, W), (25.0, W)), step_s=10)

    def test_export_and_plot(self, tmp_path):
        rec = recording_with_stages([W, W, L, L, D, D, R, R, W, W])
        ws = generate_windows(rec, WindowingConfig.dl())
        preds = [w.label for w in ws.windows]
        hyp = emit_hypnogram(ws, preds)
        csv_path = tmp_path / "h.csv"
        png_path = tmp_path / "h.png"
        export_hypnogram_csv(hyp, csv_path)
        plot_hypnogram(hyp, png_path)
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "timestamp_s,stage"
        assert len(lines) == len(hyp.entries) + 1
        assert png_path.stat().st_size > 0
