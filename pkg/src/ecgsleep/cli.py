"""Command-line pipeline driver.

One subcommand per stage: ingest, windows, features, select, train-ml,
tune, build-cnn, quantize, infer, energy, evaluate, hypnogram. Stages
communicate through files in the --out directory (CSV manifests, SLCW
weight containers, SEML classifier containers), so any stage can be
re-run or swapped in isolation.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import energy as energy_mod
from . import eval as eval_mod
from . import ml, qnn, synthetic
from .config import PipelineConfig, load_config
from .features import (
    MedianImputer,
    extract_features,
    feature_catalog,
    export_feature_csv,
    rfe_select,
)
from .ingest import (
    SleepStage,
    load_recording,
    map_stage_labels,
    parse_annotations,
    read_recording,
    write_recording_csv,
)
from .windowing import (
    Window,
    WindowMode,
    WindowSet,
    WindowingConfig,
    export_manifest,
    generate_windows,
    split_dataset,
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = load_config(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        args.handler(args, cfg, out)
    except Exception as exc:  # surface one clean line, not a traceback
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecgsleep", description=__doc__)
    parser.add_argument("--seed", type=int, default=None, help="global RNG seed")
    parser.add_argument("--config", default=None, help="key=value config file")
    parser.add_argument("--out", default="out", help="artifact directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="read a recording (or synthesize a demo one)")
    p.add_argument("--signal", help="ECG file (csv or edf)")
    p.add_argument("--format", choices=["csv", "edf"], default="csv")
    p.add_argument("--annotations", help="stage-token annotation file")
    p.add_argument("--synthetic-minutes", type=float, default=None,
                   help="generate a synthetic recording of this length instead")
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("windows", help="enumerate, label, and split windows")
    p.add_argument("--mode", choices=["ML", "DL"], default="ML")
    _recording_args(p)
    p.set_defaults(handler=cmd_windows)

    p = sub.add_parser("features", help="extract the dual-scale feature matrix")
    _recording_args(p)
    p.set_defaults(handler=cmd_features)

    p = sub.add_parser("select", help="recursive feature elimination")
    p.add_argument("--features", required=True, help="features.csv from `features`")
    p.set_defaults(handler=cmd_select)

    p = sub.add_parser("train-ml", help="train a classical classifier")
    p.add_argument("--features", required=True)
    p.add_argument("--algo", choices=ml.ALGORITHMS, default="GBDT")
    p.add_argument("--selection", help="kept-feature list from `select`")
    p.add_argument("--hyperparams", help="JSON hyperparameter overrides")
    p.set_defaults(handler=cmd_train_ml)

    p = sub.add_parser("tune", help="random-search hyperparameters with CV")
    p.add_argument("--features", required=True)
    p.add_argument("--algo", choices=ml.ALGORITHMS, default="GBDT")
    p.add_argument("--budget", type=int, default=20)
    p.add_argument("--selection")
    p.set_defaults(handler=cmd_tune)

    p = sub.add_parser("build-cnn", help="build the SleepLiteCNN float graph")
    p.set_defaults(handler=cmd_build_cnn)

    p = sub.add_parser("quantize", help="calibrate and quantize a float model")
    p.add_argument("--model", required=True, help="float SLCW file")
    _recording_args(p, required=False)
    p.add_argument("--calibration-windows", type=int, default=32)
    p.set_defaults(handler=cmd_quantize)

    p = sub.add_parser("infer", help="run a SLCW model over DL windows")
    p.add_argument("--model", required=True)
    _recording_args(p)
    p.set_defaults(handler=cmd_infer)

    p = sub.add_parser("energy", help="profile per-inference energy")
    p.add_argument("--model", required=True)
    p.add_argument("--node", type=int, default=45, choices=energy_mod.SUPPORTED_NODES)
    p.set_defaults(handler=cmd_energy)

    p = sub.add_parser("evaluate", help="metrics from a predictions file")
    p.add_argument("--predictions", required=True)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("hypnogram", help="emit hypnogram CSV + plot")
    p.add_argument("--predictions", required=True)
    p.set_defaults(handler=cmd_hypnogram)
    return parser


def _recording_args(p, required=True):
    p.add_argument("--signal", required=required, help="recording file")
    p.add_argument("--format", choices=["csv", "edf"], default="csv")
    p.add_argument("--annotations", required=required, help="annotation file")


def _load(args, cfg: PipelineConfig):
    return load_recording(
        args.signal,
        args.annotations,
        format=args.format,
        channel_label=cfg.edf_channel or None,
    )


def cmd_ingest(args, cfg, out: Path) -> None:
    if args.synthetic_minutes is not None:
        stages = synthetic.block_stages(
            block_minutes=max(args.synthetic_minutes / 4, 0.5), repeats=1
        )
        rec = synthetic.generate_recording(stages, seed=cfg.seed)
        write_recording_csv(rec, out / "recording.csv")
        tokens = [a.raw_label for a in rec.annotations]
        (out / "annotations.txt").write_text("\n".join(tokens) + "\n")
        print(f"synthesized {rec.duration_s:.0f} s recording -> {out/'recording.csv'}")
        return
    if not args.signal:
        raise ValueError("--signal required (or use --synthetic-minutes)")
    rec = read_recording(args.signal, args.format, channel_label=cfg.edf_channel or None)
    write_recording_csv(rec, out / "recording.csv")
    line = f"{rec.subject_id}: {len(rec.samples)} samples @ {rec.sample_rate_hz} Hz"
    if args.annotations:
        anns = map_stage_labels(parse_annotations(args.annotations, rec))
        (out / "annotations.txt").write_text(
            "\n".join(a.raw_label for a in anns) + "\n"
        )
        excluded = sum(a.excluded for a in anns)
        line += f", {len(anns)} epochs ({excluded} excluded)"
    print(line)


def cmd_windows(args, cfg, out: Path) -> None:
    rec = _load(args, cfg)
    ws = generate_windows(rec, WindowingConfig.for_mode(WindowMode[args.mode]))
    split = split_dataset(ws, cfg.seed, cfg.test_fraction, cfg.validation_fraction)
    path = out / f"windows_{args.mode.lower()}.csv"
    export_manifest(ws, path, split)
    print(f"{len(ws)} {args.mode} windows ({ws.dropped} dropped) -> {path}")


def cmd_features(args, cfg, out: Path) -> None:
    rec = _load(args, cfg)
    ws = generate_windows(rec, WindowingConfig.ml())
    matrix = extract_features(rec, ws, params=cfg.feature_params())
    split = split_dataset(
        [matrix.labels[i] for i in range(len(matrix.labels))],
        cfg.seed,
        cfg.test_fraction,
        cfg.validation_fraction,
    )
    member = split.membership(len(matrix.labels))
    path = out / "features.csv"
    export_feature_csv(matrix, path, member)
    print(
        f"{matrix.values.shape[0]} windows x {matrix.values.shape[1]} features "
        f"({len(matrix.skipped)} skipped) -> {path}"
    )


def _read_feature_csv(path):
    with open(path) as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = list(reader)
    names = tuple(header[:-2])
    X = np.array([[float(v) for v in r[:-2]] for r in rows])
    y = [SleepStage[r[-2]] for r in rows]
    split = [r[-1] for r in rows]
    return names, X, y, split


def _train_matrix(path, selection_path=None):
    names, X, y, split = _read_feature_csv(path)
    train_idx = [i for i, s in enumerate(split) if s == "train"]
    test_idx = [i for i, s in enumerate(split) if s == "test"]
    imputer = MedianImputer().fit(X[train_idx])
    X = imputer.transform(X)
    if selection_path:
        kept = [l.strip() for l in Path(selection_path).read_text().splitlines() if l.strip()]
        cols = [names.index(k) for k in kept]
        X = X[:, cols]
        names = tuple(kept)
    return names, X, y, train_idx, test_idx


def cmd_select(args, cfg, out: Path) -> None:
    names, X, y, train_idx, _ = _train_matrix(args.features)
    codes = [s.value for s in y]
    sel = rfe_select(
        X[train_idx],
        [codes[i] for i in train_idx],
        names,
        target_k=cfg.rfe_target,
        seed=cfg.seed,
        drop_fraction=cfg.rfe_drop_fraction,
    )
    (out / "selection.txt").write_text("\n".join(sel.kept_names) + "\n")
    with open(out / "rfe_trace.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["round", "dropped", "cv_score"])
        for rnd, dropped, score in sel.elimination_trace:
            writer.writerow([rnd, ";".join(dropped), score])
    print(f"kept {len(sel.kept_names)} features -> {out/'selection.txt'}")


def cmd_train_ml(args, cfg, out: Path) -> None:
    names, X, y, train_idx, test_idx = _train_matrix(args.features, args.selection)
    hp = json.loads(args.hyperparams) if args.hyperparams else {}
    spec = ml.ClassifierSpec(args.algo, hp, seed=cfg.seed)
    cv = ml.cross_validate(spec, X[train_idx], [y[i] for i in train_idx], seed=cfg.seed)
    print(
        f"5-fold CV: accuracy {cv.mean_accuracy:.3f} +/- {cv.std_accuracy:.3f}, "
        f"macro F1 {cv.mean_macro_f1:.3f} +/- {cv.std_macro_f1:.3f}"
    )
    model = ml.train_classifier(spec, X[train_idx], [y[i] for i in train_idx], names)
    ml.save_model(model, out / "model.seml")
    if test_idx:
        pred, _ = ml.predict(model, X[test_idx])
        truth = [y[i] for i in test_idx]
        _write_predictions_simple(out / "predictions.csv", truth, pred)
        m = eval_mod.compute_metrics(truth, pred)
        print(
            f"test: accuracy {m.accuracy:.3f}, macro F1 {m.macro_f1:.3f} "
            f"-> {out/'predictions.csv'}"
        )
    print(f"model -> {out/'model.seml'}")


def cmd_tune(args, cfg, out: Path) -> None:
    names, X, y, train_idx, _ = _train_matrix(args.features, args.selection)
    result = ml.tune_hyperparameters(
        args.algo, X[train_idx], [y[i] for i in train_idx], budget=args.budget, seed=cfg.seed
    )
    ml.save_trace_csv(result.trace, out / "tune_trace.csv")
    best = {
        "algo": result.best_spec.algo,
        "hyperparams": result.best_spec.hyperparams,
        "seed": result.best_spec.seed,
    }
    (out / "best_spec.json").write_text(json.dumps(best, indent=2, sort_keys=True) + "\n")
    print(f"best {args.algo}: {json.dumps(result.best_spec.hyperparams, sort_keys=True)}")
    print(f"trace -> {out/'tune_trace.csv'}")


def cmd_build_cnn(args, cfg, out: Path) -> None:
    graph = qnn.build_sleeplitecnn(cfg.cnn_config(), seed=cfg.seed)
    path = out / "sleeplite_float.slcw"
    qnn.save_model(graph, path)
    print(f"SleepLiteCNN ({qnn.parameter_count(graph)} parameters) -> {path}")


def _dl_window_inputs(rec, model_len):
    ws = generate_windows(rec, WindowingConfig.dl())
    if ws.windows and ws.windows[0].length_samples != model_len:
        raise ValueError(
            f"window length {ws.windows[0].length_samples} does not match model input {model_len}"
        )
    return ws


def cmd_quantize(args, cfg, out: Path) -> None:
    graph = qnn.load_model(args.model)
    if isinstance(graph, qnn.QuantizedModel):
        raise ValueError("model is already quantized")
    if args.signal:
        rec = _load(args, cfg)
        ws = _dl_window_inputs(rec, graph.input_shape[0])
        inputs = [
            ws.slice(rec, w)[:, None] for w in ws.windows[: args.calibration_windows]
        ]
    else:
        rng = np.random.default_rng(cfg.seed)
        inputs = [rng.normal(0, 1, graph.input_shape) for _ in range(args.calibration_windows)]
    ranges = qnn.calibrate(graph, inputs)
    qmodel = qnn.quantize_model(graph, ranges)
    path = out / "sleeplite_int8.slcw"
    qnn.save_model(qmodel, path)
    print(f"quantized with {len(inputs)} calibration windows -> {path}")


def cmd_infer(args, cfg, out: Path) -> None:
    model = qnn.load_model(args.model)
    quantized = isinstance(model, qnn.QuantizedModel)
    rec = _load(args, cfg)
    input_len = model.input_shape[0]
    ws = _dl_window_inputs(rec, input_len)
    rows = []
    for w in ws.windows:
        x = ws.slice(rec, w)[:, None]
        probs = qnn.infer_quantized(model, x) if quantized else qnn.infer_float(model, x)
        stage = list(SleepStage)[int(np.argmax(probs))]
        rows.append((w, stage, probs))
    path = out / "predictions.csv"
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["subject", "sample_rate", "start_sample", "length", "mode", "truth", "pred"]
            + [f"p_{s.name.lower()}" for s in SleepStage]
        )
        for w, stage, probs in rows:
            writer.writerow(
                [ws.subject_id, ws.sample_rate_hz, w.start_sample, w.length_samples,
                 w.mode.value, w.label.name, stage.name] + [repr(float(p)) for p in probs]
            )
    kind = "int8" if quantized else "float"
    print(f"{len(rows)} {kind} inferences -> {path}")


def cmd_energy(args, cfg, out: Path) -> None:
    model = qnn.load_model(args.model)
    table = energy_mod.load_energy_table(cfg.energy_table_path or None)
    profile = energy_mod.profile_ops(model)
    report = energy_mod.estimate_energy(profile, table)
    report = energy_mod.scale_to_node(report, args.node, table)
    path = out / f"energy_{report.precision}_{args.node}nm.csv"
    energy_mod.export_report_csv(report, path)
    print(
        f"{report.precision} @ {args.node} nm: {report.total_uj:.3f} uJ per inference -> {path}"
    )


def _write_predictions_simple(path, truth, pred) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["truth", "pred"])
        for t, p in zip(truth, pred):
            writer.writerow([t.name, p.name])


def _read_predictions(path):
    with open(path) as f:
        reader = csv.DictReader(f)
        rows = list(reader)
    truth = [SleepStage[r["truth"]] for r in rows]
    pred = [SleepStage[r["pred"]] for r in rows]
    return rows, truth, pred


def cmd_evaluate(args, cfg, out: Path) -> None:
    _, truth, pred = _read_predictions(args.predictions)
    m = eval_mod.compute_metrics(truth, pred)
    print(f"accuracy        {m.accuracy:.4f}")
    print(f"macro precision {m.macro_precision:.4f}")
    print(f"macro recall    {m.macro_recall:.4f}")
    print(f"macro F1        {m.macro_f1:.4f}")
    with open(out / "confusion.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["truth\\pred"] + [s.name for s in SleepStage])
        for i, s in enumerate(SleepStage):
            writer.writerow([s.name] + list(m.confusion[i]))
    print(f"confusion matrix -> {out/'confusion.csv'}")


def cmd_hypnogram(args, cfg, out: Path) -> None:
    rows, truth, pred = _read_predictions(args.predictions)
    if "start_sample" not in rows[0]:
        raise ValueError("predictions file lacks window positions (run `infer`)")
    rate = int(rows[0]["sample_rate"])
    mode = WindowMode(rows[0]["mode"])
    config = WindowingConfig.for_mode(mode)
    windows = tuple(
        Window(int(r["start_sample"]), int(r["length"]), t, mode)
        for r, t in zip(rows, truth)
    )
    ws = WindowSet(rows[0]["subject"], rate, config, windows)
    hyp = eval_mod.emit_hypnogram(ws, pred)
    eval_mod.export_hypnogram_csv(hyp, out / "hypnogram.csv")
    eval_mod.plot_hypnogram(hyp, out / "hypnogram.png")
    gaps = sum(1 for _, s in hyp.entries if s is None)
    print(
        f"{len(hyp.entries)} entries at {hyp.step_s}-s cadence ({gaps} gaps) "
        f"-> {out/'hypnogram.csv'}, {out/'hypnogram.png'}"
    )


if __name__ == "__main__":
    raise SystemExit(main())
