"""Classical classifiers over selected features.

Five algorithm families (KNN, multinomial logistic regression, CART
decision tree, random forest, gradient-boosted trees) behind a common
spec/train/predict surface with stratified cross-validation and a
seeded random-search tuning harness. Learned state is scikit-learn
estimators; serialization is a self-describing binary container
(magic ``SEML``).
"""

from __future__ import annotations

import csv
import io
import json
import pickle
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.ensemble import GradientBoostingClassifier, RandomForestClassifier
from sklearn.linear_model import LogisticRegression
from sklearn.model_selection import StratifiedKFold
from sklearn.neighbors import KNeighborsClassifier
from sklearn.tree import DecisionTreeClassifier

from .eval import compute_metrics
from .ingest import STAGE_ORDER, SleepStage

ALGORITHMS = ("KNN", "LogisticRegression", "DecisionTree", "RandomForest", "GBDT")

_SEML_MAGIC = b"SEML"
_SEML_VERSION = 1


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ClassifierSpec:
    algo: str
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ModelError(f"unknown algorithm {self.algo!r}")
        hp = self.hyperparams
        if self.algo == "KNN" and hp.get("k", 1) < 1:
            raise ModelError("KNN needs k >= 1")
        if hp.get("max_depth") is not None and self.algo != "KNN":
            if hp["max_depth"] < 1:
                raise ModelError("tree depth must be >= 1")
        if self.algo in ("RandomForest", "GBDT") and hp.get("n_estimators", 1) < 1:
            raise ModelError("ensemble size must be >= 1")
        if self.algo == "GBDT":
            lr = hp.get("learning_rate", 0.1)
            if not (0.0 < lr <= 1.0):
                raise ModelError("learning rate must be in (0, 1]")


def _build_estimator(spec: ClassifierSpec):
    hp = spec.hyperparams
    if spec.algo == "KNN":
        return KNeighborsClassifier(
            n_neighbors=hp.get("k", 5), algorithm="brute", weights="uniform"
        )
    if spec.algo == "LogisticRegression":
        return LogisticRegression(
            C=hp.get("c", 1.0), max_iter=hp.get("max_iter", 1000), random_state=spec.seed
        )
    if spec.algo == "DecisionTree":
        return DecisionTreeClassifier(
            max_depth=hp.get("max_depth"),
            min_samples_leaf=hp.get("min_samples_leaf", 1),
            random_state=spec.seed,
        )
    if spec.algo == "RandomForest":
        return RandomForestClassifier(
            n_estimators=hp.get("n_estimators", 100),
            max_depth=hp.get("max_depth"),
            max_features=hp.get("max_features", "sqrt"),
            bootstrap=hp.get("bootstrap", True),
            random_state=spec.seed,
        )
    if spec.algo == "GBDT":
        return GradientBoostingClassifier(
            n_estimators=hp.get("n_estimators", 100),
            learning_rate=hp.get("learning_rate", 0.1),
            max_depth=hp.get("max_depth", 3),
            random_state=spec.seed,
        )
    raise ModelError(f"unknown algorithm {spec.algo!r}")


@dataclass
class TrainedModel:
    spec: ClassifierSpec
    estimator: object
    feature_names: tuple[str, ...]
    class_order: tuple


def _encode_labels(y, class_order):
    lookup = {c: i for i, c in enumerate(class_order)}
    try:
        return np.array([lookup[v] for v in y], dtype=int)
    except KeyError as exc:
        raise ModelError(f"label {exc.args[0]!r} not in class order") from None


def train_classifier(
    spec: ClassifierSpec, X, y, feature_names=None, class_order=None
) -> TrainedModel:
    """Fit the estimator described by ``spec``. ``y`` may hold SleepStage values or any
    hashable labels; ``class_order`` fixes the score-column order."""
    X = np.asarray(X, dtype=np.float64)
    y = list(y)
    if X.shape[0] != len(y):
        raise ModelError("X and y length mismatch")
    if X.size and np.isnan(X).any():
        raise ModelError("X contains NaN; impute before training")
    if class_order is None:
        class_order = (
            STAGE_ORDER if isinstance(y[0], SleepStage) else tuple(sorted(set(y)))
        )
    codes = _encode_labels(y, class_order)
    if len(set(codes.tolist())) < 2:
        raise ModelError("degenerate single-class training set")
    if feature_names is None:
        feature_names = tuple(f"f{i}" for i in range(X.shape[1]))
    estimator = _build_estimator(spec)
    estimator.fit(X, codes)
    return TrainedModel(spec, estimator, tuple(feature_names), tuple(class_order))


def predict(model: TrainedModel, X, feature_names=None):
    """Predict labels and per-class scores (rows sum to 1 for
    probabilistic models). Tie-breaking is deterministic: the first
    maximum in class order wins."""
    X = np.asarray(X, dtype=np.float64)
    if feature_names is not None and tuple(feature_names) != model.feature_names:
        raise ModelError("feature-name mismatch with trained model")
    k = len(model.class_order)
    if X.shape[0] == 0:
        return [], np.empty((0, k))
    proba = model.estimator.predict_proba(X)
    scores = np.zeros((X.shape[0], k))
    for col, code in enumerate(model.estimator.classes_):
        scores[:, int(code)] = proba[:, col]
    picks = np.argmax(scores, axis=1)
    labels = [model.class_order[i] for i in picks]
    return labels, scores


@dataclass(frozen=True)
class CvResult:
    mean_accuracy: float
    std_accuracy: float
    mean_macro_f1: float
    std_macro_f1: float
    fold_accuracy: tuple[float, ...]
    fold_macro_f1: tuple[float, ...]


def cross_validate(spec: ClassifierSpec, X, y, folds: int = 5, seed: int = 0) -> CvResult:
    """Stratified k-fold CV; metrics from the shared eval module."""
    if folds < 2:
        raise ModelError("need at least 2 folds")
    X = np.asarray(X, dtype=np.float64)
    y = list(y)
    class_order = STAGE_ORDER if isinstance(y[0], SleepStage) else tuple(sorted(set(y)))
    codes = _encode_labels(y, class_order)
    counts = np.bincount(codes)
    if np.any(counts[counts > 0] < folds):
        warnings.warn("a class has fewer samples than folds; stratification degraded")

    skf = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    accs, f1s = [], []
    for train_idx, test_idx in skf.split(X, codes):
        model = train_classifier(
            spec, X[train_idx], [y[i] for i in train_idx], class_order=class_order
        )
        pred, _ = predict(model, X[test_idx])
        truth = [y[i] for i in test_idx]
        m = compute_metrics(truth, pred, classes=class_order)
        accs.append(m.accuracy)
        f1s.append(m.macro_f1)
    return CvResult(
        float(np.mean(accs)),
        float(np.std(accs)),
        float(np.mean(f1s)),
        float(np.std(f1s)),
        tuple(accs),
        tuple(f1s),
    )


# Random-search spaces; the ranges are project defaults.
def _sample_hyperparams(algo: str, rng: np.random.Generator) -> dict:
    if algo == "KNN":
        return {"k": int(rng.integers(1, 16))}
    if algo == "LogisticRegression":
        return {"c": float(10.0 ** rng.uniform(-3, 3))}
    if algo == "DecisionTree":
        return {
            "max_depth": int(rng.integers(1, 21)),
            "min_samples_leaf": int(rng.integers(1, 11)),
        }
    if algo == "RandomForest":
        return {
            "n_estimators": int(rng.integers(50, 301)),
            "max_depth": int(rng.integers(3, 21)),
            "max_features": str(rng.choice(["sqrt", "log2"])),
        }
    if algo == "GBDT":
        return {
            "n_estimators": int(rng.integers(50, 301)),
            "learning_rate": float(10.0 ** rng.uniform(-2, 0)),
            "max_depth": int(rng.integers(2, 7)),
        }
    raise ModelError(f"unknown algorithm {algo!r}")


@dataclass(frozen=True)
class TuningResult:
    best_spec: ClassifierSpec
    trace: tuple[dict, ...]  # one row per trial


def tune_hyperparameters(
    algo: str, X, y, budget: int, seed: int = 0, folds: int = 5
) -> TuningResult:
    """Seeded random search with internal stratified CV; returns the
    argmax mean macro-F1 config plus the full evaluation trace."""
    if budget < 1:
        raise ModelError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    trace = []
    best = None
    for trial in range(budget):
        hp = _sample_hyperparams(algo, rng)
        spec = ClassifierSpec(algo, hp, seed=seed)
        cv = cross_validate(spec, X, y, folds=folds, seed=seed)
        trace.append(
            {
                "trial": trial,
                "hyperparams": dict(hp),
                "mean_macro_f1": cv.mean_macro_f1,
                "std_macro_f1": cv.std_macro_f1,
                "mean_accuracy": cv.mean_accuracy,
            }
        )
        if best is None or cv.mean_macro_f1 > best[0]:
            best = (cv.mean_macro_f1, spec)
    return TuningResult(best_spec=best[1], trace=tuple(trace))


def save_trace_csv(trace, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["trial", "hyperparams", "mean_macro_f1", "std_macro_f1", "mean_accuracy"])
        for row in trace:
            writer.writerow(
                [
                    row["trial"],
                    json.dumps(row["hyperparams"], sort_keys=True),
                    row["mean_macro_f1"],
                    row["std_macro_f1"],
                    row["mean_accuracy"],
                ]
            )


def _jsonable(value):
    if isinstance(value, SleepStage):
        return value.name
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def save_model(model: TrainedModel, path) -> None:
    """SEML container: magic, u16 version, length-prefixed JSON header
    (spec + names + class order), length-prefixed pickled estimator."""
    header = {
        "algo": model.spec.algo,
        "hyperparams": {k: _jsonable(v) for k, v in model.spec.hyperparams.items()},
        "seed": model.spec.seed,
        "feature_names": list(model.feature_names),
        "class_order": [_jsonable(c) for c in model.class_order],
        "stage_classes": all(isinstance(c, SleepStage) for c in model.class_order),
    }
    head = json.dumps(header, sort_keys=True).encode()
    params = pickle.dumps(model.estimator, protocol=5)
    with open(path, "wb") as f:
        f.write(_SEML_MAGIC)
        f.write(struct.pack("<H", _SEML_VERSION))
        f.write(struct.pack("<I", len(head)))
        f.write(head)
        f.write(struct.pack("<I", len(params)))
        f.write(params)


def load_model(path) -> TrainedModel:
    raw = Path(path).read_bytes()
    buf = io.BytesIO(raw)
    if buf.read(4) != _SEML_MAGIC:
        raise ModelError("bad magic")
    (version,) = struct.unpack("<H", buf.read(2))
    if version != _SEML_VERSION:
        raise ModelError(f"unsupported version {version}")
    (hlen,) = struct.unpack("<I", buf.read(4))
    header = json.loads(buf.read(hlen))
    (plen,) = struct.unpack("<I", buf.read(4))
    blob = buf.read(plen)
    if len(blob) != plen:
        raise ModelError("truncated file")
    estimator = pickle.loads(blob)
    spec = ClassifierSpec(header["algo"], dict(header["hyperparams"]), header["seed"])
    class_order = tuple(
        SleepStage[c] if header.get("stage_classes") else c for c in header["class_order"]
    )
    return TrainedModel(spec, estimator, tuple(header["feature_names"]), class_order)
