"""Standardisation, linear SVM training and cross-validated model selection."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ._solver import dual_cd
from .errors import DimensionError, FileIOError, ParameterError, SchemaError
from .features import FEATURE_NAMES, SCHEMA_VERSION

CLASSES = ("clear", "haze", "low_light", "rain")
DEFAULT_C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER = 1000
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Scaler:
    means: np.ndarray
    stds: np.ndarray

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.means.shape[0]:
            raise DimensionError(f"expected {self.means.shape[0]} columns, got {X.shape[-1]}")
        return (X - self.means) / self.stds


def fit_scaler(X) -> Scaler:
    """Per-column population mean and std; zero stds are stored as 1."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DimensionError("cannot fit a scaler on an empty matrix")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds = np.where(stds == 0.0, 1.0, stds)
    return Scaler(means, stds)


def transform(scaler: Scaler, X) -> np.ndarray:
    return scaler.transform(X)


@dataclass
class BinaryLinearSvm:
    weights: np.ndarray
    bias: float
    c: float
    alpha: np.ndarray | None = None
    n_iter: int = 0
    converged: bool = False
    violation: float = float("nan")
    primal_history: np.ndarray | None = field(default=None, repr=False)
    dual_history: np.ndarray | None = field(default=None, repr=False)

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weights + self.bias


def train_binary(
    X,
    y,
    c: float = 1.0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
) -> BinaryLinearSvm:
    """Hinge-loss linear SVM by dual coordinate descent.

    The bias is learned as the weight of an appended constant-1 column, so it
    is regularised together with ``w``.  ``y`` must be +1/-1.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionError(f"X shape {X.shape} does not match {y.shape[0]} labels")
    if not np.all(np.isfinite(X)):
        raise ParameterError("features must be finite")
    if not np.all((y == 1.0) | (y == -1.0)):
        raise ParameterError("binary labels must be +1 or -1")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ParameterError("training data must contain both classes")
    if not c > 0:
        raise ParameterError(f"C must be > 0, got {c}")
    Xa = np.ascontiguousarray(np.hstack([X, np.ones((X.shape[0], 1))]))
    w, alpha, sweeps, converged, violation, primal, dual = dual_cd(
        Xa, y, float(c), float(tol), int(max_iter), int(seed)
    )
    return BinaryLinearSvm(
        weights=w[:-1].copy(),
        bias=float(w[-1]),
        c=float(c),
        alpha=alpha,
        n_iter=int(sweeps),
        converged=bool(converged),
        violation=float(violation),
        primal_history=primal,
        dual_history=dual,
    )


@dataclass
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    paths: list[str]
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=object)
        if self.X.ndim != 2:
            raise DimensionError(f"feature matrix must be 2-D, got shape {self.X.shape}")
        if not (self.X.shape[0] == self.y.shape[0] == len(self.paths)):
            raise DimensionError("X, y and paths must have the same number of rows")
        if self.X.shape[1] != len(self.feature_names):
            raise DimensionError(
                f"{self.X.shape[1]} columns but {len(self.feature_names)} feature names"
            )

    def __len__(self) -> int:
        return self.X.shape[0]

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledDataset(self.X[idx], self.y[idx], [self.paths[i] for i in idx], self.feature_names)


def class_order(labels) -> tuple[str, ...]:
    """Present labels, canonical weather classes first, the rest alphabetical."""
    present = set(str(v) for v in labels)
    canon = [c for c in CLASSES if c in present]
    rest = sorted(present - set(CLASSES))
    return tuple(canon + rest)


@dataclass
class WeatherModel:
    feature_names: tuple[str, ...]
    classes: tuple[str, ...]
    scaler: Scaler
    weights: np.ndarray  # (n_classes, n_features)
    biases: np.ndarray  # (n_classes,)
    best_c: float
    cv_table: list[tuple[float, float]] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != len(self.feature_names):
            raise SchemaError(
                f"model expects {len(self.feature_names)} features, got {X.shape[-1]}"
            )
        return X

    def decision_scores(self, X) -> np.ndarray:
        """Per-class margins ``w_k . standardise(x) + b_k``; 1-D in, 1-D out."""
        Z = self.scaler.transform(self._check(X))
        return Z @ self.weights.T + self.biases

    def predict(self, X):
        scores = self.decision_scores(X)
        # argmax returns the first maximum, i.e. the earliest class on ties
        idx = np.argmax(scores, axis=-1)
        labels = np.asarray(self.classes, dtype=object)
        return labels[idx] if np.ndim(idx) else labels[int(idx)]


def train_ovr(
    data: LabeledDataset,
    c: float = 1.0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
) -> WeatherModel:
    """Fit a scaler, then one class-vs-rest machine per class."""
    classes = class_order(data.y)
    if len(classes) < 2:
        raise ParameterError(f"need at least 2 classes to train, got {list(classes)}")
    scaler = fit_scaler(data.X)
    Z = scaler.transform(data.X)
    weights = np.empty((len(classes), Z.shape[1]))
    biases = np.empty(len(classes))
    for k, cls in enumerate(classes):
        yk = np.where(data.y == cls, 1.0, -1.0)
        m = train_binary(Z, yk, c, tol, max_iter, seed + k)
        weights[k] = m.weights
        biases[k] = m.bias
    return WeatherModel(
        feature_names=tuple(data.feature_names),
        classes=classes,
        scaler=scaler,
        weights=weights,
        biases=biases,
        best_c=float(c),
        metadata={"rows": len(data)},
    )


def stratified_kfold(y, k: int, seed: int = 42) -> list[np.ndarray]:
    """Seeded shuffle within each class, then round-robin dealing into folds.

    Dealing continues across classes, so fold sizes differ by at most one.
    """
    y = np.asarray(y, dtype=object)
    if k < 2:
        raise ParameterError(f"need at least 2 folds, got {k}")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    slot = 0
    for cls in class_order(y):
        members = np.flatnonzero(y == cls)
        if members.size < k:
            raise ParameterError(f"class {cls!r} has {members.size} samples, fewer than {k} folds")
        for i in rng.permutation(members):
            folds[slot % k].append(int(i))
            slot += 1
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def split_train_test(y, fraction: float = 0.8, seed: int = 42) -> tuple[np.ndarray, np.ndarray]:
    """Stratified, seeded split returning (train indices, test indices)."""
    y = np.asarray(y, dtype=object)
    n = y.shape[0]
    if n < 5:
        raise ParameterError(f"need at least 5 samples to split, got {n}")
    if not 0.0 < fraction < 1.0:
        raise ParameterError(f"train fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for cls in class_order(y):
        members = rng.permutation(np.flatnonzero(y == cls))
        n_train = int(np.floor(fraction * members.size + 0.5))
        if n_train == 0:
            raise ParameterError(f"class {cls!r} too small for a {fraction:g} split")
        train.extend(members[:n_train].tolist())
        test.extend(members[n_train:].tolist())
    if not test:
        raise ParameterError("split leaves an empty test set")
    return np.array(sorted(train), dtype=np.int64), np.array(sorted(test), dtype=np.int64)


def accuracy(model: WeatherModel, data: LabeledDataset) -> float:
    return float(np.mean(model.predict(data.X) == data.y))


def grid_search_cv(
    data: LabeledDataset,
    c_grid: Sequence[float] = DEFAULT_C_GRID,
    k: int = 5,
    seed: int = 42,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[float, list[tuple[float, float]]]:
    """Mean k-fold validation accuracy per C; the scaler is refit per fold.

    Returns ``(best_c, [(C, mean_accuracy), ...])`` with ties going to the
    smaller C.
    """
    if len(c_grid) == 0:
        raise ParameterError("C grid is empty")
    folds = stratified_kfold(data.y, k, seed)
    everything = np.arange(len(data))
    table = []
    for c in c_grid:
        scores = []
        for fold in folds:
            train_idx = np.setdiff1d(everything, fold, assume_unique=True)
            model = train_ovr(data.subset(train_idx), c, tol, max_iter, seed)
            scores.append(accuracy(model, data.subset(fold)))
        table.append((float(c), float(np.mean(scores))))
    best_c, best_acc = None, -1.0
    for c, acc in sorted(table):
        if acc > best_acc:
            best_c, best_acc = c, acc
    return best_c, table


def fit_protocol(
    data: LabeledDataset,
    c_grid: Sequence[float] = DEFAULT_C_GRID,
    k: int = 5,
    seed: int = 42,
) -> WeatherModel:
    """Grid-search C on ``data`` and refit on all of it at the best value."""
    best_c, table = grid_search_cv(data, c_grid, k, seed)
    model = train_ovr(data, best_c, seed=seed)
    model.cv_table = table
    model.metadata.update({"seed": seed, "folds": k})
    return model


def model_to_dict(model: WeatherModel) -> dict:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "schema_version": model.schema_version,
        "feature_schema": list(model.feature_names),
        "classes": list(model.classes),
        "scaler": {"means": model.scaler.means.tolist(), "stds": model.scaler.stds.tolist()},
        "machines": [
            {"class": cls, "weights": model.weights[k].tolist(), "bias": float(model.biases[k])}
            for k, cls in enumerate(model.classes)
        ],
        "best_c": model.best_c,
        "cv_table": [{"c": c, "mean_accuracy": acc} for c, acc in model.cv_table],
        "training": model.metadata,
    }


def model_from_dict(d: dict, expected_schema: Sequence[str] | None = FEATURE_NAMES) -> WeatherModel:
    try:
        if d["format_version"] != MODEL_FORMAT_VERSION:
            raise SchemaError(f"unsupported model format_version {d['format_version']}")
        names = tuple(d["feature_schema"])
        if expected_schema is not None and names != tuple(expected_schema):
            raise SchemaError("model feature schema does not match this build")
        classes = tuple(d["classes"])
        machines = {m["class"]: m for m in d["machines"]}
        if set(machines) != set(classes) or len(classes) != len(d["machines"]):
            raise SchemaError("model machines do not match its class list")
        weights = np.array([machines[c]["weights"] for c in classes], dtype=np.float64)
        biases = np.array([machines[c]["bias"] for c in classes], dtype=np.float64)
        scaler = Scaler(
            np.array(d["scaler"]["means"], dtype=np.float64),
            np.array(d["scaler"]["stds"], dtype=np.float64),
        )
        if weights.shape != (len(classes), len(names)) or scaler.means.shape != (len(names),):
            raise SchemaError("model arrays do not match the feature schema length")
        return WeatherModel(
            feature_names=names,
            classes=classes,
            scaler=scaler,
            weights=weights,
            biases=biases,
            best_c=float(d["best_c"]),
            cv_table=[(float(r["c"]), float(r["mean_accuracy"])) for r in d.get("cv_table", [])],
            metadata=dict(d.get("training", {})),
            schema_version=int(d.get("schema_version", SCHEMA_VERSION)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"malformed model file: {exc}") from exc


def save_model(model: WeatherModel, path: str | Path) -> None:
    # json writes floats with repr(), the shortest string that round-trips
    text = json.dumps(model_to_dict(model), indent=2, sort_keys=False) + "\n"
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise FileIOError(f"cannot write model {path}: {exc}") from exc


def load_model(path: str | Path, expected_schema: Sequence[str] | None = FEATURE_NAMES) -> WeatherModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileIOError(f"cannot read model {path}: {exc}") from exc
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from exc
    return model_from_dict(d, expected_schema)
