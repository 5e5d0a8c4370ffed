"""Confusion matrices, per-class metrics, permutation importance and throughput."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import imaging
from .errors import DimensionError, ParameterError, SchemaError
from .features import ExtractionConfig, extract_features
from .svm import LabeledDataset, WeatherModel

METRIC_NAMES = ("accuracy", "precision", "recall", "f1")


@dataclass(frozen=True)
class ConfusionMatrix:
    classes: tuple[str, ...]
    counts: np.ndarray  # rows: true class, columns: predicted class

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(y_true, y_pred, classes: Sequence[str]) -> ConfusionMatrix:
    y_true = list(y_true)
    y_pred = list(y_pred)
    if len(y_true) != len(y_pred):
        raise DimensionError(f"{len(y_true)} true labels vs {len(y_pred)} predictions")
    if not y_true:
        raise DimensionError("cannot build a confusion matrix from no samples")
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        try:
            counts[index[t], index[p]] += 1
        except KeyError as exc:
            raise ParameterError(f"label {exc.args[0]!r} is not one of {list(classes)}") from None
    return ConfusionMatrix(tuple(classes), counts)


def binary_counts(cm: ConfusionMatrix, cls: str) -> tuple[int, int, int, int]:
    """``(TP, TN, FP, FN)`` for ``cls`` against all other classes."""
    if cls not in cm.classes:
        raise ParameterError(f"unknown class {cls!r}")
    k = cm.classes.index(cls)
    tp = int(cm.counts[k, k])
    fp = int(cm.counts[:, k].sum()) - tp
    fn = int(cm.counts[k, :].sum()) - tp
    tn = cm.total - tp - fp - fn
    return tp, tn, fp, fn


@dataclass
class ClassMetrics:
    tp: int
    tn: int
    fp: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    support: int
    undefined: list[str] = field(default_factory=list)


def class_metrics(tp: int, tn: int, fp: int, fn: int) -> ClassMetrics:
    """One-vs-rest accuracy, precision, recall and F1.

    A ratio with a zero denominator is reported as 0 and named in
    ``undefined``.
    """
    undefined = []

    def ratio(num, den, name):
        if den == 0:
            undefined.append(name)
            return 0.0
        return num / den

    total = tp + tn + fp + fn
    acc = ratio(tp + tn, total, "accuracy")
    prec = ratio(tp, tp + fp, "precision")
    rec = ratio(tp, tp + fn, "recall")
    f1 = ratio(2.0 * prec * rec, prec + rec, "f1")
    return ClassMetrics(tp, tn, fp, fn, acc, prec, rec, f1, tp + fn, undefined)


@dataclass
class MetricsReport:
    classes: tuple[str, ...]
    per_class: dict[str, ClassMetrics]
    macro: dict[str, float]
    overall_accuracy: float
    total: int
    confusion: list[list[int]]

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "per_class": {c: asdict(m) for c, m in self.per_class.items()},
            "macro": dict(self.macro),
            "overall_accuracy": self.overall_accuracy,
            "total": self.total,
            "confusion": self.confusion,
        }


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    if cm.total == 0:
        raise DimensionError("confusion matrix is empty")
    per_class = {c: class_metrics(*binary_counts(cm, c)) for c in cm.classes}
    macro = {name: float(np.mean([getattr(m, name) for m in per_class.values()])) for name in METRIC_NAMES}
    overall = float(np.trace(cm.counts)) / cm.total
    return MetricsReport(cm.classes, per_class, macro, overall, cm.total, cm.counts.tolist())


def evaluate(model: WeatherModel, data: LabeledDataset) -> MetricsReport:
    pred = model.predict(data.X)
    return metrics(confusion(data.y, pred, model.classes))


def format_metrics_table(report: MetricsReport) -> str:
    head = f"{'Class':<12}{'Accuracy':>10}{'Precision':>11}{'Recall':>9}{'F1 Score':>10}{'Support':>9}"
    lines = [head, "-" * len(head)]
    for c in report.classes:
        m = report.per_class[c]
        flag = " *" if m.undefined else ""
        lines.append(
            f"{c:<12}{m.accuracy:>10.4f}{m.precision:>11.4f}{m.recall:>9.4f}{m.f1:>10.4f}{m.support:>9d}{flag}"
        )
    mac = report.macro
    lines.append(
        f"{'Average':<12}{mac['accuracy']:>10.4f}{mac['precision']:>11.4f}"
        f"{mac['recall']:>9.4f}{mac['f1']:>10.4f}{report.total:>9d}"
    )
    lines.append(f"overall accuracy (trace/total): {report.overall_accuracy:.4f}")
    if any(m.undefined for m in report.per_class.values()):
        lines.append("* zero-denominator metric reported as 0")
    return "\n".join(lines)


@dataclass
class ImportanceReport:
    feature_names: tuple[str, ...]
    importances: np.ndarray  # (n_features,) mean accuracy drop
    stds: np.ndarray
    drops: np.ndarray  # (n_features, repeats)
    baseline: float
    repeats: int
    seed: int

    def ranking(self) -> list[tuple[str, float, float]]:
        """Features by descending mean drop; stable in schema order on ties."""
        order = sorted(range(len(self.feature_names)), key=lambda j: (-self.importances[j], j))
        return [(self.feature_names[j], float(self.importances[j]), float(self.stds[j])) for j in order]

    def to_dict(self) -> dict:
        return {
            "baseline_accuracy": self.baseline,
            "repeats": self.repeats,
            "seed": self.seed,
            "features": [
                {"feature": name, "importance": imp, "std": sd} for name, imp, sd in self.ranking()
            ],
        }


def permutation_importance(
    model: WeatherModel, data: LabeledDataset, repeats: int = 10, seed: int = 42
) -> ImportanceReport:
    """Mean drop in accuracy when one column is shuffled across samples."""
    if repeats < 1:
        raise ParameterError(f"repeats must be >= 1, got {repeats}")
    if len(data) == 0:
        raise DimensionError("importance needs at least one sample")
    if tuple(data.feature_names) != tuple(model.feature_names):
        raise SchemaError("dataset columns do not match the model's feature schema")
    y = data.y
    baseline = float(np.mean(model.predict(data.X) == y))
    n_feat = data.X.shape[1]
    drops = np.zeros((n_feat, repeats))
    for j in range(n_feat):
        X = data.X.copy()
        for r in range(repeats):
            rng = np.random.default_rng(np.random.SeedSequence([seed, j, r]))
            X[:, j] = data.X[rng.permutation(len(data)), j]
            drops[j, r] = baseline - float(np.mean(model.predict(X) == y))
    return ImportanceReport(
        tuple(data.feature_names), drops.mean(axis=1), drops.std(axis=1), drops, baseline, repeats, seed
    )


def format_importance_table(report: ImportanceReport) -> str:
    lines = [f"{'Feature':<18}{'Importance':>12}{'Std':>10}", "-" * 40]
    for name, imp, sd in report.ranking():
        lines.append(f"{name:<18}{imp:>12.6f}{sd:>10.6f}")
    lines.append(f"baseline accuracy: {report.baseline:.4f} ({report.repeats} repeats, seed {report.seed})")
    return "\n".join(lines)


def _rate(count: int, seconds: float) -> float:
    return count / seconds if seconds > 0 else float("inf")


def benchmark_inference(
    model: WeatherModel,
    paths: Sequence[str],
    iterations: int = 3,
    jobs: int = 4,
    config: ExtractionConfig | None = None,
    predict_rows: int = 20000,
) -> dict:
    """Wall-clock throughput of decode, extraction and prediction.

    One warm-up pass over all images runs first and is not timed.
    """
    if not paths:
        raise ParameterError("benchmark needs at least one image")
    if iterations < 1:
        raise ParameterError("iterations must be >= 1")
    config = config or ExtractionConfig()

    t0 = time.perf_counter()
    images = [imaging.load_image(p) for p in paths]
    decode_s = time.perf_counter() - t0

    feats = [extract_features(img, config) for img in images]  # warm-up
    model.predict(np.array(feats))

    by_size: dict[str, list[float]] = {}
    extract_s = predict_s = 0.0
    for _ in range(iterations):
        for img in images:
            a = time.perf_counter()
            vec = extract_features(img, config)
            b = time.perf_counter()
            model.predict(vec)
            c = time.perf_counter()
            extract_s += b - a
            predict_s += c - b
            key = f"{img.shape[1]}x{img.shape[0]}"
            by_size.setdefault(key, []).append(b - a)
    n = iterations * len(images)

    def work(img):
        return model.predict(extract_features(img, config))

    jobs = max(1, int(jobs))
    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        list(pool.map(work, [img for _ in range(iterations) for img in images]))
    parallel_s = time.perf_counter() - t0

    X = np.array(feats)
    X = np.resize(X, (predict_rows, X.shape[1]))
    t0 = time.perf_counter()
    model.predict(X)
    batch_s = time.perf_counter() - t0
    single_n = min(2000, predict_rows)
    t0 = time.perf_counter()
    for row in X[:single_n]:
        model.predict(row)
    single_s = time.perf_counter() - t0

    single_thread = _rate(n, extract_s + predict_s)
    multi_thread = _rate(n, parallel_s)
    return {
        "images": len(images),
        "iterations": iterations,
        "jobs": jobs,
        "stages_ms_per_image": {
            "decode": 1000.0 * decode_s / len(images),
            "extract": 1000.0 * extract_s / n,
            "predict": 1000.0 * predict_s / n,
        },
        "extract_images_per_sec": _rate(n, extract_s),
        "extract_predict_images_per_sec": single_thread,
        "multi_thread_images_per_sec": multi_thread,
        "multi_thread_speedup": multi_thread / single_thread if single_thread else float("nan"),
        "predict_batch_per_sec": _rate(predict_rows, batch_s),
        "predict_single_per_sec": _rate(single_n, single_s),
        "by_size": {
            size: {"images_per_sec": _rate(len(ts), sum(ts)), "samples": len(ts)}
            for size, ts in sorted(by_size.items())
        },
    }


def format_benchmark(report: dict) -> str:
    st = report["stages_ms_per_image"]
    lines = [
        f"images: {report['images']}  iterations: {report['iterations']}  workers: {report['jobs']}",
        f"{'stage':<28}{'ms/image':>12}",
        f"{'decode':<28}{st['decode']:>12.3f}",
        f"{'extract':<28}{st['extract']:>12.3f}",
        f"{'predict':<28}{st['predict']:>12.4f}",
        "",
        f"{'throughput':<28}{'per sec':>12}",
        f"{'extract':<28}{report['extract_images_per_sec']:>12.1f}",
        f"{'extract+predict (1 thread)':<28}{report['extract_predict_images_per_sec']:>12.1f}",
        f"{'extract+predict (pool)':<28}{report['multi_thread_images_per_sec']:>12.1f}",
        f"{'predict only (batch)':<28}{report['predict_batch_per_sec']:>12.0f}",
        f"{'predict only (per call)':<28}{report['predict_single_per_sec']:>12.0f}",
        "",
        f"{'image size':<28}{'images/sec':>12}",
    ]
    for size, row in report["by_size"].items():
        lines.append(f"{size:<28}{row['images_per_sec']:>12.1f}")
    return "\n".join(lines)
