"""``weatherclf`` command line: augment, extract, train, evaluate, predict, importance, bench.

Exit codes: 0 success, 1 I/O failure, 2 validation or configuration failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import augment, dataset, evaluation, imaging, plotting, scenes, svm
from .errors import DecodeError, FileIOError, ParameterError, WeatherClfError
from .features import ExtractionConfig, extract_features

log = logging.getLogger("weatherclf")

EXIT_OK, EXIT_IO, EXIT_INVALID = 0, 1, 2
JOBS_ENV = "WEATHERCLF_JOBS"
DEFAULT_SEED = 42


def _env_jobs() -> int:
    raw = os.environ.get(JOBS_ENV)
    if raw is None:
        return 1
    try:
        jobs = int(raw)
    except ValueError:
        raise ParameterError(f"{JOBS_ENV} must be an integer, got {raw!r}") from None
    if jobs < 1:
        raise ParameterError(f"{JOBS_ENV} must be >= 1")
    return jobs


@dataclass
class RunConfig:
    seed: int = DEFAULT_SEED
    jobs: int = 1
    augment: dict = field(default_factory=dict)
    canny_low: float = imaging.CANNY_LOW
    canny_high: float = imaging.CANNY_HIGH
    color_mode: str = "intensity"
    c_grid: list = field(default_factory=lambda: list(svm.DEFAULT_C_GRID))
    folds: int = 5
    split: float = 0.8

    @classmethod
    def load(cls, path: str | None) -> "RunConfig":
        cfg = cls(jobs=_env_jobs())
        if path is None:
            cfg.validate()
            return cfg
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise FileIOError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParameterError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ParameterError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ParameterError(f"unknown config fields: {sorted(unknown)}")
        for key, value in raw.items():
            setattr(cfg, key, value)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be a non-negative 64-bit integer")
        if not isinstance(self.jobs, int) or self.jobs < 1:
            raise ParameterError("jobs must be >= 1")
        if not isinstance(self.folds, int) or self.folds < 2:
            raise ParameterError("folds must be >= 2")
        if not 0.0 < float(self.split) < 1.0:
            raise ParameterError("split must be in (0, 1)")
        if not self.c_grid or any(float(c) <= 0 for c in self.c_grid):
            raise ParameterError("c_grid must be a non-empty list of positive values")
        self.extraction()
        self.augment_config()

    def extraction(self) -> ExtractionConfig:
        return ExtractionConfig(float(self.canny_low), float(self.canny_high), self.color_mode)

    def augment_config(self) -> augment.AugmentConfig:
        if not isinstance(self.augment, dict):
            raise ParameterError("augment must be an object")
        return augment.AugmentConfig.from_dict(self.augment)


def _c_grid(text: str) -> list[float]:
    try:
        grid = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid C grid {text!r}") from None
    if not grid or any(c <= 0 for c in grid):
        raise argparse.ArgumentTypeError("C grid values must be positive")
    return grid


def _conditions(text: str) -> list[str]:
    conds = [c.strip() for c in text.split(",") if c.strip()]
    bad = [c for c in conds if c not in augment.CONDITIONS]
    if bad or not conds:
        raise argparse.ArgumentTypeError(
            f"conditions must be a comma list drawn from {','.join(augment.CONDITIONS)}"
        )
    return conds


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _config(args) -> RunConfig:
    cfg = RunConfig.load(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "jobs", None) is not None:
        cfg.jobs = args.jobs
    if getattr(args, "color_mode", None) is not None:
        cfg.color_mode = args.color_mode
    cfg.validate()
    return cfg


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix)


def cmd_scenes(args) -> int:
    paths = scenes.write_scenes(args.output, args.count, args.seed, args.width, args.height)
    print(f"wrote {len(paths)} scenes to {args.output}")
    return EXIT_OK


def cmd_augment(args) -> int:
    cfg = _config(args)
    manifest = augment.synthesize_corpus(
        args.input, args.output, args.conditions, cfg.seed, cfg.augment_config(), cfg.jobs
    )
    counts = {}
    for row in manifest:
        counts[row["condition"]] = counts.get(row["condition"], 0) + 1
    summary = ", ".join(f"{k}={v}" for k, v in counts.items())
    print(f"wrote {len(manifest)} images ({summary}); manifest: {Path(args.output) / 'manifest.csv'}")
    return EXIT_OK


def cmd_extract(args) -> int:
    cfg = _config(args)
    result = dataset.extract_corpus(args.input, cfg.extraction(), cfg.jobs)
    if len(result.data) == 0:
        log.error("no readable images in %s", args.input)
        return EXIT_INVALID
    dataset.write_features_csv(result.data, args.output)
    print(f"wrote {len(result.data)} rows to {args.output}")
    if result.skipped:
        print(f"warning: skipped {len(result.skipped)} unreadable images", file=sys.stderr)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    if args.c_grid is not None:
        cfg.c_grid = args.c_grid
    if args.folds is not None:
        cfg.folds = args.folds
    if args.split is not None:
        cfg.split = args.split
    cfg.validate()

    data = dataset.read_features_csv(args.features)
    if len(svm.class_order(data.y)) < 2:
        raise ParameterError("training needs at least two classes in the feature CSV")
    train_idx, test_idx = svm.split_train_test(data.y, cfg.split, cfg.seed)
    train, test = data.subset(train_idx), data.subset(test_idx)
    model = svm.fit_protocol(train, [float(c) for c in cfg.c_grid], cfg.folds, cfg.seed)
    model.metadata.update(
        {
            "dataset_rows": len(data),
            "train_rows": len(train),
            "test_rows": len(test),
            "split": float(cfg.split),
            "extraction": {
                "canny_low": float(cfg.canny_low),
                "canny_high": float(cfg.canny_high),
                "color_mode": cfg.color_mode,
            },
        }
    )
    svm.save_model(model, args.model)
    if args.holdout:
        dataset.write_features_csv(test, args.holdout)

    print(f"{'C':>10}  {'mean CV accuracy':>16}")
    for c, acc in model.cv_table:
        mark = "  <- best" if c == model.best_c else ""
        print(f"{c:>10g}  {acc:>16.4f}{mark}")
    print(f"best C = {model.best_c:g} ({cfg.folds}-fold CV on {len(train)} training rows)\n")
    report = evaluation.evaluate(model, test)
    print(f"held-out evaluation ({len(test)} rows):")
    print(evaluation.format_metrics_table(report))
    if args.figures:
        plotting.plot_cv_curve(model.cv_table, model.best_c, _sibling(Path(args.model), ".cv.png"))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = svm.load_model(args.model)
    data = dataset.read_features_csv(args.features, model.feature_names)
    report = evaluation.evaluate(model, data)
    text = evaluation.format_metrics_table(report)
    print(text)
    if args.report:
        out = Path(args.report)
        _write_json(out, report.to_dict())
        _write_text(_sibling(out, ".txt"), text + "\n")
        plotting.plot_confusion(report.confusion, report.classes, _sibling(out, ".confusion.png"))
    return EXIT_OK


def _load_extraction(model: svm.WeatherModel, cfg: RunConfig, explicit: bool) -> ExtractionConfig:
    ext = model.metadata.get("extraction")
    if ext and not explicit:
        return ExtractionConfig(float(ext["canny_low"]), float(ext["canny_high"]), ext["color_mode"])
    return cfg.extraction()


def cmd_predict(args) -> int:
    cfg = _config(args)
    model = svm.load_model(args.model)
    img = imaging.load_image(args.image)
    x = extract_features(img, _load_extraction(model, cfg, args.config is not None))
    print(model.predict(x))
    if args.scores:
        for cls, s in zip(model.classes, model.decision_scores(x)):
            print(f"{cls}:{s:.6f}")
    return EXIT_OK


def cmd_importance(args) -> int:
    model = svm.load_model(args.model)
    data = dataset.read_features_csv(args.features, model.feature_names)
    report = evaluation.permutation_importance(model, data, args.repeats, args.seed)
    text = evaluation.format_importance_table(report)
    print(text)
    if args.report:
        out = Path(args.report)
        _write_json(out, report.to_dict())
        _write_text(_sibling(out, ".txt"), text + "\n")
        plotting.plot_importance(report.ranking(), _sibling(out, ".png"))
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args)
    model = svm.load_model(args.model)
    src = Path(args.input)
    if not src.is_dir():
        raise FileIOError(f"input directory not found: {src}")
    paths = [str(p) for p in sorted(src.rglob("*")) if p.is_file() and p.suffix.lower() in augment.IMAGE_SUFFIXES]
    if not paths:
        raise ParameterError(f"no images under {src}")
    report = evaluation.benchmark_inference(
        model, paths, args.iterations, cfg.jobs if args.jobs is not None else max(2, cfg.jobs),
        _load_extraction(model, cfg, args.config is not None),
    )
    print(evaluation.format_benchmark(report))
    if args.report:
        _write_json(Path(args.report), report)
    return EXIT_OK


def _write_json(path: Path, obj) -> None:
    _write_text(path, json.dumps(obj, indent=2) + "\n")


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise FileIOError(f"cannot write {path}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weatherclf", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, jobs=True):
        p.add_argument("--config", help="RunConfig JSON file")
        if seed:
            p.add_argument("--seed", type=int, default=None, help=f"random seed (default {DEFAULT_SEED})")
        if jobs:
            p.add_argument("--jobs", type=_positive_int, default=None,
                           help=f"worker count (default ${JOBS_ENV} or 1)")

    p = sub.add_parser("scenes", help="write procedural clear-weather scenes")
    p.add_argument("--output", required=True)
    p.add_argument("--count", type=_positive_int, default=200)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--width", type=_positive_int, default=320)
    p.add_argument("--height", type=_positive_int, default=240)
    p.set_defaults(func=cmd_scenes)

    p = sub.add_parser("augment", help="synthesise haze/low-light/rain variants")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--conditions", type=_conditions, default=list(augment.CONDITIONS))
    common(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("extract", help="compute the feature CSV of a corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--color-mode", choices=("intensity", "literal"), default=None)
    common(p, seed=False)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="grid-search, fit and hold-out evaluate a model")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--c-grid", type=_c_grid, default=None)
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--split", type=float, default=None)
    p.add_argument("--holdout", help="also write the held-out rows to this CSV")
    p.add_argument("--figures", action="store_true", help="write <model>.cv.png")
    common(p, jobs=False)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="metrics of a model on a feature CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--report", help="JSON report path; .txt and .confusion.png written alongside")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="classify one image")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--scores", action="store_true")
    common(p, seed=False, jobs=False)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("importance", help="permutation feature importance")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--repeats", type=_positive_int, default=10)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--report", help="JSON report path; .txt and .png written alongside")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("bench", help="inference throughput")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--iterations", type=_positive_int, default=3)
    p.add_argument("--report")
    common(p, seed=False)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except (FileIOError, DecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except WeatherClfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
