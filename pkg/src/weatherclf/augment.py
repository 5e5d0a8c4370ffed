"""Synthetic haze, low-light and rain variants of clear images.

Every pixel transform rounds half away from zero and then clamps to
[0, 255].  Randomised steps take an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Literal

import numpy as np

from . import imaging
from .errors import FileIOError, ParameterError, WeatherClfError

log = logging.getLogger(__name__)

CONDITIONS = ("haze", "low_light", "rain")
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")
MANIFEST_COLUMNS = ("source_path", "condition", "output_path", "params")

DepthMode = Literal["uniform", "vertical_gradient"]


def _round_clamp(x: np.ndarray) -> np.ndarray:
    # inputs are non-negative, so floor(x + 0.5) is round-half-away-from-zero
    return np.clip(np.floor(x + 0.5), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class HazeParams:
    atmospheric_light: float = 255.0
    beta: float = 0.5
    depth_mode: DepthMode = "uniform"

    def __post_init__(self):
        if not 0.0 <= self.atmospheric_light <= 255.0:
            raise ParameterError(f"atmospheric light must be in [0, 255], got {self.atmospheric_light}")
        if not self.beta > 0:
            raise ParameterError(f"beta must be > 0, got {self.beta}")
        if self.depth_mode not in ("uniform", "vertical_gradient"):
            raise ParameterError(f"unknown depth mode {self.depth_mode!r}")

    @classmethod
    def from_transmission(cls, t: float, atmospheric_light: float, depth_mode: DepthMode = "uniform"):
        """Parameters whose unit-depth transmission is ``t`` (0 < t <= 1)."""
        if not 0.0 < t <= 1.0:
            raise ParameterError(f"transmission must be in (0, 1], got {t}")
        beta = -math.log(t) if t < 1.0 else 1e-300
        return cls(atmospheric_light, beta, depth_mode)


@dataclass(frozen=True)
class LowLightParams:
    gamma: float = 2.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ParameterError(f"gamma must be > 0, got {self.gamma}")


@dataclass(frozen=True)
class RainParams:
    drop_count: tuple[int, int] = (30, 120)
    drop_length: tuple[int, int] = (8, 20)
    drop_angle: tuple[float, float] = (75.0, 105.0)
    drop_brightness: float = 200.0
    drop_alpha: float = 0.7
    blur_length: int = 7
    blur_angle: float | None = None  # None: mean of drop_angle

    def __post_init__(self):
        lo, hi = self.drop_count
        if lo < 0 or hi < lo:
            raise ParameterError(f"invalid drop_count range {self.drop_count}")
        lo, hi = self.drop_length
        if lo < 1 or hi < lo:
            raise ParameterError(f"invalid drop_length range {self.drop_length}")
        if self.drop_angle[1] < self.drop_angle[0]:
            raise ParameterError(f"invalid drop_angle range {self.drop_angle}")
        if not 0.0 < self.drop_alpha <= 1.0:
            raise ParameterError(f"drop_alpha must be in (0, 1], got {self.drop_alpha}")
        if not 0.0 <= self.drop_brightness <= 255.0:
            raise ParameterError("drop_brightness must be in [0, 255]")
        if self.blur_length < 1:
            raise ParameterError(f"blur_length must be >= 1, got {self.blur_length}")

    @property
    def effective_blur_angle(self) -> float:
        if self.blur_angle is None:
            return 0.5 * (self.drop_angle[0] + self.drop_angle[1])
        return self.blur_angle


def transmission_map(shape: tuple[int, int], p: HazeParams) -> np.ndarray:
    h, w = shape
    if p.depth_mode == "uniform":
        return np.full((h, 1), math.exp(-p.beta))
    # depth 0 on the bottom row, 1 on the top row
    depth = (h - 1 - np.arange(h, dtype=np.float64)) / max(h - 1, 1)
    return np.exp(-p.beta * depth)[:, None]


def apply_haze(img: np.ndarray, p: HazeParams) -> np.ndarray:
    """Atmospheric scattering: ``J * t + A * (1 - t)`` with ``t = exp(-beta * d)``."""
    imaging.check_rgb(img)
    t = transmission_map(img.shape[:2], p)[..., None]
    out = img.astype(np.float64) * t + p.atmospheric_light * (1.0 - t)
    return _round_clamp(out)


def gamma_lut(gamma: float) -> np.ndarray:
    if not gamma > 0:
        raise ParameterError(f"gamma must be > 0, got {gamma}")
    levels = np.arange(256, dtype=np.float64) / 255.0
    return _round_clamp(255.0 * levels**gamma)


def apply_low_light(img: np.ndarray, p: LowLightParams) -> np.ndarray:
    """Gamma darkening on normalised intensities: ``255 * (I / 255) ** gamma``."""
    imaging.check_rgb(img)
    return gamma_lut(p.gamma)[img]


def line_pixels(cx: float, cy: float, length: int, angle_deg: float, centered: bool) -> np.ndarray:
    """Integer ``(y, x)`` pixels covered by a segment of ``length`` pixels.

    Angles are from the horizontal with y growing downward, so 90 degrees is
    a vertical line.  A centred segment is symmetric about ``(cx, cy)``; an
    uncentred one starts there.
    """
    n = max(1, length)
    theta = math.radians(angle_deg)
    span = float(n - 1)
    ts = np.linspace(0.0, span, 4 * n) - (span / 2.0 if centered else 0.0)
    xs = np.floor(cx + ts * math.cos(theta) + 0.5).astype(np.int64)
    ys = np.floor(cy + ts * math.sin(theta) + 0.5).astype(np.int64)
    return np.unique(np.stack([ys, xs], axis=1), axis=0)


def motion_blur_kernel(length: int, angle_deg: float) -> np.ndarray:
    """Normalised line kernel of ``length`` taps at ``angle_deg`` through the centre."""
    if length < 1:
        raise ParameterError(f"motion blur length must be >= 1, got {length}")
    k = length if length % 2 == 1 else length + 1
    c = k // 2
    kernel = np.zeros((k, k), dtype=np.float64)
    pix = line_pixels(c, c, length, angle_deg, centered=True)
    pix = pix[(pix[:, 0] >= 0) & (pix[:, 0] < k) & (pix[:, 1] >= 0) & (pix[:, 1] < k)]
    kernel[pix[:, 0], pix[:, 1]] = 1.0
    return kernel / kernel.sum()


@dataclass(frozen=True)
class Streak:
    x: float
    y: float
    length: int
    angle: float


def sample_streaks(shape: tuple[int, int], p: RainParams, rng: np.random.Generator) -> list[Streak]:
    h, w = shape
    count = int(rng.integers(p.drop_count[0], p.drop_count[1] + 1))
    # integer origins keep the first pixel of every streak inside the image
    xs = rng.integers(0, w, count)
    ys = rng.integers(0, h, count)
    lengths = rng.integers(p.drop_length[0], p.drop_length[1] + 1, count)
    angles = rng.uniform(p.drop_angle[0], p.drop_angle[1], count)
    return [Streak(float(x), float(y), int(n), float(a)) for x, y, n, a in zip(xs, ys, lengths, angles)]


def draw_streaks(img: np.ndarray, streaks: Iterable[Streak], p: RainParams) -> np.ndarray:
    """Alpha-composite each streak over ``img`` (before any blur)."""
    h, w = img.shape[:2]
    out = img.astype(np.float64)
    a = p.drop_alpha
    for s in streaks:
        pix = line_pixels(s.x, s.y, s.length, s.angle, centered=False)
        inside = (pix[:, 0] >= 0) & (pix[:, 0] < h) & (pix[:, 1] >= 0) & (pix[:, 1] < w)
        ys, xs = pix[inside, 0], pix[inside, 1]
        out[ys, xs] = (1.0 - a) * out[ys, xs] + a * p.drop_brightness
    return _round_clamp(out)


def blur_rgb(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    if kernel.shape == (1, 1):
        return img.copy()
    channels = [imaging.convolve2d(img[..., c], kernel) for c in range(3)]
    return _round_clamp(np.stack(channels, axis=2))


def apply_rain(img: np.ndarray, p: RainParams, rng: np.random.Generator) -> np.ndarray:
    """Random bright streaks followed by a directional motion blur."""
    imaging.check_rgb(img)
    streaks = sample_streaks(img.shape[:2], p, rng)
    wet = draw_streaks(img, streaks, p)
    return blur_rgb(wet, motion_blur_kernel(p.blur_length, p.effective_blur_angle))


@dataclass(frozen=True)
class AugmentConfig:
    """Sampling ranges for per-image augmentation parameters."""

    transmission: tuple[float, float] = (0.4, 0.8)
    atmospheric_light: tuple[float, float] = (178.0, 255.0)
    depth_mode: DepthMode = "uniform"
    gamma: tuple[float, float] = (1.5, 5.0)
    rain: RainParams = field(default_factory=RainParams)

    def __post_init__(self):
        lo, hi = self.transmission
        if not 0.0 < lo <= hi <= 1.0:
            raise ParameterError(f"invalid transmission range {self.transmission}")
        lo, hi = self.atmospheric_light
        if not 0.0 <= lo <= hi <= 255.0:
            raise ParameterError(f"invalid atmospheric light range {self.atmospheric_light}")
        lo, hi = self.gamma
        if not 0.0 < lo <= hi:
            raise ParameterError(f"invalid gamma range {self.gamma}")

    @classmethod
    def from_dict(cls, d: dict) -> "AugmentConfig":
        d = dict(d)
        kwargs = {}
        for key in ("transmission", "atmospheric_light", "gamma"):
            if key in d:
                kwargs[key] = tuple(float(v) for v in d.pop(key))
        if "depth_mode" in d:
            kwargs["depth_mode"] = d.pop("depth_mode")
        if "rain" in d:
            r = dict(d.pop("rain"))
            for key in ("drop_count", "drop_length"):
                if key in r:
                    r[key] = tuple(int(v) for v in r[key])
            if "drop_angle" in r:
                r["drop_angle"] = tuple(float(v) for v in r["drop_angle"])
            try:
                kwargs["rain"] = RainParams(**r)
            except TypeError as exc:
                raise ParameterError(f"bad rain config: {exc}") from exc
        if d:
            raise ParameterError(f"unknown augmentation settings: {sorted(d)}")
        return cls(**kwargs)


def condition_rng(seed: int, index: int, condition: str) -> np.random.Generator:
    """Independent stream per (corpus seed, image index, condition)."""
    return np.random.default_rng(np.random.SeedSequence([seed, index, CONDITIONS.index(condition)]))


def sample_gamma(rng: np.random.Generator, config: AugmentConfig) -> float:
    return float(rng.uniform(*config.gamma))


def augment_one(img: np.ndarray, condition: str, rng: np.random.Generator, config: AugmentConfig):
    """Apply ``condition`` with freshly sampled parameters; returns (image, params)."""
    if condition == "haze":
        t = float(rng.uniform(*config.transmission))
        a = float(rng.uniform(*config.atmospheric_light))
        p = HazeParams.from_transmission(t, a, config.depth_mode)
        return apply_haze(img, p), {"transmission": t, "beta": p.beta, **asdict(p)}
    if condition == "low_light":
        g = sample_gamma(rng, config)
        return apply_low_light(img, LowLightParams(g)), {"gamma": g}
    if condition == "rain":
        p = config.rain
        streaks = sample_streaks(img.shape[:2], p, rng)
        out = blur_rgb(draw_streaks(img, streaks, p), motion_blur_kernel(p.blur_length, p.effective_blur_angle))
        params = asdict(p)
        params["blur_angle"] = p.effective_blur_angle
        params["drops"] = [[int(s.x), int(s.y), s.length, round(s.angle, 6)] for s in streaks]
        return out, params
    raise ParameterError(f"unknown condition {condition!r}")


def list_images(directory: str | Path) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileIOError(f"input directory not found: {directory}")
    return sorted(p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def _synthesize_single(job):
    index, src, out_dir, conditions, seed, config = job
    try:
        img = imaging.load_image(src)
    except WeatherClfError as exc:
        log.warning("skipping %s: %s", src, exc)
        return []
    stem = Path(src).stem
    rows = []
    rel = Path("clear") / f"{stem}.png"
    imaging.save_png(img, Path(out_dir) / rel)
    rows.append((str(src), "clear", rel.as_posix(), {}))
    for cond in conditions:
        out, params = augment_one(img, cond, condition_rng(seed, index, cond), config)
        rel = Path(cond) / f"{stem}.png"
        imaging.save_png(out, Path(out_dir) / rel)
        params = {"seed": seed, "index": index, **params}
        rows.append((str(src), cond, rel.as_posix(), params))
    return rows


def synthesize_corpus(
    clear_dir: str | Path,
    out_dir: str | Path,
    conditions: Iterable[str] = CONDITIONS,
    seed: int = 42,
    config: AugmentConfig | None = None,
    jobs: int = 1,
) -> list[dict]:
    """Write clear copies plus one variant per condition and a manifest.

    Output is ``out_dir/<condition>/<stem>.png`` and ``out_dir/manifest.csv``.
    Results are identical for any ``jobs`` value.
    """
    config = config or AugmentConfig()
    requested = set(conditions)
    unknown = requested - set(CONDITIONS)
    if unknown:
        raise ParameterError(f"unknown conditions: {sorted(unknown)}")
    conditions = [c for c in CONDITIONS if c in requested]
    sources = list_images(clear_dir)
    if not sources:
        raise FileIOError(f"no PNG/JPEG/BMP images in {clear_dir}")
    stems = [p.stem for p in sources]
    if len(set(stems)) != len(stems):
        raise ParameterError(f"duplicate image names in {clear_dir}; stems must be unique")
    out_dir = Path(out_dir)
    try:
        for cond in ("clear", *conditions):
            (out_dir / cond).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise FileIOError(f"cannot create output directory {out_dir}: {exc}") from exc

    work = [(i, str(src), str(out_dir), conditions, seed, config) for i, src in enumerate(sources)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_synthesize_single, work, chunksize=4))
    else:
        results = [_synthesize_single(job) for job in work]

    manifest = [
        {"source_path": src, "condition": cond, "output_path": out, "params": params}
        for rows in results
        for src, cond, out, params in rows
    ]
    if not manifest:
        raise FileIOError(f"no readable images in {clear_dir}")
    write_manifest(manifest, out_dir / "manifest.csv")
    return manifest


def write_manifest(rows: list[dict], path: str | Path) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(MANIFEST_COLUMNS)
            for r in rows:
                writer.writerow(
                    [r["source_path"], r["condition"], r["output_path"], json.dumps(r["params"], sort_keys=True)]
                )
    except OSError as exc:
        raise FileIOError(f"cannot write manifest {path}: {exc}") from exc


def read_manifest(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["params"] = json.loads(r["params"])
    return rows

