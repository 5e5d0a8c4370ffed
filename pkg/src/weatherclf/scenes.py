"""Procedural outdoor scenes standing in for clear daylight photographs.

Each scene has a sky gradient with soft clouds, a textured ground plane and
a random set of buildings, trees and vehicles with hard edges.  They are
only meant to give the augmentation and classification pipeline realistic
colour, texture and edge statistics when no photo corpus is at hand.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import imaging
from .errors import FileIOError, ParameterError

_GROUND_PALETTE = np.array(
    [
        (86, 125, 60),  # grass
        (110, 140, 70),
        (120, 95, 70),  # soil
        (105, 105, 110),  # asphalt
        (190, 170, 130),  # sand
        (70, 100, 55),
    ],
    dtype=np.float64,
)
_OBJECT_PALETTE = np.array(
    [
        (180, 60, 50),  # brick
        (200, 40, 40),  # red paint
        (220, 200, 170),  # plaster
        (140, 140, 150),  # concrete
        (60, 80, 140),  # blue paint
        (230, 180, 60),  # yellow
        (90, 60, 40),  # wood
        (240, 240, 235),  # white
        (40, 40, 45),  # dark glass
    ],
    dtype=np.float64,
)


def _fill_rect(canvas, y0, y1, x0, x1, color):
    h, w = canvas.shape[:2]
    y0, y1 = max(0, y0), min(h, y1)
    x0, x1 = max(0, x0), min(w, x1)
    if y0 < y1 and x0 < x1:
        canvas[y0:y1, x0:x1] = color


def _fill_ellipse(canvas, cy, cx, ry, rx, color, yy, xx):
    mask = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
    canvas[mask] = color


def generate_scene(rng: np.random.Generator, width: int = 320, height: int = 240) -> np.ndarray:
    """One random clear-weather scene as an RGB uint8 array."""
    if width < 16 or height < 16:
        raise ParameterError("scenes must be at least 16x16")
    h, w = height, width
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    canvas = np.empty((h, w, 3), dtype=np.float64)

    horizon = int(h * rng.uniform(0.3, 0.6))
    top = np.array([rng.uniform(40, 130), rng.uniform(110, 180), rng.uniform(190, 255)])
    low = np.array([rng.uniform(160, 225), rng.uniform(185, 230), rng.uniform(215, 255)])
    frac = (np.arange(horizon, dtype=np.float64) / max(horizon - 1, 1))[:, None]
    canvas[:horizon] = (top * (1 - frac) + low * frac)[:, None, :]
    for _ in range(rng.integers(0, 5)):
        cy, cx = rng.uniform(0, horizon), rng.uniform(0, w)
        ry, rx = rng.uniform(5, 20), rng.uniform(15, 60)
        d = ((yy[:horizon] - cy) / ry) ** 2 + ((xx[:horizon] - cx) / rx) ** 2
        a = np.clip(1.0 - d, 0.0, 1.0)[..., None] * rng.uniform(0.5, 0.9)
        canvas[:horizon] = canvas[:horizon] * (1 - a) + 245.0 * a

    base = _GROUND_PALETTE[rng.integers(len(_GROUND_PALETTE))] * rng.uniform(0.8, 1.15)
    ground_h = h - horizon
    coarse = rng.normal(0, 1, (max(2, ground_h // 16), max(2, w // 16)))
    coarse = np.kron(coarse, np.ones((16, 16)))[:ground_h, :w]
    if coarse.shape != (ground_h, w):
        coarse = np.resize(coarse, (ground_h, w))
    fine = rng.normal(0, 1, (ground_h, w, 1))
    shade = 1.0 + 0.35 * (np.arange(ground_h) / max(ground_h, 1))[:, None, None]
    canvas[horizon:] = base * shade + 12.0 * coarse[..., None] + rng.uniform(6, 20) * fine

    for _ in range(rng.integers(2, 7)):  # buildings on the horizon
        bw = int(rng.uniform(0.06, 0.22) * w)
        bh = int(rng.uniform(0.1, 0.45) * h)
        x0 = int(rng.uniform(-0.05, 0.95) * w)
        color = _OBJECT_PALETTE[rng.integers(len(_OBJECT_PALETTE))] * rng.uniform(0.75, 1.1)
        _fill_rect(canvas, horizon - bh, horizon + int(0.03 * h), x0, x0 + bw, color)
        win = _OBJECT_PALETTE[rng.integers(len(_OBJECT_PALETTE))] * 0.6
        step = max(4, bw // 5)
        for wy in range(horizon - bh + 3, horizon - 3, step):
            for wx in range(x0 + 2, x0 + bw - 3, step):
                _fill_rect(canvas, wy, wy + step // 2, wx, wx + step // 2, win)

    for _ in range(rng.integers(1, 8)):  # trees
        cx = rng.uniform(0, w)
        cy = horizon + rng.uniform(-0.15, 0.1) * h
        r = rng.uniform(0.04, 0.12) * h
        _fill_rect(canvas, int(cy), int(cy + 1.6 * r), int(cx - r / 6), int(cx + r / 6), (80, 55, 35))
        green = np.array([rng.uniform(30, 90), rng.uniform(90, 160), rng.uniform(30, 80)])
        _fill_ellipse(canvas, cy, cx, r, r * rng.uniform(0.7, 1.2), green, yy, xx)

    for _ in range(rng.integers(0, 6)):  # vehicles and signs in the foreground
        vw = rng.uniform(0.05, 0.15) * w
        vh = vw * rng.uniform(0.35, 0.6)
        x0 = rng.uniform(0, w)
        y0 = rng.uniform(horizon + 0.05 * h, h - vh)
        color = _OBJECT_PALETTE[rng.integers(len(_OBJECT_PALETTE))]
        _fill_rect(canvas, int(y0), int(y0 + vh), int(x0), int(x0 + vw), color)
        _fill_rect(canvas, int(y0 + vh * 0.1), int(y0 + vh * 0.45), int(x0 + vw * 0.2),
                   int(x0 + vw * 0.8), (50, 60, 70))

    canvas += rng.normal(0, 2.0, canvas.shape)
    return np.clip(np.floor(canvas + 0.5), 0, 255).astype(np.uint8)


def write_scenes(out_dir: str | Path, count: int, seed: int = 42, width: int = 320, height: int = 240) -> list[Path]:
    """Write ``count`` scenes as ``scene_00000.png`` ... into ``out_dir``."""
    if count < 1:
        raise ParameterError("count must be >= 1")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise FileIOError(f"cannot create {out_dir}: {exc}") from exc
    paths = []
    for i in range(count):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        p = out_dir / f"scene_{i:05d}.png"
        imaging.save_png(generate_scene(rng, width, height), p)
        paths.append(p)
    return paths
