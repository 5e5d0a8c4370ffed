"""The 20-slot weather feature vector.

Every statistic is a population (divide-by-N) moment.  Convolution-based
features use the full plane with clamp-to-edge borders; LBP statistics use
only the interior pixels whose sampling ring lies inside the image.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import imaging
from ._kernels import lbp_codes
from .errors import DimensionError, ParameterError

SCHEMA_VERSION = 1

FEATURE_NAMES: tuple[str, ...] = (
    "brightness",
    "saturation",
    "noise_level",
    "blur_metric",
    "edge_strength_x",
    "motion_blur_x",
    "lbp_mean_r1",
    "lbp_var_r1",
    "lbp_mean_r2",
    "lbp_var_r2",
    "lbp_mean_r3",
    "lbp_var_r3",
    "edges_mean",
    "edges_var",
    "color_mean_b",
    "color_var_b",
    "color_mean_g",
    "color_var_g",
    "color_mean_r",
    "color_var_r",
)
N_FEATURES = len(FEATURE_NAMES)

LBP_POINTS = 8
LBP_RADII = (1, 2, 3)
MIN_EXTRACT_SIZE = 2 * max(LBP_RADII) + 1

# Bilinear samples of tied neighbours can land a few ulps below the centre;
# treat anything within this distance as a tie.
_TIE_EPS = 1e-9

ColorMode = Literal["intensity", "literal"]


@dataclass(frozen=True)
class ExtractionConfig:
    canny_low: float = imaging.CANNY_LOW
    canny_high: float = imaging.CANNY_HIGH
    color_mode: ColorMode = "intensity"

    def __post_init__(self):
        if self.color_mode not in ("intensity", "literal"):
            raise ParameterError(f"unknown color mode {self.color_mode!r}")
        if not self.canny_low < self.canny_high:
            raise ParameterError("canny_low must be below canny_high")


def _moments(values: np.ndarray) -> tuple[float, float]:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise DimensionError("statistics of an empty plane are undefined")
    mean = v.mean()
    var = np.mean((v - mean) ** 2)
    return float(mean), float(var)


def _histogram_moments(hist: np.ndarray) -> tuple[float, float]:
    hist = np.asarray(hist, dtype=np.float64)
    levels = np.arange(hist.shape[0], dtype=np.float64)
    total = hist.sum()
    mean = float((levels * hist).sum() / total)
    var = float((((levels - mean) ** 2) * hist).sum() / total)
    return mean, var


def brightness(v_plane: np.ndarray) -> float:
    return _moments(v_plane)[0]


def saturation(s_plane: np.ndarray) -> float:
    return _moments(s_plane)[0]


def noise_level(gray: np.ndarray) -> float:
    """Variance of the Laplacian response."""
    return _moments(imaging.laplacian(gray))[1]


def blur_metric(gray: np.ndarray) -> float:
    """Variance of the Laplacian response; the same quantity as noise_level."""
    return _moments(imaging.laplacian(gray))[1]


def edge_strength_x(gray: np.ndarray) -> float:
    return float(np.mean(np.abs(imaging.sobel_x(gray))))


def motion_blur_x(gray: np.ndarray) -> float:
    return _moments(imaging.sobel_x(gray))[1]


def _ring_offsets(radius: int, points: int = LBP_POINTS) -> list[tuple[float, float]]:
    """(dy, dx) sample offsets, counter-clockwise from +x, y pointing down."""
    out = []
    for k in range(points):
        theta = 2.0 * np.pi * k / points
        dy = round(-radius * np.sin(theta), 12)
        dx = round(radius * np.cos(theta), 12)
        out.append((dy + 0.0, dx + 0.0))
    return out


def lbp_map(gray: np.ndarray, radius: int) -> np.ndarray:
    """LBP codes (0-255) of the interior pixels, shape ``(H - 2R, W - 2R)``.

    Bit k is set iff the bilinear sample at angle ``2*pi*k/8`` on the
    radius-R circle is >= the centre pixel.
    """
    plane = np.asarray(gray)
    if plane.ndim != 2:
        raise DimensionError(f"expected a 2-D plane, got shape {plane.shape}")
    if radius < 1:
        raise ParameterError(f"LBP radius must be >= 1, got {radius}")
    h, w = plane.shape
    if h <= 2 * radius or w <= 2 * radius:
        raise DimensionError(
            f"image {w}x{h} too small for LBP radius {radius} (needs > {2 * radius} per side)"
        )
    offsets = np.array(_ring_offsets(radius), dtype=np.float64)
    return lbp_codes(
        np.ascontiguousarray(plane, dtype=np.float64), radius, offsets[:, 0], offsets[:, 1], _TIE_EPS
    )


def lbp_stats(gray: np.ndarray, radius: int) -> tuple[float, float]:
    # moments from the 256-bin code histogram; exact for integer codes
    return _histogram_moments(np.bincount(lbp_map(gray, radius).ravel(), minlength=256))


def edge_stats(edges: np.ndarray) -> tuple[float, float]:
    return _moments(edges)


def color_stats(channel: np.ndarray, mode: ColorMode = "intensity") -> tuple[float, float]:
    """Moments of a channel's 256-bin histogram.

    ``intensity`` treats the histogram as a distribution over intensities
    (mean and variance of the pixel values).  ``literal`` takes the moments
    of the 256 bin counts themselves, so the mean is always N/256.
    """
    plane = np.asarray(channel)
    if plane.size == 0:
        raise DimensionError("statistics of an empty plane are undefined")
    hist = np.bincount(plane.ravel().astype(np.int64), minlength=256)[:256].astype(np.float64)
    if mode == "intensity":
        return _histogram_moments(hist)
    if mode == "literal":
        mean = float(hist.sum() / 256.0)
        var = float(np.sum((hist - mean) ** 2) / 256.0)
        return mean, var
    raise ParameterError(f"unknown color mode {mode!r}")


def extract_features(img: np.ndarray, config: ExtractionConfig | None = None) -> np.ndarray:
    """Compute the 20 features of ``img`` in :data:`FEATURE_NAMES` order."""
    config = config or ExtractionConfig()
    imaging.check_rgb(img)
    h, w = img.shape[:2]
    if h < MIN_EXTRACT_SIZE or w < MIN_EXTRACT_SIZE:
        raise DimensionError(
            f"image {w}x{h} too small: lbp_mean_r3 needs at least "
            f"{MIN_EXTRACT_SIZE}x{MIN_EXTRACT_SIZE}"
        )

    s, v = imaging.saturation_value(img)
    gray = imaging.to_grayscale(img)
    lap_var = _moments(imaging.laplacian(gray))[1]
    sx = imaging.sobel_x(gray)

    out = np.empty(N_FEATURES, dtype=np.float64)
    out[0] = brightness(v)
    out[1] = saturation(s)
    out[2] = lap_var
    out[3] = lap_var
    out[4] = float(np.mean(np.abs(sx)))
    out[5] = _moments(sx)[1]
    for i, r in enumerate(LBP_RADII):
        out[6 + 2 * i], out[7 + 2 * i] = lbp_stats(gray, r)
    out[12], out[13] = edge_stats(imaging.canny(gray, config.canny_low, config.canny_high))
    for i, ch in enumerate((2, 1, 0)):  # B, G, R
        out[14 + 2 * i], out[15 + 2 * i] = color_stats(img[..., ch], config.color_mode)
    return out
