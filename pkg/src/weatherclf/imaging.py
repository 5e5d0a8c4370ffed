"""Image decoding, colour conversion and low-level convolution kernels.

Images are plain numpy arrays: RGB images are ``(height, width, 3)`` uint8,
grayscale images ``(height, width)`` uint8, real planes ``(height, width)``
float64.  Every function here is pure and never mutates its input.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from ._kernels import sobel_nms
from .errors import DecodeError, DimensionError, FileIOError, ParameterError

MIN_SIZE = 3

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T.copy()
LAPLACIAN = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])

CANNY_LOW = 100.0
CANNY_HIGH = 200.0

_SUPPORTED_FORMATS = {"PNG", "JPEG", "BMP"}


def check_rgb(img: np.ndarray, min_size: int = MIN_SIZE) -> np.ndarray:
    """Validate an RGB byte image and return it unchanged."""
    if not isinstance(img, np.ndarray) or img.ndim != 3 or img.shape[2] != 3:
        raise DimensionError(f"expected (H, W, 3) array, got {getattr(img, 'shape', None)}")
    if img.dtype != np.uint8:
        raise DimensionError(f"expected uint8 image, got {img.dtype}")
    h, w = img.shape[:2]
    if h < min_size or w < min_size:
        raise DimensionError(f"image {w}x{h} is smaller than the {min_size}x{min_size} minimum")
    return img


def load_image(path: str | Path) -> np.ndarray:
    """Decode a PNG, JPEG or BMP file into an RGB uint8 array.

    Alpha is dropped and single-channel sources are replicated to three
    channels.  EXIF orientation is ignored.
    """
    path = Path(path)
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise FileIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    with fh:
        try:
            with Image.open(fh) as im:
                if im.format not in _SUPPORTED_FORMATS:
                    raise DecodeError(f"{path}: unsupported format {im.format}")
                im.load()
                rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
        except DecodeError:
            raise
        except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
            raise DecodeError(f"{path}: cannot decode image ({exc})") from exc
    h, w = rgb.shape[:2]
    if h < MIN_SIZE or w < MIN_SIZE:
        raise DimensionError(f"{path}: image {w}x{h} is smaller than the 3x3 minimum")
    return np.ascontiguousarray(rgb)


def save_png(img: np.ndarray, path: str | Path) -> None:
    path = Path(path)
    try:
        Image.fromarray(img).save(path, format="PNG")
    except OSError as exc:
        raise FileIOError(f"cannot write {path}: {exc}") from exc


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """BT.601 luma, rounded half-up; integer arithmetic so results are exact."""
    check_rgb(img)
    c = img.astype(np.int32)
    luma = (299 * c[..., 0] + 587 * c[..., 1] + 114 * c[..., 2] + 500) // 1000
    return np.clip(luma, 0, 255).astype(np.uint8)


def saturation_value(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The S and V planes of :func:`to_hsv` without the hue computation."""
    check_rgb(img)
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    v = np.maximum(np.maximum(r, g), b)
    delta = (v - np.minimum(np.minimum(r, g), b)).astype(np.int32)
    vi = v.astype(np.int32)
    safe_v = np.maximum(vi, 1)
    # round-half-up of 255*delta/v in integers; delta == 0 whenever v == 0
    s = (510 * delta + safe_v) // (2 * safe_v)
    return s.astype(np.uint8), v


def to_hsv(img: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return byte-scaled ``(H, S, V)`` planes.

    ``V = max(R, G, B)`` and ``S = round(255 * (V - min) / V)`` (0 for black).
    Hue uses the hexagonal formula mapped from [0, 360) onto [0, 255].
    """
    check_rgb(img)
    c = img.astype(np.int64)
    r, g, b = c[..., 0], c[..., 1], c[..., 2]
    v = c.max(axis=2)
    mn = c.min(axis=2)
    delta = v - mn
    s, _ = saturation_value(img)

    safe_d = np.where(delta == 0, 1, delta).astype(np.float64)
    rf, gf, bf = r.astype(np.float64), g.astype(np.float64), b.astype(np.float64)
    hue = np.zeros(v.shape, dtype=np.float64)
    is_r = (v == r) & (delta > 0)
    is_g = (v == g) & (delta > 0) & ~is_r
    is_b = (delta > 0) & ~is_r & ~is_g
    hue[is_r] = np.mod((gf - bf)[is_r] / safe_d[is_r], 6.0)
    hue[is_g] = (bf - rf)[is_g] / safe_d[is_g] + 2.0
    hue[is_b] = (rf - gf)[is_b] / safe_d[is_b] + 4.0
    h = np.floor(hue * (255.0 / 6.0) + 0.5)
    h = np.clip(h, 0, 255)
    return h.astype(np.uint8), s, v.astype(np.uint8)


def make_kernel(taps) -> np.ndarray:
    k = np.asarray(taps, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] % 2 == 0:
        raise ParameterError(f"kernel must be square with odd size, got shape {k.shape}")
    if not np.all(np.isfinite(k)):
        raise ParameterError("kernel taps must be finite")
    return k


def convolve2d(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """True 2-D convolution (kernel flipped) with clamp-to-edge borders.

    Accepts any real 2-D plane; the output has the input's shape and dtype
    float64.
    """
    plane = np.asarray(img)
    if plane.ndim != 2:
        raise DimensionError(f"expected a 2-D plane, got shape {plane.shape}")
    kernel = make_kernel(kernel)
    k = kernel.shape[0]
    h, w = plane.shape
    if h < k or w < k:
        raise DimensionError(f"image {w}x{h} is smaller than the {k}x{k} kernel")
    return ndimage.convolve(plane.astype(np.float64, copy=False), kernel, mode="nearest")


def sobel_x(img: np.ndarray) -> np.ndarray:
    return convolve2d(img, SOBEL_X)


def sobel_y(img: np.ndarray) -> np.ndarray:
    return convolve2d(img, SOBEL_Y)


def laplacian(img: np.ndarray) -> np.ndarray:
    return convolve2d(img, LAPLACIAN)


def gaussian_taps(size: int = 5, sigma: float = 1.4) -> np.ndarray:
    ax = np.arange(size, dtype=np.float64) - size // 2
    g = np.exp(-(ax**2) / (2.0 * sigma**2))
    return g / g.sum()


def gaussian_kernel(size: int = 5, sigma: float = 1.4) -> np.ndarray:
    g = gaussian_taps(size, sigma)
    return np.outer(g, g)


_GAUSS_TAPS = gaussian_taps(5, 1.4)
_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def canny(img: np.ndarray, low: float = CANNY_LOW, high: float = CANNY_HIGH) -> np.ndarray:
    """Binary Canny edge map with values in {0, 255}.

    5x5 Gaussian (sigma 1.4), unnormalised Sobel gradients, 4-bin
    non-maximum suppression, double threshold and 8-connected hysteresis.
    """
    if not low < high:
        raise ParameterError(f"canny requires low < high, got low={low}, high={high}")
    plane = np.asarray(img)
    if plane.ndim != 2:
        raise DimensionError(f"expected a 2-D plane, got shape {plane.shape}")
    smooth = plane.astype(np.float64)
    if min(plane.shape) >= 5:
        # the Gaussian is separable and so is clamp-to-edge padding
        smooth = ndimage.convolve1d(smooth, _GAUSS_TAPS, axis=0, mode="nearest")
        smooth = ndimage.convolve1d(smooth, _GAUSS_TAPS, axis=1, mode="nearest")
    thin = sobel_nms(smooth)
    weak = (thin >= low) & (thin > 0.0)
    labels, n = ndimage.label(weak, structure=_EIGHT_CONNECTED)
    if not n:
        return np.zeros(plane.shape, dtype=np.uint8)
    keep = np.bincount(labels[thin >= high], minlength=n + 1) > 0
    keep[0] = False
    return np.where(keep[labels], np.uint8(255), np.uint8(0))
