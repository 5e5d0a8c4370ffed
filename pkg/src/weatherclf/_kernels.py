"""Compiled per-pixel loops for the hot paths of feature extraction."""

import numpy as np
from numba import njit

_TAN_22_5 = 0.41421356237309503
_TAN_67_5 = 2.414213562373095


@njit(cache=True, nogil=True)
def gradient_nms(gx, gy):
    """Gradient magnitude thinned by 4-bin non-maximum suppression.

    A pixel survives if it is >= its predecessor and > its successor along
    the quantised gradient direction, so a two-pixel plateau keeps one pixel.
    Neighbours outside the image count as zero.
    """
    h, w = gx.shape
    mag = np.empty((h, w))
    for y in range(h):
        for x in range(w):
            mag[y, x] = np.sqrt(gx[y, x] * gx[y, x] + gy[y, x] * gy[y, x])
    return _suppress(gx, gy, mag)


@njit(cache=True, nogil=True)
def sobel_nms(f):
    """Forward-difference Sobel gradients of ``f`` (clamped borders), then NMS."""
    h, w = f.shape
    gx = np.empty((h, w))
    gy = np.empty((h, w))
    mag = np.empty((h, w))
    for y in range(h):
        yu = max(y - 1, 0)
        yd = min(y + 1, h - 1)
        for x in range(w):
            xl = max(x - 1, 0)
            xr = min(x + 1, w - 1)
            a = f[yu, xr] - f[yu, xl]
            b = f[y, xr] - f[y, xl]
            c = f[yd, xr] - f[yd, xl]
            dx = a + 2.0 * b + c
            a = f[yd, xl] - f[yu, xl]
            b = f[yd, x] - f[yu, x]
            c = f[yd, xr] - f[yu, xr]
            dy = a + 2.0 * b + c
            gx[y, x] = dx
            gy[y, x] = dy
            mag[y, x] = np.sqrt(dx * dx + dy * dy)
    return _suppress(gx, gy, mag)


@njit(cache=True, nogil=True)
def _suppress(gx, gy, mag):
    h, w = gx.shape
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            m = mag[y, x]
            if m == 0.0:
                continue
            ax = abs(gx[y, x])
            ay = abs(gy[y, x])
            # y grows downward: direction (dx, dy) follows (gx, gy)
            if ay <= _TAN_22_5 * ax:
                dy, dx = 0, 1
            elif ay >= _TAN_67_5 * ax:
                dy, dx = 1, 0
            elif (gx[y, x] > 0) == (gy[y, x] > 0):
                dy, dx = 1, 1
            else:
                dy, dx = 1, -1
            yb, xb = y - dy, x - dx
            ya, xa = y + dy, x + dx
            before = mag[yb, xb] if 0 <= yb < h and 0 <= xb < w else 0.0
            after = mag[ya, xa] if 0 <= ya < h and 0 <= xa < w else 0.0
            if m >= before and m > after:
                out[y, x] = m
    return out


@njit(cache=True, nogil=True)
def lbp_codes(f, radius, offsets_y, offsets_x, tie_eps):
    h, w = f.shape
    ih = h - 2 * radius
    iw = w - 2 * radius
    n = offsets_y.shape[0]
    iy = np.empty(n, dtype=np.int64)
    ix = np.empty(n, dtype=np.int64)
    fy = np.empty(n)
    fx = np.empty(n)
    for k in range(n):
        iy[k] = int(np.floor(offsets_y[k]))
        ix[k] = int(np.floor(offsets_x[k]))
        fy[k] = offsets_y[k] - iy[k]
        fx[k] = offsets_x[k] - ix[k]
    codes = np.zeros((ih, iw), dtype=np.uint8)
    for y in range(ih):
        cy = y + radius
        for x in range(iw):
            cx = x + radius
            c = f[cy, cx] - tie_eps
            code = 0
            for k in range(n):
                y0 = cy + iy[k]
                x0 = cx + ix[k]
                a = f[y0, x0]
                # lerp form keeps equal corners exactly equal
                if fx[k] != 0.0:
                    top = a + fx[k] * (f[y0, x0 + 1] - a)
                else:
                    top = a
                if fy[k] != 0.0:
                    b = f[y0 + 1, x0]
                    if fx[k] != 0.0:
                        bottom = b + fx[k] * (f[y0 + 1, x0 + 1] - b)
                    else:
                        bottom = b
                    v = top + fy[k] * (bottom - top)
                else:
                    v = top
                if v >= c:
                    code |= 1 << k
            codes[y, x] = code
    return codes
