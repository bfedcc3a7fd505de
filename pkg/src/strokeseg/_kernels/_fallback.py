"""Pure-Python/numpy implementations of the hot kernels.

These are the reference implementations. ``_native`` (Cython) mirrors them
operation for operation so both backends agree to floating-point rounding,
and the integer kernels (rasterize, upscale) agree exactly.
"""

import numpy as np

BACKEND = "python"


def resample_polyline(points, n):
    """Place n points along a polyline at equal arc-length spacing.

    points: (m, 2) float64 array with m >= 2 and no zero-length segments.
    The first and last input points are preserved exactly.
    """
    points = np.asarray(points, dtype=np.float64)
    seg = np.diff(points, axis=0)
    seglen = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate(([0.0], np.cumsum(seglen)))
    total = cum[-1]
    spacing = total / (n - 1)
    targets = np.arange(n, dtype=np.float64) * spacing
    idx = np.searchsorted(cum, targets, side="right") - 1
    idx = np.clip(idx, 0, len(seglen) - 1)
    t = (targets - cum[idx]) / seglen[idx]
    out = points[idx] + t[:, None] * seg[idx]
    out[0] = points[0]
    out[-1] = points[-1]
    return out


def straw_values(points, w):
    """Chord length over path length for a symmetric window of w points.

    Values are clamped to 1.0; indices within w of either end copy the
    nearest interior value.
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    seg = np.diff(points, axis=0)
    seglen = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate(([0.0], np.cumsum(seglen)))
    values = np.empty(n, dtype=np.float64)
    lo = np.arange(w, n - w) - w
    hi = np.arange(w, n - w) + w
    chord = np.hypot(points[hi, 0] - points[lo, 0], points[hi, 1] - points[lo, 1])
    path = cum[hi] - cum[lo]
    values[w:n - w] = np.minimum(chord / path, 1.0)
    values[:w] = values[w]
    values[n - w:] = values[n - 1 - w]
    return values


def corner_walk(values, entry, exit_scale, exit_offset):
    """Scan the straw profile for local-minimum windows.

    A window opens where the profile first crosses below ``entry`` (or at
    index 0 when it starts below).  While open, the running minimum defines
    a dynamic exit threshold ``exit_scale * minimum + exit_offset``; the
    first value at or above it emits the index of the window minimum and
    closes the window.  A new window requires the profile to rise back
    above ``entry`` first, so a slow recovery slope yields one candidate,
    not a trail of them.  A window still open at the end of the profile
    emits its minimum.
    """
    out = []
    in_window = False
    min_v = 0.0
    min_i = -1
    for i in range(len(values)):
        v = values[i]
        if in_window:
            if v < min_v:
                min_v = v
                min_i = i
            elif v >= exit_scale * min_v + exit_offset:
                out.append(min_i)
                in_window = False
        elif v < entry and (i == 0 or values[i - 1] >= entry):
            in_window = True
            min_v = v
            min_i = i
    if in_window:
        out.append(min_i)
    return np.asarray(out, dtype=np.int64)


def _plot_line(img, x0, y0, x1, y1, size):
    # Bresenham over all octants; pixels outside the window are skipped.
    dx = abs(x1 - x0)
    sx = 1 if x0 < x1 else -1
    dy = -abs(y1 - y0)
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        if 0 <= x0 < size and 0 <= y0 < size:
            img[y0, x0] = 255
        if x0 == x1 and y0 == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def rasterize_polyline(ipoints, size):
    """Rasterize an integer polyline into a size x size uint8 image.

    ipoints: (m, 2) int64 pixel coordinates (may lie outside the window;
    only in-window pixels are drawn).  Ink is 255 on a 0 background, one
    pixel wide.  Each segment is drawn from its lexicographically smaller
    endpoint so the pixel set does not depend on stroke direction.
    """
    ipoints = np.asarray(ipoints, dtype=np.int64)
    img = np.zeros((size, size), dtype=np.uint8)
    for k in range(len(ipoints) - 1):
        x0, y0 = int(ipoints[k, 0]), int(ipoints[k, 1])
        x1, y1 = int(ipoints[k + 1, 0]), int(ipoints[k + 1, 1])
        if (x0, y0) > (x1, y1):
            x0, y0, x1, y1 = x1, y1, x0, y0
        _plot_line(img, x0, y0, x1, y1, size)
    return img


def upscale_nearest(img, out_size):
    """Nearest-neighbor upscale of a square uint8 image."""
    img = np.asarray(img, dtype=np.uint8)
    s = img.shape[0]
    idx = (np.arange(out_size, dtype=np.int64) * s) // out_size
    return img[np.ix_(idx, idx)]
