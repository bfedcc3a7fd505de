# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython implementations of the hot kernels.

Mirrors ``_fallback`` operation for operation: identical arithmetic order for
the float kernels, identical integer logic for rasterization and upscaling.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

BACKEND = "native"


def resample_polyline(points, int n):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t m = pts.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cum = np.empty(m, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, 2), dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double dx, dy, total, spacing, target, t, seglen

    cum[0] = 0.0
    for i in range(m - 1):
        dx = pts[i + 1, 0] - pts[i, 0]
        dy = pts[i + 1, 1] - pts[i, 1]
        cum[i + 1] = cum[i] + sqrt(dx * dx + dy * dy)
    total = cum[m - 1]
    spacing = total / (n - 1)

    j = 0
    for i in range(n):
        target = i * spacing
        while j < m - 2 and cum[j + 1] <= target:
            j += 1
        seglen = cum[j + 1] - cum[j]
        t = (target - cum[j]) / seglen
        out[i, 0] = pts[j, 0] + t * (pts[j + 1, 0] - pts[j, 0])
        out[i, 1] = pts[j, 1] + t * (pts[j + 1, 1] - pts[j, 1])
    out[0, 0] = pts[0, 0]
    out[0, 1] = pts[0, 1]
    out[n - 1, 0] = pts[m - 1, 0]
    out[n - 1, 1] = pts[m - 1, 1]
    return out


def straw_values(points, int w):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t n = pts.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cum = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] values = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double dx, dy, chord, path, v

    cum[0] = 0.0
    for i in range(n - 1):
        dx = pts[i + 1, 0] - pts[i, 0]
        dy = pts[i + 1, 1] - pts[i, 1]
        cum[i + 1] = cum[i] + sqrt(dx * dx + dy * dy)

    for i in range(w, n - w):
        dx = pts[i + w, 0] - pts[i - w, 0]
        dy = pts[i + w, 1] - pts[i - w, 1]
        chord = sqrt(dx * dx + dy * dy)
        path = cum[i + w] - cum[i - w]
        v = chord / path
        values[i] = v if v < 1.0 else 1.0
    for i in range(w):
        values[i] = values[w]
    for i in range(n - w, n):
        values[i] = values[n - 1 - w]
    return values


def corner_walk(values, double entry, double exit_scale, double exit_offset):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vals = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t n = vals.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] buf = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t count = 0, i
    cdef bint in_window = False
    cdef double v, min_v = 0.0
    cdef Py_ssize_t min_i = -1

    for i in range(n):
        v = vals[i]
        if in_window:
            if v < min_v:
                min_v = v
                min_i = i
            elif v >= exit_scale * min_v + exit_offset:
                buf[count] = min_i
                count += 1
                in_window = False
        elif v < entry and (i == 0 or vals[i - 1] >= entry):
            in_window = True
            min_v = v
            min_i = i
    if in_window:
        buf[count] = min_i
        count += 1
    return buf[:count].copy()


cdef void _plot_line(cnp.uint8_t[:, ::1] img, long x0, long y0, long x1, long y1, long size) noexcept:
    cdef long dx = x1 - x0 if x1 >= x0 else x0 - x1
    cdef long sx = 1 if x0 < x1 else -1
    cdef long dy = -(y1 - y0 if y1 >= y0 else y0 - y1)
    cdef long sy = 1 if y0 < y1 else -1
    cdef long err = dx + dy
    cdef long e2
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


def rasterize_polyline(ipoints, int size):
    cdef cnp.ndarray[cnp.int64_t, ndim=2] pts = np.ascontiguousarray(ipoints, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] img = np.zeros((size, size), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] view = img
    cdef Py_ssize_t m = pts.shape[0]
    cdef Py_ssize_t k
    cdef long x0, y0, x1, y1

    for k in range(m - 1):
        x0 = pts[k, 0]
        y0 = pts[k, 1]
        x1 = pts[k + 1, 0]
        y1 = pts[k + 1, 1]
        if x0 > x1 or (x0 == x1 and y0 > y1):
            x0, x1 = x1, x0
            y0, y1 = y1, y0
        _plot_line(view, x0, y0, x1, y1, size)
    return img


def upscale_nearest(img, int out_size):
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] src = np.ascontiguousarray(img, dtype=np.uint8)
    cdef int s = src.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out = np.empty((out_size, out_size), dtype=np.uint8)
    cdef int r, c
    cdef long sr, sc
    for r in range(out_size):
        sr = (<long> r * s) // out_size
        for c in range(out_size):
            sc = (<long> c * s) // out_size
            out[r, c] = src[sr, sc]
    return out
