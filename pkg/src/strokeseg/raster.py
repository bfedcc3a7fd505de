"""Multi-scale context images: square windows around a point rasterized to
224x224 grayscale, used for training-set export and the external-classifier
bridge.

Strokes are first normalized onto a 450x450 canvas (aspect preserved,
centered).  A context image is the polyline clipped to a scale x scale
window centered on one point, drawn with 1-px binary ink, then upscaled to
224x224 with nearest-neighbor so the output is bit-reproducible.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels as kernels

CANVAS_SIZE = 450
CONTEXT_SCALES = (32, 64, 128, 256)
OUTPUT_SIZE = 224
INK = 255


@dataclass
class CanvasStroke:
    """Stroke points mapped onto the 450x450 canvas."""

    points: np.ndarray  # (n, 2) float64 within [0, 450]^2
    scale: float
    offset: np.ndarray  # (2,)


@dataclass
class ContextImage:
    pixels: np.ndarray  # (224, 224) uint8
    scale: int
    center_index: int


def to_canvas(stroke):
    """Scale and translate a stroke to fit the canvas, preserving aspect.

    The larger bounding-box side maps to exactly CANVAS_SIZE; the other axis
    is centered.  A zero-extent axis is centered at the canvas midline.
    """
    pts = np.asarray(stroke.points, dtype=np.float64)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    extent = hi - lo
    largest = float(extent.max())
    scale = CANVAS_SIZE / largest if largest > 0 else 1.0
    offset = (CANVAS_SIZE - extent * scale) / 2.0
    mapped = (pts - lo) * scale + offset
    return CanvasStroke(points=mapped, scale=scale, offset=offset)


def _window_origin(center, scale):
    # Integer window origin, clamped inside the canvas.  Half-even rounding
    # keeps the origin symmetric under canvas reflections.
    lo = min(max(center - scale / 2.0, 0.0), float(CANVAS_SIZE - scale))
    return int(round(lo))


def render_context(canvas_stroke, idx, scale):
    """Render the context image of one point at one scale."""
    if scale not in CONTEXT_SCALES:
        raise ValueError(f"scale must be one of {CONTEXT_SCALES}, got {scale}")
    pts = canvas_stroke.points
    if not 0 <= idx < len(pts):
        raise IndexError(f"point index {idx} out of range")
    cx, cy = pts[idx]
    x0 = _window_origin(float(cx), scale)
    y0 = _window_origin(float(cy), scale)
    ipts = np.floor(pts - np.array([x0, y0], dtype=np.float64)).astype(np.int64)
    small = kernels.rasterize_polyline(ipts, scale)
    pixels = kernels.upscale_nearest(small, OUTPUT_SIZE)
    return ContextImage(pixels=pixels, scale=scale, center_index=idx)


def render_context_window(canvas_stroke, idx, scale):
    """The raw scale x scale raster before upscaling (used by tests and the
    benchmark)."""
    pts = canvas_stroke.points
    cx, cy = pts[idx]
    x0 = _window_origin(float(cx), scale)
    y0 = _window_origin(float(cy), scale)
    ipts = np.floor(pts - np.array([x0, y0], dtype=np.float64)).astype(np.int64)
    return kernels.rasterize_polyline(ipts, scale)


def write_pgm(path, pixels):
    """Write a binary P5 PGM, maxval 255."""
    pixels = np.asarray(pixels, dtype=np.uint8)
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def read_pgm(path):
    data = Path(path).read_bytes()
    fields = []
    pos = 0
    # Header: magic, width, height, maxval; '#' starts a comment.
    while len(fields) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    if fields[0] != b"P5":
        raise ValueError(f"not a P5 PGM: {path}")
    w, h = int(fields[1]), int(fields[2])
    return np.frombuffer(data[pos:pos + w * h], dtype=np.uint8).reshape(h, w)


def export_contexts(stroke, indices, out_dir, source=None):
    """Write one PGM per (index, scale); returns the file count.

    Filenames follow "<source>_<idx>_<scale>.pgm".
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    source = source or stroke.source_id or "stroke"
    canvas = to_canvas(stroke)
    count = 0
    for idx in indices:
        for scale in CONTEXT_SCALES:
            img = render_context(canvas, int(idx), scale)
            write_pgm(out_dir / f"{source}_{int(idx)}_{scale}.pgm", img.pixels)
            count += 1
    return count
