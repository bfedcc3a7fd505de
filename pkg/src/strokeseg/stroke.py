"""Stroke representation, file IO, resampling, straw profiles, and
candidate-corner extraction.

A stroke is an ordered point sequence from pen-down to pen-up.  All
downstream processing works on strokes resampled to a fixed point count
(128 by default) at equal arc-length spacing.  The straw value of a point
is the chord length over the path length of a symmetric window around it:
close to 1 on straight runs, below 1 on curves, and dipping sharply at
corners.  Candidate corners are the local straw minima found by a
threshold walk over the profile.
"""

import json
import re
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from . import _kernels as kernels
from .errors import DegenerateStrokeError, ParseError

DEFAULT_RESAMPLE_COUNT = 128
MIN_RESAMPLE_COUNT = 8

# Candidate walk constants: a window opens below ENTRY and closes at the
# dynamic threshold EXIT_SCALE * window_minimum + EXIT_OFFSET.
WALK_ENTRY = 0.995
WALK_EXIT_SCALE = 0.4
WALK_EXIT_OFFSET = 0.6

# Default straw window in resampled points.  At n=128 this is the smallest
# window for which a smooth half-circle still dips below WALK_ENTRY, so
# gentle arcs produce candidates while straight runs do not.
DEFAULT_STRAW_WINDOW = 8

_STK_NAME = re.compile(r"^(\d+)-(\d+)-(\d+)$")


class PointLabel(IntEnum):
    """Per-point label; serialized integers match these values exactly."""

    Unlabeled = -1
    Line = 0
    Curve = 1
    Corner = 2
    Tangent = 3


@dataclass
class RawStroke:
    """An input stroke as captured: ordered points, consecutive duplicates
    removed, with an optional "person-round-shape" source id."""

    points: np.ndarray  # (m, 2) float64
    source_id: str | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise ValueError("points must be an (m, 2) array")
        if len(self.points) < 2:
            raise DegenerateStrokeError(
                f"stroke has {len(self.points)} distinct point(s); need at least 2")


@dataclass
class Stroke:
    """A resampled stroke: n points at equal arc-length spacing plus one
    label per point."""

    points: np.ndarray  # (n, 2) float64
    labels: np.ndarray  # (n,) int64 of PointLabel values
    source_id: str | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.points) != len(self.labels):
            raise ValueError("points and labels must have the same length")

    @property
    def n(self):
        return len(self.points)


@dataclass
class StrawProfile:
    """Per-point normalized straw values for one window size."""

    values: np.ndarray  # (n,) float64 in (0, 1]
    window: int


@dataclass
class CandidateCornerSet:
    """Sorted candidate corner indices; stroke endpoints are always present
    and flagged so downstream stages can treat them as fixed corners."""

    indices: np.ndarray          # (k,) int64, strictly increasing
    endpoint_flags: np.ndarray   # (k,) bool

    @property
    def interior(self):
        return self.indices[~self.endpoint_flags]


def split_source_id(source_id):
    """Parse "person-round-shape" into its three integers."""
    m = _STK_NAME.match(source_id)
    if m is None:
        raise ValueError(f"not a person-round-shape id: {source_id!r}")
    return int(m.group(1)), int(m.group(2)), int(m.group(3))


def _dedupe(points):
    points = np.asarray(points, dtype=np.float64)
    if len(points) == 0:
        return points
    keep = np.ones(len(points), dtype=bool)
    keep[1:] = np.any(points[1:] != points[:-1], axis=1)
    return points[keep]


def _source_id_from_path(path):
    m = _STK_NAME.match(Path(path).stem)
    return m.group(0) if m else None


def load_stroke(path):
    """Load a RawStroke from a .stk text file or its JSON mirror.

    Consecutive duplicate points are dropped.  The labels column is
    preserved and returned alongside the stroke so label files round-trip;
    callers that only need geometry can ignore it.
    """
    raw, _ = load_stroke_with_labels(path)
    return raw


def load_stroke_with_labels(path):
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith("{"):
        points, labels, source_id = _parse_json_stroke(text, path)
    else:
        points, labels = _parse_stk(text, path)
        source_id = _source_id_from_path(path)
    deduped = _dedupe(points)
    if len(deduped) < 2:
        raise DegenerateStrokeError(
            f"{path}: stroke has {len(deduped)} distinct point(s); need at least 2")
    if len(deduped) != len(points):
        keep = np.ones(len(points), dtype=bool)
        keep[1:] = np.any(points[1:] != points[:-1], axis=1)
        labels = labels[keep]
    return RawStroke(points=deduped, source_id=source_id), labels


def _parse_stk(text, path):
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty file", path=path, line=1)
    try:
        count = int(lines[0].split()[0])
    except (ValueError, IndexError):
        raise ParseError(f"expected integer point count, got {lines[0]!r}",
                         path=path, line=1) from None
    points = np.empty((count, 2), dtype=np.float64)
    labels = np.full(count, int(PointLabel.Unlabeled), dtype=np.int64)
    row = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if row >= count:
            raise ParseError(f"more than {count} point lines", path=path, line=lineno)
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ParseError(f"expected 'x y [label]', got {line!r}",
                             path=path, line=lineno)
        try:
            points[row, 0] = float(parts[0])
            points[row, 1] = float(parts[1])
            if len(parts) == 3:
                labels[row] = int(parts[2])
        except ValueError:
            raise ParseError(f"malformed number in {line!r}",
                             path=path, line=lineno) from None
        row += 1
    if row != count:
        raise ParseError(f"header says {count} points but file has {row}",
                         path=path, line=len(lines))
    return points, labels


def _parse_json_stroke(text, path):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc), path=path, line=exc.lineno) from None
    if "points" not in obj:
        raise ParseError("missing 'points' key", path=path)
    points = np.asarray(obj["points"], dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ParseError("'points' must be a list of [x, y] pairs", path=path)
    labels = obj.get("labels")
    if labels is None:
        labels = np.full(len(points), int(PointLabel.Unlabeled), dtype=np.int64)
    else:
        labels = np.asarray(labels, dtype=np.int64)
        if len(labels) != len(points):
            raise ParseError("'labels' length does not match 'points'", path=path)
    return points, labels, obj.get("source_id")


def save_stroke(path, points, labels=None):
    """Write a stroke in .stk format: count line, then "x y label" rows."""
    points = np.asarray(points, dtype=np.float64)
    if labels is None:
        labels = np.full(len(points), int(PointLabel.Unlabeled), dtype=np.int64)
    lines = [str(len(points))]
    for (x, y), lab in zip(points, labels):
        lines.append(f"{float(x)!r} {float(y)!r} {int(lab)}")
    Path(path).write_text("\n".join(lines) + "\n")


def stroke_to_json(stroke):
    """JSON mirror of the .stk format."""
    obj = {
        "points": [[float(x), float(y)] for x, y in stroke.points],
        "labels": [int(v) for v in stroke.labels],
    }
    if stroke.source_id is not None:
        obj["source_id"] = stroke.source_id
    return obj


def raw_stroke_from_json(obj):
    points = np.asarray(obj["points"], dtype=np.float64)
    deduped = _dedupe(points)
    if len(deduped) < 2:
        raise DegenerateStrokeError("stroke has fewer than 2 distinct points")
    return RawStroke(points=deduped, source_id=obj.get("source_id"))


def resample(raw, n=DEFAULT_RESAMPLE_COUNT):
    """Resample a raw stroke to n points at equal arc-length spacing.

    The first and last input points are preserved exactly; all labels start
    Unlabeled.
    """
    if n < MIN_RESAMPLE_COUNT:
        raise ValueError(f"resample count must be >= {MIN_RESAMPLE_COUNT}, got {n}")
    points = raw.points
    seg = np.diff(points, axis=0)
    total = np.hypot(seg[:, 0], seg[:, 1]).sum()
    if total <= 0.0:
        raise DegenerateStrokeError("stroke has zero total length")
    out = kernels.resample_polyline(points, n)
    labels = np.full(n, int(PointLabel.Unlabeled), dtype=np.int64)
    return Stroke(points=out, labels=labels, source_id=raw.source_id)


def straw(stroke, window=DEFAULT_STRAW_WINDOW):
    """Compute the normalized straw profile of a resampled stroke."""
    n = stroke.n
    if not 1 <= window < n / 2:
        raise ValueError(f"straw window must satisfy 1 <= w < n/2, got w={window}, n={n}")
    values = kernels.straw_values(stroke.points, window)
    return StrawProfile(values=values, window=window)


def candidate_corners(profile, entry=WALK_ENTRY, exit_scale=WALK_EXIT_SCALE,
                      exit_offset=WALK_EXIT_OFFSET):
    """Extract candidate corners from a straw profile.

    Interior candidates come from the threshold walk over the profile; the
    two stroke endpoints are always included and flagged.
    """
    n = len(profile.values)
    walked = kernels.corner_walk(profile.values, entry, exit_scale, exit_offset)
    interior = [int(i) for i in walked if 0 < i < n - 1]
    indices = [0] + interior + [n - 1]
    flags = [True] + [False] * len(interior) + [True]
    return CandidateCornerSet(indices=np.asarray(indices, dtype=np.int64),
                              endpoint_flags=np.asarray(flags, dtype=bool))
