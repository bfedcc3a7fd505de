"""End-to-end detection: resample, extract candidate corners, classify,
merge each inter-corner chain, and assemble the detection result."""

import json
from dataclasses import dataclass, field

import numpy as np

from . import merge as merging
from . import stroke as strokes
from .errors import DetectionError
from .geometry import (DEFAULT_COLLINEAR_DEG, DEFAULT_FAR_OFFSET,
                       DEFAULT_NEAR_OFFSET, DEFAULT_RATIO_MAX,
                       DEFAULT_STRAIGHT_CAP_DEG)
from .merge import DetectionResult
from .stroke import (DEFAULT_RESAMPLE_COUNT, DEFAULT_STRAW_WINDOW, PointLabel,
                     WALK_ENTRY, WALK_EXIT_OFFSET, WALK_EXIT_SCALE)

MIN_RAW_POINTS = 8


@dataclass
class DetectorConfig:
    """All tunable constants of the detector plus the two classifier
    handles.  Defaults are the frozen values used throughout the tests."""

    resample_n: int = DEFAULT_RESAMPLE_COUNT
    straw_window: int = DEFAULT_STRAW_WINDOW
    walk_entry: float = WALK_ENTRY
    walk_exit_scale: float = WALK_EXIT_SCALE
    walk_exit_offset: float = WALK_EXIT_OFFSET
    angle_near: int = DEFAULT_NEAR_OFFSET
    angle_far: int = DEFAULT_FAR_OFFSET
    angle_ratio_max: float = DEFAULT_RATIO_MAX
    straight_cap_deg: float = DEFAULT_STRAIGHT_CAP_DEG
    collinear_deg: float = DEFAULT_COLLINEAR_DEG
    point_classifier: object = None
    corner_classifier: object = None

    @classmethod
    def from_dict(cls, obj):
        known = {f for f in cls.__dataclass_fields__
                 if f not in ("point_classifier", "corner_classifier")}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def detect(raw, cfg):
    """Detect all corners and tangent points of one raw stroke.

    Classifier failures abort the stroke; there is never a partial result.
    """
    if cfg.point_classifier is None or cfg.corner_classifier is None:
        raise DetectionError("detector config has no classifiers loaded")
    if len(raw.points) < MIN_RAW_POINTS:
        raise DetectionError(
            f"stroke has {len(raw.points)} raw points; need at least {MIN_RAW_POINTS}")

    stk = strokes.resample(raw, cfg.resample_n)
    profile = strokes.straw(stk, cfg.straw_window)
    candidates = strokes.candidate_corners(profile, entry=cfg.walk_entry,
                                           exit_scale=cfg.walk_exit_scale,
                                           exit_offset=cfg.walk_exit_offset)

    decisions = cfg.corner_classifier.classify_corners(stk, candidates)
    if len(decisions) != len(candidates.indices):
        raise DetectionError("corner classifier returned a partial decision list")
    from .classify import CornerDecision, PointClass
    initial = [int(idx) for idx, dec in zip(candidates.indices, decisions)
               if dec == CornerDecision.Corner]
    corners = merging.remove_false_corners(
        stk.points, initial, near=cfg.angle_near, far=cfg.angle_far,
        ratio_max=cfg.angle_ratio_max, straight_cap_deg=cfg.straight_cap_deg)

    classes = cfg.point_classifier.classify_points(stk)
    if len(classes) != stk.n:
        raise DetectionError("point classifier returned a partial decision list")
    point_labels = np.array([int(PointLabel.Line) if c == PointClass.LinePoint
                             else int(PointLabel.Curve) for c in classes],
                            dtype=np.int64)

    final_labels = point_labels.copy()
    inserted_corners = []
    inserted_tangents = []
    for c0, c1 in zip(corners, corners[1:]):
        lo, hi = int(c0) + 1, int(c1) - 1
        if lo > hi:
            continue
        chain = merging.build_chain(point_labels[lo:hi + 1], start=lo)
        result = merging.merge_chain(stk.points, chain)
        final_labels[lo:hi + 1] = result.labels
        for event in result.inserted:
            if event.label == PointLabel.Corner:
                inserted_corners.append(event.index)
            else:
                inserted_tangents.append(event.index)

    all_corners = sorted(set(int(c) for c in corners) | set(inserted_corners))
    all_tangents = sorted(inserted_tangents)
    final_labels[all_corners] = int(PointLabel.Corner)
    return DetectionResult(
        corners=np.asarray(all_corners, dtype=np.int64),
        tangents=np.asarray(all_tangents, dtype=np.int64),
        labels=final_labels,
    )


def result_to_dict(result):
    return {
        "corners": [int(i) for i in result.corners],
        "tangents": [int(i) for i in result.tangents],
        "labels": [int(v) for v in result.labels],
    }


def result_to_json(result):
    """Canonical JSON used by both the CLI and the service, so their
    outputs are byte-identical."""
    return json.dumps(result_to_dict(result), sort_keys=True,
                      separators=(",", ":"))


def result_from_dict(obj):
    return DetectionResult(
        corners=np.asarray(obj["corners"], dtype=np.int64),
        tangents=np.asarray(obj["tangents"], dtype=np.int64),
        labels=np.asarray(obj["labels"], dtype=np.int64),
    )
