"""Vote-based segment merging.

The points between two consecutive corners form a chain of maximal
same-kind segments.  Misclassified points break a primitive into many
segments; merging recovers the primitives by letting long segments absorb
short ones (the majority of points wins) and by resolving the remaining
adjacencies case by case:

* case 1 - a short segment with a single long neighbor is absorbed by it,
  together with the short's other neighbor;
* case 2 - a short segment between two long segments of the other kind is
  either dissolved into them (same curvature sign / collinear fits) or
  split between them with a tangent or corner inserted at the split;
* cases 3 and 4 - after all shorts are gone, a long segment much shorter
  than its longer neighbor(s) is reduced the same way; everything still
  standing becomes a primitive.

Every surviving transition between primitives carries exactly one feature
point: a corner where two line fits meet at an angle, a tangent otherwise.
"""

from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import DegenerateGeometryError
from .stroke import PointLabel

EPS1_COEFF_DENOM = 20  # short/long threshold is ceil(N / 20), i.e. 5% of N
EPS1_FLOOR = 2
EPS1_CAP = 4

CASE3_FACTOR = 0.25
CASE4_FACTOR = 0.3
FIT_POINTS_NEAR_SHORT = 5


def threshold_eps1(n_points):
    """Dynamic short/long segment threshold: 5% of the chain length,
    floored at 2 and capped at 4."""
    if n_points < 1:
        raise ValueError("chain must contain at least one point")
    return min(EPS1_CAP, max(EPS1_FLOOR, (n_points + EPS1_COEFF_DENOM - 1)
                             // EPS1_COEFF_DENOM))


@dataclass(eq=False)
class Segment:
    """Maximal run of same-kind points, inclusive global index range."""

    kind: PointLabel  # Line or Curve
    start: int
    end: int

    @property
    def length(self):
        return self.end - self.start + 1


@dataclass(frozen=True)
class InsertedPoint:
    index: int
    label: PointLabel  # Corner or Tangent


@dataclass
class SegmentChain:
    """Working state of the merge: segments tiling [start, end], the
    short/long threshold, and the adjacencies already resolved with an
    inserted feature point (keyed by the right segment's start index)."""

    segments: list
    start: int
    end: int
    eps1: int
    seals: dict = field(default_factory=dict)
    done: bool = False

    @property
    def n_points(self):
        return self.end - self.start + 1

    def is_short(self, seg):
        return seg.length < self.eps1

    def snapshot(self):
        return [(seg.kind.name, seg.length) for seg in self.segments]


@dataclass
class Primitive:
    kind: PointLabel
    start: int
    end: int
    fit: object = None  # FitLine, FitCircle, or None when degenerate

    @property
    def length(self):
        return self.end - self.start + 1


@dataclass
class MergeTrace:
    initial: list
    after_case1: list = None
    after_case2: list = None
    final: list = None


@dataclass
class ChainMergeResult:
    chain: SegmentChain
    primitives: list
    inserted: list
    labels: np.ndarray  # final labels for chain points, index 0 == chain.start
    trace: MergeTrace


@dataclass
class DetectionResult:
    """Final output: feature-point indices plus the per-point labels."""

    corners: np.ndarray   # sorted, includes both stroke endpoints
    tangents: np.ndarray
    labels: np.ndarray    # one PointLabel value per stroke point


def build_chain(labels, start=0):
    """Group a line/curve label run into maximal segments."""
    labels = [PointLabel(int(v)) for v in labels]
    if not labels:
        raise ValueError("chain label run must be non-empty")
    for v in labels:
        if v not in (PointLabel.Line, PointLabel.Curve):
            raise ValueError(f"chain labels must be Line or Curve, got {v}")
    segments = []
    run_start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[run_start]:
            segments.append(Segment(kind=labels[run_start],
                                    start=start + run_start, end=start + i - 1))
            run_start = i
    end = start + len(labels) - 1
    return SegmentChain(segments=segments, start=start, end=end,
                        eps1=threshold_eps1(len(labels)))


def remove_false_corners(points, corner_indices, near=geometry.DEFAULT_NEAR_OFFSET,
                         far=geometry.DEFAULT_FAR_OFFSET,
                         ratio_max=geometry.DEFAULT_RATIO_MAX,
                         straight_cap_deg=geometry.DEFAULT_STRAIGHT_CAP_DEG):
    """Stroke-level step 1: drop interior corners failing the angle-ratio
    test; the endpoints always stay."""
    n = len(points)
    kept = []
    for idx in corner_indices:
        idx = int(idx)
        if idx in (0, n - 1) or geometry.angle_ratio_is_corner(
                points, idx, near=near, far=far, ratio_max=ratio_max,
                straight_cap_deg=straight_cap_deg):
            kept.append(idx)
    return np.asarray(sorted(set(kept)), dtype=np.int64)


# --- internal helpers over the segment list ---------------------------------

def _neighbor(chain, pos, direction):
    """Adjacent segment position, or None at the chain ends and across
    sealed adjacencies."""
    other = pos + direction
    if other < 0 or other >= len(chain.segments):
        return None
    right = chain.segments[other] if direction > 0 else chain.segments[pos]
    if right.start in chain.seals:
        return None
    return other


def _majority_kind(chain):
    line_pts = sum(s.length for s in chain.segments if s.kind == PointLabel.Line)
    curve_pts = chain.n_points - line_pts
    return PointLabel.Line if line_pts > curve_pts else PointLabel.Curve


def merge_case1(chain):
    """Step: long segments absorb case-1 shorts in priority order.

    With no long segment at all, the whole chain is relabeled to the
    majority kind and the chain is done.  Otherwise each long segment, from
    longest to shortest (ties: the kind of the longest segment first, then
    lower start), keeps absorbing any neighboring short whose other side is
    not a long segment, together with that other side, until both its
    neighbors are long segments or the chain boundary.
    """
    longs = [s for s in chain.segments if not chain.is_short(s)]
    if not longs:
        kind = _majority_kind(chain)
        chain.segments = [Segment(kind=kind, start=chain.start, end=chain.end)]
        chain.done = True
        return chain
    top_len = max(s.length for s in longs)
    top_kind = min((s for s in longs if s.length == top_len),
                   key=lambda s: s.start).kind
    order = sorted(longs, key=lambda s: (-s.length, s.kind != top_kind, s.start))
    for seg in order:
        for direction in (-1, 1):
            while True:
                pos = chain.segments.index(seg)
                npos = _neighbor(chain, pos, direction)
                if npos is None:
                    break
                short = chain.segments[npos]
                if not chain.is_short(short):
                    break
                opos = _neighbor(chain, npos, direction)
                other = chain.segments[opos] if opos is not None else None
                if other is not None and not chain.is_short(other):
                    break  # the short sits between two longs: case 2
                seg.start = min(seg.start, short.start)
                seg.end = max(seg.end, short.end)
                chain.segments.remove(short)
                if other is not None:
                    seg.start = min(seg.start, other.start)
                    seg.end = max(seg.end, other.end)
                    chain.segments.remove(other)
    return chain


def _segment_points(points, seg):
    return points[seg.start:seg.end + 1]


def _distance_fn(points, seg, at_end):
    """Distance to the circle fitted on the segment's 5 points nearest the
    gap; collinear input falls back to the fitted line."""
    if at_end:
        lo = max(seg.start, seg.end - (FIT_POINTS_NEAR_SHORT - 1))
        pts = points[lo:seg.end + 1]
    else:
        hi = min(seg.end, seg.start + (FIT_POINTS_NEAR_SHORT - 1))
        pts = points[seg.start:hi + 1]
    try:
        circle = geometry.fit_circle(pts)
        return lambda p: geometry.point_circle_distance(p, circle)
    except DegenerateGeometryError:
        line = geometry.fit_line(pts)
        return lambda p: geometry.point_line_distance(p, line)


def _best_split(points, short, dist_left, dist_right):
    """Split position k (0..len) minimizing total distance of the first k
    points to the left fit and the rest to the right fit."""
    pts = _segment_points(points, short)
    d_left = np.array([dist_left(p) for p in pts])
    d_right = np.array([dist_right(p) for p in pts])
    totals = [float(d_left[:k].sum() + d_right[k:].sum())
              for k in range(len(pts) + 1)]
    return int(np.argmin(totals))


def _merge_three(chain, lpos, kind):
    left, _, right = chain.segments[lpos:lpos + 3]
    chain.segments[lpos:lpos + 3] = [Segment(kind=kind, start=left.start,
                                             end=right.end)]


def _resolve_middle(chain, points, pos, collinear_deg):
    """Dissolve the segment at ``pos`` between its two neighbors per the
    case-2 subcases.  Returns the inserted feature point, if any."""
    mid = chain.segments[pos]
    left = chain.segments[pos - 1]
    right = chain.segments[pos + 1]
    if left.kind != right.kind or left.kind == mid.kind:
        raise AssertionError("malformed case-2 pattern in segment chain")
    if mid.kind == PointLabel.Line:
        # Line run inside curve territory.
        sign_l = geometry.curvature_sign(points, left.start, left.end)
        sign_r = geometry.curvature_sign(points, right.start, right.end)
        opposite = (sign_l != sign_r
                    and geometry.CurvatureSign.Flat not in (sign_l, sign_r))
        if not opposite:
            _merge_three(chain, pos - 1, PointLabel.Curve)
            return None
        dist_l = _distance_fn(points, left, at_end=True)
        dist_r = _distance_fn(points, right, at_end=False)
        k = _best_split(points, mid, dist_l, dist_r)
        boundary = mid.start + k
        left.end = boundary - 1
        right.start = boundary
        chain.segments.pop(pos)
        inserted = InsertedPoint(index=boundary, label=PointLabel.Tangent)
        chain.seals[boundary] = inserted
        return inserted
    # Curve run inside line territory: a smooth corner or a noisy straight run.
    line_l = geometry.fit_line(_segment_points(points, left))
    line_r = geometry.fit_line(_segment_points(points, right))
    meet = geometry.intersect_angle(line_l, line_r)
    if meet.parallel or meet.angle_deg < collinear_deg:
        _merge_three(chain, pos - 1, PointLabel.Line)
        return None
    pts = _segment_points(points, mid)
    dists = np.hypot(pts[:, 0] - meet.point[0], pts[:, 1] - meet.point[1])
    cp = mid.start + int(np.argmin(dists))
    corner_pt = points[cp]
    join_left = (geometry.point_line_distance(corner_pt, line_l)
                 <= geometry.point_line_distance(corner_pt, line_r))
    boundary = cp + 1 if join_left else cp
    left.end = boundary - 1
    right.start = boundary
    chain.segments.pop(pos)
    inserted = InsertedPoint(index=cp, label=PointLabel.Corner)
    chain.seals[boundary] = inserted
    return inserted


def merge_case2(chain, points, collinear_deg=geometry.DEFAULT_COLLINEAR_DEG):
    """Step: resolve the remaining shorts, each between two long segments."""
    inserted = []
    if chain.done or len(chain.segments) <= 1:
        return chain, inserted
    while True:
        pos = next((i for i, s in enumerate(chain.segments) if chain.is_short(s)),
                   None)
        if pos is None:
            break
        if pos == 0 or pos == len(chain.segments) - 1:
            raise AssertionError("case-1 pass left a boundary short segment")
        event = _resolve_middle(chain, points, pos, collinear_deg)
        if event is not None:
            inserted.append(event)
    return chain, inserted


def merge_long(chain, points, collinear_deg=geometry.DEFAULT_COLLINEAR_DEG):
    """Step: reduce long segments dwarfed by their neighbors, shortest first.

    A segment with two strictly longer neighbors dissolves like a case-2
    short when it is under a quarter of the longer one; a boundary segment
    under 0.3 of its single longer neighbor is absorbed by it.  Adjacencies
    already carrying a feature point act as chain boundaries and are never
    merged across.
    """
    inserted = []
    if chain.done or len(chain.segments) <= 1:
        return chain, inserted
    removed = set()
    order = sorted(chain.segments, key=lambda s: (s.length, s.start))
    for seg in order:
        if id(seg) in removed:
            continue
        pos = chain.segments.index(seg)
        lpos = _neighbor(chain, pos, -1)
        rpos = _neighbor(chain, pos, +1)
        left = chain.segments[lpos] if lpos is not None else None
        right = chain.segments[rpos] if rpos is not None else None
        if left is not None and right is not None:
            if (left.length > seg.length and right.length > seg.length
                    and seg.length < CASE3_FACTOR * max(left.length, right.length)):
                removed.update(id(s) for s in (left, seg, right))
                event = _resolve_middle(chain, points, pos, collinear_deg)
                if event is not None:
                    inserted.append(event)
                    removed.discard(id(left))
                    removed.discard(id(right))
            continue
        neighbor = left if left is not None else right
        if neighbor is None:
            continue
        if neighbor.length > seg.length and seg.length < CASE4_FACTOR * neighbor.length:
            neighbor.start = min(neighbor.start, seg.start)
            neighbor.end = max(neighbor.end, seg.end)
            removed.add(id(seg))
            chain.segments.remove(seg)
    return chain, inserted


def _seal_remaining(chain):
    """Every adjacency between final primitives carries exactly one feature
    point; unresolved ones are smooth kind transitions, hence tangents."""
    inserted = []
    for left, right in zip(chain.segments, chain.segments[1:]):
        if right.start in chain.seals:
            continue
        if left.kind == right.kind:
            raise AssertionError(
                "same-kind adjacency survived the merge without a seal")
        event = InsertedPoint(index=right.start, label=PointLabel.Tangent)
        chain.seals[right.start] = event
        inserted.append(event)
    return inserted


def _fit_primitive(points, seg):
    pts = points[seg.start:seg.end + 1]
    try:
        if seg.kind == PointLabel.Line:
            return geometry.fit_line(pts)
        return geometry.fit_circle(pts)
    except DegenerateGeometryError:
        return None


def merge_chain(points, chain):
    """Run the full merge over one chain and assemble its primitives.

    ``points`` is the whole stroke's point array; the chain's indices are
    global into it.  Re-running on the returned chain changes nothing.
    """
    trace = MergeTrace(initial=chain.snapshot())
    merge_case1(chain)
    trace.after_case1 = chain.snapshot()
    _, ins2 = merge_case2(chain, points)
    trace.after_case2 = chain.snapshot()
    _, ins3 = merge_long(chain, points)
    ins4 = _seal_remaining(chain)
    trace.final = chain.snapshot()

    inserted = sorted(ins2 + ins3 + ins4, key=lambda e: e.index)
    primitives = [Primitive(kind=seg.kind, start=seg.start, end=seg.end,
                            fit=_fit_primitive(points, seg))
                  for seg in chain.segments]
    labels = np.empty(chain.n_points, dtype=np.int64)
    for seg in chain.segments:
        labels[seg.start - chain.start:seg.end - chain.start + 1] = int(seg.kind)
    # Feature labels come from every seal, so re-running an already merged
    # chain reproduces the same label array.
    for event in chain.seals.values():
        labels[event.index - chain.start] = int(event.label)
    return ChainMergeResult(chain=chain, primitives=primitives,
                            inserted=inserted, labels=labels, trace=trace)
