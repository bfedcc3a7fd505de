"""Synthetic labeled strokes.

Shapes are turtle programs over three piece kinds: straight runs, circular
arcs (signed sweep), and zero-length turns (corners).  Ground-truth labels
come from the clean geometry before noise: points take the kind of their
piece, junctions become corners (explicit turns) or tangents (line/arc and
opposite-sign arc/arc transitions).

Noise is hand-tremor-like: per-point Gaussian displacements smoothed along
the stroke, scaled to a requested RMS, optionally hard-clipped.  Everything
is deterministic per seed.
"""

import math
from dataclasses import dataclass

import numpy as np

from .stroke import PointLabel, RawStroke, Stroke, resample

DENSE_POINTS = 400
# Tremor wavelength in dense samples.  Long enough that a 1 px RMS wobble
# keeps straight runs above the candidate-walk entry threshold, as real
# pen lines are locally smooth.
NOISE_SMOOTH_WINDOW = 31


@dataclass(frozen=True)
class Piece:
    kind: str            # "line", "arc", or "turn"
    length: float = 0.0  # px along the path ("line"/"arc")
    radius: float = 0.0  # "arc" only
    sweep_deg: float = 0.0   # "arc": signed sweep; "turn": heading change


def line(length):
    return Piece(kind="line", length=length)


def arc(radius, sweep_deg):
    return Piece(kind="arc", radius=radius,
                 length=abs(math.radians(sweep_deg)) * radius,
                 sweep_deg=sweep_deg)


def turn(angle_deg):
    return Piece(kind="turn", sweep_deg=angle_deg)


@dataclass(frozen=True)
class ShapeSpec:
    name: str
    pieces: tuple


SHAPES = {
    "angle": ShapeSpec("angle", (line(800), turn(90), line(640))),
    "zigzag": ShapeSpec("zigzag", (line(880), turn(-75), line(880),
                                   turn(100), line(880), turn(-80), line(880))),
    "gate": ShapeSpec("gate", (line(800), turn(90), line(1040),
                               turn(90), line(800))),
    "halfcircle": ShapeSpec("halfcircle", (arc(600, 180),)),
    "s_curve": ShapeSpec("s_curve", (arc(560, 100), arc(560, -100))),
    "line_arc": ShapeSpec("line_arc", (line(720), arc(520, 95))),
    "arc_line_arc": ShapeSpec("arc_line_arc", (arc(480, 80), line(720),
                                               arc(480, 80))),
    "hook": ShapeSpec("hook", (line(720), turn(85), line(600), arc(440, 90))),
}

SHAPE_NAMES = tuple(SHAPES)


def _trace_pieces(pieces, step_positions):
    """Walk the turtle program, returning dense clean points plus the
    arc-length position and feature label of every junction."""
    total = sum(p.length for p in pieces if p.kind != "turn")

    # Junction features at cumulative arc positions.
    junctions = []
    regions = []  # (s_start, s_end, PointLabel)
    s = 0.0
    prev = None
    pending_turn = False
    for piece in pieces:
        if piece.kind == "turn":
            pending_turn = True
            continue
        if prev is not None:
            if pending_turn:
                junctions.append((s, PointLabel.Corner))
            elif prev.kind != piece.kind:
                junctions.append((s, PointLabel.Tangent))
            elif (prev.kind == "arc"
                  and np.sign(prev.sweep_deg) != np.sign(piece.sweep_deg)):
                junctions.append((s, PointLabel.Tangent))
        kind = PointLabel.Line if piece.kind == "line" else PointLabel.Curve
        regions.append((s, s + piece.length, kind))
        s += piece.length
        prev = piece
        pending_turn = False

    # Dense geometry at the requested arc positions.
    points = np.empty((len(step_positions), 2))
    points_done = 0
    s0 = 0.0
    heading = 0.0
    pos = np.zeros(2)
    for piece in pieces:
        if piece.kind == "turn":
            heading += math.radians(piece.sweep_deg)
            continue
        s1 = s0 + piece.length
        mask = (step_positions >= s0 - 1e-9) & (step_positions <= s1 + 1e-9)
        mask[:points_done] = False
        local = step_positions[mask] - s0
        if piece.kind == "line":
            dx = np.cos(heading)
            dy = np.sin(heading)
            points[mask, 0] = pos[0] + local * dx
            points[mask, 1] = pos[1] + local * dy
            pos = pos + piece.length * np.array([dx, dy])
        else:
            sign = 1.0 if piece.sweep_deg >= 0 else -1.0
            # Circle center sits perpendicular to the heading: left of the
            # turtle for a counter-clockwise sweep, right otherwise.
            cx = pos[0] - sign * piece.radius * math.sin(heading)
            cy = pos[1] + sign * piece.radius * math.cos(heading)
            a0 = math.atan2(pos[1] - cy, pos[0] - cx)
            dtheta = sign * local / piece.radius
            points[mask, 0] = cx + piece.radius * np.cos(a0 + dtheta)
            points[mask, 1] = cy + piece.radius * np.sin(a0 + dtheta)
            sweep = math.radians(piece.sweep_deg)
            end_angle = a0 + sweep
            pos = np.array([cx + piece.radius * math.cos(end_angle),
                            cy + piece.radius * math.sin(end_angle)])
            heading += sweep
        points_done += int(mask.sum())
        s0 = s1
    if points_done != len(step_positions):
        raise AssertionError("dense sampling left unassigned positions")
    return points, total, junctions, regions


def smoothed_jitter(shape, sigma, rng, max_disp=None):
    """Correlated Gaussian displacements with per-point RMS ``sigma``."""
    if sigma <= 0:
        return np.zeros(shape)
    white = rng.normal(size=shape)
    kernel = np.ones(NOISE_SMOOTH_WINDOW) / NOISE_SMOOTH_WINDOW
    smooth = np.column_stack([np.convolve(white[:, d], kernel, mode="same")
                              for d in range(shape[1])])
    rms = math.sqrt(float(np.mean(np.sum(smooth ** 2, axis=1))))
    if rms > 0:
        smooth *= sigma / rms
    if max_disp is not None:
        norms = np.hypot(smooth[:, 0], smooth[:, 1])
        over = norms > max_disp
        if np.any(over):
            smooth[over] *= (max_disp / norms[over])[:, None]
    return smooth


def generate_template_stroke(spec, sigma=1.0, phase=0.0, seed=0, n=128,
                             source_id=None, max_disp=None):
    """Generate one labeled stroke from a shape spec.

    Labels are computed from the clean geometry; jitter is applied to the
    dense raw points before resampling.  ``phase`` in [0, 1) shifts the
    dense sampling grid along the shape; ``max_disp`` hard-clips the
    displacement of every point.
    """
    if isinstance(spec, str):
        spec = SHAPES[spec]
    rng = np.random.default_rng(seed)
    total = sum(p.length for p in spec.pieces if p.kind != "turn")
    step = total / (DENSE_POINTS - 1)
    positions = np.minimum((np.arange(DENSE_POINTS) + phase) * step, total)
    positions[0] = 0.0
    positions[-1] = total
    dense, total, junctions, regions = _trace_pieces(spec.pieces, positions)
    dense = dense + smoothed_jitter(dense.shape, sigma, rng, max_disp=max_disp)

    raw = RawStroke(points=dense, source_id=source_id)
    stk = resample(raw, n)

    labels = np.empty(n, dtype=np.int64)
    sample_s = np.arange(n) * (total / (n - 1))
    for s0, s1, kind in regions:
        mask = (sample_s >= s0 - 1e-9) & (sample_s <= s1 + 1e-9)
        labels[mask] = int(kind)
    for s_star, kind in junctions:
        labels[int(round(s_star * (n - 1) / total))] = int(kind)
    stk.labels = labels
    stk.source_id = source_id
    return stk


def true_feature_indices(stroke):
    """Interior labeled corners and tangents of a ground-truth stroke."""
    corners = np.flatnonzero(stroke.labels == PointLabel.Corner)
    tangents = np.flatnonzero(stroke.labels == PointLabel.Tangent)
    interior = lambda idx: idx[(idx != 0) & (idx != stroke.n - 1)]
    return interior(corners), interior(tangents)


def perturb_labels(stroke, rate, max_run, seed=0):
    """Flip line/curve labels at random, never letting a run of flipped
    points reach ``max_run``.  Returns (stroke, flips applied); the applied
    count may fall short of the requested rate when the run constraint
    blocks further flips."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"flip rate must be in [0, 1], got {rate}")
    rng = np.random.default_rng(seed)
    labels = stroke.labels.copy()
    eligible = np.flatnonzero((labels == PointLabel.Line)
                              | (labels == PointLabel.Curve))
    target = int(round(rate * len(eligible)))
    flipped = np.zeros(len(labels), dtype=bool)
    applied = 0
    for idx in rng.permutation(eligible):
        if applied >= target:
            break
        flipped[idx] = True
        run = _run_length(flipped, idx)
        if run >= max_run:
            flipped[idx] = False
            continue
        labels[idx] = (int(PointLabel.Curve) if labels[idx] == PointLabel.Line
                       else int(PointLabel.Line))
        applied += 1
    out = Stroke(points=stroke.points.copy(), labels=labels,
                 source_id=stroke.source_id)
    return out, applied


def _run_length(flags, idx):
    lo = idx
    while lo > 0 and flags[lo - 1]:
        lo -= 1
    hi = idx
    while hi < len(flags) - 1 and flags[hi + 1]:
        hi += 1
    return hi - lo + 1


def random_polyline(rng, n_segments=None):
    """Random polyline for candidate-recall checks: 2 to 4 segments of
    comparable length with interior vertex angles of 150 degrees or less,
    well separated so each bend owns its own straw window."""
    if n_segments is None:
        n_segments = int(rng.integers(2, 5))
    pieces = []
    for k in range(n_segments):
        pieces.append(line(float(rng.uniform(200.0, 300.0))))
        if k < n_segments - 1:
            bend = float(rng.uniform(35.0, 120.0))
            if rng.random() < 0.5:
                bend = -bend
            pieces.append(turn(bend))
    return ShapeSpec(f"poly{n_segments}", tuple(pieces))


def generate_corpus(count, seed, sigma=1.0, n=128):
    """Deterministic corpus cycling through the built-in shapes.

    Stroke i uses shape i % len(SHAPES) with a per-stroke derived seed and
    a source id "person-round-shape" (persons advance every full shape
    cycle) so split strategies have keys to group on.
    """
    strokes = []
    names = SHAPE_NAMES
    for i in range(count):
        name = names[i % len(names)]
        person = (i // len(names)) % 15 + 1
        rnd = i // (len(names) * 15) + 1
        shape_no = i % len(names) + 1
        stk = generate_template_stroke(
            SHAPES[name], sigma=sigma, phase=float((i * 0.37) % 1.0),
            seed=seed * 100003 + i, n=n,
            source_id=f"{person}-{rnd}-{shape_no}")
        strokes.append(stk)
    return strokes
