import math

import numpy as np
import pytest

from strokeseg import stroke as S
from strokeseg import synth
from strokeseg.errors import DegenerateStrokeError, ParseError

from conftest import arc_points


# --- oracles -----------------------------------------------------------------

def resample_oracle(points, n):
    """Brute-force arc-length walk: accumulate segment lengths and linearly
    interpolate each target position."""
    points = np.asarray(points, dtype=float)
    seglen = [float(np.hypot(*(points[i + 1] - points[i])))
              for i in range(len(points) - 1)]
    total = sum(seglen)
    out = [points[0]]
    for k in range(1, n - 1):
        target = total * k / (n - 1)
        acc = 0.0
        for i, ln in enumerate(seglen):
            if acc + ln >= target:
                t = (target - acc) / ln
                out.append(points[i] + t * (points[i + 1] - points[i]))
                break
            acc += ln
    out.append(points[-1])
    return np.asarray(out)


def walk_oracle(values, entry=0.995, a=0.4, b=0.6):
    """Independent scan of the candidate walk over a straw profile."""
    found = []
    open_window = False
    min_v = min_i = None
    for i, v in enumerate(values):
        if open_window:
            if v < min_v:
                min_v, min_i = v, i
            elif v >= a * min_v + b:
                found.append(min_i)
                open_window = False
        elif v < entry and (i == 0 or values[i - 1] >= entry):
            open_window, min_v, min_i = True, v, i
    if open_window:
        found.append(min_i)
    return found


# --- file IO -----------------------------------------------------------------

def test_load_stk_roundtrip(tmp_path):
    path = tmp_path / "13-4-14.stk"
    path.write_text("3\n0 0 0\n1 0 1\n2 0 2\n")
    raw = S.load_stroke(path)
    np.testing.assert_array_equal(raw.points, [[0, 0], [1, 0], [2, 0]])
    assert raw.source_id == "13-4-14"
    assert S.split_source_id(raw.source_id) == (13, 4, 14)


def test_load_stk_without_labels(tmp_path):
    path = tmp_path / "free.stk"
    path.write_text("2\n0.5 1.5\n2.5 3.5\n")
    raw, labels = S.load_stroke_with_labels(path)
    assert raw.source_id is None
    assert list(labels) == [-1, -1]


def test_load_dedupes_consecutive_points(tmp_path):
    path = tmp_path / "d.stk"
    path.write_text("4\n0 0\n0 0\n1 1\n1 1\n")
    raw = S.load_stroke(path)
    assert len(raw.points) == 2


def test_malformed_line_reports_line_number(tmp_path):
    path = tmp_path / "bad.stk"
    path.write_text("2\n0 0\nnope nope\n")
    with pytest.raises(ParseError) as err:
        S.load_stroke(path)
    assert err.value.line == 3


def test_single_point_file_is_degenerate(tmp_path):
    path = tmp_path / "one.stk"
    path.write_text("1\n5 5\n")
    with pytest.raises(DegenerateStrokeError):
        S.load_stroke(path)


def test_json_mirror(tmp_path):
    path = tmp_path / "s.json"
    path.write_text('{"points": [[0,0],[3,4]], "labels": [0,1], '
                    '"source_id": "2-1-7"}')
    raw, labels = S.load_stroke_with_labels(path)
    assert raw.source_id == "2-1-7"
    assert list(labels) == [0, 1]


def test_save_stroke_roundtrips_exactly(tmp_path):
    pts = np.array([[0.123456789, 9.87654321], [1.0, 2.0], [3.5, -4.25]])
    labels = np.array([0, 2, 1])
    path = tmp_path / "rt.stk"
    S.save_stroke(path, pts, labels)
    raw, read_labels = S.load_stroke_with_labels(path)
    np.testing.assert_array_equal(raw.points, pts)
    np.testing.assert_array_equal(read_labels, labels)


# --- resampling --------------------------------------------------------------

def test_resample_straight_line_trivial():
    raw = S.RawStroke(np.array([[0.0, 0.0], [127.0, 0.0]]))
    stk = S.resample(raw, 128)
    np.testing.assert_allclose(stk.points,
                               np.column_stack([np.arange(128.0),
                                                np.zeros(128)]), atol=1e-9)
    assert np.all(stk.labels == S.PointLabel.Unlabeled)


def test_resample_count_is_exact():
    rng = np.random.default_rng(0)
    raw = S.RawStroke(rng.uniform(0, 300, (17, 2)))
    assert S.resample(raw, 128).n == 128


def test_resample_zigzag_matches_oracle():
    pts = np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]])
    stk = S.resample(S.RawStroke(pts), 8)
    np.testing.assert_allclose(stk.points, resample_oracle(pts, 8), atol=1e-9)
    # frozen oracle values at 5 points: spacing 5 along an L of length 20
    expected = np.array([[0.0, 0.0], [5.0, 0.0], [10.0, 0.0],
                         [10.0, 5.0], [10.0, 10.0]])
    np.testing.assert_allclose(resample_oracle(pts, 5), expected, atol=1e-12)


def arc_positions_on_polyline(poly, pts):
    """Cumulative arc position of points known to lie on the polyline,
    visited in order."""
    seg = np.diff(poly, axis=0)
    seglen = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seglen)])
    positions = []
    j = 0
    for p in pts:
        while True:
            a = poly[j]
            ab = seg[j]
            t = float(np.dot(p - a, ab) / np.dot(ab, ab))
            t_clamped = min(max(t, 0.0), 1.0)
            gap = float(np.hypot(*(a + t_clamped * ab - p)))
            if gap < 1e-6 * max(cum[-1], 1.0):
                positions.append(cum[j] + t_clamped * seglen[j])
                break
            j += 1
    return np.asarray(positions)


def test_resample_path_spacing_uniform():
    # The invariant is about distances along the source polyline, which
    # corner-straddling chords shorten in the plane.
    rng = np.random.default_rng(3)
    raw = S.RawStroke(rng.uniform(0, 500, (23, 2)))
    stk = S.resample(raw, 128)
    pos = arc_positions_on_polyline(raw.points, stk.points)
    d = np.diff(pos)
    assert np.ptp(d) <= 1e-6 * d.mean()


def test_resample_idempotent():
    # Exact for constant-curvature strokes, whose resampled chords are all
    # equal; sharp bends shorten individual chords and shift the grid.
    cases = [
        np.array([[0.0, 0.0], [431.0, 217.0]]),
        arc_points(140.0, 0.3, 2.4, 40),
        arc_points(77.0, -1.0, 1.0, 25),
    ]
    for pts in cases:
        stk = S.resample(S.RawStroke(pts), 96)
        total = np.hypot(*np.diff(stk.points, axis=0).T).sum()
        again = S.resample(S.RawStroke(stk.points), 96)
        assert np.max(np.hypot(*(again.points - stk.points).T)) <= 1e-6 * total


def test_resample_rejects_zero_length():
    raw = S.RawStroke.__new__(S.RawStroke)
    raw.points = np.zeros((3, 2))
    raw.source_id = None
    with pytest.raises(DegenerateStrokeError):
        S.resample(raw, 16)


def test_resample_rejects_small_n():
    raw = S.RawStroke(np.array([[0.0, 0.0], [1.0, 0.0]]))
    with pytest.raises(ValueError):
        S.resample(raw, 4)


# --- straw -------------------------------------------------------------------

def test_straw_on_line_is_one():
    raw = S.RawStroke(np.array([[0.0, 0.0], [400.0, 300.0]]))
    stk = S.resample(raw, 128)
    for w in (1, 3, 8, 20):
        prof = S.straw(stk, w)
        np.testing.assert_allclose(prof.values, 1.0, atol=1e-9)


def test_straw_on_circle_matches_analytic():
    # Two oracles: the chord/arc formula r*sin(w*delta/r)/(w*delta) (exact in
    # the dense limit) and the exact polyline ratio sin(w*dtheta) /
    # (2w*sin(dtheta/2)).
    r = 100.0
    n = 1200
    sweep = 1.5 * math.pi
    pts = arc_points(r, 0.0, sweep, n)
    dtheta = sweep / (n - 1)
    delta = r * dtheta
    stk = S.Stroke(points=pts, labels=np.full(n, -1))
    for w in (2, 5, 11):
        prof = S.straw(stk, w)
        approx = r * math.sin(w * delta / r) / (w * delta)
        exact = math.sin(w * dtheta) / (2 * w * math.sin(dtheta / 2))
        np.testing.assert_allclose(prof.values[w:n - w], approx, atol=1e-6)
        np.testing.assert_allclose(prof.values[w:n - w], exact, atol=1e-12)
        assert np.all(prof.values[w:n - w] < 1.0)


def test_straw_boundary_replication_and_range():
    rng = np.random.default_rng(5)
    stk = S.resample(S.RawStroke(rng.uniform(0, 450, (30, 2))), 128)
    prof = S.straw(stk, 8)
    assert np.all(prof.values[:8] == prof.values[8])
    assert np.all(prof.values[-8:] == prof.values[119])
    assert np.all(prof.values > 0.0)
    assert np.all(prof.values <= 1.0)


def test_straw_rigid_invariance():
    rng = np.random.default_rng(6)
    stk = S.resample(S.RawStroke(rng.uniform(0, 450, (15, 2))), 128)
    base = S.straw(stk, 8).values
    theta = 0.7343
    rot = np.array([[math.cos(theta), -math.sin(theta)],
                    [math.sin(theta), math.cos(theta)]])
    moved = S.Stroke(points=stk.points @ rot.T + np.array([123.4, -56.7]),
                     labels=stk.labels)
    np.testing.assert_allclose(S.straw(moved, 8).values, base, atol=1e-9)


def test_straw_window_validation():
    stk = S.resample(S.RawStroke(np.array([[0.0, 0.0], [10.0, 10.0]])), 16)
    with pytest.raises(ValueError):
        S.straw(stk, 8)  # w must stay below n/2


# --- candidate corners -------------------------------------------------------

def test_line_has_no_interior_candidates():
    raw = S.RawStroke(np.array([[0.0, 0.0], [500.0, 10.0]]))
    cands = S.candidate_corners(S.straw(S.resample(raw, 128), 8))
    assert list(cands.interior) == []
    assert list(cands.indices[[0, -1]]) == [0, 127]
    assert cands.endpoint_flags[0] and cands.endpoint_flags[-1]


def test_l_polyline_one_candidate_at_global_minimum():
    spec = synth.SHAPES["angle"]
    stk = synth.generate_template_stroke(spec, sigma=1.0, seed=11)
    prof = S.straw(S.resample(S.RawStroke(stk.points), 128), 8)
    cands = S.candidate_corners(prof)
    assert list(cands.interior) == walk_oracle(prof.values)
    assert len(cands.interior) == 1
    assert cands.interior[0] == int(np.argmin(prof.values))


def test_walk_matches_oracle_on_random_profiles():
    rng = np.random.default_rng(7)
    for _ in range(300):
        values = np.clip(rng.normal(0.992, 0.02, 128), 0.3, 1.0)
        prof = S.StrawProfile(values=values, window=8)
        got = [int(i) for i in S.candidate_corners(prof).interior]
        expected = [i for i in walk_oracle(values) if 0 < i < 127]
        assert got == sorted(set(expected))


def test_half_circle_yields_interior_candidates():
    stk = synth.generate_template_stroke("halfcircle", sigma=1.0, seed=42)
    prof = S.straw(S.resample(S.RawStroke(stk.points), 128), 8)
    assert len(S.candidate_corners(prof).interior) >= 1
    # a rougher half-circle opens several windows along the arc
    rough = synth.generate_template_stroke("halfcircle", sigma=4.0, seed=42)
    prof = S.straw(S.resample(S.RawStroke(rough.points), 128), 8)
    assert len(S.candidate_corners(prof).interior) >= 2


def test_candidate_recall_and_fraction_on_polylines():
    rng = np.random.default_rng(100)
    for _ in range(100):
        spec = synth.random_polyline(rng)
        total = sum(p.length for p in spec.pieces if p.kind != "turn")
        spacing = total / 127
        stk = synth.generate_template_stroke(
            spec, sigma=0.15 * spacing, seed=int(rng.integers(1 << 31)),
            max_disp=0.24 * spacing)
        bends = np.flatnonzero(stk.labels == S.PointLabel.Corner)
        cands = S.candidate_corners(
            S.straw(S.resample(S.RawStroke(stk.points), 128), 8)).interior
        assert 0.0 <= len(cands) / 128 <= 0.15
        for bend in bends:
            assert np.min(np.abs(cands - bend)) <= 2
