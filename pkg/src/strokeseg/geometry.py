"""Least-squares line and circle fits plus the angle tests used by the
segment merge step."""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateGeometryError

# Two long line segments count as collinear when the angle between their
# fits is below this (degrees).
DEFAULT_COLLINEAR_DEG = 10.0

# Angle-ratio corner test defaults (offsets in resampled points).
DEFAULT_NEAR_OFFSET = 3
DEFAULT_FAR_OFFSET = 12
DEFAULT_RATIO_MAX = 1.3
DEFAULT_STRAIGHT_CAP_DEG = 160.0

_PARALLEL_EPS_RAD = 1e-6


class CurvatureSign(Enum):
    Positive = 1   # counter-clockwise in a y-up frame
    Negative = -1
    Flat = 0


@dataclass
class FitLine:
    """Total-least-squares line: unit direction, a point on the line, and
    the orthogonal RMS residual."""

    direction: np.ndarray  # (2,) unit vector
    point: np.ndarray      # (2,)
    residual: float


@dataclass
class FitCircle:
    """Algebraic least-squares circle with radial RMS residual."""

    center: np.ndarray  # (2,)
    radius: float
    residual: float


@dataclass
class LineIntersection:
    point: np.ndarray | None  # None when parallel
    angle_deg: float          # acute angle in [0, 90]
    parallel: bool


def fit_line(points):
    """Orthogonal least-squares line through >= 2 distinct points."""
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) < 2:
        raise DegenerateGeometryError(f"need >= 2 points for a line fit, got {len(pts)}")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    cov = centered.T @ centered / len(pts)
    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals[1] <= 0.0:
        raise DegenerateGeometryError("all points coincident; line fit undefined")
    direction = eigvecs[:, 1]
    residual = math.sqrt(max(eigvals[0], 0.0))
    return FitLine(direction=direction, point=centroid, residual=residual)


def fit_circle(points):
    """Algebraic (Kasa) least-squares circle through >= 3 non-collinear points.

    Solves [2x 2y 1] [a b c]^T = x^2 + y^2 for the center (a, b); the
    residual is the radial RMS.  Collinear input raises so callers can fall
    back to line semantics.
    """
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) < 3:
        raise DegenerateGeometryError(f"need >= 3 points for a circle fit, got {len(pts)}")
    x, y = pts[:, 0], pts[:, 1]
    design = np.column_stack([2.0 * x, 2.0 * y, np.ones(len(pts))])
    rhs = x * x + y * y
    # Collinearity shows up as a rank-deficient normal system.
    scale = max(float(np.abs(pts).max()), 1.0)
    if np.linalg.matrix_rank(design, tol=1e-9 * scale * len(pts)) < 3:
        raise DegenerateGeometryError("points are collinear; circle fit undefined")
    sol, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    a, b, c = sol
    r_sq = c + a * a + b * b
    if r_sq <= 0.0:
        raise DegenerateGeometryError("circle fit collapsed to non-positive radius")
    center = np.array([a, b])
    radius = math.sqrt(r_sq)
    residual = math.sqrt(float(np.mean((np.hypot(x - a, y - b) - radius) ** 2)))
    return FitCircle(center=center, radius=radius, residual=residual)


def point_line_distance(p, line):
    """Orthogonal distance from a point to a fitted line."""
    p = np.asarray(p, dtype=np.float64)
    d = p - line.point
    return abs(float(d[0] * line.direction[1] - d[1] * line.direction[0]))


def point_circle_distance(p, circle):
    """Radial distance from a point to a fitted circle."""
    p = np.asarray(p, dtype=np.float64)
    return abs(float(np.hypot(*(p - circle.center))) - circle.radius)


def intersect_angle(l1, l2):
    """Intersection point and acute angle between two fitted lines.

    Parallel lines (within 1e-6 rad) produce no intersection point and a
    raised parallel flag.
    """
    d1, d2 = l1.direction, l2.direction
    cross = float(d1[0] * d2[1] - d1[1] * d2[0])
    dot = abs(float(d1 @ d2))
    angle = math.degrees(math.atan2(abs(cross), dot))
    if abs(cross) < _PARALLEL_EPS_RAD:
        return LineIntersection(point=None, angle_deg=angle, parallel=True)
    # Solve l1.point + t*d1 = l2.point + s*d2 for t.
    rhs = l2.point - l1.point
    t = (rhs[0] * d2[1] - rhs[1] * d2[0]) / cross
    point = l1.point + t * d1
    return LineIntersection(point=point, angle_deg=angle, parallel=False)


def curvature_sign(points, start, end, flat_tol=1e-9):
    """Orientation of a point range: sign of the summed normalized cross
    products of consecutive displacements.

    Positive is counter-clockwise in a y-up frame.  Only equality or
    opposition of signs is meaningful downstream.
    """
    pts = np.asarray(points, dtype=np.float64)[start:end + 1]
    if len(pts) < 3:
        return CurvatureSign.Flat
    v = np.diff(pts, axis=0)
    norms = np.hypot(v[:, 0], v[:, 1])
    cross = v[:-1, 0] * v[1:, 1] - v[:-1, 1] * v[1:, 0]
    denom = norms[:-1] * norms[1:]
    valid = denom > 0.0
    if not np.any(valid):
        return CurvatureSign.Flat
    total = float(np.sum(cross[valid] / denom[valid]))
    if abs(total) < flat_tol * len(pts):
        return CurvatureSign.Flat
    return CurvatureSign.Positive if total > 0 else CurvatureSign.Negative


def _vertex_angle_deg(points, idx, offset, lo, hi):
    i = max(idx - offset, lo)
    j = min(idx + offset, hi)
    if i == idx or j == idx:
        return None
    a = points[i] - points[idx]
    b = points[j] - points[idx]
    na = float(np.hypot(*a))
    nb = float(np.hypot(*b))
    if na == 0.0 or nb == 0.0:
        return None
    cosv = float(a @ b) / (na * nb)
    return math.degrees(math.acos(min(1.0, max(-1.0, cosv))))


def angle_ratio_is_corner(points, idx, near=DEFAULT_NEAR_OFFSET,
                          far=DEFAULT_FAR_OFFSET, ratio_max=DEFAULT_RATIO_MAX,
                          straight_cap_deg=DEFAULT_STRAIGHT_CAP_DEG):
    """True corner test: the vertex angle barely changes with ray length.

    Compares the vertex angles formed by rays to idx +/- near and idx +/- far
    (offsets clamped at the stroke ends).  A real corner keeps a similar,
    clearly non-straight angle at both scales; a curve point's angle widens
    with the offset and an interior line point is nearly straight.
    """
    pts = np.asarray(points, dtype=np.float64)
    lo, hi = 0, len(pts) - 1
    theta_near = _vertex_angle_deg(pts, idx, near, lo, hi)
    theta_far = _vertex_angle_deg(pts, idx, far, lo, hi)
    if theta_near is None or theta_far is None:
        return False
    if theta_near > straight_cap_deg:
        return False
    small = min(theta_near, theta_far)
    big = max(theta_near, theta_far)
    if small == 0.0:
        return big == 0.0
    return big / small <= ratio_max
