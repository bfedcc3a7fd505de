"""Metrics, dataset splits, cross-validation, and failure reports.

A detected stroke is correct all-or-nothing: its interior corners and
tangent points must match the labeled ones one-to-one, same type, within
the index tolerance.  Stroke endpoints are corners on both sides by
convention and are excluded from matching.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .stroke import PointLabel, split_source_id

SET_BY_PERSON = "set_by_person"
SET_BY_SHAPE = "set_by_shape"

# Grouping used for the 15-person / 20-shape reference dataset.
PAPER_PERSON_SUBSETS = ({1, 7, 15}, {2, 8, 11}, {3, 9, 12}, {4, 10, 13},
                        {5, 6, 14})
PAPER_SHAPE_SUBSETS = ({1, 11, 17, 19}, {2, 12, 18, 6}, {3, 13, 16, 9},
                       {4, 14, 15, 8}, {5, 20, 7, 10})

FAILURE_BUCKETS = ("false_positive_point", "false_negative",
                   "threshold_value", "other")


@dataclass(frozen=True)
class MatchRule:
    """Index tolerance for matching detected and labeled feature points."""

    tolerance: int = 2

    def __post_init__(self):
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")


@dataclass
class StrokeScore:
    stroke_id: str
    correct: bool
    corner_tp: int
    corner_fp: int
    corner_fn: int
    tangent_tp: int
    tangent_fp: int
    tangent_fn: int
    point_correct: int
    point_total: int
    failures: tuple = ()


@dataclass
class Metrics:
    """Aggregate counters plus the derived rates.

    Rates with a zero denominator are None, never silently 0.
    """

    acc_p: float | None
    tp: int
    fp: int
    tn: int | None
    fn: int
    r_c: float | None
    p_c: float | None
    err_fn: float | None
    err_fp: float | None
    aon: float | None

    @classmethod
    def from_counts(cls, tp, fp, fn, tn=None, acc_p=None, aon=None):
        r_c = tp / (tp + fn) if tp + fn > 0 else None
        p_c = tp / (tp + fp) if tp + fp > 0 else None
        return cls(acc_p=acc_p, tp=tp, fp=fp, tn=tn, fn=fn,
                   r_c=r_c, p_c=p_c,
                   err_fn=None if r_c is None else 1.0 - r_c,
                   err_fp=None if p_c is None else 1.0 - p_c,
                   aon=aon)


def _interior(indices, n):
    idx = np.asarray(indices, dtype=np.int64)
    return np.sort(idx[(idx != 0) & (idx != n - 1)])


def _match_counts(detected, labeled, tolerance):
    """Greedy one-to-one matching of two sorted index lists."""
    tp = fp = fn = 0
    i = j = 0
    while i < len(detected) and j < len(labeled):
        d, l = detected[i], labeled[j]
        if abs(int(d) - int(l)) <= tolerance:
            tp += 1
            i += 1
            j += 1
        elif d < l:
            fp += 1
            i += 1
        else:
            fn += 1
            j += 1
    fp += len(detected) - i
    fn += len(labeled) - j
    return tp, fp, fn


def score_stroke(detected, truth, rule=MatchRule()):
    """Score one detection against a fully labeled stroke."""
    n = truth.n
    if len(detected.labels) != n:
        raise ValueError(f"detection has {len(detected.labels)} labels, "
                         f"stroke has {n} points")
    lab_corners = _interior(np.flatnonzero(truth.labels == PointLabel.Corner), n)
    lab_tangents = _interior(np.flatnonzero(truth.labels == PointLabel.Tangent), n)
    det_corners = _interior(detected.corners, n)
    det_tangents = _interior(detected.tangents, n)

    c_tp, c_fp, c_fn = _match_counts(det_corners, lab_corners, rule.tolerance)
    t_tp, t_fp, t_fn = _match_counts(det_tangents, lab_tangents, rule.tolerance)
    correct = c_fp == c_fn == t_fp == t_fn == 0

    point_mask = ((truth.labels == PointLabel.Line)
                  | (truth.labels == PointLabel.Curve))
    point_total = int(point_mask.sum())
    point_correct = int(np.sum(detected.labels[point_mask]
                               == truth.labels[point_mask]))

    failures = []
    if c_fp:
        failures.append("false_positive_point")
    if c_fn:
        failures.append("false_negative")
    if (t_fp or t_fn) and not (c_fp or c_fn):
        failures.append("threshold_value")
    return StrokeScore(
        stroke_id=truth.source_id or "", correct=correct,
        corner_tp=c_tp, corner_fp=c_fp, corner_fn=c_fn,
        tangent_tp=t_tp, tangent_fp=t_fp, tangent_fn=t_fn,
        point_correct=point_correct, point_total=point_total,
        failures=tuple(failures))


def compute_metrics(scores):
    """Aggregate stroke scores into the corner-matching metrics and AON."""
    scores = list(scores)
    if not scores:
        raise ValueError("no stroke scores to aggregate")
    tp = sum(s.corner_tp for s in scores)
    fp = sum(s.corner_fp for s in scores)
    fn = sum(s.corner_fn for s in scores)
    total_pts = sum(s.point_total for s in scores)
    acc_p = (sum(s.point_correct for s in scores) / total_pts
             if total_pts else None)
    aon = sum(1 for s in scores if s.correct) / len(scores)
    return Metrics.from_counts(tp, fp, fn, acc_p=acc_p, aon=aon)


def failure_taxonomy(scores):
    """Bucketed failure counts plus the distinct wrong-stroke count.

    A stroke can land in several buckets, so the bucket total may exceed
    the number of wrong strokes; both are reported.
    """
    buckets = {name: [] for name in FAILURE_BUCKETS}
    wrong = 0
    for s in scores:
        if s.correct:
            continue
        wrong += 1
        names = s.failures or ("other",)
        for name in names:
            buckets[name].append(s.stroke_id)
    return {
        "buckets": {name: ids for name, ids in buckets.items()},
        "bucket_total": sum(len(ids) for ids in buckets.values()),
        "wrong_strokes": wrong,
    }


@dataclass
class SplitPlan:
    strategy: str
    subsets: list  # five lists of stroke ids


def _group_key(stroke, strategy):
    person, _, shape = split_source_id(stroke.source_id)
    return person if strategy == SET_BY_PERSON else shape


def make_splits(dataset, strategy):
    """Partition a dataset into five subsets by person or by shape.

    The 15-person / 20-shape reference grouping is used when the dataset's
    keys match it exactly; any other key set is dealt round-robin.
    """
    if strategy not in (SET_BY_PERSON, SET_BY_SHAPE):
        raise ValueError(f"unknown split strategy {strategy!r}")
    strokes = list(dataset)
    for stk in strokes:
        if stk.source_id is None:
            raise ValueError("every stroke needs a person-round-shape id")
    keys = sorted({_group_key(s, strategy) for s in strokes})
    reference = (PAPER_PERSON_SUBSETS if strategy == SET_BY_PERSON
                 else PAPER_SHAPE_SUBSETS)
    if set(keys) == set().union(*reference):
        groups = reference
    else:
        groups = [set(keys[i::5]) for i in range(5)]
    subsets = [[] for _ in range(5)]
    for stk in strokes:
        key = _group_key(stk, strategy)
        for i, group in enumerate(groups):
            if key in group:
                subsets[i].append(stk.source_id)
                break
    return SplitPlan(strategy=strategy, subsets=subsets)


@dataclass
class CrossValidationReport:
    rounds: list          # Metrics per round
    mean_aon: float
    mean_acc_p: float | None
    scores: list = field(repr=False, default_factory=list)


def cross_validate(dataset, strategy, trainer=None, detector=None,
                   rule=MatchRule()):
    """Five rounds: test subset i, validate subset i+1, train the rest.

    ``trainer(train_strokes, validate_strokes) -> detect_fn`` builds a
    detector per round; alternatively a fixed ``detector(stroke) ->
    DetectionResult`` is evaluated as is.
    """
    if (trainer is None) == (detector is None):
        raise ValueError("provide exactly one of trainer or detector")
    strokes = {s.source_id: s for s in dataset}
    plan = make_splits(dataset, strategy)
    rounds = []
    all_scores = []
    for i in range(5):
        test_ids = set(plan.subsets[i])
        val_ids = set(plan.subsets[(i + 1) % 5])
        train_ids = set().union(*(plan.subsets[j] for j in range(5)
                                  if j not in (i, (i + 1) % 5)))
        if test_ids & val_ids or test_ids & train_ids or val_ids & train_ids:
            raise AssertionError("split subsets overlap")
        if trainer is not None:
            detect_fn = trainer([strokes[k] for k in sorted(train_ids)],
                                [strokes[k] for k in sorted(val_ids)])
        else:
            detect_fn = detector
        scores = [score_stroke(detect_fn(strokes[k]), strokes[k], rule)
                  for k in sorted(test_ids)]
        rounds.append(compute_metrics(scores))
        all_scores.extend(scores)
    accs = [m.acc_p for m in rounds if m.acc_p is not None]
    return CrossValidationReport(
        rounds=rounds,
        mean_aon=float(np.mean([m.aon for m in rounds])),
        mean_acc_p=float(np.mean(accs)) if accs else None,
        scores=all_scores)


def oracle_detector(stroke):
    """Returns the stroke's own labels as a detection (reference detector)."""
    from .merge import DetectionResult
    n = stroke.n
    corners = sorted(set(np.flatnonzero(stroke.labels == PointLabel.Corner))
                     | {0, n - 1})
    tangents = np.flatnonzero(stroke.labels == PointLabel.Tangent)
    return DetectionResult(corners=np.asarray(corners, dtype=np.int64),
                           tangents=tangents.astype(np.int64),
                           labels=stroke.labels.copy())


def scores_to_csv(scores):
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["stroke_id", "correct", "corner_tp", "corner_fp",
                     "corner_fn", "tangent_tp", "tangent_fp", "tangent_fn",
                     "point_correct", "point_total", "failures"])
    for s in scores:
        writer.writerow([s.stroke_id, int(s.correct), s.corner_tp, s.corner_fp,
                         s.corner_fn, s.tangent_tp, s.tangent_fp, s.tangent_fn,
                         s.point_correct, s.point_total, ";".join(s.failures)])
    return buf.getvalue()


def _pct(value):
    return "n/a" if value is None else f"{100.0 * value:.2f}%"


def summary_text(metrics, taxonomy=None):
    lines = [
        f"point accuracy : {_pct(metrics.acc_p)}",
        f"corner recall  : {_pct(metrics.r_c)} (TP={metrics.tp} FN={metrics.fn})",
        f"corner precision: {_pct(metrics.p_c)} (FP={metrics.fp})",
        f"all-or-nothing : {_pct(metrics.aon)}",
    ]
    if taxonomy is not None:
        lines.append("failure taxonomy (a stroke may count in several buckets):")
        for name, ids in taxonomy["buckets"].items():
            lines.append(f"  {name}: {len(ids)}")
        lines.append(f"  bucket total: {taxonomy['bucket_total']}; "
                     f"wrong strokes: {taxonomy['wrong_strokes']}")
    return "\n".join(lines) + "\n"
