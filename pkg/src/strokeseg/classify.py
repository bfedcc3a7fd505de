"""Point and corner classification.

Two decisions are made per stroke: every point is either a line-point or a
curve-point, and every interior candidate corner is either a real corner or
not.  Both run behind a small pluggable contract with two implementations:

* a trainable logistic baseline over multi-scale geometric features
  (straw and turning angle at windows 2/4/8/16 plus a bend-direction
  agreement score), deterministic given a seed, serialized as JSON;
* a bridge that ships multi-scale context images to an external process
  speaking line-delimited JSON, so an image model trained elsewhere can be
  plugged in.
"""

import json
import math
import subprocess
import tempfile
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from . import _kernels as kernels
from . import raster
from .errors import BridgeProtocolError, BridgeTimeoutError, TrainingError
from .stroke import DEFAULT_STRAW_WINDOW, PointLabel, candidate_corners, straw

MODEL_FORMAT_VERSION = 1

DEFAULT_FEATURE_WINDOWS = (2, 4, 8, 16)


class PointClass(Enum):
    LinePoint = 0
    CurvePoint = 1


class CornerDecision(Enum):
    NonCorner = 0
    Corner = 1


@dataclass(frozen=True)
class FeatureConfig:
    """Multi-scale feature layout: straw and turning angle per window plus
    one sign-agreement feature."""

    windows: tuple = DEFAULT_FEATURE_WINDOWS

    @property
    def dim(self):
        return 2 * len(self.windows) + 1


@dataclass
class TrainParams:
    epochs: int = 50
    rate: float = 0.1
    seed: int = 0
    batch_size: int = 128


def feature_matrix(stroke, config=FeatureConfig()):
    """Features for every point of a stroke, shape (n, config.dim).

    All features are invariant under rigid transforms of the stroke:
    straw is a length ratio, turning angles are unsigned, and the agreement
    feature uses the absolute mean bend direction.
    """
    pts = stroke.points
    n = len(pts)
    cols = []
    signs = []
    for w in config.windows:
        if w < n / 2:
            straw_col = kernels.straw_values(pts, w)
        else:
            straw_col = np.ones(n, dtype=np.float64)
        cols.append(straw_col)
    for w in config.windows:
        lo = np.maximum(np.arange(n) - w, 0)
        hi = np.minimum(np.arange(n) + w, n - 1)
        vin = pts - pts[lo]
        vout = pts[hi] - pts
        nin = np.hypot(vin[:, 0], vin[:, 1])
        nout = np.hypot(vout[:, 0], vout[:, 1])
        denom = nin * nout
        ok = denom > 0.0
        cosv = np.ones(n, dtype=np.float64)
        cosv[ok] = np.clip((vin[ok, 0] * vout[ok, 0] + vin[ok, 1] * vout[ok, 1])
                           / denom[ok], -1.0, 1.0)
        cols.append(np.arccos(cosv) / math.pi)
        cross = vin[:, 0] * vout[:, 1] - vin[:, 1] * vout[:, 0]
        signs.append(np.sign(np.where(ok, cross, 0.0)))
    agreement = np.abs(np.mean(signs, axis=0))
    cols.append(agreement)
    return np.column_stack(cols)


def extract_features(stroke, idx, config=FeatureConfig()):
    """Feature vector of one point (see feature_matrix)."""
    return feature_matrix(stroke, config)[idx]


@dataclass
class BaselineModel:
    """Logistic classifier over standardized multi-scale features.

    ``kind`` is "point" (class 1 = curve-point) or "corner"
    (class 1 = corner).  Serialization round-trips exactly.
    """

    kind: str
    config: FeatureConfig
    weights: np.ndarray
    bias: float
    feature_mean: np.ndarray
    feature_std: np.ndarray
    training: dict = field(default_factory=dict)

    def decision_values(self, features):
        z = (features - self.feature_mean) / self.feature_std
        return z @ self.weights + self.bias

    def probabilities(self, features):
        return 1.0 / (1.0 + np.exp(-self.decision_values(features)))

    def save(self, path):
        obj = {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": self.kind,
            "windows": list(self.config.windows),
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "feature_mean": self.feature_mean.tolist(),
            "feature_std": self.feature_std.tolist(),
            "training": self.training,
        }
        Path(path).write_text(json.dumps(obj, indent=2) + "\n")

    @classmethod
    def load(cls, path):
        obj = json.loads(Path(path).read_text())
        if obj.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format in {path}")
        return cls(
            kind=obj["kind"],
            config=FeatureConfig(windows=tuple(obj["windows"])),
            weights=np.asarray(obj["weights"], dtype=np.float64),
            bias=float(obj["bias"]),
            feature_mean=np.asarray(obj["feature_mean"], dtype=np.float64),
            feature_std=np.asarray(obj["feature_std"], dtype=np.float64),
            training=obj.get("training", {}),
        )


def _point_rows(strokes, config):
    feats, targets = [], []
    for stk in strokes:
        mat = feature_matrix(stk, config)
        mask = (stk.labels == PointLabel.Line) | (stk.labels == PointLabel.Curve)
        feats.append(mat[mask])
        targets.append((stk.labels[mask] == PointLabel.Curve).astype(np.float64))
    return np.concatenate(feats), np.concatenate(targets)


def _corner_rows(strokes, config, straw_window):
    feats, targets = [], []
    for stk in strokes:
        mat = feature_matrix(stk, config)
        cands = candidate_corners(straw(stk, straw_window)).interior
        if len(cands) == 0:
            continue
        corner_idx = np.flatnonzero(stk.labels == PointLabel.Corner)
        for c in cands:
            feats.append(mat[c])
            if len(corner_idx) and np.min(np.abs(corner_idx - c)) <= 1:
                targets.append(1.0)
            else:
                targets.append(0.0)
    if not feats:
        return np.empty((0, config.dim)), np.empty(0)
    return np.vstack(feats), np.asarray(targets)


def _fit_logistic(features, targets, params):
    rng = np.random.default_rng(params.seed)
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    std[std == 0.0] = 1.0
    z = (features - mean) / std
    w = rng.normal(0.0, 0.01, size=z.shape[1])
    b = 0.0
    count = len(z)
    for _ in range(params.epochs):
        order = rng.permutation(count)
        for start in range(0, count, params.batch_size):
            batch = order[start:start + params.batch_size]
            zb, tb = z[batch], targets[batch]
            p = 1.0 / (1.0 + np.exp(-(zb @ w + b)))
            err = p - tb
            w -= params.rate * (zb.T @ err) / len(batch)
            b -= params.rate * float(err.mean())
    return w, b, mean, std


def train_baseline(dataset, kind, split=None, params=None,
                   config=FeatureConfig(), straw_window=DEFAULT_STRAW_WINDOW):
    """Train a baseline model on fully labeled strokes.

    ``kind`` selects the decision: "point" trains on all line/curve-labeled
    points; "corner" trains only on the candidate-corner indices, which
    keeps the corner/non-corner classes comparable in size.  When a
    ``split`` (SplitPlan) is given, its last subset is held out for the
    recorded validation accuracy; otherwise validation runs on the training
    data itself.
    """
    params = params or TrainParams()
    strokes = list(dataset)
    if not strokes:
        raise TrainingError("empty training dataset")
    if split is not None:
        val_ids = set(split.subsets[-1])
        train_strokes = [s for s in strokes if s.source_id not in val_ids]
        val_strokes = [s for s in strokes if s.source_id in val_ids]
        if not train_strokes or not val_strokes:
            raise TrainingError("split leaves an empty train or validate set")
    else:
        train_strokes = strokes
        val_strokes = strokes

    if kind == "point":
        features, targets = _point_rows(train_strokes, config)
        val_feat, val_targ = _point_rows(val_strokes, config)
    elif kind == "corner":
        features, targets = _corner_rows(train_strokes, config, straw_window)
        val_feat, val_targ = _corner_rows(val_strokes, config, straw_window)
    else:
        raise ValueError(f"kind must be 'point' or 'corner', got {kind!r}")

    if len(features) == 0:
        raise TrainingError(f"no training rows for kind={kind}")
    if targets.min() == targets.max():
        raise TrainingError(
            f"training rows for kind={kind} all belong to one class")

    w, b, mean, std = _fit_logistic(features, targets, params)
    model = BaselineModel(kind=kind, config=config, weights=w, bias=b,
                          feature_mean=mean, feature_std=std)
    if len(val_feat):
        preds = model.probabilities(val_feat) >= 0.5
        accuracy = float(np.mean(preds == (val_targ == 1.0)))
    else:
        accuracy = float("nan")
    model.training = {
        "epochs": params.epochs,
        "rate": params.rate,
        "seed": params.seed,
        "batch_size": params.batch_size,
        "rows": int(len(features)),
        "val_accuracy": accuracy,
    }
    return model


def classify_points(stroke, model):
    """One line/curve decision per point.  Ties at 0.5 resolve to curve."""
    if model.kind != "point":
        raise ValueError(f"expected a point model, got kind={model.kind!r}")
    probs = model.probabilities(feature_matrix(stroke, model.config))
    return [PointClass.CurvePoint if p >= 0.5 else PointClass.LinePoint
            for p in probs]


def classify_corners(stroke, candidates, model):
    """One decision per candidate; endpoints are always corners.

    Ties at 0.5 resolve to non-corner (the merge step can re-add a missed
    corner more easily than it can remove a false one).
    """
    if model.kind != "corner":
        raise ValueError(f"expected a corner model, got kind={model.kind!r}")
    mat = feature_matrix(stroke, model.config)
    decisions = []
    for idx, is_endpoint in zip(candidates.indices, candidates.endpoint_flags):
        if is_endpoint:
            decisions.append(CornerDecision.Corner)
        else:
            p = float(model.probabilities(mat[int(idx)][None, :])[0])
            decisions.append(CornerDecision.Corner if p > 0.5
                             else CornerDecision.NonCorner)
    return decisions


class LabelOracleClassifier:
    """Classifies from ground-truth labels: either a bound reference stroke
    (same resample count) or the classified stroke's own labels."""

    def __init__(self, reference=None):
        self.reference = reference

    def _labels(self, stroke):
        if self.reference is not None:
            if self.reference.n != stroke.n:
                raise ValueError("oracle reference has a different point count")
            return self.reference.labels
        return stroke.labels

    def classify_points(self, stroke):
        return [PointClass.LinePoint if lab == PointLabel.Line
                else PointClass.CurvePoint for lab in self._labels(stroke)]

    def classify_corners(self, stroke, candidates):
        corner_idx = np.flatnonzero(self._labels(stroke) == PointLabel.Corner)
        decisions = []
        for idx, is_endpoint in zip(candidates.indices, candidates.endpoint_flags):
            if is_endpoint:
                decisions.append(CornerDecision.Corner)
            elif len(corner_idx) and np.min(np.abs(corner_idx - int(idx))) <= 1:
                decisions.append(CornerDecision.Corner)
            else:
                decisions.append(CornerDecision.NonCorner)
        return decisions


class BaselinePointClassifier:
    def __init__(self, model):
        self.model = model

    def classify_points(self, stroke):
        return classify_points(stroke, self.model)


class BaselineCornerClassifier:
    def __init__(self, model):
        self.model = model

    def classify_corners(self, stroke, candidates):
        return classify_corners(stroke, candidates, self.model)


_POINT_CLASSES = {"line": PointClass.LinePoint, "curve": PointClass.CurvePoint}
_CORNER_CLASSES = {"corner": CornerDecision.Corner,
                   "noncorner": CornerDecision.NonCorner}


def bridge_classify(stroke, indices, kind, command, timeout=10.0, workdir=None):
    """Classify through an external process.

    For every requested index the four context images are written as PGM
    files and a request line ``{"id", "kind", "contexts"}`` is sent on the
    process's stdin.  The process must answer one ``{"id", "class"}`` line
    per request.  Exactly one decision per index is returned; any protocol
    violation or timeout raises instead of defaulting.
    """
    indices = [int(i) for i in indices]
    if kind not in ("point", "corner"):
        raise ValueError(f"kind must be 'point' or 'corner', got {kind!r}")
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        canvas = raster.to_canvas(stroke)
        requests = []
        for k, idx in enumerate(indices):
            paths = []
            for scale in raster.CONTEXT_SCALES:
                img = raster.render_context(canvas, idx, scale)
                path = Path(tmp) / f"ctx_{idx}_{scale}.pgm"
                raster.write_pgm(path, img.pixels)
                paths.append(str(path))
            requests.append({"id": k, "kind": kind, "contexts": paths})
        proc = subprocess.Popen(command, stdin=subprocess.PIPE,
                                stdout=subprocess.PIPE, text=True)
        try:
            replies = _exchange(proc, requests, timeout)
        finally:
            if proc.poll() is None:
                proc.kill()
            proc.wait()
    by_id = {}
    for reply in replies:
        if "id" not in reply or "class" not in reply:
            raise BridgeProtocolError(f"response missing id/class: {reply}")
        by_id[reply["id"]] = reply["class"]
    if set(by_id) != set(range(len(indices))):
        raise BridgeProtocolError(
            f"expected responses for ids 0..{len(indices) - 1}, got {sorted(by_id)}")
    table = _POINT_CLASSES if kind == "point" else _CORNER_CLASSES
    decisions = []
    for k in range(len(indices)):
        name = by_id[k]
        if name not in table:
            raise BridgeProtocolError(f"unknown class {name!r} for kind={kind}")
        decisions.append(table[name])
    return decisions


def _exchange(proc, requests, timeout):
    payload = "".join(json.dumps(r) + "\n" for r in requests)
    replies = []
    error = []

    def pump():
        try:
            proc.stdin.write(payload)
            proc.stdin.flush()
            proc.stdin.close()
            for _ in range(len(requests)):
                line = proc.stdout.readline()
                if not line:
                    return
                replies.append(json.loads(line))
        except (BrokenPipeError, json.JSONDecodeError, OSError) as exc:
            error.append(exc)

    worker = threading.Thread(target=pump, daemon=True)
    worker.start()
    worker.join(timeout)
    if worker.is_alive():
        proc.kill()
        worker.join(1.0)
        raise BridgeTimeoutError(
            f"external classifier gave no answer within {timeout}s")
    if error:
        exc = error[0]
        if isinstance(exc, json.JSONDecodeError):
            raise BridgeProtocolError(f"malformed response line: {exc}")
        raise BridgeProtocolError(str(exc))
    if len(replies) != len(requests):
        raise BridgeProtocolError(
            f"expected {len(requests)} responses, got {len(replies)}")
    return replies


class BridgePointClassifier:
    def __init__(self, command, timeout=10.0):
        self.command = command
        self.timeout = timeout

    def classify_points(self, stroke):
        return bridge_classify(stroke, range(stroke.n), "point",
                               self.command, self.timeout)


class BridgeCornerClassifier:
    def __init__(self, command, timeout=10.0):
        self.command = command
        self.timeout = timeout

    def classify_corners(self, stroke, candidates):
        interior = [int(i) for i in candidates.interior]
        answers = bridge_classify(stroke, interior, "corner",
                                  self.command, self.timeout) if interior else []
        it = iter(answers)
        return [CornerDecision.Corner if flag else next(it)
                for flag in candidates.endpoint_flags]
