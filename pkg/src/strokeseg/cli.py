"""Command-line surface.

Subcommands: detect, train, eval, export-contexts, synth, serve.
Exit codes for detect: 0 success, 1 IO error, 2 parse error, 3 detection
failure (including missing models).
"""

import argparse
import json
import sys
from pathlib import Path
from xml.sax.saxutils import quoteattr

import numpy as np

from . import evaluate, pipeline, raster, service, stroke as strokes, synth
from .classify import (BaselineCornerClassifier, BaselineModel,
                       BaselinePointClassifier, LabelOracleClassifier,
                       TrainParams, train_baseline)
from .errors import DetectionError, ParseError, StrokeSegError
from .stroke import PointLabel

POINT_COLOR = {int(PointLabel.Line): "#2e9e4f",    # green line-points
               int(PointLabel.Curve): "#2b6fdb",   # blue curve-points
               int(PointLabel.Corner): "#d62828",  # red corners
               int(PointLabel.Tangent): "#2b6fdb",
               int(PointLabel.Unlabeled): "#888888"}


def render_svg(stroke, result):
    """SVG with one glyph per point plus hollow rings on tangent points."""
    pts = stroke.points
    lo = pts.min(axis=0) - 10
    hi = pts.max(axis=0) + 10
    w, h = hi - lo
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" '
             f'viewBox="{lo[0]:.1f} {lo[1]:.1f} {w:.1f} {h:.1f}">']
    path = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
    parts.append(f'<polyline points="{path}" fill="none" '
                 f'stroke="#cccccc" stroke-width="1"/>')
    for i, (x, y) in enumerate(pts):
        lab = int(result.labels[i])
        color = POINT_COLOR.get(lab, "#888888")
        r = 3.0 if lab == PointLabel.Corner else 1.6
        parts.append(f'<circle class="pt" cx="{x:.2f}" cy="{y:.2f}" '
                     f'r="{r}" fill={quoteattr(color)}/>')
    for idx in result.tangents:
        x, y = pts[int(idx)]
        parts.append(f'<circle class="tangent-ring" cx="{x:.2f}" cy="{y:.2f}" '
                     f'r="5" fill="none" stroke="#d62828" stroke-width="1.5"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _load_config(args):
    cfg = (pipeline.DetectorConfig.from_file(args.config) if args.config
           else pipeline.DetectorConfig())
    if getattr(args, "oracle", False):
        oracle = LabelOracleClassifier()
        cfg.point_classifier = oracle
        cfg.corner_classifier = oracle
        return cfg
    point_path = getattr(args, "point_model", None)
    corner_path = getattr(args, "corner_model", None)
    if point_path:
        if not Path(point_path).exists():
            raise DetectionError(f"missing model file: {point_path}")
        cfg.point_classifier = BaselinePointClassifier(BaselineModel.load(point_path))
    if corner_path:
        if not Path(corner_path).exists():
            raise DetectionError(f"missing model file: {corner_path}")
        cfg.corner_classifier = BaselineCornerClassifier(BaselineModel.load(corner_path))
    return cfg


def _read_raw(path):
    if path == "-":
        return strokes.raw_stroke_from_json(json.load(sys.stdin))
    return strokes.load_stroke(path)


def _bind_oracle_reference(path, cfg, raw):
    """Oracle detection needs a fully labeled stroke at the resample count."""
    if path == "-":
        raise DetectionError("--oracle requires a labeled stroke file")
    _, labels = strokes.load_stroke_with_labels(path)
    if len(labels) != cfg.resample_n or np.any(labels == PointLabel.Unlabeled):
        raise DetectionError(
            f"--oracle requires {cfg.resample_n} fully labeled points")
    ref = strokes.Stroke(points=raw.points, labels=labels)
    cfg.point_classifier.reference = ref
    cfg.corner_classifier.reference = ref


def cmd_detect(args):
    try:
        raw = _read_raw(args.input)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    try:
        cfg = _load_config(args)
        if args.oracle:
            _bind_oracle_reference(args.input, cfg, raw)
        result = pipeline.detect(raw, cfg)
    except (StrokeSegError, ValueError) as exc:
        print(f"detection failed: {exc}", file=sys.stderr)
        return 3
    if args.format == "svg":
        stk = strokes.resample(raw, cfg.resample_n)
        text = render_svg(stk, result)
    else:
        text = pipeline.result_to_json(result) + "\n"
    try:
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    return 0


def _load_dataset(dataset_dir):
    dataset = []
    for path in sorted(Path(dataset_dir).glob("*.stk")):
        raw, labels = strokes.load_stroke_with_labels(path)
        stk = strokes.Stroke(points=raw.points, labels=labels,
                             source_id=raw.source_id or path.stem)
        dataset.append(stk)
    if not dataset:
        raise OSError(f"no .stk strokes in {dataset_dir}")
    return dataset


def cmd_train(args):
    dataset = _load_dataset(args.dataset)
    params = TrainParams(epochs=args.epochs, rate=args.rate, seed=args.seed,
                         batch_size=args.batch_size)
    model = train_baseline(dataset, args.kind, params=params)
    model.save(args.out)
    acc = model.training["val_accuracy"]
    print(f"trained {args.kind} model on {model.training['rows']} rows; "
          f"validation accuracy {acc:.4f}; saved to {args.out}")
    return 0


def cmd_eval(args):
    dataset = _load_dataset(args.dataset)
    rule = evaluate.MatchRule(tolerance=args.tau)
    if args.oracle:
        detect_fn = evaluate.oracle_detector
    else:
        cfg = _load_config(args)
        if cfg.point_classifier is None or cfg.corner_classifier is None:
            print("eval needs --oracle or both --point-model and --corner-model",
                  file=sys.stderr)
            return 3

        def detect_fn(stk):
            raw = strokes.RawStroke(points=stk.points, source_id=stk.source_id)
            return pipeline.detect(raw, cfg)

    scores = [evaluate.score_stroke(detect_fn(stk), stk, rule)
              for stk in dataset]
    metrics = evaluate.compute_metrics(scores)
    taxonomy = evaluate.failure_taxonomy(scores)
    if args.report:
        Path(args.report).write_text(evaluate.scores_to_csv(scores))
    sys.stdout.write(evaluate.summary_text(metrics, taxonomy))
    return 0


def cmd_export_contexts(args):
    try:
        raw, labels = strokes.load_stroke_with_labels(args.input)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    cfg = pipeline.DetectorConfig.from_file(args.config) if args.config \
        else pipeline.DetectorConfig()
    stk = strokes.resample(raw, cfg.resample_n)
    if args.indices == "all":
        indices = list(range(stk.n))
    elif args.indices == "candidates":
        profile = strokes.straw(stk, cfg.straw_window)
        indices = [int(i) for i in strokes.candidate_corners(profile).indices]
    else:
        indices = [int(tok) for tok in args.indices.split(",") if tok]
    count = raster.export_contexts(stk, indices, args.out)
    print(f"wrote {count} context images to {args.out}")
    return 0


def cmd_synth(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corpus = synth.generate_corpus(args.count, seed=args.seed, sigma=args.sigma)
    for stk in corpus:
        strokes.save_stroke(out / f"{stk.source_id}.stk", stk.points, stk.labels)
    print(f"wrote {len(corpus)} labeled strokes to {out}")
    return 0


def cmd_serve(args):
    try:
        cfg = _load_config(args)
    except DetectionError as exc:
        print(str(exc), file=sys.stderr)
        return 3
    service.serve(args.dataset, cfg, port=args.port)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="strokeseg",
                                     description="Stroke corner and tangent "
                                                 "point detection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect feature points of one stroke")
    p.add_argument("--input", required=True, help=".stk/JSON stroke path or -")
    p.add_argument("--config", help="detector config JSON")
    p.add_argument("--point-model", help="point classifier model JSON")
    p.add_argument("--corner-model", help="corner classifier model JSON")
    p.add_argument("--oracle", action="store_true",
                   help="classify from the stroke's own labels")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=["json", "svg"], default="json")
    p.set_defaults(fn=cmd_detect)

    p = sub.add_parser("train", help="train a baseline classifier")
    p.add_argument("--dataset", required=True, help="directory of labeled .stk files")
    p.add_argument("--kind", choices=["point", "corner"], required=True)
    p.add_argument("--out", required=True, help="model JSON output path")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--rate", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=128)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="score detection against dataset labels")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", help="detector config JSON")
    p.add_argument("--point-model")
    p.add_argument("--corner-model")
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--tau", type=int, default=2, help="match tolerance in indices")
    p.add_argument("--report", help="per-stroke CSV output path")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("export-contexts", help="write context images as PGM")
    p.add_argument("--input", required=True)
    p.add_argument("--config")
    p.add_argument("--indices", default="all",
                   help="'all', 'candidates', or comma-separated indices")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_export_contexts)

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("serve", help="run the local JSON service")
    p.add_argument("--dataset", required=True)
    p.add_argument("--port", type=int, default=8710)
    p.add_argument("--config")
    p.add_argument("--point-model")
    p.add_argument("--corner-model")
    p.add_argument("--oracle", action="store_true")
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
