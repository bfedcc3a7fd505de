"""Local JSON service for detection, dataset browsing, and label editing.

Binds localhost only; backs the browser labeling/sketch UI.  Endpoints:

* ``POST /detect``      stroke JSON -> DetectionResult JSON (byte-identical
  to the CLI output for the same stroke and config)
* ``GET  /strokes?person=&round=&shape=``  -> stroke + labels + candidate
  corners + current revision
* ``PUT  /labels``      ``{"stroke_id", "labels", "revision"?}`` -> persists
  atomically; a stale revision gets 409
* ``GET/POST /candidates``  stroke JSON -> candidate corner set

Errors: 400 malformed, 404 unknown stroke, 409 write conflict, 500 internal.
"""

import json
import os
import tempfile
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np

from . import pipeline, stroke as strokes
from .errors import StrokeSegError


class ServiceState:
    def __init__(self, dataset_dir, config):
        self.dataset_dir = Path(dataset_dir) if dataset_dir else None
        self.config = config
        self.revisions = {}
        self.locks = {}
        self.registry_lock = threading.Lock()

    def lock_for(self, stroke_id):
        with self.registry_lock:
            if stroke_id not in self.locks:
                self.locks[stroke_id] = threading.Lock()
            return self.locks[stroke_id]

    def stroke_path(self, stroke_id):
        if self.dataset_dir is None:
            return None
        return self.dataset_dir / f"{stroke_id}.stk"


class _HttpError(Exception):
    def __init__(self, status, code, message):
        self.status = status
        self.code = code
        self.message = message


def _candidates_payload(stk, config):
    profile = strokes.straw(stk, config.straw_window)
    cands = strokes.candidate_corners(profile, entry=config.walk_entry,
                                      exit_scale=config.walk_exit_scale,
                                      exit_offset=config.walk_exit_offset)
    return {
        "indices": [int(i) for i in cands.indices],
        "endpoint_flags": [bool(f) for f in cands.endpoint_flags],
    }


class ServiceHandler(BaseHTTPRequestHandler):
    state = None  # injected by make_server

    # --- plumbing ---

    def log_message(self, fmt, *args):
        pass

    def _body(self):
        length = int(self.headers.get("Content-Length") or 0)
        data = self.rfile.read(length) if length else b""
        if not data:
            raise _HttpError(400, "empty_body", "request body required")
        try:
            return json.loads(data)
        except json.JSONDecodeError as exc:
            raise _HttpError(400, "malformed_json", str(exc))

    def _send(self, status, payload, raw=None):
        body = raw if raw is not None else json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _fail(self, exc):
        self._send(exc.status, {"error": exc.code, "message": exc.message})

    def _dispatch(self, method):
        try:
            route = urlparse(self.path).path
            handler = getattr(self, f"_{method}_{route.strip('/').replace('/', '_')}",
                              None)
            if handler is None:
                raise _HttpError(404, "no_such_endpoint", f"{method} {route}")
            handler()
        except _HttpError as exc:
            self._fail(exc)
        except StrokeSegError as exc:
            self._fail(_HttpError(400, "bad_stroke", str(exc)))
        except Exception as exc:  # pragma: no cover - defensive
            self._fail(_HttpError(500, "internal", str(exc)))

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_PUT(self):
        self._dispatch("PUT")

    # --- endpoints ---

    def _POST_detect(self):
        obj = self._body()
        raw = strokes.raw_stroke_from_json(obj)
        cfg = self.state.config
        if cfg.point_classifier is None or cfg.corner_classifier is None:
            raise _HttpError(500, "models_not_loaded",
                             "service started without classifier models")
        result = pipeline.detect(raw, cfg)
        self._send(200, None, raw=pipeline.result_to_json(result).encode())

    def _POST_candidates(self):
        obj = self._body()
        raw = strokes.raw_stroke_from_json(obj)
        stk = strokes.resample(raw, self.state.config.resample_n)
        self._send(200, _candidates_payload(stk, self.state.config))

    _GET_candidates = _POST_candidates

    def _GET_strokes(self):
        query = parse_qs(urlparse(self.path).query)
        try:
            person = int(query["person"][0])
            rnd = int(query["round"][0])
            shape = int(query["shape"][0])
        except (KeyError, ValueError):
            raise _HttpError(400, "bad_query",
                             "person, round, and shape integer parameters required")
        stroke_id = f"{person}-{rnd}-{shape}"
        path = self.state.stroke_path(stroke_id)
        if path is None or not path.exists():
            raise _HttpError(404, "unknown_stroke", f"no stroke {stroke_id}")
        raw, labels = strokes.load_stroke_with_labels(path)
        cfg = self.state.config
        if len(raw.points) == cfg.resample_n:
            stk = strokes.Stroke(points=raw.points, labels=labels,
                                 source_id=stroke_id)
        else:
            stk = strokes.resample(raw, cfg.resample_n)
            stk.source_id = stroke_id
        payload = strokes.stroke_to_json(stk)
        payload["candidates"] = _candidates_payload(stk, cfg)
        payload["revision"] = self.state.revisions.get(stroke_id, 0)
        self._send(200, payload)

    def _PUT_labels(self):
        obj = self._body()
        try:
            stroke_id = obj["stroke_id"]
            labels = [int(v) for v in obj["labels"]]
        except (KeyError, TypeError, ValueError):
            raise _HttpError(400, "bad_request",
                             "body must carry stroke_id and integer labels")
        path = self.state.stroke_path(stroke_id)
        if path is None or not path.exists():
            raise _HttpError(404, "unknown_stroke", f"no stroke {stroke_id}")
        valid = {int(v) for v in strokes.PointLabel}
        if any(v not in valid for v in labels):
            raise _HttpError(400, "bad_labels", f"labels must be in {sorted(valid)}")
        lock = self.state.lock_for(stroke_id)
        with lock:
            current = self.state.revisions.get(stroke_id, 0)
            wanted = obj.get("revision")
            if wanted is not None and int(wanted) != current:
                raise _HttpError(409, "revision_conflict",
                                 f"label revision is {current}, PUT carried {wanted}")
            raw, _ = strokes.load_stroke_with_labels(path)
            if len(labels) != len(raw.points):
                raise _HttpError(400, "bad_labels",
                                 f"expected {len(raw.points)} labels, got {len(labels)}")
            fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
            os.close(fd)
            try:
                strokes.save_stroke(tmp, raw.points,
                                    np.asarray(labels, dtype=np.int64))
                os.replace(tmp, path)
            finally:
                if os.path.exists(tmp):
                    os.unlink(tmp)
            self.state.revisions[stroke_id] = current + 1
        self._send(200, {"revision": current + 1})


def make_server(dataset_dir, config, port=0, host="127.0.0.1"):
    """Create (not start) the threading HTTP server."""
    state = ServiceState(dataset_dir, config)
    handler = type("BoundServiceHandler", (ServiceHandler,), {"state": state})
    return ThreadingHTTPServer((host, port), handler)


def serve(dataset_dir, config, port, host="127.0.0.1"):
    server = make_server(dataset_dir, config, port=port, host=host)
    print(f"strokeseg service on http://{host}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
