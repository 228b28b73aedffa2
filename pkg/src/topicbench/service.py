"""HTTP review API over a directory of runs.

All payloads are JSON. Errors carry machine-readable codes:
{"code": "...", "message": "..."} with 404 (not_found), 409 (conflict),
422 (validation), 400 (bad_request). CORS headers are permissive so the
browser review UI can talk to a locally served API.

Routes:
  GET  /runs
  GET  /runs/{id}/explanations
  GET  /runs/{id}/metrics
  GET  /runs/{id}/agreement
  GET  /explanations/{id}
  POST /explanations/{id}/judgments
"""

from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .errors import ConflictError, NotFoundError, ValidationError
from .lime import explanation_to_record
from .workbench import JudgmentRecord, WorkbenchStore

_ROUTES = [
    ("GET", re.compile(r"^/runs$"), "list_runs"),
    ("GET", re.compile(r"^/runs/([^/]+)/explanations$"), "run_explanations"),
    ("GET", re.compile(r"^/runs/([^/]+)/metrics$"), "run_metrics"),
    ("GET", re.compile(r"^/runs/([^/]+)/agreement$"), "run_agreement"),
    ("GET", re.compile(r"^/explanations/([^/]+)$"), "get_explanation"),
    ("POST", re.compile(r"^/explanations/([^/]+)/judgments$"), "post_judgment"),
]


def _agreement_payload(report) -> dict:
    return {
        "c": report.c,
        "n_test": report.n_test,
        "score": report.score,
        "n_judged": report.n_judged,
        "score_judged": report.score_judged,
        "per_backend": report.per_backend,
    }


class _ApiHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    @property
    def store(self) -> WorkbenchStore:
        return self.server.store

    def _send(self, status: int, obj) -> None:
        body = json.dumps(obj).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, code: str, message: str) -> None:
        self._send(status, {"code": code, "message": message})

    def _dispatch(self, method: str):
        for verb, pattern, name in _ROUTES:
            if verb != method:
                continue
            match = pattern.match(self.path)
            if match:
                try:
                    getattr(self, name)(*match.groups())
                except NotFoundError as exc:
                    self._error(404, "not_found", str(exc))
                except ConflictError as exc:
                    self._error(409, "conflict", str(exc))
                except ValidationError as exc:
                    self._error(422, "validation", str(exc))
                return
        self._error(404, "not_found", f"no route for {method} {self.path}")

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_OPTIONS(self):
        self._send(204, {})

    # -- handlers ----------------------------------------------------------

    def list_runs(self):
        runs = []
        for store in self.store.runs():
            runs.append(
                {
                    "run_id": store.run_id,
                    "backend": store.backend,
                    "n_test": store.n_test,
                    "n_explanations": len(store.explanations()),
                    "n_judged": len(store.judgments()),
                    "metrics": {
                        k: store.summary[k]
                        for k in ("accuracy", "precision", "recall", "f1")
                        if k in store.summary
                    },
                }
            )
        self._send(200, {"runs": runs})

    def run_explanations(self, run_id: str):
        store = self.store.get_run(run_id)
        judged: dict[str, list[str]] = {}
        for j in store.judgments():
            judged.setdefault(j.explanation_fingerprint, []).append(j.reviewer)
        records = []
        for e in store.explanations():
            record = explanation_to_record(e)
            record["judged_by"] = sorted(judged.get(e.fingerprint, []))
            records.append(record)
        self._send(200, {"explanations": records, "n_test": store.n_test})

    def run_metrics(self, run_id: str):
        store = self.store.get_run(run_id)
        self._send(200, {"metrics": store.metrics_records(), "summary": store.summary})

    def run_agreement(self, run_id: str):
        store = self.store.get_run(run_id)
        self._send(200, _agreement_payload(store.agreement()))

    def get_explanation(self, fingerprint: str):
        store, explanation = self.store.find_explanation(fingerprint)
        record = explanation_to_record(explanation)
        record["run_id"] = store.run_id
        record["backend"] = store.backend
        judged_by = [
            j.reviewer
            for j in store.judgments()
            if j.explanation_fingerprint == fingerprint
        ]
        record["judged_by"] = sorted(judged_by)
        self._send(200, record)

    def post_judgment(self, fingerprint: str):
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length).decode("utf-8"))
        except ValueError as exc:
            self._error(400, "bad_request", f"invalid JSON body: {exc}")
            return
        store, explanation = self.store.find_explanation(fingerprint)
        try:
            record = JudgmentRecord(
                doc_id=payload.get("doc_id", explanation.doc_id),
                explanation_fingerprint=fingerprint,
                reviewer=payload["reviewer"],
                step_answers=tuple(bool(s) for s in payload["step_answers"]),
                verdict=payload["verdict"],
            )
        except KeyError as exc:
            self._error(400, "bad_request", f"missing field {exc.args[0]!r}")
            return
        try:
            record_id = store.record_judgment(record)
        except ConflictError as exc:
            existing = next(
                (
                    j
                    for j in store.judgments()
                    if j.reviewer == record.reviewer
                    and j.explanation_fingerprint == fingerprint
                ),
                None,
            )
            payload = {"code": "conflict", "message": str(exc)}
            if existing:
                payload["existing"] = {
                    "verdict": existing.verdict,
                    "reviewer": existing.reviewer,
                }
            self._send(409, payload)
            return
        self._send(
            201,
            {
                "record_id": record_id,
                "agreement": _agreement_payload(store.agreement()),
            },
        )


class ApiServer:
    """The review service; use as a context manager or call serve_forever."""

    def __init__(self, store: WorkbenchStore, host: str = "127.0.0.1", port: int = 0):
        try:
            self.httpd = ThreadingHTTPServer((host, port), _ApiHandler)
        except OSError as exc:
            raise ValidationError(f"cannot bind {host}:{port}: {exc}") from None
        self.httpd.store = store
        self.thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def serve_forever(self):
        self.httpd.serve_forever()

    def __enter__(self):
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()
        if self.thread:
            self.thread.join(timeout=5)


def serve(address: str, store: WorkbenchStore) -> ApiServer:
    """Bind the API to 'host:port' and return the (not yet started) server."""
    host, _, port = address.partition(":")
    return ApiServer(store, host=host or "127.0.0.1", port=int(port or 0))
