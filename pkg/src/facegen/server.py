"""HTTP/JSON API around the inference pipeline and refinement sessions.

Endpoints (bodies UTF-8 JSON, images base64 PNG):

    GET  /api/health
    GET  /api/lexicon
    POST /api/generate                      {"text"}
    POST /api/variants                      {"latent_id"|"latent", "k", "sigma", "noise_seed"}
    POST /api/sessions
    GET  /api/sessions/{id}
    POST /api/sessions/{id}/steps           {"text", "alpha", "k", "sigma", "noise_seed"}
    POST /api/sessions/{id}/steps/{n}/select {"variant_index"}
    POST /api/sessions/{id}/close

The loaded model and generator are immutable shared state, so the generation
path takes no locks; sessions serialize their own mutations in the store.
When a UI directory is configured its static files are served from the root.
"""

from __future__ import annotations

import json
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .descriptor import lexicon
from .errors import (
    EmptyDescriptionError,
    FacegenError,
    InvalidRequestError,
    InvalidSelectionError,
    SessionClosedError,
    SessionNotFoundError,
)
from .inference import (
    DEFAULT_SIGMA,
    DEFAULT_VARIANTS,
    VariantRequest,
    blend_latent,
    generate_from_text,
    make_variants,
    result_for_latent,
)
from .prng import fnv1a64
from .regressor import RegressorModel, forward
from .sessions import SessionStep, SessionStore
from .text_pipeline import embed_text
from .types import as_latent


class FaceGenService:
    """Application facade shared by the HTTP layer and the CLI."""

    def __init__(self, model: RegressorModel, embedder, generator, session_store: SessionStore | None = None):
        self.model = model
        self.embedder = embedder
        self.generator = generator
        self.sessions = session_store
        self._latents: dict[str, np.ndarray] = {}
        self._latents_lock = threading.Lock()

    def health(self) -> dict:
        info = self.embedder.info
        return {
            "status": "ok",
            "model": self.generator.name(),
            "embedder": {
                "name": info.name,
                "dimension": info.dimension,
                "deterministic": info.deterministic,
            },
        }

    def _remember(self, results) -> None:
        with self._latents_lock:
            for r in results:
                self._latents[r.latent_id] = r.latent

    def generate(self, text: str) -> dict:
        result = generate_from_text(text, self.model, self.embedder, self.generator)
        self._remember([result])
        return result.to_json_dict()

    def variants(self, body: dict) -> dict:
        if "latent" in body and body["latent"] is not None:
            base = as_latent(body["latent"])
        elif "latent_id" in body and body["latent_id"]:
            with self._latents_lock:
                base = self._latents.get(body["latent_id"])
            if base is None:
                raise InvalidRequestError(f"unknown latent_id {body['latent_id']!r}")
        else:
            raise InvalidRequestError("request needs either 'latent' or 'latent_id'")
        request = VariantRequest(
            k=int(body.get("k", DEFAULT_VARIANTS)),
            sigma=float(body.get("sigma", DEFAULT_SIGMA)),
            noise_seed=int(body.get("noise_seed", 0)),
        )
        results = make_variants(base, request, self.generator)
        self._remember(results)
        return {"variants": [r.to_json_dict() for r in results]}

    # -- sessions ---------------------------------------------------------

    def _require_sessions(self) -> SessionStore:
        if self.sessions is None:
            raise InvalidRequestError("session storage is not configured")
        return self.sessions

    def create_session(self) -> dict:
        return {"session_id": self._require_sessions().create().session_id}

    def session_state(self, session_id: str) -> dict:
        session = self._require_sessions().get(session_id)
        state = session.to_json_dict()
        for step in state["steps"]:
            step["base_image"] = self._render_dict(step["base"])
            step["variant_images"] = [self._render_dict(z) for z in step["variants"]]
        return state

    def _render_dict(self, latent) -> dict:
        return result_for_latent(as_latent(latent), self.generator).to_json_dict()

    def add_step(self, session_id: str, body: dict) -> dict:
        store = self._require_sessions()
        session = store.get(session_id)
        text = body.get("text") or ""
        if not text.strip():
            raise EmptyDescriptionError("step needs a non-empty 'text'")
        alpha = float(body.get("alpha", 1.0))
        if not 0.0 <= alpha <= 1.0:
            raise InvalidRequestError(f"alpha must lie in [0, 1], got {alpha}")
        k = int(body.get("k", DEFAULT_VARIANTS))
        sigma = float(body.get("sigma", DEFAULT_SIGMA))
        noise_seed = body.get("noise_seed")
        if noise_seed is None:
            noise_seed = fnv1a64(f"{session_id}:{len(session.steps)}".encode())
        request = VariantRequest(k=k, sigma=sigma, noise_seed=int(noise_seed))

        regressed = forward(self.model, embed_text(text, self.embedder))
        selected = session.last_selected_latent()
        effective_alpha = 1.0 if selected is None else alpha
        base = blend_latent(regressed, selected, effective_alpha)
        variant_results = make_variants(base, request, self.generator)
        self._remember(variant_results)

        step = SessionStep(
            index=len(session.steps),
            text=text,
            alpha=effective_alpha,
            base=base,
            k=request.k,
            sigma=request.sigma,
            noise_seed=request.noise_seed,
            variants=[r.latent for r in variant_results],
        )
        step = store.append_step(session_id, step)
        out = step.to_json_dict()
        out["session_id"] = session_id
        out["base_image"] = self._render_dict(step.base)
        out["variant_images"] = [r.to_json_dict() for r in variant_results]
        return out

    def select_variant(self, session_id: str, step_index: int, variant_index: int) -> dict:
        self._require_sessions().select(session_id, step_index, variant_index)
        return {"session_id": session_id, "step": step_index, "selected": variant_index}

    def close_session(self, session_id: str) -> dict:
        self._require_sessions().close(session_id)
        return {"session_id": session_id, "status": "closed"}


_ERROR_STATUS = (
    (EmptyDescriptionError, 400, "empty-description"),
    (InvalidRequestError, 400, "invalid-request"),
    (InvalidSelectionError, 400, "invalid-selection"),
    (SessionClosedError, 400, "session-closed"),
    (SessionNotFoundError, 404, "not-found"),
)


def _error_response(exc: Exception) -> tuple[int, dict]:
    for etype, status, code in _ERROR_STATUS:
        if isinstance(exc, etype):
            return status, {"error": code, "message": str(exc)}
    if isinstance(exc, FacegenError):
        return 500, {"error": "internal", "message": str(exc)}
    raise exc


class _Handler(BaseHTTPRequestHandler):
    service: FaceGenService = None
    ui_dir: Path | None = None

    # quiet by default; the serve CLI flips this on
    verbose = False

    def log_message(self, fmt, *args):
        if self.verbose:
            super().log_message(fmt, *args)

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        try:
            parsed = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise InvalidRequestError("request body is not valid JSON")
        if not isinstance(parsed, dict):
            raise InvalidRequestError("request body must be a JSON object")
        return parsed

    def _dispatch(self, method: str) -> None:
        path = self.path.split("?")[0].rstrip("/") or "/"
        parts = [p for p in path.split("/") if p]
        try:
            if method == "GET" and path == "/api/health":
                return self._send_json(200, self.service.health())
            if method == "GET" and path == "/api/lexicon":
                return self._send_json(200, lexicon())
            if method == "POST" and path == "/api/generate":
                body = self._read_body()
                text = body.get("text") or ""
                return self._send_json(200, self.service.generate(text))
            if method == "POST" and path == "/api/variants":
                return self._send_json(200, self.service.variants(self._read_body()))
            if method == "POST" and path == "/api/sessions":
                return self._send_json(201, self.service.create_session())
            if parts[:2] == ["api", "sessions"] and len(parts) >= 3:
                session_id = parts[2]
                if method == "GET" and len(parts) == 3:
                    return self._send_json(200, self.service.session_state(session_id))
                if method == "POST" and len(parts) == 4 and parts[3] == "steps":
                    return self._send_json(201, self.service.add_step(session_id, self._read_body()))
                if method == "POST" and len(parts) == 6 and parts[3] == "steps" and parts[5] == "select":
                    body = self._read_body()
                    if "variant_index" not in body:
                        raise InvalidRequestError("body needs 'variant_index'")
                    try:
                        step_index = int(parts[4])
                    except ValueError:
                        raise InvalidSelectionError(f"step {parts[4]!r} is not an index")
                    return self._send_json(
                        200,
                        self.service.select_variant(session_id, step_index, int(body["variant_index"])),
                    )
                if method == "POST" and len(parts) == 4 and parts[3] == "close":
                    return self._send_json(200, self.service.close_session(session_id))
            if method == "GET" and self.ui_dir is not None:
                return self._serve_static(path)
            return self._send_json(404, {"error": "not-found", "message": f"no route {method} {path}"})
        except Exception as exc:  # noqa: BLE001 - mapped to HTTP statuses
            try:
                status, payload = _error_response(exc)
            except Exception:
                self.log_error("unhandled error: %r", exc)
                status, payload = 500, {"error": "internal", "message": "unexpected server error"}
            self._send_json(status, payload)

    def _serve_static(self, path: str) -> None:
        rel = path.lstrip("/") or "index.html"
        target = (self.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())) or not target.is_file():
            return self._send_json(404, {"error": "not-found", "message": f"no file {path}"})
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        data = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")


def make_server(service: FaceGenService, host: str = "127.0.0.1", port: int = 8080,
                ui_dir=None, verbose: bool = False) -> ThreadingHTTPServer:
    """Build (but do not start) the threading HTTP server."""
    handler = type(
        "FaceGenHandler",
        (_Handler,),
        {
            "service": service,
            "ui_dir": Path(ui_dir) if ui_dir else None,
            "verbose": verbose,
        },
    )
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(service: FaceGenService, host: str, port: int, ui_dir=None, verbose: bool = True) -> None:
    server = make_server(service, host, port, ui_dir, verbose)
    bound_port = server.server_address[1]
    print(f"facegen service listening on http://{host}:{bound_port}/", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
