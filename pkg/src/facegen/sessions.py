"""Refinement sessions: append-only per-session event logs on disk.

A session is a sequence of describe/select steps. Every mutation appends one
JSON line to `<sessions_dir>/<session_id>.jsonl`; replaying the log rebuilds
the identical in-memory state, which is how the service survives restarts.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    InvalidSelectionError,
    PersistenceError,
    SessionClosedError,
    SessionNotFoundError,
)
from .types import as_latent


@dataclass
class SessionStep:
    index: int
    text: str
    alpha: float
    base: np.ndarray
    k: int
    sigma: float
    noise_seed: int
    variants: list[np.ndarray]
    selected: int | None = None
    timestamp: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "index": self.index,
            "text": self.text,
            "alpha": self.alpha,
            "base": [float(v) for v in self.base],
            "k": self.k,
            "sigma": self.sigma,
            "noise_seed": self.noise_seed,
            "variants": [[float(v) for v in z] for z in self.variants],
            "selected": self.selected,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SessionStep":
        return cls(
            index=d["index"],
            text=d["text"],
            alpha=d["alpha"],
            base=as_latent(d["base"]),
            k=d["k"],
            sigma=d["sigma"],
            noise_seed=d["noise_seed"],
            variants=[as_latent(z) for z in d["variants"]],
            selected=d["selected"],
            timestamp=d["timestamp"],
        )


@dataclass
class Session:
    session_id: str
    created_at: float
    steps: list[SessionStep] = field(default_factory=list)
    status: str = "active"  # active | closed

    @property
    def active(self) -> bool:
        return self.status == "active"

    def last_selected_latent(self) -> np.ndarray | None:
        """Latent of the most recent selection, scanning steps newest-first."""
        for step in reversed(self.steps):
            if step.selected is not None:
                return step.variants[step.selected]
        return None

    def to_json_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "created_at": self.created_at,
            "status": self.status,
            "steps": [s.to_json_dict() for s in self.steps],
        }


class SessionStore:
    """File-backed session registry; one append-only JSONL log per session.

    Mutations serialize per session; distinct sessions proceed independently.
    """

    def __init__(self, directory):
        self._dir = Path(directory)
        self._dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _path(self, session_id: str) -> Path:
        return self._dir / f"{session_id}.jsonl"

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def _append_event(self, session_id: str, event: dict) -> None:
        try:
            with open(self._path(session_id), "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, separators=(",", ":")) + "\n")
        except OSError as exc:
            raise PersistenceError(self._path(session_id), f"cannot append event ({exc})") from exc

    def create(self, session_id: str | None = None) -> Session:
        session_id = session_id or uuid.uuid4().hex[:16]
        now = time.time()
        session = Session(session_id=session_id, created_at=now)
        with self._lock_for(session_id):
            self._append_event(session_id, {"event": "created", "session_id": session_id, "ts": now})
            self._sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock_for(session_id):
            session = self._sessions.get(session_id)
            if session is None:
                session = self._replay(session_id)
                self._sessions[session_id] = session
            return session

    def _replay(self, session_id: str) -> Session:
        path = self._path(session_id)
        if not path.exists():
            raise SessionNotFoundError(f"no session {session_id!r}")
        session: Session | None = None
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                event = json.loads(line)
                kind = event["event"]
                if kind == "created":
                    session = Session(session_id=event["session_id"], created_at=event["ts"])
                elif kind == "step":
                    session.steps.append(SessionStep.from_json_dict(event["step"]))
                elif kind == "select":
                    session.steps[event["step"]].selected = event["variant"]
                elif kind == "closed":
                    session.status = "closed"
        if session is None:
            raise SessionNotFoundError(f"session log {path} has no creation event")
        return session

    def append_step(self, session_id: str, step: SessionStep) -> SessionStep:
        with self._lock_for(session_id):
            session = self._sessions.get(session_id) or self._replay(session_id)
            self._sessions[session_id] = session
            if not session.active:
                raise SessionClosedError(f"session {session_id} is closed")
            step.index = len(session.steps)
            step.timestamp = step.timestamp or time.time()
            self._append_event(session_id, {"event": "step", "step": step.to_json_dict()})
            session.steps.append(step)
            return step

    def select(self, session_id: str, step_index: int, variant_index: int) -> Session:
        with self._lock_for(session_id):
            session = self._sessions.get(session_id) or self._replay(session_id)
            self._sessions[session_id] = session
            if not session.active:
                raise SessionClosedError(f"session {session_id} is closed")
            if not 0 <= step_index < len(session.steps):
                raise InvalidSelectionError(f"step {step_index} does not exist")
            step = session.steps[step_index]
            if not 0 <= variant_index < len(step.variants):
                raise InvalidSelectionError(
                    f"variant {variant_index} out of range for step {step_index} (k={len(step.variants)})"
                )
            self._append_event(
                session_id, {"event": "select", "step": step_index, "variant": variant_index, "ts": time.time()}
            )
            step.selected = variant_index
            return session

    def close(self, session_id: str) -> Session:
        with self._lock_for(session_id):
            session = self._sessions.get(session_id) or self._replay(session_id)
            self._sessions[session_id] = session
            if not session.active:
                raise SessionClosedError(f"session {session_id} is already closed")
            self._append_event(session_id, {"event": "closed", "ts": time.time()})
            session.status = "closed"
            return session
