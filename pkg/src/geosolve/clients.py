"""Model backends behind one ``complete(request) -> text`` surface.

Backends:

* ``http``      — OpenAI-compatible chat completions over HTTPS with base64
                  image attachments, bearer token from an env var, and
                  exponential-backoff retries on timeouts/5xx.
* ``canned``    — replies served from a {key, reply} store keyed on the
                  SHA-256 of system+user; misses are errors.  No endpoint,
                  no network, byte-deterministic.
* ``heuristic`` — no model at all: resolves point/shape placeholders by
                  enumerating diagram cycles and filtering them through the
                  vertex-geometry checks.
* record/replay — a wrapper that persists live replies and serves them back.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .diagram import (
    DiagramParse,
    augmented_graph,
    build_graph,
    enumerate_cycles,
    polygon_area,
    shape_matches_geometry,
)
from .terms import LanguageError, Predicate, parse_term

__all__ = [
    "ClientError",
    "TimeoutError_",
    "HttpStatusError",
    "MissingApiKeyError",
    "CannedMissError",
    "ModelRequest",
    "ModelClientConfig",
    "ModelClient",
    "request_key",
    "CannedClient",
    "HeuristicClient",
    "HttpClient",
    "RecordReplayClient",
    "load_store",
    "save_store",
]


class ClientError(Exception):
    pass


class TimeoutError_(ClientError):
    pass


class HttpStatusError(ClientError):
    def __init__(self, code: int, detail: str = ""):
        super().__init__(f"HTTP {code}{': ' + detail if detail else ''}")
        self.code = code


class MissingApiKeyError(ClientError):
    pass


class CannedMissError(ClientError):
    pass


@dataclass(frozen=True)
class ModelRequest:
    system: str
    user: str
    image: str | None = None
    temperature: float = 0.0
    max_reply_tokens: int = 512

    def __post_init__(self) -> None:
        if not self.user:
            raise ValueError("user prompt must be nonempty")
        if not 0.0 <= self.temperature <= 1.0:
            raise ValueError("temperature must be in [0, 1]")


@dataclass
class ModelClientConfig:
    backend: str = "heuristic"
    endpoint: str | None = None
    model_name: str = ""
    api_key_env: str = "GEOSOLVE_API_KEY"
    timeout: float = 60.0
    retries: int = 3

    def __post_init__(self) -> None:
        if self.backend == "http" and not (self.endpoint and self.model_name):
            raise ValueError("http backend needs endpoint and model_name")


class ModelClient(Protocol):
    def complete(self, req: ModelRequest) -> str: ...


def request_key(req: ModelRequest) -> str:
    """SHA-256 over the concatenated system and user prompts."""
    return hashlib.sha256((req.system + req.user).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Store format: JSON list of {"key": ..., "reply": ...} entries.


def load_store(path: str | Path) -> dict[str, str]:
    entries = json.loads(Path(path).read_text())
    return {e["key"]: e["reply"] for e in entries}


def save_store(path: str | Path, store: dict[str, str]) -> None:
    entries = [{"key": k, "reply": v} for k, v in sorted(store.items())]
    Path(path).write_text(json.dumps(entries, indent=2) + "\n")


class CannedClient:
    """Serves stored replies; holds no endpoint, touches no network."""

    def __init__(self, store: dict[str, str]):
        self.store = dict(store)

    @classmethod
    def from_file(cls, path: str | Path) -> "CannedClient":
        return cls(load_store(path))

    def complete(self, req: ModelRequest) -> str:
        key = request_key(req)
        if key not in self.store:
            raise CannedMissError(f"no canned reply for request {key[:16]}...")
        return self.store[key].strip()


class RecordReplayClient:
    """record: pass through to a live client and persist replies.
    replay: serve from the store, erroring on a miss."""

    def __init__(self, mode: str, store_path: str | Path, inner: ModelClient | None = None):
        if mode not in ("record", "replay"):
            raise ValueError(f"bad mode {mode!r}")
        if mode == "record" and inner is None:
            raise ValueError("record mode wraps a live client")
        self.mode = mode
        self.store_path = Path(store_path)
        self.inner = inner
        self._lock = threading.Lock()
        if mode == "replay":
            if not self.store_path.exists():
                raise ClientError(f"replay store {store_path} does not exist")
            self.store = load_store(self.store_path)
        else:
            self.store = load_store(self.store_path) if self.store_path.exists() else {}

    def complete(self, req: ModelRequest) -> str:
        key = request_key(req)
        if self.mode == "replay":
            if key not in self.store:
                raise CannedMissError(f"no recorded reply for request {key[:16]}...")
            return self.store[key].strip()
        reply = self.inner.complete(req)
        with self._lock:
            self.store[key] = reply
            save_store(self.store_path, self.store)
        return reply


# ---------------------------------------------------------------------------
# Heuristic backend

_LITERAL_LINE = re.compile(r"^Ambiguous literal: (.+)$", re.MULTILINE)

_GEOMETRY_RANK = ("Square", "Rectangle", "Parallelogram")
_BY_LENGTH = {3: "Triangle", 4: "Quadrilateral", 5: "Pentagon", 6: "Hexagon"}


class HeuristicClient:
    """Offline rectifier: fills point/shape placeholders from the diagram.

    Expects the shipped prompt templates (it reads the "Ambiguous literal:"
    line).  Points: enumerate cycles of the predicate's arity and keep those
    passing the vertex-geometry check — succeed only on a unique survivor.
    Shapes: the outer boundary (strictly largest simple cycle), typed by
    geometry.  Area compositions are out of reach without a model.
    """

    def __init__(self, diagram: DiagramParse):
        self.diagram = diagram
        self.graph = build_graph(diagram)
        self.search_graph = augmented_graph(diagram)

    def complete(self, req: ModelRequest) -> str:
        m = _LITERAL_LINE.search(req.user)
        if not m:
            return "NoAmbiguousLiteralInPrompt"
        try:
            literal = parse_term(m.group(1).strip())
        except LanguageError:
            return "UnparseableLiteral"
        chain = _first_unknown_chain(literal)
        if chain is None:
            return "NoPlaceholderFound"
        if "Shaded" in chain:
            return "NoHeuristicForAreas"
        if chain[-1] == "Shape":
            return self._resolve_shape()
        return self._resolve_points(chain[-1])

    # -- UnspecifiedPoints: the predicate is known, its points are not.
    def _resolve_points(self, kind: str) -> str:
        if kind == "Circle":
            if len(self.diagram.circles) == 1:
                return f"Circle({self.diagram.circles[0].center})"
            return "NoUniqueCandidate"
        from .terms import PREDICATE_TABLE

        arity = PREDICATE_TABLE[kind].min_arity
        if not 3 <= arity <= 8:
            return "NoUniqueCandidate"
        survivors = [
            cycle
            for cycle in enumerate_cycles(self.search_graph, arity)
            if not shape_matches_geometry(kind, cycle, self.graph)
        ]
        if len(survivors) != 1:
            return "NoUniqueCandidate"
        return f"{kind}({','.join(survivors[0])})"

    # -- UnspecifiedShapes: find the figure's outer boundary and type it.
    def _resolve_shape(self) -> str:
        candidates: list[tuple[float, tuple[str, ...]]] = []
        for length in range(3, 9):
            if length > len(self.diagram.points):
                break
            for cycle in enumerate_cycles(self.search_graph, length):
                if shape_matches_geometry("Shape", cycle, self.graph):
                    continue  # not a simple polygon
                coords = [self.graph.coordinates[v] for v in cycle]
                candidates.append((polygon_area(coords), cycle))
        if not candidates:
            if len(self.diagram.circles) == 1:
                return f"Circle({self.diagram.circles[0].center})"
            return "NoUniqueCandidate"
        candidates.sort(key=lambda c: (-c[0], c[1]))
        best_area, best = candidates[0]
        if len(candidates) > 1 and candidates[1][0] >= best_area * (1 - 1e-9):
            return "NoUniqueCandidate"
        return f"{self._classify_polygon(best)}({','.join(best)})"

    def _classify_polygon(self, cycle: tuple[str, ...]) -> str:
        if len(cycle) == 4:
            for kind in _GEOMETRY_RANK:
                if not shape_matches_geometry(kind, cycle, self.graph):
                    return kind
        if len(cycle) in (5, 6):
            kind = _BY_LENGTH[len(cycle)]
            if not shape_matches_geometry(kind, cycle, self.graph):
                return kind
            return "Shape"
        return _BY_LENGTH.get(len(cycle), "Shape")


def _first_unknown_chain(literal) -> list[str] | None:
    """Predicate names from the root down to the first `$` leaf's parent."""
    from .terms import subterm_at, unknown_paths

    paths = unknown_paths(literal)
    if not paths:
        return None
    chain: list[str] = []
    for k in range(len(paths[0])):
        node = subterm_at(literal, paths[0][:k])
        if isinstance(node, Predicate):
            chain.append(node.name)
    return chain


# ---------------------------------------------------------------------------
# HTTP backend (OpenAI-compatible chat completions)


class HttpClient:
    def __init__(self, config: ModelClientConfig, sleep=time.sleep):
        if config.backend != "http":
            raise ValueError("HttpClient requires backend='http'")
        self.config = config
        self._sleep = sleep

    def _payload(self, req: ModelRequest) -> dict:
        if req.image:
            data = base64.b64encode(Path(req.image).read_bytes()).decode("ascii")
            user_content: object = [
                {"type": "text", "text": req.user},
                {
                    "type": "image_url",
                    "image_url": {"url": f"data:image/png;base64,{data}"},
                },
            ]
        else:
            user_content = req.user
        return {
            "model": self.config.model_name,
            "messages": [
                {"role": "system", "content": req.system},
                {"role": "user", "content": user_content},
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_reply_tokens,
        }

    def complete(self, req: ModelRequest) -> str:
        import requests

        api_key = os.environ.get(self.config.api_key_env)
        if not api_key:
            raise MissingApiKeyError(
                f"environment variable {self.config.api_key_env} is not set"
            )
        payload = self._payload(req)
        headers = {"Authorization": f"Bearer {api_key}"}
        delay = 1.0
        last_error: ClientError | None = None
        for attempt in range(self.config.retries + 1):
            if attempt:
                self._sleep(delay)
                delay *= 2
            try:
                response = requests.post(
                    self.config.endpoint,
                    json=payload,
                    headers=headers,
                    timeout=self.config.timeout,
                )
            except requests.Timeout:
                last_error = TimeoutError_(
                    f"timed out after {self.config.timeout}s"
                )
                continue
            if response.status_code >= 500:
                last_error = HttpStatusError(response.status_code, "server error")
                continue
            if response.status_code != 200:
                raise HttpStatusError(response.status_code, response.text[:200])
            body = response.json()
            return body["choices"][0]["message"]["content"].strip()
        raise last_error


# ---------------------------------------------------------------------------


def make_rectifier_client(
    backend: str,
    diagram: DiagramParse,
    store_path: str | Path | None = None,
    config: ModelClientConfig | None = None,
) -> ModelClient:
    """Build the rectifier backend named by the run configuration."""
    if backend == "heuristic":
        return HeuristicClient(diagram)
    if backend == "canned":
        if store_path is None:
            raise ValueError("canned backend needs a store path")
        return CannedClient.from_file(store_path)
    if backend == "replay":
        if store_path is None:
            raise ValueError("replay backend needs a store path")
        return RecordReplayClient("replay", store_path)
    if backend == "http":
        if config is None:
            raise ValueError("http backend needs a ModelClientConfig")
        return HttpClient(config)
    raise ValueError(f"unknown rectifier backend {backend!r}")
