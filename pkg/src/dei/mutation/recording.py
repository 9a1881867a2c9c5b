"""Record/replay of chat exchanges for bit-reproducible reruns.

A session file is JSON lines, one {"request": ..., "response": ...} object
per exchange, in call order. Replay matches by content (hash of the full
request) rather than position, so interleaved multi-node recordings replay
correctly as long as each request is distinct or repeated in the same
per-request order; the per-call `seed` field in requests makes them
distinct in practice.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from collections import deque

from .llm import BackendError, ChatBackend


def _request_key(request: dict) -> str:
    canonical = json.dumps(request, sort_keys=True, separators=(",", ":"))
    return hashlib.blake2b(canonical.encode(), digest_size=16).hexdigest()


class RecordingBackend:
    """Tees every successful exchange of an inner backend to a session file."""

    def __init__(self, inner: ChatBackend, path: str):
        self.inner = inner
        self.path = path
        self._lock = threading.Lock()
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        open(path, "a", encoding="utf-8").close()

    def complete(self, request: dict) -> str:
        response = self.inner.complete(request)
        line = json.dumps(
            {"request": request, "response": response}, sort_keys=True
        )
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        return response

    def close(self) -> None:
        pass


class ReplayBackend:
    """Serves recorded responses; raises BackendError on any unrecorded request."""

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()
        self._responses: dict[str, deque[str]] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    key = _request_key(record["request"])
                    response = record["response"]
                except (ValueError, KeyError, TypeError) as err:
                    raise ValueError(f"{path}:{lineno}: bad session record: {err}") from err
                self._responses.setdefault(key, deque()).append(response)

    def complete(self, request: dict) -> str:
        key = _request_key(request)
        with self._lock:
            queue = self._responses.get(key)
            if not queue:
                raise BackendError(
                    f"no recorded response for request {key} in session {self.path}"
                )
            return queue.popleft()

    def remaining(self) -> int:
        with self._lock:
            return sum(len(q) for q in self._responses.values())
