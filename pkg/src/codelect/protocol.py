"""Embedder wire protocol: line-delimited JSON over child-process
standard streams (default) or HTTP POST.

  handshake  {"type": "hello", "embedder_id": str, "dims": int}
  request    {"type": "embed", "id": str, "text": str}
  response   {"type": "vector", "id": str, "values": [float, ...]}
  failure    {"type": "error", "id": str, "error": str}
  shutdown   {"type": "bye"}

The subprocess client pipelines a bounded window of requests and drains
responses on a reader thread, so neither side can deadlock on a full
pipe even when vectors are large. Responses are matched by id, so a
server may reorder or batch internally.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import sys
import threading
import urllib.error
import urllib.request
from queue import Empty, Queue

import numpy as np

from .errors import EmbedError, PipelineIOError, ZeroVector

_WINDOW = 32


def serve_stdio(embedder, stdin=None, stdout=None) -> None:
    """Run a protocol session for an in-process embedder object
    (anything with embedder_id, dims, embed(text))."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    def send(obj: dict) -> None:
        stdout.write(json.dumps(obj, ensure_ascii=False) + "\n")
        stdout.flush()

    send({"type": "hello", "embedder_id": embedder.embedder_id, "dims": embedder.dims})
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            send({"type": "error", "id": "", "error": "bad json"})
            continue
        mtype = msg.get("type")
        if mtype == "bye":
            break
        if mtype != "embed":
            send({"type": "error", "id": str(msg.get("id", "")),
                  "error": f"unexpected message type {mtype!r}"})
            continue
        rid = str(msg.get("id", ""))
        try:
            vec = embedder.embed(msg.get("text", ""))
        except ZeroVector as exc:
            send({"type": "error", "id": rid, "error": f"zero_vector: {exc}"})
            continue
        send({"type": "vector", "id": rid, "values": [float(x) for x in vec]})


class SubprocessEmbedder:
    """Client for an embedder child process."""

    def __init__(self, command: str | list[str], hello_timeout: float = 120.0):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        try:
            self.proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=None, text=True, encoding="utf-8", bufsize=1)
        except OSError as exc:
            raise PipelineIOError(f"cannot start embedder {argv!r}: {exc}") from exc
        self._queue: Queue = Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

        hello = self._next_message(hello_timeout)
        if hello is None or hello.get("type") != "hello":
            self.close()
            raise EmbedError(f"no hello from embedder (got {hello!r})", partial={})
        self.embedder_id = str(hello.get("embedder_id", "unknown"))
        self.dims = int(hello["dims"])

    def _pump(self) -> None:
        try:
            for line in self.proc.stdout:
                line = line.strip()
                if line:
                    self._queue.put(line)
        except ValueError:
            pass
        self._queue.put(None)  # EOF marker

    def _next_message(self, timeout: float) -> dict | None:
        try:
            line = self._queue.get(timeout=timeout)
        except Empty:
            return None
        if line is None:
            return None
        try:
            return json.loads(line)
        except json.JSONDecodeError:
            return {"type": "error", "id": "", "error": "undecodable response line"}

    def embed_many(self, items: list[tuple[str, str]],
                   timeout: float = 300.0) -> tuple[dict[str, np.ndarray], dict[str, str]]:
        """Embed (id, text) pairs. Returns (vectors, errors); raises
        EmbedError with partial vectors preserved on timeout/EOF."""
        vectors: dict[str, np.ndarray] = {}
        errors: dict[str, str] = {}
        pending: set[str] = set()
        it = iter(items)
        exhausted = False

        def send_one() -> bool:
            nonlocal exhausted
            try:
                rid, text = next(it)
            except StopIteration:
                exhausted = True
                return False
            pending.add(rid)
            try:
                self.proc.stdin.write(
                    json.dumps({"type": "embed", "id": rid, "text": text},
                               ensure_ascii=False) + "\n")
                self.proc.stdin.flush()
            except (OSError, ValueError) as exc:
                raise EmbedError(f"embedder pipe failure: {exc}",
                                 partial=vectors) from exc
            return True

        while not exhausted and len(pending) < _WINDOW:
            if not send_one():
                break
        while pending:
            msg = self._next_message(timeout)
            if msg is None:
                raise EmbedError(
                    f"embedder stopped responding ({len(pending)} outstanding)",
                    partial=vectors)
            mtype = msg.get("type")
            rid = str(msg.get("id", ""))
            if mtype == "vector":
                values = np.asarray(msg.get("values", []), dtype=np.float64)
                if rid in pending:
                    if values.shape != (self.dims,) or not np.all(np.isfinite(values)):
                        errors[rid] = f"malformed vector (shape {values.shape})"
                    else:
                        vectors[rid] = values
                    pending.discard(rid)
            elif mtype == "error":
                if rid in pending:
                    errors[rid] = str(msg.get("error", "unspecified"))
                    pending.discard(rid)
            else:
                continue
            if not exhausted:
                send_one()
        return vectors, errors

    def embed(self, text: str) -> np.ndarray:
        vectors, errors = self.embed_many([("single", text)])
        if "single" in errors:
            raise ZeroVector(errors["single"])
        return vectors["single"]

    def close(self) -> None:
        try:
            if self.proc.stdin and not self.proc.stdin.closed:
                try:
                    self.proc.stdin.write(json.dumps({"type": "bye"}) + "\n")
                    self.proc.stdin.flush()
                except (OSError, ValueError):
                    pass
                try:
                    self.proc.stdin.close()
                except OSError:
                    pass
        finally:
            try:
                self.proc.wait(timeout=15)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait(timeout=5)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class HttpEmbedder:
    """Transport variant: each body POSTed to <base_url>/embed."""

    def __init__(self, base_url: str, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        hello = self._post({"type": "hello"})
        if hello.get("type") != "hello":
            raise EmbedError(f"bad hello over HTTP: {hello!r}", partial={})
        self.embedder_id = str(hello.get("embedder_id", "unknown"))
        self.dims = int(hello["dims"])

    def _post(self, body: dict) -> dict:
        data = json.dumps(body, ensure_ascii=False).encode("utf-8")
        req = urllib.request.Request(
            self.base_url + "/embed", data=data,
            headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
            raise PipelineIOError(f"HTTP embed failure: {exc}") from exc

    def embed_many(self, items: list[tuple[str, str]],
                   timeout: float = 300.0) -> tuple[dict[str, np.ndarray], dict[str, str]]:
        vectors: dict[str, np.ndarray] = {}
        errors: dict[str, str] = {}
        for rid, text in items:
            msg = self._post({"type": "embed", "id": rid, "text": text})
            if msg.get("type") == "vector":
                values = np.asarray(msg.get("values", []), dtype=np.float64)
                if values.shape != (self.dims,) or not np.all(np.isfinite(values)):
                    errors[rid] = f"malformed vector (shape {values.shape})"
                else:
                    vectors[rid] = values
            else:
                errors[rid] = str(msg.get("error", f"unexpected {msg.get('type')!r}"))
        return vectors, errors

    def embed(self, text: str) -> np.ndarray:
        vectors, errors = self.embed_many([("single", text)])
        if "single" in errors:
            raise ZeroVector(errors["single"])
        return vectors["single"]

    def close(self) -> None:
        pass


def embed_batch(items: list[tuple[str, str]], embedder,
                timeout: float = 300.0) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    """One vector per (id, text) through any handle: protocol clients
    via embed_many, in-process embedders via embed()."""
    if hasattr(embedder, "embed_many"):
        return embedder.embed_many(items, timeout=timeout)
    vectors: dict[str, np.ndarray] = {}
    errors: dict[str, str] = {}
    for rid, text in items:
        try:
            vectors[rid] = np.asarray(embedder.embed(text), dtype=np.float64)
        except ZeroVector as exc:
            errors[rid] = str(exc)
    return vectors, errors
