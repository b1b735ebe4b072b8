"""Stdio protocol loop for a checkpoint embedder.

One JSON object per line:

    out  {"type": "hello", "embedder_id": str, "dims": int}
    in   {"type": "embed", "id": str, "text": str}
    out  {"type": "vector", "id": str, "values": [...], "truncated": bool}
    out  {"type": "error", "id": str, "error": str}
    in   {"type": "bye"}

Requests already sitting in the pipe are folded into one forward pass
(up to batch_size); responses always come back in request order, so a
caller that sends one request at a time sees strict lockstep while a
pipelining caller gets batched inference for free. A request that
fails gets an error response with its id and the session keeps going.
"""

from __future__ import annotations

import json
import os
import select
import sys

from .embedder import CheckpointEmbedder

# next_line(block=False) result when no complete line is ready yet
_NOTHING = object()


class _LineReader:
    """Line-at-a-time reads on a raw fd, with a non-blocking probe.

    Reads the fd directly (not through a buffered stream) so select()
    stays truthful about pending input.
    """

    def __init__(self, fd: int):
        self.fd = fd
        self.buf = b""
        self.eof = False

    def next_line(self, block: bool = True):
        """A decoded line, None at EOF, or _NOTHING when block=False
        and nothing complete is available."""
        while True:
            nl = self.buf.find(b"\n")
            if nl >= 0:
                line = self.buf[:nl]
                self.buf = self.buf[nl + 1:]
                return line.decode("utf-8", errors="replace")
            if self.eof:
                if self.buf:
                    line, self.buf = self.buf, b""
                    return line.decode("utf-8", errors="replace")
                return None
            if not block:
                ready, _, _ = select.select([self.fd], [], [], 0)
                if not ready:
                    return _NOTHING
            chunk = os.read(self.fd, 65536)
            if chunk:
                self.buf += chunk
            else:
                self.eof = True


def serve(embedder: CheckpointEmbedder, batch_size: int,
          in_fd: int | None = None, out=None) -> None:
    """Run one protocol session until bye or EOF."""
    reader = _LineReader(sys.stdin.fileno() if in_fd is None else in_fd)
    out = out if out is not None else sys.stdout

    def send(obj: dict) -> None:
        out.write(json.dumps(obj, ensure_ascii=False) + "\n")
        out.flush()

    batch: list[tuple[str, str]] = []

    def flush() -> None:
        if not batch:
            return
        ids = [rid for rid, _ in batch]
        try:
            results = embedder.encode([text for _, text in batch])
        except Exception as exc:  # noqa: BLE001 - session must survive
            for rid in ids:
                send({"type": "error", "id": rid, "error": f"encode failed: {exc}"})
            batch.clear()
            return
        for rid, res in zip(ids, results):
            if res.error is not None:
                send({"type": "error", "id": rid, "error": res.error})
            else:
                send({"type": "vector", "id": rid, "values": res.values,
                      "truncated": res.truncated})
        batch.clear()

    send({"type": "hello", "embedder_id": embedder.embedder_id,
          "dims": embedder.dims})
    while True:
        line = reader.next_line(block=not batch)
        if line is _NOTHING:
            flush()
            continue
        if line is None:
            flush()
            return
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            flush()
            send({"type": "error", "id": "", "error": "bad json"})
            continue
        mtype = msg.get("type")
        if mtype == "bye":
            flush()
            return
        if mtype != "embed":
            flush()
            send({"type": "error", "id": str(msg.get("id", "")),
                  "error": f"unexpected message type {mtype!r}"})
            continue
        batch.append((str(msg.get("id", "")), str(msg.get("text", ""))))
        if len(batch) >= batch_size:
            flush()
