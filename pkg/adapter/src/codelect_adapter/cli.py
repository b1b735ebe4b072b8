"""Console entry point: codelect-adapter --model <checkpoint>.

Speaks the embedding wire protocol on stdin/stdout. A checkpoint that
fails to load produces a single error line instead of the hello and a
nonzero exit, so the harness side sees a broken handshake rather than
a hang.
"""

from __future__ import annotations

import argparse
import json
import sys

from .embedder import POOLING_MODES, AdapterConfig, CheckpointEmbedder
from .serve import serve


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(
        prog="codelect-adapter",
        description="stdio embedding server for a saved transformer checkpoint")
    ap.add_argument("--model", required=True,
                    help="checkpoint directory (or hub name)")
    ap.add_argument("--device", default="cpu")
    ap.add_argument("--max-tokens", type=int, default=None,
                    help="truncate inputs past this many tokens "
                         "(default: the model's own position limit)")
    ap.add_argument("--pooling", default="mean_last_layer", choices=POOLING_MODES)
    ap.add_argument("--batch-size", type=int, default=8)
    args = ap.parse_args(argv)

    try:
        config = AdapterConfig(
            model_name=args.model, device=args.device,
            max_tokens=args.max_tokens, pooling=args.pooling,
            batch_size=args.batch_size)
        embedder = CheckpointEmbedder(config)
    except Exception as exc:  # noqa: BLE001 - report, then fail the handshake
        print(json.dumps({"type": "error", "id": "",
                          "error": f"{type(exc).__name__}: {exc}"}), flush=True)
        return 1
    try:
        serve(embedder, config.batch_size)
    except BrokenPipeError:
        pass  # peer went away; nothing left to tell it
    return 0


if __name__ == "__main__":
    sys.exit(main())
