"""Structured per-stage event log (JSON lines) and output-directory locking."""
from __future__ import annotations

import contextlib
import json
import os
import time
from pathlib import Path

from .errors import UserError


class EventLog:
    """Append-only JSONL log; one file per pipeline stage."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def emit(self, event: str, **fields) -> None:
        rec = {"ts": time.time(), "event": event}
        rec.update(fields)
        with open(self.path, "a") as fh:
            fh.write(json.dumps(rec, sort_keys=True, default=float) + "\n")


@contextlib.contextmanager
def output_lock(out_dir):
    """Exclusive lockfile: no two commands write one output dir concurrently."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lock = out / ".nsgf.lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise UserError(
            f"output directory {out} is locked by another command "
            f"(remove {lock} if that run crashed)") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield out
    finally:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(lock)
