"""Atomic file output shared by the CLI and serialization helpers."""

import os
import tempfile
from pathlib import Path


def write_text_atomic(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def fmt(x: float) -> str:
    """Shortest repr that round-trips a float exactly."""
    return repr(float(x))


def format_rows(rows, sep: str) -> str:
    return "".join(sep.join(str(c) for c in row) + "\n" for row in rows)
