"""Small shared file helpers: atomic text writes and JSON-lines iteration."""

from __future__ import annotations

import json
import os
import tempfile
from typing import Iterator

from .errors import DataError


def atomic_write_text(path, text: str) -> None:
    """Write through a sibling temp file plus rename, so readers never see partial output."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=os.path.basename(path) + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def iter_jsonl(path) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, record) for every non-blank line of a JSON-lines file."""
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc})") from None
            if not isinstance(obj, dict):
                raise DataError(f"{path}:{lineno}: expected a JSON object per line")
            yield lineno, obj


def dump_jsonl(records) -> str:
    return "".join(json.dumps(record) + "\n" for record in records)
