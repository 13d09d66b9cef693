"""Deterministic, lossless output files and run manifests.

Floats are written with 17 significant digits.  Files are written to a
temporary name in the target directory and renamed into place, so readers
never see partial output.
"""

from __future__ import annotations

import csv
import datetime as _dt
import enum
import hashlib
import io
import json
import math
import os
import subprocess
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__


def fmt_float(x: float) -> str:
    s = format(float(x), ".17g")
    if s.lstrip("-").isdigit():
        s += ".0"  # keep floats floats on reload
    return s


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, enum.Enum):
        return _encode(obj.value, indent, level)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return _json_str(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json_str(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in seq):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in seq) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, Path):
        return _json_str(str(obj))
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _json_str(s: str) -> str:
    return json.dumps(s)


def dumps(obj, indent: int = 2) -> str:
    """JSON text with 17-significant-digit floats and non-finite values as null."""
    return _encode(obj, indent, 0) + "\n"


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def version_string() -> str:
    """``git describe`` of the source tree, or the package version."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here, capture_output=True, text=True, timeout=5, check=True,
        ).stdout.strip()
        if out:
            return f"{__version__}+g{out}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def now() -> _dt.datetime:
    return _dt.datetime.now(_dt.timezone.utc)


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class OutputDir:
    """Collects the files of one run and writes a manifest that lists them all."""

    def __init__(self, root, command: str, config: dict, started: _dt.datetime | None = None):
        self.root = Path(root)
        self.command = command
        self.config = config
        self.files: list[str] = []
        self.started = started or now()

    def register(self, name: str) -> None:
        """Reference a file written by someone else (relative to ``root``)."""
        self.files.append(name)

    def write_text(self, name: str, text: str) -> Path:
        p = atomic_write_text(self.root / name, text)
        self.files.append(name)
        return p

    def write_json(self, name: str, obj) -> Path:
        return self.write_text(name, dumps(obj))

    def write_csv(self, name: str, header, rows) -> Path:
        return self.write_text(name, csv_text(header, rows))

    def write_manifest(self, summary: dict | None = None) -> Path:
        elapsed = (now() - self.started).total_seconds()
        manifest = {
            "command": self.command,
            "version": version_string(),
            "config": self.config,
            "files": [{"name": f, "sha256": sha256(self.root / f)} for f in sorted(set(self.files))],
            "summary": summary or {},
            "timestamp": {"started_utc": self.started.isoformat(), "wall_clock_s": elapsed},
        }
        return atomic_write_text(self.root / "manifest.json", dumps(manifest))
