"""Deterministic report emission: CSV, JSON, and the run manifest.

Numbers are written with 17 significant digits ('.' decimal point) and '\n'
line endings so identical floating-point results produce identical bytes on
every platform. The manifest is written last and lists a sha256 digest for
every other emitted file; it is the only artifact carrying a timestamp.
"""

from __future__ import annotations

import hashlib
import json
import math
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

ARTIFACT_VERSION = "0.1.0"


def format_number(x) -> str:
    """Shortest 17-significant-digit decimal form; round-trips float64."""
    return "{:.17g}".format(float(x))


def format_cell(value) -> str:
    if isinstance(value, bool) or isinstance(value, np.bool_):
        return "pass" if value else "fail"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_number(value)
    return str(value)


def write_csv(path: str | Path, header: list[str], rows) -> Path:
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", newline="\n")
    return path


def jsonable(value):
    """Plain-JSON coercion: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    return value


def write_json(path: str | Path, payload: dict) -> Path:
    path = Path(path)
    text = json.dumps(jsonable(payload), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", newline="\n")
    return path


def environment_stamp() -> dict:
    return {
        "artifact_version": ARTIFACT_VERSION,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "platform": platform.platform(),
    }


def sha256_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out_dir: str | Path, command: str, seed: int,
                   files: list[Path]) -> Path:
    out_dir = Path(out_dir)
    manifest = {
        "artifact_version": ARTIFACT_VERSION,
        "command": command,
        "seed": int(seed),
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "files": {f.name: sha256_digest(f) for f in sorted(files)},
    }
    return write_json(out_dir / "manifest.json", manifest)
