"""Deterministic output artifacts: CSV tables and JSON run manifests.

Every writer here produces byte-identical files for identical inputs:
floats are rendered with repr (shortest round-trip), newlines are '\\n',
keys are sorted, and nothing volatile (timestamps, wall time) enters the
files. Timing goes to the run log instead.
"""

from __future__ import annotations

import csv
import json
import subprocess
from pathlib import Path


def _render(value):
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float):
        return repr(value)
    return value


def write_csv(path, header: list[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_render(v) for v in row])


def code_version() -> str:
    """git describe of the working tree, or the package version."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
            cwd=Path(__file__).parent,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    from . import __version__
    return __version__


def write_manifest(path, payload: dict) -> None:
    """JSON manifest of a run: parameters, seeds, code version.

    Deliberately excludes wall time and timestamps so reruns with the same
    configuration produce identical bytes.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = dict(payload)
    doc.setdefault("code_version", code_version())
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
