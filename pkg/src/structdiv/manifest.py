"""Run manifests: enough to re-run a command and confirm identical outputs."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import __version__

MANIFEST_NAME = "manifest.json"


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def write_manifest(out_dir: Path, command: str, argv: list[str], config: dict,
                   seeds: dict, inputs: list[str | Path], outputs: list[str]) -> Path:
    manifest = {
        "command": command,
        "argv": argv,
        "config": config,
        "seeds": seeds,
        "inputs": {str(p): file_digest(p) for p in inputs},
        "tool": {"name": "structdiv", "version": __version__},
        "outputs": {name: file_digest(out_dir / name) for name in sorted(outputs)},
    }
    path = out_dir / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_manifest(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
