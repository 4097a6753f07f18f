"""Run outputs: RFC-4180 CSV writing, number formatting, and run manifests.

Data files are byte-reproducible for a fixed (command, config, seed); the
manifest carries wall-clock timestamps and is the one file excluded from
that guarantee.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from datetime import datetime, timezone
from pathlib import Path

from . import __version__

__all__ = [
    "OUT_DIR_ENV",
    "resolve_out_dir",
    "fmt_real",
    "write_csv",
    "RunManifest",
]

OUT_DIR_ENV = "SEMIGRAPH_OUT_DIR"


def resolve_out_dir(flag_value: str | None) -> Path:
    """--out-dir beats the environment default beats the working directory."""
    if flag_value:
        path = Path(flag_value)
    else:
        path = Path(os.environ.get(OUT_DIR_ENV) or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def fmt_real(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path: Path, header: list[str], rows) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)  # default dialect terminates lines with CRLF
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    return path


class RunManifest:
    """One manifest per CLI run: command line, config digest, seed, code
    version, timestamps, and the list of files the run produced."""

    def __init__(self, command: list[str], config: dict, master_seed: int) -> None:
        canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
        self.command = list(command)
        self.config_digest = hashlib.sha256(canonical.encode()).hexdigest()
        self.master_seed = int(master_seed)
        self.started_at = datetime.now(timezone.utc).isoformat()
        self.outputs: list[str] = []

    def add(self, path: Path) -> Path:
        self.outputs.append(str(path))
        return path

    def write(self, path: Path) -> Path:
        payload = {
            "command": self.command,
            "config_digest": self.config_digest,
            "master_seed": self.master_seed,
            "code_version": __version__,
            "started_at": self.started_at,
            "finished_at": datetime.now(timezone.utc).isoformat(),
            "outputs": self.outputs,
        }
        path.write_text(json.dumps(payload, indent=2) + "\n")
        return path
