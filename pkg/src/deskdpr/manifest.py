"""Run manifests: the reproducibility envelope written next to every artifact.

A manifest records the resolved configuration, the seed, and a checksum of
every input file that went into an artifact.  It is written *before* the
artifact itself, so a crashed run leaves a manifest pointing at nothing
rather than an artifact with no provenance.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import ParseError, StaleInput

MANIFEST_SUFFIX = ".manifest.json"


def sha256_file(path: str | Path) -> str:
    """Hex SHA-256 of a file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None
    input_checksums: dict[str, str]
    tool_version: str
    created_utc: str = ""

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "input_checksums": self.input_checksums,
            "tool_version": self.tool_version,
            "created_utc": self.created_utc,
        }


def manifest_path(artifact_path: str | Path) -> Path:
    return Path(str(artifact_path) + MANIFEST_SUFFIX)


def write_manifest(
    artifact_path: str | Path,
    command: str,
    config: dict,
    seed: int | None,
    inputs: list[str | Path],
) -> Path:
    """Write the manifest for an artifact about to be produced."""
    from . import __version__

    checksums = {str(p): sha256_file(p) for p in inputs}
    manifest = RunManifest(
        command=command,
        config=config,
        seed=seed,
        input_checksums=checksums,
        tool_version=__version__,
        created_utc=datetime.now(timezone.utc).isoformat(),
    )
    path = manifest_path(artifact_path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest.to_dict(), f, indent=2, sort_keys=False)
        f.write("\n")
    return path


def read_manifest(artifact_path: str | Path) -> RunManifest | None:
    """Load the manifest for an artifact, or None if it has none."""
    path = manifest_path(artifact_path)
    if not path.exists():
        return None
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
        return RunManifest(
            command=raw["command"],
            config=raw["config"],
            seed=raw["seed"],
            input_checksums=raw["input_checksums"],
            tool_version=raw["tool_version"],
            created_utc=raw.get("created_utc", ""),
        )
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"malformed manifest {path}: {exc}") from exc


def verify_inputs(artifact_path: str | Path) -> None:
    """Check that an artifact's recorded input files are unchanged.

    Raises StaleInput naming the first file whose checksum differs or that
    has gone missing.  Artifacts without a manifest are accepted as-is.
    """
    manifest = read_manifest(artifact_path)
    if manifest is None:
        return
    for path, recorded in manifest.input_checksums.items():
        if not Path(path).exists():
            raise StaleInput(f"stale input: {path} (recorded for {artifact_path}) is missing")
        if sha256_file(path) != recorded:
            raise StaleInput(f"stale input: {path} changed since {artifact_path} was built")
