"""Content-addressed project store for pipeline artifacts.

Artifacts are write-once files named by content hash; the manifest records
every version with its producing command, parameters, and stage
fingerprint. Stage skipping compares fingerprints, never timestamps.
"""

from __future__ import annotations

import hashlib
import json
import os
from datetime import datetime, timezone
from pathlib import Path

DEFAULT_STORE_DIR = "log2ns-store"
ENV_STORE = "LOG2NS_STORE"

ARTIFACT_EXT = {
    "corpus": ".json",
    "vocabulary": ".tsv",
    "pairs": ".npy",
    "embedding": ".bin",
    "row_vectors": ".npy",
    "clusters": ".bin",
    "firewall": ".json",
}


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def fingerprint(*parts) -> str:
    """Stable hash over strings/bytes/JSON-able parameter blobs."""
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, bytes):
            blob = part
        elif isinstance(part, str):
            blob = part.encode()
        else:
            blob = json.dumps(part, sort_keys=True, separators=(",", ":")).encode()
        h.update(len(blob).to_bytes(8, "little"))
        h.update(blob)
    return h.hexdigest()


def resolve_store_root(explicit: str | None = None) -> Path:
    if explicit:
        return Path(explicit)
    env = os.environ.get(ENV_STORE)
    if env:
        return Path(env)
    return Path(DEFAULT_STORE_DIR)


class StoreError(RuntimeError):
    pass


class ProjectStore:
    def __init__(self, root):
        self.root = Path(root)
        self.artifacts_dir = self.root / "artifacts"
        self.manifest_path = self.root / "manifest.json"

    def ensure(self) -> "ProjectStore":
        self.artifacts_dir.mkdir(parents=True, exist_ok=True)
        if not self.manifest_path.exists():
            self._write_manifest({"artifacts": {}})
        return self

    @property
    def lock_path(self) -> Path:
        return self.root / ".pipeline.lock"

    def manifest(self) -> dict:
        if not self.manifest_path.exists():
            return {"artifacts": {}}
        return json.loads(self.manifest_path.read_text())

    def _write_manifest(self, doc: dict) -> None:
        tmp = self.manifest_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        os.replace(tmp, self.manifest_path)

    def entries(self, name: str) -> list[dict]:
        return self.manifest()["artifacts"].get(name, [])

    def latest(self, name: str) -> dict | None:
        entries = self.entries(name)
        return entries[-1] if entries else None

    def is_current(self, name: str, stage_fingerprint: str) -> bool:
        entry = self.latest(name)
        if entry is None or entry["fingerprint"] != stage_fingerprint:
            return False
        return (self.root / entry["path"]).exists()

    def put(self, name: str, data: bytes, command: str, params, stage_fingerprint: str) -> dict:
        """Write-once by content hash; a new version appends a new entry."""
        self.ensure()
        digest = sha256_hex(data)
        ext = ARTIFACT_EXT.get(name, ".bin")
        rel = f"artifacts/{name}-{digest[:12]}{ext}"
        path = self.root / rel
        if not path.exists():
            tmp = path.with_name(path.name + ".tmp")
            tmp.write_bytes(data)
            os.replace(tmp, path)
        entry = {
            "path": rel,
            "sha256": digest,
            "created_at": datetime.now(timezone.utc).isoformat(),
            "command": command,
            "params": params,
            "fingerprint": stage_fingerprint,
        }
        doc = self.manifest()
        doc["artifacts"].setdefault(name, []).append(entry)
        self._write_manifest(doc)
        return entry

    def read(self, name: str) -> bytes:
        entry = self.latest(name)
        if entry is None:
            raise StoreError(f"artifact not in store: {name}")
        path = self.root / entry["path"]
        if not path.exists():
            raise StoreError(f"artifact file missing: {entry['path']}")
        data = path.read_bytes()
        if sha256_hex(data) != entry["sha256"]:
            raise StoreError(f"artifact content does not match manifest hash: {name}")
        return data

    def artifact_hashes(self) -> dict[str, str]:
        return {name: entries[-1]["sha256"] for name, entries in self.manifest()["artifacts"].items()}
