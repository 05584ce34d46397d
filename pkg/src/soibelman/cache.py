"""On-disk JSON cache of built modules, one file per (group, q, λ)."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path

from . import qmodule
from .qmodule import QModule
from .weyl import RootSystem

ENV_VAR = "ARTIFACT_CACHE_DIR"
FORMAT_VERSION = 1

log = logging.getLogger(__name__)


def default_cache_root() -> Path:
    return Path(os.environ.get(ENV_VAR) or Path.home() / ".cache" / "artifact")


def atomic_write_text(path: Path, text: str) -> None:
    """Write to a sibling temp file, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ModuleCache:
    """Versioned JSON files; floats round-trip exactly through ``repr``."""

    def __init__(self, root: str | os.PathLike | None = None):
        self.root = Path(root) if root is not None else default_cache_root()
        self.hits = 0
        self.misses = 0

    def path(self, rs: RootSystem, q: float, lam) -> Path:
        cartan = json.dumps(rs.cartan.tolist())
        tag = rs.name or "cartan-" + hashlib.sha256(cartan.encode()).hexdigest()[:12]
        lam_s = "_".join(str(int(x)) for x in lam)
        return self.root / "modules" / f"{tag}__q{float(q)!r}__{lam_s}.json"

    def load(self, rs: RootSystem, q: float, lam) -> QModule | None:
        p = self.path(rs, q, lam)
        if not p.exists():
            self.misses += 1
            return None
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
            if data.get("format_version") != FORMAT_VERSION:
                raise ValueError(f"format version {data.get('format_version')!r}")
            m = QModule.from_json(data["module"], rs)
            if m.q != float(q) or tuple(m.highest_weight) != tuple(int(x) for x in lam):
                raise ValueError("key mismatch")
        except Exception as exc:  # corrupted entry: rebuild
            log.warning("module cache entry %s unreadable (%s); rebuilding", p, exc)
            self.misses += 1
            return None
        self.hits += 1
        return m

    def store(self, m: QModule) -> None:
        p = self.path(m.rs, m.q, m.highest_weight)
        payload = {"format_version": FORMAT_VERSION, "module": m.to_json()}
        atomic_write_text(p, json.dumps(payload, sort_keys=True))


def enable(root: str | os.PathLike | None = None) -> ModuleCache:
    cache = ModuleCache(root)
    qmodule.set_disk_cache(cache)
    return cache


def disable() -> None:
    qmodule.set_disk_cache(None)
