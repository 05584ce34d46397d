"""Run configuration: one YAML file, every default spelled out here and in ``--help``."""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .cache import default_cache_root
from .verify import DEFAULT_TOLERANCES

DEFAULTS: dict[str, Any] = {
    "group": "A2",
    "q_values": [0.5],
    "cutoff": 24,
    "guard_policy": 0,
    "tolerances": {},
    "output_dir": "reports",
    "cache_dir": None,
    "seed": 0,
}

EXAMPLE_YAML = """\
# artifact run configuration; omitted keys take the defaults shown
group: A2            # type string (A1..A4, B2.., C, D, G2) or an integer Cartan matrix
q_values: [0.5]      # each in (0, 1); verify runs once per value
cutoff: 24           # Fock cutoff N per tensor factor (>= 8)
guard_policy: 0      # extra layers trimmed beyond the tracked guard
seed: 0              # seed for sampled elements and random probes
output_dir: reports
cache_dir: null      # null: $ARTIFACT_CACHE_DIR or ~/.cache/artifact
tolerances: {}       # overrides, e.g. {untwist: 0.05, zero: 1.0e-6}
"""


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    group: Any = "A2"
    q_values: tuple[float, ...] = (0.5,)
    cutoff: int = 24
    guard_policy: int = 0
    tolerances: dict = field(default_factory=dict)
    output_dir: str = "reports"
    cache_dir: str | None = None
    seed: int = 0

    def __post_init__(self):
        qs = tuple(float(q) for q in self.q_values)
        if not qs:
            raise ConfigError("q_values must be non-empty")
        if any(not 0 < q < 1 for q in qs):
            raise ConfigError(f"q_values must lie in (0, 1): {qs}")
        if int(self.cutoff) < 8:
            raise ConfigError("cutoff must be at least 8")
        if int(self.guard_policy) < 0:
            raise ConfigError("guard_policy must be non-negative")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance names: {sorted(unknown)}")
        group = self.group
        if not isinstance(group, str):
            group = tuple(tuple(int(x) for x in row) for row in group)
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "q_values", qs)
        object.__setattr__(self, "cutoff", int(self.cutoff))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "tolerances", {**DEFAULT_TOLERANCES, **{k: float(v) for k, v in self.tolerances.items()}})

    @property
    def cache_root(self) -> Path:
        return Path(self.cache_dir) if self.cache_dir else default_cache_root()

    @property
    def group_spec(self):
        return self.group if isinstance(self.group, str) else [list(r) for r in self.group]

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "tolerances" in kw:
            kw["tolerances"] = {**self.tolerances, **kw["tolerances"]}
        return replace(self, **kw)

    def to_json(self) -> dict:
        d = asdict(self)
        d["group"] = self.group_spec
        d["q_values"] = list(self.q_values)
        return d


def load_config(path: str | os.PathLike | None) -> RunConfig:
    """Read a YAML config; ``None`` gives the defaults."""
    if path is None:
        return RunConfig()
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping")
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**data)


def parse_tolerance(item: str) -> tuple[str, float]:
    name, sep, value = item.partition("=")
    if not sep:
        raise ConfigError(f"expected <name>=<value>, got {item!r}")
    try:
        return name.strip(), float(value)
    except ValueError as exc:
        raise ConfigError(f"bad tolerance value in {item!r}") from exc
