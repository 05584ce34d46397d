"""Report emission: JSON lines per check plus an aggregated CSV summary."""
from __future__ import annotations

import csv
import io
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .cache import atomic_write_text
from .verify import CheckReport

SCHEMA_VERSION = 1


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and obj != obj:
        return "nan"
    return obj


def record(report: CheckReport, timestamp: str | None = None) -> dict:
    """Schema-versioned record; ``meta`` holds the run-dependent timestamp and runtime."""
    return {
        "schema": SCHEMA_VERSION,
        **_jsonable(report.body()),
        "meta": {"timestamp": timestamp or now(), "runtime": round(report.runtime, 3)},
    }


def now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def to_jsonl(reports: Sequence[CheckReport], timestamp: str | None = None) -> str:
    ts = timestamp or now()
    return "".join(json.dumps(record(r, ts), sort_keys=True) + "\n" for r in reports)


def to_csv(reports: Sequence[CheckReport]) -> str:
    """One row per residual; deterministic (no timing columns)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["schema", "check_id", "verdict", "residual", "value", "threshold"])
    for r in reports:
        thr = json.dumps(_jsonable(r.threshold), sort_keys=True)
        if not r.residuals:
            w.writerow([SCHEMA_VERSION, r.check_id, r.verdict, "", "", thr])
        for name, val in r.residuals.items():
            w.writerow([SCHEMA_VERSION, r.check_id, r.verdict, name, repr(_jsonable(val)), thr])
    return buf.getvalue()


def write_reports(reports: Sequence[CheckReport], out_dir: str | Path, stem: str = "verify") -> tuple[Path, Path]:
    out = Path(out_dir)
    jl, cs = out / f"{stem}.jsonl", out / f"{stem}.csv"
    atomic_write_text(jl, to_jsonl(reports))
    atomic_write_text(cs, to_csv(reports))
    return jl, cs


def read_jsonl(path: str | Path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]


def strip_meta(records: Iterable[dict]) -> list[dict]:
    return [{k: v for k, v in r.items() if k != "meta"} for r in records]


def summarize(records: Sequence[dict]) -> str:
    """Plain-text table of verdicts, one line per check."""
    width = max((len(r["check_id"]) for r in records), default=8)
    lines = [f"{'check':<{width}}  verdict"]
    for r in records:
        lines.append(f"{r['check_id']:<{width}}  {r['verdict']}")
    counts = {v: sum(r["verdict"] == v for r in records) for v in ("pass", "fail", "inconclusive")}
    lines.append(", ".join(f"{k}: {n}" for k, n in counts.items()))
    return "\n".join(lines)
