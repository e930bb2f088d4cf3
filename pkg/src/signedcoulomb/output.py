"""Plain-text writers for trajectories, events and summaries.

Floats are written with ``repr`` (shortest round-trip form), so output files
are byte-for-byte reproducible and lossless.
"""

from __future__ import annotations

import csv
import json
from collections.abc import Iterable
from pathlib import Path
from typing import Any

import numpy as np

from .core import CollisionEvent, Configuration


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)  # "inf" / "nan": JSON has no literal for them
    return obj


def write_json(path: str | Path, obj: Any) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_trajectory_csv(path: str | Path, samples: Iterable[tuple[float, Configuration]]) -> None:
    """Long format, one row per (sample, particle): ``t, i, x, y, alive``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "i", "x", "y", "alive"])
        for t, cfg in samples:
            for i, ((x, y), a) in enumerate(zip(cfg.positions, cfg.alive)):
                w.writerow([repr(float(t)), i, repr(float(x)), repr(float(y)), int(a)])


def read_trajectory_csv(path: str | Path) -> list[tuple[float, Configuration]]:
    rows: dict[float, list] = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            rows.setdefault(float(r["t"]), []).append(
                (int(r["i"]), float(r["x"]), float(r["y"]), bool(int(r["alive"]))))
    out = []
    for t, parts in rows.items():
        parts.sort()
        pos = [(x, y) for _, x, y, _ in parts]
        alive = [a for *_, a in parts]
        out.append((t, Configuration(pos, alive)))
    return out


def write_events_jsonl(path: str | Path, events: Iterable[CollisionEvent]) -> None:
    with open(path, "w") as fh:
        for e in events:
            fh.write(json.dumps(_jsonable(e.to_json()), sort_keys=True))
            fh.write("\n")


def write_path_csv(path: str | Path, times: np.ndarray, values: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "R"])
        for t, r in zip(times, values):
            w.writerow([repr(float(t)), repr(float(r))])
