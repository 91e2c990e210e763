"""Coverage metrics for static placements and mobile plans."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from ..core import PlacementSet, bipartite_distance_matrix
from ..mobile_planning import Plan
from ..prep import WaypointGraph


@dataclass
class BenchResult:
    algo: str
    params: dict[str, Any]
    total_poi: int
    observed_poi: int
    coverage_ratio: float
    per_frame: list[int]
    min_frame: int
    max_gap: int
    info_gain: float
    placements: list[list[float]] = field(default_factory=list)
    per_sensor: list[int] | None = None
    paths: list[list[int]] | None = None
    wall_time: float | None = None

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


def _frames(series) -> np.ndarray:
    return np.asarray(getattr(series, "frames", series), dtype=np.float64)


def longest_zero_run(values) -> int:
    best = run = 0
    for v in values:
        run = run + 1 if v == 0 else 0
        best = max(best, run)
    return best


def _seen_mask(sensor_positions: np.ndarray, hot_cells: np.ndarray, r: float) -> np.ndarray:
    if len(sensor_positions) == 0 or len(hot_cells) == 0:
        return np.zeros(len(hot_cells), dtype=bool)
    return (bipartite_distance_matrix(sensor_positions, hot_cells) <= r).any(axis=0)


def _summarise(algo, params, frames, theta, seen_per_frame, placements=None) -> BenchResult:
    per_frame, info_gain, total = [], 0.0, 0
    for frame, (cells, seen) in zip(frames, seen_per_frame):
        per_frame.append(int(seen.sum()))
        total += len(cells)
        if seen.any():
            idx = cells[seen].astype(int)
            info_gain += float(frame[idx[:, 0], idx[:, 1]].sum())
    observed = int(sum(per_frame))
    return BenchResult(
        algo=algo,
        params=params,
        total_poi=total,
        observed_poi=observed,
        coverage_ratio=observed / total if total else 0.0,
        per_frame=per_frame,
        min_frame=int(np.argmin(per_frame)) if per_frame else 0,
        max_gap=longest_zero_run(per_frame),
        info_gain=info_gain,
        placements=placements or [],
    )


def _hot_cells(frame, theta) -> np.ndarray:
    return np.argwhere(frame >= theta).astype(np.float64)


def evaluate_static(placements: PlacementSet, series, r: float | None = None, theta: float = 0.9,
                    algo: str = "static", params: dict | None = None) -> BenchResult:
    """POI seen per frame by fixed sensors; each hot cell counted once per frame."""
    r = placements.radius if r is None else r
    frames = _frames(series)
    pos = placements.positions
    seen = []
    for frame in frames:
        cells = _hot_cells(frame, theta)
        seen.append((cells, _seen_mask(pos, cells, r)))
    return _summarise(algo, dict(params or {}), frames, theta, seen, pos.tolist())


def evaluate_plan(plan: Plan, graph: WaypointGraph, series, r: float, theta: float = 0.9,
                  algo: str | None = None) -> BenchResult:
    """Per-sensor raw sums plus a per-frame aggregate with duplicates removed."""
    frames = _frames(series)
    per_sensor = [0] * len(plan.sensors)
    seen = []
    for t, frame in enumerate(frames):
        cells = _hot_cells(frame, theta)
        union = np.zeros(len(cells), dtype=bool)
        for k, sensor in enumerate(plan.sensors):
            mask = _seen_mask(graph.positions[[sensor.path[t]]], cells, r)
            per_sensor[k] += int(mask.sum())
            union |= mask
        seen.append((cells, union))
    params = {k: v for k, v in plan.params.items() if k != "audit"}
    res = _summarise(algo or str(plan.params.get("algo", "plan")), params, frames, theta, seen)
    res.per_sensor = per_sensor
    res.paths = [list(s.path) for s in plan.sensors]
    return res
