"""Dataset JSON reading and canonical writing."""
from __future__ import annotations

import json
import os
from typing import Any

import numpy as np

from ..heatmap_gen import HeatmapSeries

META_KEYS = ("length", "width", "snapshots", "seed", "generator")


class DatasetError(ValueError):
    pass


def dumps_canonical(obj: Any) -> str:
    """Deterministic JSON text: sorted keys, compact separators, trailing newline."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def series_to_json(series: HeatmapSeries) -> dict[str, Any]:
    obj = {k: series.meta.get(k) for k in META_KEYS}
    obj["length"], obj["width"], obj["snapshots"] = series.length, series.width, series.snapshots
    for key in ("rng", "parameters"):
        if key in series.meta:
            obj[key] = series.meta[key]
    obj["frames"] = series.frames.tolist()
    return obj


def save_dataset(series: HeatmapSeries, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(series_to_json(series)))


def _check_frames(frames) -> np.ndarray:
    if not isinstance(frames, list) or not frames:
        raise DatasetError("dataset has no frames")
    shape = None
    for t, frame in enumerate(frames):
        if not isinstance(frame, list) or not frame or not all(isinstance(row, list) for row in frame):
            raise DatasetError(f"frame {t} is not a 2-D array")
        dims = (len(frame), len(frame[0]))
        if any(len(row) != dims[1] for row in frame):
            raise DatasetError(f"frame {t} has ragged rows")
        if shape is None:
            shape = dims
        elif dims != shape:
            raise DatasetError(f"frame {t} has shape {dims}, expected {shape}")
    try:
        arr = np.array(frames, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise DatasetError(f"non-numeric frame values: {exc}") from None
    bad = np.nonzero(np.isnan(arr) | (arr < 0) | (arr > 1))
    if len(bad[0]):
        raise DatasetError(f"frame {int(bad[0][0])} has a value outside [0, 1]")
    return arr


def dataset_from_json(obj: Any) -> HeatmapSeries:
    if isinstance(obj, list):  # legacy bare [frames][rows][cols]
        return HeatmapSeries(_check_frames(obj), {})
    if not isinstance(obj, dict) or "frames" not in obj:
        raise DatasetError("dataset must be an object with 'frames' or a bare 3-D array")
    arr = _check_frames(obj["frames"])
    declared = {k: obj.get(k) for k in ("snapshots", "length", "width")}
    actual = dict(zip(("snapshots", "length", "width"), arr.shape))
    for key, value in declared.items():
        if value is not None and value != actual[key]:
            raise DatasetError(f"declared {key}={value} but frames give {actual[key]}")
    meta = {k: obj.get(k) for k in META_KEYS}
    meta.update(actual)
    for key in ("rng", "parameters"):
        if key in obj:
            meta[key] = obj[key]
    return HeatmapSeries(arr, meta)


def load_dataset(path: str | os.PathLike) -> HeatmapSeries:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: invalid JSON ({exc})") from None
    return dataset_from_json(obj)
