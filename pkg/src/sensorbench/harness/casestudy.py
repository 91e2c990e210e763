"""Residual, region-of-interest and temporal-coverage tools."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..core import bipartite_distance_matrix
from ..heatmap_gen import make_rng
from ..prep import iterative_centroid_selection

ROI_THRESHOLD = 0.5


def residual(frame_a, frame_b) -> np.ndarray:
    """Squared change ``(b - a)**2`` per cell."""
    a = np.asarray(frame_a, dtype=np.float64)
    b = np.asarray(frame_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"frame shapes differ: {a.shape} vs {b.shape}")
    d = b - a
    return d * d


def _channels(channels) -> np.ndarray:
    arrs = [np.asarray(getattr(c, "frames", c), dtype=np.float64) for c in channels]
    if not arrs:
        raise ValueError("need at least one channel")
    if any(a.shape != arrs[0].shape or a.ndim != 3 for a in arrs):
        raise ValueError("channels must share one (T, L, W) shape")
    return np.stack(arrs)


def residual_sums(channels) -> np.ndarray:
    """Channel-summed residual per frame pair, shape ``(T - 1, L, W)``."""
    c = _channels(channels)
    d = c[:, 1:] - c[:, :-1]
    return (d * d).sum(axis=0)


@dataclass
class RoiNode:
    position: tuple[int, int]
    scores: dict[int, float] = field(default_factory=dict)  # frame pair index -> summed residual


def roi_extract(channels, threshold: float = ROI_THRESHOLD) -> list[RoiNode]:
    """Cells whose channel-summed residual reaches ``threshold`` in some frame pair."""
    sums = residual_sums(channels)
    nodes: dict[tuple[int, int], RoiNode] = {}
    for t, i, j in zip(*np.nonzero(sums >= threshold)):
        key = (int(i), int(j))
        nodes.setdefault(key, RoiNode(key)).scores[int(t)] = float(sums[t, i, j])
    return [nodes[k] for k in sorted(nodes)]


def temporal_coverage(observers, frame_events: Sequence, metric: str = "euclidean") -> dict:
    """Sum of nearest-observer distances per frame; lower is better.

    A frame with events but no observers scores +inf.
    """
    obs = np.asarray(observers, dtype=np.float64).reshape(-1, 2)
    per_frame = []
    for ev in frame_events:
        ev = np.asarray(ev, dtype=np.float64).reshape(-1, 2)
        if len(ev) == 0:
            per_frame.append(0.0)
        elif len(obs) == 0:
            per_frame.append(math.inf)
        else:
            per_frame.append(float(bipartite_distance_matrix(obs, ev, metric).min(axis=0).sum()))
    total = float(sum(per_frame))
    return {"per_frame_sum": per_frame, "total": total,
            "average": total / len(per_frame) if per_frame else 0.0}


def _bounding_box(observers, frame_events):
    parts = [np.asarray(observers, dtype=np.float64).reshape(-1, 2)]
    parts += [np.asarray(ev, dtype=np.float64).reshape(-1, 2) for ev in frame_events]
    allp = np.concatenate(parts)
    if len(allp) == 0:
        raise ValueError("cannot infer a region from an empty network")
    return tuple(allp.min(axis=0)), tuple(allp.max(axis=0))


def monte_carlo_insertion(observers, frame_events: Sequence, trials: int, rng=0, region=None,
                          metric: str = "euclidean", candidates=None) -> dict:
    """Random search for the observer position minimising average temporal coverage.

    ``region`` is ``((x0, y0), (x1, y1))``, defaulting to the bounding box of
    the network. Explicit ``candidates`` replace the random draws.
    """
    obs = np.asarray(observers, dtype=np.float64).reshape(-1, 2)
    if candidates is None:
        if trials < 1:
            raise ValueError("trials must be >= 1")
        rng = rng if isinstance(rng, np.random.Generator) else make_rng(rng)
        (x0, y0), (x1, y1) = region or _bounding_box(obs, frame_events)
        candidates = np.column_stack([rng.uniform(x0, x1, trials), rng.uniform(y0, y1, trials)])
    candidates = np.asarray(candidates, dtype=np.float64).reshape(-1, 2)
    baseline = temporal_coverage(obs, frame_events, metric)["average"]
    best_pos, best_score = None, math.inf
    history = []
    for cand in candidates:
        score = temporal_coverage(np.vstack([obs, cand]), frame_events, metric)["average"]
        if score < best_score:
            best_pos, best_score = (float(cand[0]), float(cand[1])), score
        history.append(best_score)
    return {"best_position": best_pos, "best_score": best_score, "baseline": baseline, "history": history}


def ecr(covered_significant: int, total_significant: int) -> float:
    if covered_significant < 0 or covered_significant > total_significant:
        raise ValueError("covered count must lie in [0, total]")
    return covered_significant / total_significant if total_significant else 0.0


def wpr_weights(channels, mask=None) -> np.ndarray:
    """Residual weight grid summed over frame pairs; ``mask`` False cells get 0."""
    w = residual_sums(channels).sum(axis=0)
    if mask is not None:
        w = np.where(np.asarray(mask, dtype=bool), w, 0.0)
    return w


def wpr_placement(channels, n: int, r: float, mask=None, threshold: float | None = None):
    """Waypoints from residual-weighted selection, plus event coverage ratio.

    Significant events are (frame pair, cell) residual sums at or above
    ``threshold`` (default the RoI threshold) inside the mask.
    """
    threshold = ROI_THRESHOLD if threshold is None else threshold
    sums = residual_sums(channels)
    if mask is not None:
        sums = np.where(np.asarray(mask, dtype=bool)[None], sums, 0.0)
    placement = iterative_centroid_selection(wpr_weights(channels, mask), r, n)
    sig = np.argwhere(sums >= threshold)
    total = len(sig)
    covered = 0
    if total and len(placement):
        dm = bipartite_distance_matrix(placement.positions, sig[:, 1:].astype(np.float64))
        covered = int((dm <= r).any(axis=0).sum())
    placement.info.update({"significant": total, "covered": covered, "ecr": ecr(covered, total)})
    return placement
