"""Observer/observable model: events, distances, links and coverage.

Positions are ``(x, y)`` with ``x`` the row index and ``y`` the column index
of the dataset lattice. Observers may sit at fractional coordinates; event
cells sit on integer lattice points.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

EARTH_RADIUS_KM = 6371.0090667


@dataclass(frozen=True)
class EventPoint:
    row: int
    col: int
    frame: int | None  # None for aggregate records
    count: int = 1
    weight: float | None = None

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"event count must be >= 1, got {self.count}")

    @property
    def position(self) -> tuple[float, float]:
        return float(self.row), float(self.col)


@dataclass(frozen=True)
class EventSet:
    per_frame: list[list[EventPoint]]
    aggregate: list[EventPoint]
    theta: float
    shape: tuple[int, int] | None = None

    @property
    def total_poi(self) -> int:
        return sum(e.count for e in self.aggregate)

    @property
    def positions(self) -> np.ndarray:
        """Aggregate cell positions, shape ``(n, 2)``."""
        return _positions(self.aggregate)

    @property
    def counts(self) -> np.ndarray:
        return np.array([e.count for e in self.aggregate], dtype=np.int64)

    def frame_positions(self, t: int) -> np.ndarray:
        return _positions(self.per_frame[t])

    def filter(self, min_count: int) -> "EventSet":
        """Keep only aggregate cells that recur at least ``min_count`` times."""
        keep = {(e.row, e.col) for e in self.aggregate if e.count >= min_count}
        per_frame = [[e for e in frame if (e.row, e.col) in keep] for frame in self.per_frame]
        aggregate = [e for e in self.aggregate if (e.row, e.col) in keep]
        return EventSet(per_frame, aggregate, self.theta, self.shape)

    def to_json(self) -> dict[str, Any]:
        return {
            "theta": self.theta,
            "events": [
                {"row": e.row, "col": e.col, "frame": e.frame, "count": e.count}
                for frame in self.per_frame
                for e in frame
            ],
        }


def _positions(events: Sequence[EventPoint]) -> np.ndarray:
    if not events:
        return np.zeros((0, 2))
    return np.array([(e.row, e.col) for e in events], dtype=np.float64)


@dataclass(frozen=True)
class Cluster:
    members: tuple[int, ...]
    centroid: tuple[float, float]
    density: float
    center: int | None = None  # generating point, when there is one

    def __post_init__(self):
        if not self.members:
            raise ValueError("cluster must have at least one member")


@dataclass(frozen=True)
class ObserverNode:
    id: int
    x: float
    y: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"observer radius must be > 0, got {self.radius}")

    @property
    def position(self) -> tuple[float, float]:
        return self.x, self.y


@dataclass
class PlacementSet:
    observers: list[ObserverNode]
    radius: float
    info: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        ids = [o.id for o in self.observers]
        if len(set(ids)) != len(ids):
            raise ValueError("observer ids must be unique")

    @classmethod
    def from_positions(cls, positions: Iterable, radius: float, info: dict | None = None) -> "PlacementSet":
        observers = [
            ObserverNode(i, float(p[0]), float(p[1]), radius) for i, p in enumerate(positions)
        ]
        return cls(observers, radius, dict(info or {}))

    @property
    def positions(self) -> np.ndarray:
        if not self.observers:
            return np.zeros((0, 2))
        return np.array([o.position for o in self.observers], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.observers)

    def to_json(self) -> dict[str, Any]:
        return {
            "radius": self.radius,
            "observers": [{"id": o.id, "x": o.x, "y": o.y, "r": o.radius} for o in self.observers],
        }


# ---------------------------------------------------------------------------
# events


def get_events(series, theta: float = 0.9) -> EventSet:
    """Extract cells with intensity >= ``theta`` per frame and in aggregate.

    ``series`` is a ``HeatmapSeries`` or a ``(T, L, W)`` array.
    """
    frames = np.asarray(getattr(series, "frames", series), dtype=np.float64)
    if frames.ndim != 3 or frames.shape[0] == 0 or frames.size == 0:
        raise ValueError("get_events needs a non-empty (T, L, W) series")
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    hot = frames >= theta
    per_frame = []
    for t in range(frames.shape[0]):
        rows, cols = np.nonzero(hot[t])
        per_frame.append([EventPoint(int(r), int(c), t) for r, c in zip(rows, cols)])
    counts = hot.sum(axis=0)
    rows, cols = np.nonzero(counts)
    aggregate = [EventPoint(int(r), int(c), None, int(counts[r, c])) for r, c in zip(rows, cols)]
    return EventSet(per_frame, aggregate, float(theta), (frames.shape[1], frames.shape[2]))


# ---------------------------------------------------------------------------
# distances


def euclidean_distance(a, b) -> float:
    dx = float(a[0]) - float(b[0])
    dy = float(a[1]) - float(b[1])
    return math.sqrt(dx * dx + dy * dy)


def _check_geo(lat, lon):
    lat = np.asarray(lat, dtype=np.float64)
    lon = np.asarray(lon, dtype=np.float64)
    if np.any(np.abs(lat) > 90) or np.any(np.abs(lon) > 180):
        raise ValueError("latitude must be in [-90, 90] and longitude in [-180, 180]")


def _haversine(lat1, lon1, lat2, lon2):
    # half-angle form of the great-circle distance; the equivalent arccos form
    # loses several digits for nearby points
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dphi = p2 - p1
    dlon = np.radians(lon2) - np.radians(lon1)
    h = np.sin(dphi / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlon / 2) ** 2
    return 2.0 * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0))) * EARTH_RADIUS_KM


def haversine_distance(a, b) -> float:
    """Great-circle distance in km between ``(lat, lon)`` pairs in degrees."""
    _check_geo([a[0], b[0]], [a[1], b[1]])
    return float(_haversine(np.float64(a[0]), np.float64(a[1]), np.float64(b[0]), np.float64(b[1])))


def _as_points(points) -> np.ndarray:
    if isinstance(points, PlacementSet):
        return points.positions
    if isinstance(points, EventSet):
        return points.positions
    arr = np.asarray(points, dtype=np.float64)
    if arr.size == 0:
        return np.zeros((0, 2))
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) array of points, got shape {arr.shape}")
    return arr


def bipartite_distance_matrix(observers, events, metric: str = "euclidean") -> np.ndarray:
    """``DM[i, j]`` = distance from observer ``i`` to event ``j``."""
    obs = _as_points(observers)
    ev = _as_points(events)
    if metric == "euclidean":
        dx = obs[:, None, 0] - ev[None, :, 0]
        dy = obs[:, None, 1] - ev[None, :, 1]
        return np.sqrt(dx * dx + dy * dy)
    if metric == "haversine":
        _check_geo(np.concatenate([obs[:, 0], ev[:, 0]]), np.concatenate([obs[:, 1], ev[:, 1]]))
        return _haversine(obs[:, None, 0], obs[:, None, 1], ev[None, :, 0], ev[None, :, 1])
    raise ValueError(f"unknown metric {metric!r}")


def unipartite_distance_matrix(points, metric: str = "euclidean") -> np.ndarray:
    return bipartite_distance_matrix(points, points, metric)


# ---------------------------------------------------------------------------
# links and classification


def myopic_filter(observers, events, r: float) -> list[tuple[int, int]]:
    """All ``(observer index, event index)`` pairs with distance <= r.

    A k-d tree proposes candidates with a slightly inflated radius; every
    candidate is then re-checked with the exact distance formula, so the
    result matches a brute-force scan.
    """
    if r < 0:
        raise ValueError(f"radius must be >= 0, got {r}")
    obs = _as_points(observers)
    ev = _as_points(events)
    if len(obs) == 0 or len(ev) == 0:
        return []
    if math.isinf(r):
        return [(i, j) for i in range(len(obs)) for j in range(len(ev))]
    tree = cKDTree(ev)
    pairs = []
    for i, candidates in enumerate(tree.query_ball_point(obs, r * (1 + 1e-9) + 1e-12)):
        if not candidates:
            continue
        cand = np.array(sorted(candidates))
        dx = obs[i, 0] - ev[cand, 0]
        dy = obs[i, 1] - ev[cand, 1]
        ok = cand[np.sqrt(dx * dx + dy * dy) <= r]
        pairs.extend((i, int(j)) for j in ok)
    return pairs


@dataclass(frozen=True)
class LinkWeighting:
    """Multiplicative link weight ``ws/(1+d) * wt*exp(-decay*age) * wp*prob``."""

    spatial: float = 1.0
    temporal: float = 1.0
    probability: float = 1.0
    decay: float = 0.0

    def __call__(self, d, age=0.0, prob=1.0):
        return (
            self.spatial / (1.0 + d)
            * self.temporal * np.exp(-self.decay * np.asarray(age, dtype=np.float64))
            * self.probability * prob
        )


@dataclass(frozen=True)
class Link:
    observer: int
    event: int
    distance: float
    weight: float = 1.0


def generate_links(
    dm: np.ndarray,
    r: float,
    weighting: LinkWeighting | None = None,
    ages: Sequence[float] | None = None,
    probs: Sequence[float] | None = None,
) -> list[Link]:
    """Links for every (observer, event) pair within ``r``.

    Unweighted links carry weight 1. ``ages`` and ``probs`` are per-event and
    only used when ``weighting`` is given.
    """
    if r < 0:
        raise ValueError(f"radius must be >= 0, got {r}")
    dm = np.asarray(dm, dtype=np.float64)
    links = []
    for i, j in zip(*np.nonzero(dm <= r)):
        d = float(dm[i, j])
        w = 1.0
        if weighting is not None:
            age = 0.0 if ages is None else ages[j]
            prob = 1.0 if probs is None else probs[j]
            w = float(weighting(d, age, prob))
        links.append(Link(int(i), int(j), d, w))
    return links


def observer_centrality(dm: np.ndarray, r: float, links: Sequence[Link] | None = None) -> np.ndarray:
    """Events within ``r`` of each observer, or summed link weights if ``links`` given."""
    dm = np.asarray(dm, dtype=np.float64)
    if links is None:
        return (dm <= r).sum(axis=1)
    out = np.zeros(dm.shape[0])
    for link in links:
        out[link.observer] += link.weight
    return out


def classify_events(dm: np.ndarray, r: float) -> tuple[list[int], list[int]]:
    """Split event indices into (observed, unobserved)."""
    dm = np.asarray(dm, dtype=np.float64)
    n_events = dm.shape[1] if dm.ndim == 2 else 0
    if dm.shape[0] == 0:
        return [], list(range(n_events))
    seen = (dm <= r).any(axis=0)
    return [int(j) for j in np.nonzero(seen)[0]], [int(j) for j in np.nonzero(~seen)[0]]


def assign_unique(dm: np.ndarray, r: float) -> np.ndarray:
    """Nearest in-range observer per event (lowest id on ties), -1 if none."""
    dm = np.asarray(dm, dtype=np.float64)
    if dm.shape[0] == 0:
        return np.full(dm.shape[1], -1, dtype=np.int64)
    masked = np.where(dm <= r, dm, np.inf)
    owner = np.argmin(masked, axis=0)
    owner[~np.isfinite(masked.min(axis=0))] = -1
    return owner


def coverage_summary(placements, events: EventSet, r: float | None = None, unique: bool = False) -> dict[str, Any]:
    """Coverage of the aggregate events, counting recurrence multiplicity."""
    if r is None:
        r = placements.radius
    positions = events.positions
    counts = events.counts
    total = int(counts.sum())
    dm = bipartite_distance_matrix(placements, positions)
    within = dm <= r
    observed = within.any(axis=0) if len(dm) else np.zeros(len(counts), dtype=bool)
    total_observed = int(counts[observed].sum())
    if unique:
        owner = assign_unique(dm, r)
        per_observer = [int(counts[owner == i].sum()) for i in range(dm.shape[0])]
        degrees = [int((owner == i).sum()) for i in range(dm.shape[0])]
    else:
        per_observer = [int(counts[within[i]].sum()) for i in range(dm.shape[0])]
        degrees = [int(within[i].sum()) for i in range(dm.shape[0])]
    n_obs = dm.shape[0]
    return {
        "total_poi": total,
        "total_observed": total_observed,
        "ratio": total_observed / total if total else 0.0,
        "per_observer": per_observer,
        "average_per_observer": sum(per_observer) / n_obs if n_obs else 0.0,
        "degree_histogram": dict(sorted(Counter(degrees).items())),
    }
