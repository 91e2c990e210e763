"""Proximal-recurrence placement and waypoint graph construction.

Static placement: a density grid of event counts is convolved with a disk
kernel; the densest disk is taken, its cells are zeroed, and the process
repeats. Mobile planning reuses the density idea to pick waypoints, which are
then linked to their nearest neighbours.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .core import (
    Cluster,
    EventSet,
    PlacementSet,
    bipartite_distance_matrix,
    classify_events,
    euclidean_distance,
    unipartite_distance_matrix,
)


def disk_offsets(r: float) -> list[tuple[int, int]]:
    """Integer offsets ``(a, b)`` with ``a*a + b*b <= r*r``."""
    if r < 0:
        raise ValueError(f"radius must be >= 0, got {r}")
    k = int(math.floor(r))
    return [(a, b) for a in range(-k, k + 1) for b in range(-k, k + 1) if a * a + b * b <= r * r]


def point_density_heatmap(events: EventSet, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Aggregate event counts binned at one-cell resolution."""
    shape = shape or events.shape
    if shape is None:
        raise ValueError("grid shape unknown; pass shape explicitly")
    grid = np.zeros(shape, dtype=np.float64)
    for e in events.aggregate:
        grid[e.row, e.col] += e.count
    return grid


def kernel_convolution(density: np.ndarray, r: float) -> np.ndarray:
    """Disk-kernel sum ``C[i, j]`` of density within ``r`` of ``(i, j)``.

    Cells outside the grid contribute nothing.
    """
    density = np.asarray(density, dtype=np.float64)
    n, m = density.shape
    out = np.zeros_like(density)
    for a, b in disk_offsets(r):
        # out[i, j] += density[i + a, j + b] wherever both are in range
        i0, i1 = max(0, -a), min(n, n - a)
        j0, j1 = max(0, -b), min(m, m - b)
        if i0 < i1 and j0 < j1:
            out[i0:i1, j0:j1] += density[i0 + a:i1 + a, j0 + b:j1 + b]
    return out


def _disk_mask(shape, center, r) -> np.ndarray:
    rows, cols = np.ogrid[: shape[0], : shape[1]]
    dr = rows - center[0]
    dc = cols - center[1]
    return dr * dr + dc * dc <= r * r


def iterative_centroid_selection(density: np.ndarray, r: float, max_circles: int) -> PlacementSet:
    """Repeatedly place a circle on the densest disk and neutralise it.

    ``info["captured"]`` holds the weight taken by each circle; the final
    density and coverage grids are kept under ``residual_density`` and
    ``coverage``. Coverage is updated by subtracting the convolution of the
    removed cells only.
    """
    if max_circles <= 0:
        raise ValueError(f"max_circles must be positive, got {max_circles}")
    density = np.array(density, dtype=np.float64)
    coverage = kernel_convolution(density, r)
    centres, captured = [], []
    for _ in range(max_circles):
        idx = int(np.argmax(coverage))  # first maximum in row-major order
        best = coverage.flat[idx]
        if best <= 0:
            break
        centre = divmod(idx, density.shape[1])
        removed = np.where(_disk_mask(density.shape, centre, r), density, 0.0)
        density -= removed
        coverage -= kernel_convolution(removed, r)
        centres.append((float(centre[0]), float(centre[1])))
        captured.append(float(best))
    info = {"captured": captured, "residual_density": density, "coverage": coverage}
    return PlacementSet.from_positions(centres, r, info)


def prep_placement(events: EventSet, n: int, r: float, shape: tuple[int, int] | None = None) -> PlacementSet:
    return iterative_centroid_selection(point_density_heatmap(events, shape), r, n)


def get_densest_clusters(points, r: float, n: int | None = None, counts: Sequence[float] | None = None) -> list[Cluster]:
    """Densest non-overlapping point-centred clusters.

    Every point seeds a cluster of the points within ``r``. Clusters are taken
    in order of density (summed counts, ties to the lower point id) and kept
    only when their centre is more than ``r`` from every kept centre.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    weights = np.ones(len(pts)) if counts is None else np.asarray(counts, dtype=np.float64)
    if len(pts) == 0:
        return []
    within = unipartite_distance_matrix(pts) <= r
    density = within.astype(np.float64) @ weights
    order = sorted(range(len(pts)), key=lambda i: (-density[i], i))
    accepted: list[Cluster] = []
    for i in order:
        if n is not None and len(accepted) >= n:
            break
        if any(euclidean_distance(pts[i], c.centroid) <= r for c in accepted):
            continue
        members = tuple(int(j) for j in np.nonzero(within[i])[0])
        accepted.append(Cluster(members, (float(pts[i, 0]), float(pts[i, 1])), float(density[i]), i))
    return accepted


def add_new_observers(placements: PlacementSet, events: EventSet, r: float, n: int) -> PlacementSet:
    """Extend a placement with up to ``n`` observers on dense unobserved clusters."""
    positions = events.positions
    counts = events.counts
    dm = bipartite_distance_matrix(placements, positions)
    _, unobserved = classify_events(dm, r)
    clusters = get_densest_clusters(positions[unobserved], r, n, counts[unobserved])
    new = [o.position for o in placements.observers] + [c.centroid for c in clusters]
    return PlacementSet.from_positions(new, placements.radius, {"added": len(clusters)})


@dataclass
class WaypointGraph:
    positions: np.ndarray  # (n, 2)
    counts: np.ndarray  # capture count per node, 0 for bridges
    edges: list[tuple[int, int, float]]
    bridge: np.ndarray  # bool per node
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def num_nodes(self) -> int:
        return len(self.positions)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for u, v, _ in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return [sorted(a) for a in adj]

    def to_json(self) -> dict[str, Any]:
        return {
            "nodes": [
                {"id": i, "x": float(p[0]), "y": float(p[1]), "count": float(c), "bridge": bool(b)}
                for i, (p, c, b) in enumerate(zip(self.positions, self.counts, self.bridge))
            ],
            "edges": [[u, v, d] for u, v, d in self.edges],
            "params": dict(self.params),
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "WaypointGraph":
        nodes = sorted(obj["nodes"], key=lambda d: d["id"])
        return cls(
            np.array([(d["x"], d["y"]) for d in nodes], dtype=np.float64).reshape(-1, 2),
            np.array([d.get("count", 0) for d in nodes], dtype=np.float64),
            [(int(u), int(v), float(d)) for u, v, d in obj["edges"]],
            np.array([d.get("bridge", False) for d in nodes], dtype=bool),
            dict(obj.get("params", {})),
        )


def build_waypoint_graph(waypoints, n_links: int = 3, move_threshold: float | None = None,
                         counts: Sequence[float] | None = None) -> WaypointGraph:
    """Link each waypoint to its ``n_links`` nearest others, then bridge long edges.

    An edge of length L above ``move_threshold`` is split into
    ``ceil(L / move_threshold)`` equal sub-edges by evenly spaced bridge nodes.
    """
    pts = np.asarray(waypoints, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    node_counts = np.zeros(n) if counts is None else np.asarray(counts, dtype=np.float64)
    params = {"n_links": n_links, "move_threshold": move_threshold}
    links = set()
    if n >= 2 and n_links > 0:
        dm = unipartite_distance_matrix(pts)
        np.fill_diagonal(dm, np.inf)
        nearest = np.argsort(dm, axis=1, kind="stable")[:, : min(n_links, n - 1)]
        for i in range(n):
            for j in nearest[i]:
                links.add((min(i, int(j)), max(i, int(j))))
    positions = [tuple(p) for p in pts]
    node_counts = list(node_counts)
    bridge = [False] * n
    edges = []
    for u, v in sorted(links):
        length = euclidean_distance(positions[u], positions[v])
        if move_threshold is None or length <= move_threshold:
            edges.append((u, v, length))
            continue
        k = math.ceil(length / move_threshold)
        chain = [u]
        for s in range(1, k):
            frac = s / k
            p = tuple(np.asarray(positions[u]) + frac * (np.asarray(positions[v]) - np.asarray(positions[u])))
            positions.append((float(p[0]), float(p[1])))
            node_counts.append(0.0)
            bridge.append(True)
            chain.append(len(positions) - 1)
        chain.append(v)
        for a, b in zip(chain, chain[1:]):
            edges.append((min(a, b), max(a, b), euclidean_distance(positions[a], positions[b])))
    edges.sort()
    return WaypointGraph(
        np.array(positions, dtype=np.float64).reshape(-1, 2),
        np.array(node_counts, dtype=np.float64),
        edges,
        np.array(bridge, dtype=bool),
        params,
    )


def prep_waypoint_graph(events: EventSet, r: float, n_waypoints: int | None = None, n_links: int = 3,
                        move_threshold: float | None = None) -> WaypointGraph:
    """Waypoints at the densest event clusters, linked into a graph."""
    clusters = get_densest_clusters(events.positions, r, n_waypoints, events.counts)
    return build_waypoint_graph(
        [c.centroid for c in clusters], n_links, move_threshold, [c.density for c in clusters]
    )
