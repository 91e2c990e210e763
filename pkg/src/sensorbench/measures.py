"""Spatial graph metrics over a snapshot of placed nodes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .core import euclidean_distance


@dataclass
class SpatialGraph:
    nodes: dict[int, tuple[float, float]]
    edges: list[tuple[int, int, float]] = field(default_factory=list)
    theta: float = math.inf

    def __post_init__(self):
        seen = set()
        for u, v, length in self.edges:
            if u == v:
                raise ValueError(f"self-edge on node {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)

    @classmethod
    def from_positions(cls, positions, theta: float, ids: Sequence[int] | None = None) -> "SpatialGraph":
        """Connect every pair of nodes within ``theta`` of each other."""
        positions = [tuple(map(float, p)) for p in positions]
        ids = list(range(len(positions))) if ids is None else list(ids)
        nodes = dict(zip(ids, positions))
        edges = []
        for a, b in combinations(ids, 2):
            d = euclidean_distance(nodes[a], nodes[b])
            if d <= theta:
                edges.append((a, b, d))
        return cls(nodes, edges, theta)

    @classmethod
    def from_edges(cls, nodes: dict, pairs: Iterable[tuple[int, int]], theta: float = math.inf) -> "SpatialGraph":
        """Explicit edge list; lengths are taken from node positions."""
        nodes = {k: tuple(map(float, v)) for k, v in nodes.items()}
        edges = [(u, v, euclidean_distance(nodes[u], nodes[v])) for u, v in pairs]
        return cls(nodes, edges, theta)

    def neighbors(self, node: int) -> set[int]:
        out = set()
        for u, v, _ in self.edges:
            if u == node:
                out.add(v)
            elif v == node:
                out.add(u)
        return out

    def has_edge(self, u: int, v: int) -> bool:
        return any({u, v} == {a, b} for a, b, _ in self.edges)

    def distance(self, u: int, v: int) -> float:
        return euclidean_distance(self.nodes[u], self.nodes[v])

    def feasible_edges(self, theta: float | None = None) -> int:
        theta = self.theta if theta is None else theta
        return sum(1 for a, b in combinations(self.nodes, 2) if self.distance(a, b) <= theta)


def myopic_degree(node: int, graph: SpatialGraph, theta: float | None = None) -> int:
    """Number of other nodes within ``theta`` (inclusive) of ``node``."""
    theta = graph.theta if theta is None else theta
    return sum(1 for other in graph.nodes if other != node and graph.distance(node, other) <= theta)


def spatial_closeness(node: int, graph: SpatialGraph) -> float:
    """Inverse of the summed distance to all other nodes; +inf if that sum is 0."""
    if len(graph.nodes) < 2:
        raise ValueError("closeness needs at least two nodes")
    total = sum(graph.distance(node, other) for other in graph.nodes if other != node)
    return math.inf if total == 0 else 1.0 / total


def spatial_edge_density(graph: SpatialGraph, feasible_edges: int | None = None) -> float:
    if feasible_edges is None:
        feasible_edges = graph.feasible_edges()
    if feasible_edges < len(graph.edges):
        raise ValueError(f"feasible edges ({feasible_edges}) fewer than actual edges ({len(graph.edges)})")
    return len(graph.edges) / feasible_edges if feasible_edges else 0.0


def edge_length_proportion(edge: tuple[int, int], graph: SpatialGraph) -> float:
    u, v = edge
    total = sum(length for _, _, length in graph.edges)
    for a, b, length in graph.edges:
        if {a, b} == {u, v}:
            return length / total if total else 0.0
    raise KeyError(f"edge {edge} not in graph")


def spatial_clustering_coefficient(node: int, graph: SpatialGraph, threshold_distance: float) -> float:
    """Closed share of the spatially close neighbour pairs of ``node``.

    A neighbour pair (u, w) is close when all three pairwise distances among
    node, u and w are below ``threshold_distance``; it is closed when u and w
    are themselves joined by an edge.
    """
    nbrs = sorted(graph.neighbors(node))
    close = closed = 0
    for u, w in combinations(nbrs, 2):
        if max(graph.distance(node, u), graph.distance(node, w), graph.distance(u, w)) < threshold_distance:
            close += 1
            if graph.has_edge(u, w):
                closed += 1
    return closed / close if close else 0.0


def lattice_assignment(positions: np.ndarray, region, resolution: int | tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-node index for every lattice cell centre (lowest index on ties).

    Returns ``(labels, centres)`` with ``labels`` shaped ``(ny, nx)``.
    """
    (x0, y0), (x1, y1) = region
    nx, ny = (resolution, resolution) if isinstance(resolution, int) else resolution
    xs = x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx
    ys = y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny
    gx, gy = np.meshgrid(xs, ys)
    centres = np.stack([gx.ravel(), gy.ravel()], axis=1)
    labels = np.empty(len(centres), dtype=np.int64)
    # chunk to keep memory bounded for large lattices
    for start in range(0, len(centres), 8192):
        c = centres[start:start + 8192]
        dx = c[:, None, 0] - positions[None, :, 0]
        dy = c[:, None, 1] - positions[None, :, 1]
        labels[start:start + 8192] = np.argmin(dx * dx + dy * dy, axis=1)
    return labels.reshape(ny, nx), centres


def spatial_resilience(positions, removed_ids: Iterable[int], region=None, resolution=200) -> dict:
    """Survivor fraction plus lattice Voronoi areas before and after removal.

    Node ids are the row indices of ``positions``. ``region`` is
    ``((xmin, ymin), (xmax, ymax))`` and defaults to the bounding box.
    """
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    n = len(positions)
    if n == 0:
        raise ValueError("resilience needs at least one node")
    removed = sorted(set(int(i) for i in removed_ids))
    if any(i < 0 or i >= n for i in removed):
        raise ValueError("removed id outside node range")
    if region is None:
        lo, hi = positions.min(axis=0), positions.max(axis=0)
        hi = np.where(hi > lo, hi, lo + 1.0)
        region = (tuple(lo), tuple(hi))
    before, _ = lattice_assignment(positions, region, resolution)
    survivors = [i for i in range(n) if i not in set(removed)]
    areas_before = {i: int((before == i).sum()) for i in range(n)}
    if survivors:
        after_local, _ = lattice_assignment(positions[survivors], region, resolution)
        after = np.asarray(survivors)[after_local]
        areas_after = {i: int((after == i).sum()) for i in survivors}
    else:
        after = np.full_like(before, -1)
        areas_after = {}
    return {
        "Rs": len(survivors) / n,
        "segment_areas_before": areas_before,
        "segment_areas_after": areas_after,
        "labels_before": before,
        "labels_after": after,
    }
