"""Mobile sensor planning on a waypoint graph.

The pipeline is: per-frame node weights from the heatmaps, hop-limited
pathlets between waypoints, temporal path extension over all frames, then
selection of non-overlapping paths. A greedy look-ahead planner serves as
the baseline.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .core import bipartite_distance_matrix
from .prep import WaypointGraph


@dataclass
class ActivationTable:
    W: np.ndarray  # (T, nodes)
    active: list[list[int]]
    top_k: list[list[int]]


@dataclass(frozen=True)
class Pathlet:
    dest: int
    hops: int
    nodes: tuple[int, ...]  # source ... dest

    @property
    def intermediate(self) -> tuple[int, ...]:
        return self.nodes[1:-1]


@dataclass
class SensorPlan:
    id: int
    path: list[int]
    rewards: list[float]

    @property
    def total(self) -> float:
        return float(sum(self.rewards))


@dataclass
class Plan:
    sensors: list[SensorPlan]
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(sum(s.total for s in self.sensors))

    def to_json(self) -> dict[str, Any]:
        return {
            "sensors": [{"id": s.id, "path": list(s.path), "rewards": list(s.rewards)} for s in self.sensors],
            "total": self.total,
            "params": dict(self.params),
        }


def _frames(series) -> np.ndarray:
    frames = np.asarray(getattr(series, "frames", series), dtype=np.float64)
    if frames.ndim != 3:
        raise ValueError("series must be (T, L, W)")
    return frames


def ted_activate(series, graph: WaypointGraph, theta: float = 0.9, r: float = 2.0, k: int = 5,
                 confidence=None) -> ActivationTable:
    """Per-frame count of hot cells within ``r`` of each waypoint.

    Bridge nodes never activate. ``confidence`` optionally scales the weights
    (scalar or ``(T, nodes)``); weights stay at the raw counts by default.
    """
    frames = _frames(series)
    T, L, Wd = frames.shape
    cells = np.array([(i, j) for i in range(L) for j in range(Wd)], dtype=np.float64)
    within = bipartite_distance_matrix(graph.positions, cells) <= r  # (nodes, cells)
    hot = (frames >= theta).reshape(T, -1).astype(np.float64)
    W = hot @ within.T.astype(np.float64)
    W[:, graph.bridge] = 0.0
    if confidence is not None:
        W = W * np.asarray(confidence, dtype=np.float64)
    active = [[int(n) for n in np.nonzero(W[t] > 0)[0]] for t in range(T)]
    top = []
    for t in range(T):
        order = sorted(active[t], key=lambda n: (-W[t, n], n))
        top.append(order[:k])
    return ActivationTable(W, active, top)


def _shortest_hops(adj: list[list[int]], source: int, h_max: int) -> dict[int, tuple[int, ...]]:
    # unit-weight Dijkstra; predecessor ties go to the lowest-id neighbour
    dist = {source: 0}
    heap = [(0, source)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if d == h_max:
            continue
        for v in adj[u]:
            if v not in dist or d + 1 < dist[v]:
                dist[v] = d + 1
                heapq.heappush(heap, (d + 1, v))
    paths = {source: (source,)}
    for v in sorted(dist, key=lambda x: (dist[x], x)):
        if v == source:
            continue
        pred = min(u for u in adj[v] if dist.get(u) == dist[v] - 1)
        paths[v] = paths[pred] + (v,)
    return paths


def generate_pathlets(graph: WaypointGraph, h_max: int) -> list[list[Pathlet]]:
    """For every node, the shortest pathlets to all nodes within ``h_max`` hops.

    Each list starts with the zero-hop stay pathlet and is sorted by
    (hops, destination).
    """
    if h_max < 0:
        raise ValueError("h_max must be >= 0")
    adj = graph.adjacency() if isinstance(graph, WaypointGraph) else [sorted(a) for a in graph]
    table = []
    for v in range(len(adj)):
        paths = _shortest_hops(adj, v, h_max)
        table.append(sorted((Pathlet(d, len(p) - 1, p) for d, p in paths.items()), key=lambda p: (p.hops, p.dest)))
    return table


def extend_temporal_paths(pathlets: list[list[Pathlet]], W: np.ndarray, T: int | None = None,
                          mode: str = "endpoint", beam: int | None = 64,
                          blocked=None) -> list[tuple[float, tuple[int, ...]]]:
    """Score temporal node sequences over all frames.

    A path starts at every node, scored ``W[0][start]``. Each frame step
    extends it along every pathlet of its endpoint, adding ``W[t][dest]``
    (endpoint mode) or the weights of the intermediate and destination nodes
    (segment mode). At most ``beam`` paths are kept per (frame, endpoint);
    ``beam=None`` keeps everything. ``blocked`` holds node ids, or
    ``(node, frame)`` pairs, that no path may visit.

    Returns ``(score, path)`` pairs sorted by descending score, then path.
    """
    W = np.asarray(W, dtype=np.float64)
    T = W.shape[0] if T is None else T
    if W.ndim != 2 or W.shape[0] != T or W.shape[1] != len(pathlets):
        raise ValueError(f"W shape {W.shape} does not match T={T} and {len(pathlets)} nodes")
    if mode not in ("endpoint", "segment"):
        raise ValueError(f"unknown mode {mode!r}")
    if T == 0:
        return []
    blocked = set() if blocked is None else set(blocked)

    def ok(v, t):
        return v not in blocked and (v, t) not in blocked

    key = lambda sp: (-sp[0], sp[1])
    frontier: dict[int, list[tuple[float, tuple[int, ...]]]] = {
        v: [(float(W[0, v]), (v,))] for v in range(len(pathlets)) if ok(v, 0)
    }
    for t in range(1, T):
        nxt: dict[int, list[tuple[float, tuple[int, ...]]]] = {}
        for v, paths in frontier.items():
            for pl in pathlets[v]:
                if not ok(pl.dest, t):
                    continue
                gain = float(W[t, pl.dest])
                if mode == "segment":
                    gain += float(sum(W[t, u] for u in set(pl.intermediate) - {pl.dest}))
                for score, path in paths:
                    nxt.setdefault(pl.dest, []).append((score + gain, path + (pl.dest,)))
        frontier = {}
        for v, paths in nxt.items():
            paths.sort(key=key)
            frontier[v] = paths if beam is None else paths[:beam]
    out = [sp for paths in frontier.values() for sp in paths]
    out.sort(key=key)
    return out


def select_paths(scored: Sequence[tuple[float, tuple[int, ...]]], num_sensors: int,
                 node_time: bool = False) -> list[tuple[float, tuple[int, ...]]]:
    """Take paths from best to worst, skipping any that reuse a used node.

    By default a node used at any time blocks every later path containing
    it; with ``node_time`` only the same (node, frame) pair is blocked.
    """
    used: set = set()
    chosen = []
    for score, path in sorted(scored, key=lambda sp: (-sp[0], tuple(sp[1]))):
        if len(chosen) >= num_sensors:
            break
        keys = {(v, t) for t, v in enumerate(path)} if node_time else set(path)
        if keys & used:
            continue
        used |= keys
        chosen.append((score, tuple(path)))
    return chosen


def _rewards_along(path, pathlets, W, mode):
    rewards = [float(W[0, path[0]])]
    for t in range(1, len(path)):
        pl = next(p for p in pathlets[path[t - 1]] if p.dest == path[t])
        r = float(W[t, pl.dest])
        if mode == "segment":
            r += float(sum(W[t, u] for u in set(pl.intermediate) - {pl.dest}))
        rewards.append(r)
    return rewards


def waitr_plan(series, graph: WaypointGraph, theta: float = 0.9, r: float = 2.0, h_max: int = 2,
               num_sensors: int = 3, mode: str = "endpoint", beam: int | None = 64,
               node_time: bool = False, table: ActivationTable | None = None) -> Plan:
    """Temporal path planning with non-overlapping path selection.

    Paths are accepted best-first, skipping any that reuse a node already
    taken. Beam pruning can drop every candidate that avoids the taken
    nodes, so after each acceptance the extension is rerun with those nodes
    blocked; the accepted sequence is the one a full scan of all unpruned
    paths would produce.
    """
    table = table or ted_activate(series, graph, theta, r)
    W = table.W
    pathlets = generate_pathlets(graph, h_max)
    chosen: list[tuple[float, tuple[int, ...]]] = []
    blocked: set = set()
    for _ in range(num_sensors):
        scored = extend_temporal_paths(pathlets, W, W.shape[0], mode, beam, blocked)
        pick = select_paths(scored, 1, node_time)
        if not pick:
            break
        chosen.append(pick[0])
        path = pick[0][1]
        blocked |= {(v, t) for t, v in enumerate(path)} if node_time else set(path)
    sensors = [SensorPlan(i, list(path), _rewards_along(path, pathlets, W, mode)) for i, (_, path) in enumerate(chosen)]
    params = {"algo": "waitr", "theta": theta, "r": r, "h_max": h_max, "num_sensors": num_sensors,
              "mode": mode, "beam": beam, "node_time": node_time}
    return Plan(sensors, params)


def greedy_mobile_plan(series, graph: WaypointGraph, theta: float = 0.9, r: float = 2.0, h_max: int = 2,
                       num_sensors: int = 3, table: ActivationTable | None = None) -> Plan:
    """Per-frame greedy movement with a look-ahead when nothing is in reach.

    Sensors start on the top-ranked frame-0 nodes. Each frame, in id order,
    a sensor moves to the unclaimed reachable node with the largest weight
    (ties: fewer hops, then lower id). If every reachable weight is zero it
    heads for the best node of the next frame, moving up to ``h_max`` hops
    along the shortest path. ``params["audit"]`` records every choice.
    """
    table = table or ted_activate(series, graph, theta, r)
    W = table.W
    T, n_nodes = W.shape
    pathlets = generate_pathlets(graph, h_max)
    full = generate_pathlets(graph, n_nodes)  # unrestricted shortest paths for look-ahead

    ranked = sorted(range(n_nodes), key=lambda n: (-W[0, n], n))
    starts = ranked[:num_sensors]
    paths = [[s] for s in starts]
    rewards = [[float(W[0, s])] for s in starts]
    audit = []
    for t in range(1, T):
        claimed: set[int] = set()
        for sid, path in enumerate(paths):
            here = path[-1]
            options = [p for p in pathlets[here] if p.dest not in claimed]
            best = max(options, key=lambda p: (W[t, p.dest], -p.hops, -p.dest), default=None)
            if best is not None and W[t, best.dest] > 0:
                nxt = best.dest
                reason = "reward"
            else:
                nxt = here
                reason = "stay"
                if t + 1 < T:
                    reach = {p.dest: p for p in full[here]}
                    targets = [v for v in reach if W[t + 1, v] > 0]
                    if targets:
                        goal = max(targets, key=lambda v: (W[t + 1, v], -reach[v].hops, -v))
                        seq = reach[goal].nodes
                        step = seq[min(h_max, len(seq) - 1)]
                        if step not in claimed:
                            nxt, reason = step, "look-ahead"
                if nxt in claimed:
                    free = [p for p in pathlets[here] if p.dest not in claimed]
                    nxt = free[0].dest if free else here
            claimed.add(nxt)
            path.append(nxt)
            rewards[sid].append(float(W[t, nxt]))
            audit.append({"t": t, "sensor": sid, "node": nxt, "reason": reason,
                          "best_reachable": float(W[t, best.dest]) if best is not None else 0.0})
    sensors = [SensorPlan(i, p, rw) for i, (p, rw) in enumerate(zip(paths, rewards))]
    params = {"algo": "greedy", "theta": theta, "r": r, "h_max": h_max, "num_sensors": num_sensors, "audit": audit}
    return Plan(sensors, params)
