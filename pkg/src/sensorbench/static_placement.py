"""Baseline static placers.

All placers work on the aggregate event cells, weighting each cell by how
often it was hot across the series. Each returns a ``PlacementSet`` whose
``info`` dict carries algorithm-specific diagnostics.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.spatial import cKDTree

from .core import Cluster, EventSet, PlacementSet, bipartite_distance_matrix, unipartite_distance_matrix
from .heatmap_gen import make_rng


def _as_rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else make_rng(rng)


def covered_weight(positions, points, weights, r: float) -> float:
    """Weight of points within ``r`` of at least one position, each counted once."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    weights = np.asarray(weights, dtype=np.float64)
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    if len(positions) == 0 or len(points) == 0:
        return 0.0
    hit = (bipartite_distance_matrix(positions, points) <= r).any(axis=0)
    return float(weights[hit].sum())


# ---------------------------------------------------------------------------
# frequency


def frequency_placement(events: EventSet, n: int, r: float = 3.0) -> PlacementSet:
    """Sensors on the ``n`` most frequently hot cells (row-major on ties)."""
    agg = events.aggregate  # already row-major
    order = sorted(range(len(agg)), key=lambda i: -agg[i].count)[:n]
    chosen = [agg[i].position for i in order]
    return PlacementSet.from_positions(chosen, r, {"counts": [agg[i].count for i in order]})


# ---------------------------------------------------------------------------
# k-means


def _sq_dists(points, centroids):
    dx = points[:, None, 0] - centroids[None, :, 0]
    dy = points[:, None, 1] - centroids[None, :, 1]
    return dx * dx + dy * dy


def kmeans(points, weights, k: int, rng, max_iter: int = 100):
    """Weighted Lloyd iterations with k-means++ seeding.

    Returns ``(centroids, labels, sse_history)``. An empty cluster is moved
    to the point farthest from its current centroid.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    weights = np.asarray(weights, dtype=np.float64)
    distinct = np.unique(points, axis=0)
    if k < 1 or k > len(distinct):
        raise ValueError(f"k={k} needs between 1 and {len(distinct)} distinct points")
    rng = _as_rng(rng)

    # k-means++ over distinct positions, weighted by squared distance * weight
    centroids = [points[rng.choice(len(points), p=weights / weights.sum())]]
    for _ in range(1, k):
        d2 = _sq_dists(points, np.array(centroids)).min(axis=1) * weights
        if d2.sum() == 0:
            remaining = [p for p in distinct if not any((p == c).all() for c in centroids)]
            centroids.append(remaining[0])
            continue
        centroids.append(points[rng.choice(len(points), p=d2 / d2.sum())])
    centroids = np.array(centroids, dtype=np.float64)

    labels = None
    history = []
    for _ in range(max_iter):
        d2 = _sq_dists(points, centroids)
        new_labels = np.argmin(d2, axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            mask = labels == c
            if mask.any():
                centroids[c] = np.average(points[mask], axis=0, weights=weights[mask])
        for c in range(k):
            if not (labels == c).any():
                own = _sq_dists(points, centroids)[np.arange(len(points)), labels]
                centroids[c] = points[int(np.argmax(own))]
        own = _sq_dists(points, centroids)[np.arange(len(points)), labels]
        history.append(float((own * weights).sum()))
    return centroids, labels, history


def kmeans_placement(events: EventSet, k: int, rng=0, max_iter: int = 100, r: float = 3.0) -> PlacementSet:
    centroids, labels, history = kmeans(events.positions, events.counts, k, rng, max_iter)
    return PlacementSet.from_positions(centroids, r, {"sse_history": history, "labels": labels.tolist()})


def improved_kmeans_placement(events: EventSet, k: int, min_count: int = 2, rng=0,
                              max_iter: int = 100, r: float = 3.0) -> PlacementSet:
    """k-means over recurring cells only (count >= ``min_count``)."""
    return kmeans_placement(events.filter(min_count), k, rng, max_iter, r)


# ---------------------------------------------------------------------------
# DBSCAN


def _region_queries(points: np.ndarray, eps: float) -> list[np.ndarray]:
    tree = cKDTree(points)
    out = []
    for i, cand in enumerate(tree.query_ball_point(points, eps * (1 + 1e-9) + 1e-12)):
        cand = np.array(sorted(cand), dtype=np.int64)
        dx = points[i, 0] - points[cand, 0]
        dy = points[i, 1] - points[cand, 1]
        out.append(cand[np.sqrt(dx * dx + dy * dy) <= eps])
    return out


def dbscan(points, eps: float, min_pts: int, weights=None) -> dict:
    """Density-based clustering with neighbourhoods ``d <= eps``.

    Points are visited in lexicographic coordinate order so that the
    partition does not depend on input order. With ``weights`` the core test
    compares the summed weight of the neighbourhood against ``min_pts``.
    Clusters are numbered by their smallest member index.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    if n == 0:
        return {"clusters": [], "noise": [], "labels": np.zeros(0, dtype=np.int64)}
    neighbors = _region_queries(pts, eps)
    is_core = np.array([w[nb].sum() >= min_pts for nb in neighbors])
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    labels = np.full(n, -2, dtype=np.int64)  # -2 unvisited, -1 noise
    cluster_id = 0
    for p in order:
        if labels[p] != -2:
            continue
        if not is_core[p]:
            labels[p] = -1
            continue
        # expand cluster from core point p
        labels[p] = cluster_id
        queue = list(neighbors[p])
        while queue:
            q = queue.pop(0)
            if labels[q] == -1:
                labels[q] = cluster_id  # border point
            if labels[q] != -2:
                continue
            labels[q] = cluster_id
            if is_core[q]:
                queue.extend(neighbors[q])
        cluster_id += 1
    # canonical relabel by min member index
    groups = {}
    for i, lab in enumerate(labels):
        if lab >= 0:
            groups.setdefault(lab, []).append(i)
    ordered = sorted(groups.values(), key=min)
    canonical = np.full(n, -1, dtype=np.int64)
    clusters = []
    for cid, members in enumerate(ordered):
        canonical[members] = cid
        centroid = pts[members].mean(axis=0)
        clusters.append(Cluster(tuple(members), (float(centroid[0]), float(centroid[1])), float(w[members].sum())))
    noise = [int(i) for i in np.nonzero(canonical == -1)[0]]
    return {"clusters": clusters, "noise": noise, "labels": canonical, "core": is_core}


def dbscan_placement(events: EventSet, eps: float | None = None, min_pts: int = 3, n: int = 10,
                     r: float = 3.0, weighted: bool = True) -> PlacementSet:
    """Sensors at member-mean centroids of the ``n`` densest DBSCAN clusters."""
    eps = r if eps is None else eps
    result = dbscan(events.positions, eps, min_pts, events.counts if weighted else None)
    clusters = sorted(result["clusters"], key=lambda c: (-c.density, min(c.members)))[:n]
    return PlacementSet.from_positions(
        [c.centroid for c in clusters], r,
        {"clusters": len(result["clusters"]), "noise": len(result["noise"]),
         "densities": [c.density for c in clusters]},
    )


def improved_dbscan_placement(events: EventSet, eps: float | None = None, min_pts: int = 3, n: int = 10,
                              min_count: int = 2, r: float = 3.0, weighted: bool = True) -> PlacementSet:
    return dbscan_placement(events.filter(min_count), eps, min_pts, n, r, weighted)


# ---------------------------------------------------------------------------
# greedy


def greedy_placement(points, weights, r: float, n_max: int, candidates=None) -> PlacementSet:
    """Greedy maximum coverage with disks of radius ``r``.

    Candidates default to the still-uncovered points in lexicographic order;
    pass ``candidates`` to use a fixed set instead. Ties go to the earliest
    candidate; the loop stops early when no candidate adds weight.
    ``info["audit"]`` records, per step, the chosen gain and the best gain of
    any candidate, which must agree.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    remaining = np.asarray(weights, dtype=np.float64).copy()
    fixed = candidates is not None
    if fixed:
        cand = np.asarray(candidates, dtype=np.float64).reshape(-1, 2)
    else:
        cand = pts[np.lexsort((pts[:, 1], pts[:, 0]))] if len(pts) else pts
    cover = bipartite_distance_matrix(cand, pts) <= r
    alive = np.ones(len(cand), dtype=bool)
    chosen, covered, audit = [], [], []
    for _ in range(n_max):
        if not alive.any():
            break
        gains = cover @ remaining
        gains[~alive] = -np.inf
        best = int(np.argmax(gains))
        if not gains[best] > 0:
            break
        audit.append({"gain": float(gains[best]), "max_alternative": float(gains[alive].max())})
        chosen.append(tuple(cand[best]))
        covered.append(float(gains[best]))
        hit = cover[best]
        remaining[hit] = 0.0
        if not fixed:
            # candidate cells that are now covered drop out
            cand_covered = (bipartite_distance_matrix(cand, pts[hit]) == 0).any(axis=1) if hit.any() else hit[:0]
            alive &= ~cand_covered
    return PlacementSet.from_positions(chosen, r, {"covered": covered, "audit": audit, "value": float(sum(covered))})


def greedy_event_placement(events: EventSet, n: int, r: float = 3.0) -> PlacementSet:
    return greedy_placement(events.positions, events.counts, r, n)


# ---------------------------------------------------------------------------
# genetic algorithm


@dataclass(frozen=True)
class GaParams:
    population: int = 40
    generations: int = 60
    crossover_rate: float = 0.8
    mutation_rate: float = 0.1
    diversity_threshold: float = 1.0
    seed: int = 0
    tournament: int = 3
    overlap_penalty: float | None = None  # default: total event weight

    def __post_init__(self):
        if self.population < 2:
            raise ValueError(f"population must be >= 2, got {self.population}")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")


def genetic_placement(events: EventSet, r: float, n: int, params: GaParams = GaParams(),
                      shape: tuple[int, int] | None = None) -> PlacementSet:
    """Evolve ``n`` integer sensor cells maximising penalised union coverage.

    Fitness is the weight of events seen by at least one sensor minus
    ``overlap_penalty`` for every sensor pair closer than ``2 r``.
    """
    shape = shape or events.shape
    if shape is None:
        raise ValueError("grid shape unknown; pass shape explicitly")
    rng = make_rng(params.seed)
    pts, w = events.positions, events.counts.astype(np.float64)
    penalty = float(w.sum()) if params.overlap_penalty is None else params.overlap_penalty
    rows, cols = shape
    cells = np.array([(i, j) for i in range(rows) for j in range(cols)], dtype=np.float64)
    cell_cover = bipartite_distance_matrix(cells, pts) <= r if len(pts) else np.zeros((len(cells), 0), bool)

    def fitness(genome: np.ndarray) -> float:
        idx = genome[:, 0] * cols + genome[:, 1]
        value = float(w[cell_cover[idx].any(axis=0)].sum()) if len(pts) else 0.0
        if len(genome) > 1:
            d = unipartite_distance_matrix(genome.astype(np.float64))
            close = int((d[np.triu_indices(len(genome), 1)] < 2 * r).sum())
            value -= penalty * close
        return value

    def random_genome() -> np.ndarray:
        return np.stack([rng.integers(0, rows, n), rng.integers(0, cols, n)], axis=1)

    step = max(1, int(np.ceil(r)))

    def perturb(genes: np.ndarray) -> np.ndarray:
        # half local jitter within the view radius, half uniform jumps
        k = len(genes)
        local = rng.random(k) < 0.5
        jitter = genes + rng.integers(-step, step + 1, (k, 2))
        jitter[:, 0] = np.clip(jitter[:, 0], 0, rows - 1)
        jitter[:, 1] = np.clip(jitter[:, 1], 0, cols - 1)
        jump = np.stack([rng.integers(0, rows, k), rng.integers(0, cols, k)], axis=1)
        return np.where(local[:, None], jitter, jump)

    def diversity(pop) -> float:
        g = np.stack(pop).astype(np.float64)  # (P, n, 2)
        d = np.sqrt(((g[:, None] - g[None, :]) ** 2).sum(axis=-1)).mean(axis=-1)
        iu = np.triu_indices(len(pop), 1)
        return float(d[iu].mean())

    pop = [random_genome() for _ in range(params.population)]
    fit = [fitness(g) for g in pop]
    best_i = int(np.argmax(fit))
    best, best_fit = pop[best_i].copy(), fit[best_i]
    history = [best_fit]
    initial_fitness = list(fit)
    refills = 0

    def select():
        entrants = rng.integers(0, len(pop), params.tournament)
        return pop[max(entrants, key=lambda i: fit[i])]

    for _ in range(params.generations):
        children = [best.copy()]  # elitism
        while len(children) < params.population:
            a, b = select().copy(), select().copy()
            if n > 1 and rng.random() < params.crossover_rate:
                cut = int(rng.integers(1, n))
                a, b = np.concatenate([a[:cut], b[cut:]]), np.concatenate([b[:cut], a[cut:]])
            for child in (a, b):
                mutate = rng.random(n) < params.mutation_rate
                if mutate.any():
                    child[mutate] = perturb(child[mutate])
                children.append(child)
        pop = children[: params.population]
        fit = [fitness(g) for g in pop]
        if diversity(pop) < params.diversity_threshold:
            worst = np.argsort(fit, kind="stable")[: max(1, params.population // 10)]
            for i in worst:
                if i == 0:
                    continue  # keep the elite
                pop[i] = random_genome()
                fit[i] = fitness(pop[i])
            refills += 1
        gen_best = int(np.argmax(fit))
        if fit[gen_best] > best_fit:
            best, best_fit = pop[gen_best].copy(), fit[gen_best]
        history.append(best_fit)

    order = np.lexsort((best[:, 1], best[:, 0]))
    return PlacementSet.from_positions(
        best[order].astype(np.float64), r,
        {"fitness": best_fit, "history": history, "initial_fitness": initial_fitness,
         "refills": refills, "value": covered_weight(best, pts, w, r)},
    )


# ---------------------------------------------------------------------------
# exact branch and bound


def candidate_lattice(events: EventSet, lattice: str = "integer") -> np.ndarray:
    pts = events.positions
    if lattice == "integer":
        return pts
    if lattice == "half-cell":
        steps = np.array([(a, b) for a in (-0.5, 0.0, 0.5) for b in (-0.5, 0.0, 0.5)])
        cand = (pts[:, None, :] + steps[None, :, :]).reshape(-1, 2)
        return np.unique(cand, axis=0)
    raise ValueError(f"unknown lattice {lattice!r}")


def branch_and_bound_max_coverage(cover: np.ndarray, weights, n: int, conflict: np.ndarray | None = None,
                                  node_budget: int = 200_000, incumbent: list[int] | None = None) -> dict:
    """Choose at most ``n`` rows of ``cover`` maximising covered weight.

    ``conflict[i, j]`` forbids choosing rows i and j together. The bound at a
    node is its value plus the sum of the best remaining marginal gains, which
    is valid because coverage is submodular. Depth-first, include-branch
    first on the candidate with the largest marginal gain.
    """
    if node_budget <= 0:
        raise ValueError("node_budget must be positive")
    cover = np.asarray(cover, dtype=bool)
    w = np.asarray(weights, dtype=np.float64)
    m = cover.shape[0]
    coverf = cover.astype(np.float64)

    def value_of(sel):
        return float(w[cover[list(sel)].any(axis=0)].sum()) if sel else 0.0

    best_sel = list(incumbent or [])
    best_val = value_of(best_sel)
    nodes = 0
    complete = True
    stack = [((), np.zeros(cover.shape[1], dtype=bool), np.ones(m, dtype=bool))]
    while stack:
        chosen, covered, allowed = stack.pop()
        nodes += 1
        if nodes > node_budget:
            complete = False
            break
        current = float(w[covered].sum())
        if current > best_val:
            best_val, best_sel = current, list(chosen)
        slots = n - len(chosen)
        if slots == 0 or not allowed.any():
            continue
        gains = coverf @ np.where(covered, 0.0, w)
        gains[~allowed] = 0.0
        allowed = allowed & (gains > 0)
        if not allowed.any():
            continue
        top = np.sort(gains[allowed])[::-1][:slots]
        if current + top.sum() <= best_val:
            continue
        pick = int(np.argmax(gains))
        excl = allowed.copy()
        excl[pick] = False
        incl = excl.copy()
        if conflict is not None:
            incl &= ~conflict[pick]
        stack.append((chosen, covered, excl))
        stack.append((chosen + (pick,), covered | cover[pick], incl))
    return {"selection": sorted(best_sel), "value": best_val, "optimal": complete, "nodes": min(nodes, node_budget)}


def exact_coverage_placement(events: EventSet, r: float, n: int, lattice: str = "integer",
                             node_budget: int = 200_000, non_overlap: bool = True) -> PlacementSet:
    """Provably optimal coverage placement on a candidate lattice.

    With ``non_overlap`` two chosen centres must be more than ``2 r`` apart.
    ``info["optimal"]`` is False when the node budget ran out first.
    """
    if node_budget <= 0:
        raise ValueError("node_budget must be positive")
    pts, w = events.positions, events.counts.astype(np.float64)
    cand = candidate_lattice(events, lattice)
    if len(cand) == 0:
        return PlacementSet.from_positions([], r, {"value": 0.0, "optimal": True, "nodes": 0})
    cover = bipartite_distance_matrix(cand, pts) <= r
    conflict = unipartite_distance_matrix(cand) <= 2 * r if non_overlap else None
    # warm start from a greedy pick sequence on the same candidates
    incumbent = _greedy_rows(cover, w, n, conflict)
    res = branch_and_bound_max_coverage(cover, w, n, conflict, node_budget, incumbent)
    chosen = cand[res["selection"]]
    return PlacementSet.from_positions(
        chosen, r, {"value": res["value"], "optimal": res["optimal"], "nodes": res["nodes"],
                    "candidates": len(cand)},
    )


def _greedy_rows(cover, w, n, conflict) -> list[int]:
    remaining = w.copy()
    allowed = np.ones(cover.shape[0], dtype=bool)
    chosen = []
    for _ in range(n):
        gains = cover.astype(np.float64) @ remaining
        gains[~allowed] = -np.inf
        best = int(np.argmax(gains))
        if not gains[best] > 0:
            break
        chosen.append(best)
        remaining[cover[best]] = 0.0
        allowed[best] = False
        if conflict is not None:
            allowed &= ~conflict[best]
    return chosen


def exhaustive_max_coverage(cover: np.ndarray, weights, n: int, conflict: np.ndarray | None = None) -> float:
    """Best covered weight over every subset of at most ``n`` rows (reference)."""
    cover = np.asarray(cover, dtype=bool)
    w = np.asarray(weights, dtype=np.float64)
    best = 0.0
    for k in range(1, min(n, cover.shape[0]) + 1):
        for sel in combinations(range(cover.shape[0]), k):
            if conflict is not None and any(conflict[a, b] for a, b in combinations(sel, 2)):
                continue
            best = max(best, float(w[cover[list(sel)].any(axis=0)].sum()))
    return best
