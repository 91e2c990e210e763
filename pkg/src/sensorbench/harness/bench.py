"""Benchmark matrix runner: datasets x algorithms -> JSON and CSV reports."""
from __future__ import annotations

import csv
import io
import json
import os
import time
from typing import Any

from .. import mobile_planning as mp
from .. import static_placement as sp
from ..core import EventSet, get_events
from ..heatmap_gen import GeneratorConfig, HeatmapSeries, Thresholds, generate_series
from ..prep import prep_placement, prep_waypoint_graph
from .evaluate import BenchResult, evaluate_plan, evaluate_static
from .io import dumps_canonical

STATIC_ALGOS = ("frequency", "kmeans", "ikmeans", "dbscan", "idbscan", "greedy", "ga", "exact", "prep")
MOBILE_ALGOS = ("waitr", "greedy")

CSV_FIELDS = ("dataset_seed", "kind", "algo", "total_poi", "observed_poi", "coverage_ratio",
              "min_frame", "max_gap", "info_gain")


def static_placement(algo: str, events: EventSet, n: int, r: float, seed: int = 0, **opts):
    """Dispatch a static placer by name."""
    if algo == "frequency":
        return sp.frequency_placement(events, n, r)
    if algo == "kmeans":
        return sp.kmeans_placement(events, n, seed, r=r)
    if algo == "ikmeans":
        return sp.improved_kmeans_placement(events, n, opts.get("min_count", 2), seed, r=r)
    if algo == "dbscan":
        return sp.dbscan_placement(events, opts.get("eps"), opts.get("min_pts", 3), n, r)
    if algo == "idbscan":
        return sp.improved_dbscan_placement(events, opts.get("eps"), opts.get("min_pts", 3), n,
                                            opts.get("min_count", 2), r)
    if algo == "greedy":
        return sp.greedy_event_placement(events, n, r)
    if algo == "ga":
        return sp.genetic_placement(events, r, n, sp.GaParams(seed=seed, **opts.get("ga", {})))
    if algo == "exact":
        return sp.exact_coverage_placement(events, r, n, opts.get("lattice", "integer"),
                                           opts.get("node_budget", 20_000), opts.get("non_overlap", False))
    if algo == "prep":
        return prep_placement(events, n, r)
    raise ValueError(f"unknown static algorithm {algo!r}; choose from {STATIC_ALGOS}")


def run_static(algo: str, series: HeatmapSeries, n: int = 10, r: float = 3.0, theta: float = 0.9,
               seed: int = 0, timing: bool = False, **opts) -> BenchResult:
    start = time.perf_counter()
    events = get_events(series, theta)
    placement = static_placement(algo, events, n, r, seed, **opts)
    params = {"sensors": n, "radius": r, "theta": theta, "seed": seed}
    res = evaluate_static(placement, series, r, theta, algo, params)
    if timing:
        res.wall_time = time.perf_counter() - start
    return res


def mobile_graph(series: HeatmapSeries, r: float = 2.0, theta: float = 0.9, n_links: int = 3,
                 move_threshold: float | None = None, n_waypoints: int | None = None):
    return prep_waypoint_graph(get_events(series, theta), r, n_waypoints, n_links, move_threshold)


def run_mobile(algo: str, series: HeatmapSeries, sensors: int = 3, r: float = 2.0, hops: int = 2,
               theta: float = 0.9, timing: bool = False, graph=None, **opts):
    start = time.perf_counter()
    graph = graph or mobile_graph(series, r, theta, opts.get("n_links", 3), opts.get("move_threshold"))
    table = mp.ted_activate(series, graph, theta, r)
    if algo == "waitr":
        plan = mp.waitr_plan(series, graph, theta, r, hops, sensors, opts.get("mode", "endpoint"),
                             opts.get("beam", 64), opts.get("node_time", False), table)
    elif algo == "greedy":
        plan = mp.greedy_mobile_plan(series, graph, theta, r, hops, sensors, table)
    else:
        raise ValueError(f"unknown mobile algorithm {algo!r}; choose from {MOBILE_ALGOS}")
    res = evaluate_plan(plan, graph, series, r, theta, algo)
    res.params["reward"] = plan.total
    if timing:
        res.wall_time = time.perf_counter() - start
    return res, plan, graph


def _dataset_configs(config: dict[str, Any]):
    for spec in config.get("datasets", []):
        spec = dict(spec)
        seeds = spec.pop("seeds", [spec.pop("seed", 0)])
        thresholds = spec.pop("thresholds", None)
        for seed in seeds:
            kw = dict(spec, seed=seed)
            if thresholds is not None:
                kw["thresholds"] = Thresholds(**thresholds)
            yield GeneratorConfig(**kw)


def run_benchmark(config: dict[str, Any] | str, out_dir: str | None = None) -> dict[str, Any]:
    """Run every (dataset seed, algorithm) cell of the matrix in a fixed order.

    Without ``timing: true`` in the config no wall-clock values are written,
    so reports are byte-identical between runs.
    """
    if isinstance(config, (str, os.PathLike)):
        with open(config, encoding="utf-8") as fh:
            config = json.load(fh)
    timing = bool(config.get("timing", False))
    static_cfg = config.get("static", {})
    mobile_cfg = config.get("mobile", {})
    rows = []
    for gen in _dataset_configs(config):
        series = generate_series(gen)
        for algo in static_cfg.get("algos", []):
            res = run_static(algo, series, static_cfg.get("sensors", 10), static_cfg.get("radius", 3.0),
                             static_cfg.get("theta", 0.9), gen.seed or 0, timing, **static_cfg.get("options", {}))
            rows.append(_row(gen, "static", res))
        graph = None
        for algo in mobile_cfg.get("algos", []):
            res, _, graph = run_mobile(algo, series, mobile_cfg.get("sensors", 3), mobile_cfg.get("radius", 2.0),
                                       mobile_cfg.get("hops", 2), mobile_cfg.get("theta", 0.9), timing, graph,
                                       **mobile_cfg.get("options", {}))
            rows.append(_row(gen, "mobile", res))
    report = {"config": config, "results": rows}
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
            fh.write(dumps_canonical(report))
        with open(os.path.join(out_dir, "report.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write(report_csv(report))
    return report


def _row(gen: GeneratorConfig, family: str, res: BenchResult) -> dict[str, Any]:
    row = {"dataset_seed": gen.seed, "kind": gen.kind, "family": family}
    row.update(res.to_json())
    return row


def report_csv(report: dict[str, Any]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for row in report["results"]:
        writer.writerow([repr(row[k]) if isinstance(row[k], float) else row[k] for k in CSV_FIELDS])
    return buf.getvalue()
