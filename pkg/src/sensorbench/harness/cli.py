"""Command line entry point: ``sensorbench <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from ..core import bipartite_distance_matrix, get_events
from ..heatmap_gen import KINDS, GeneratorConfig, Thresholds, generate_series
from ..measures import (
    SpatialGraph,
    myopic_degree,
    spatial_closeness,
    spatial_clustering_coefficient,
    spatial_edge_density,
    spatial_resilience,
)
from .bench import MOBILE_ALGOS, STATIC_ALGOS, run_benchmark, run_mobile, run_static
from .casestudy import monte_carlo_insertion, roi_extract, temporal_coverage
from .io import DatasetError, dumps_canonical, load_dataset, save_dataset

OUT_DIR_ENV = "SENSORBENCH_OUT_DIR"


def _out_path(path: str | None, default_name: str) -> str | None:
    if path is None:
        base = os.environ.get(OUT_DIR_ENV)
        return os.path.join(base, default_name) if base else None
    if not os.path.isabs(path) and os.environ.get(OUT_DIR_ENV):
        return os.path.join(os.environ[OUT_DIR_ENV], path)
    return path


def _emit(obj, path: str | None) -> None:
    text = dumps_canonical(obj)
    if path is None:
        sys.stdout.write(text)
        return
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def cmd_generate(args) -> None:
    cfg = GeneratorConfig(
        kind=args.kind, length=args.length, width=args.width, snapshots=args.snapshots,
        p_alive=args.p_alive, thresholds=Thresholds(args.hot, args.warm, args.cool), seed=args.seed,
    )
    series = generate_series(cfg)
    out = _out_path(args.out, "dataset.json")
    if out is None:
        from .io import series_to_json
        _emit(series_to_json(series), None)
    else:
        save_dataset(series, out)


def cmd_static(args) -> None:
    series = load_dataset(args.dataset)
    res = run_static(args.algo, series, args.sensors, args.radius, args.theta, args.seed, timing=args.timing)
    _emit(res.to_json(), _out_path(args.out, "static_result.json"))


def cmd_mobile(args) -> None:
    series = load_dataset(args.dataset)
    res, plan, graph = run_mobile(args.algo, series, args.sensors, args.radius, args.hops, args.theta,
                                  timing=args.timing, beam=args.beam)
    _emit({"result": res.to_json(), "plan": plan.to_json() | {"params": res.params}, "graph": graph.to_json()},
          _out_path(args.out, "mobile_result.json"))


def _load_measure_input(path):
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if "observers" not in obj:
        raise DatasetError("measure input needs an 'observers' list")
    obs = np.array([(o["x"], o["y"]) for o in obj["observers"]], dtype=np.float64).reshape(-1, 2)
    events = np.array([(e["row"], e["col"]) for e in obj.get("events", [])], dtype=np.float64).reshape(-1, 2)
    return obj, obs, events


def cmd_measure(args) -> None:
    obj, obs, events = _load_measure_input(args.input)
    theta = args.theta
    graph = SpatialGraph.from_positions(obs, theta)
    report = {"theta": theta, "edge_density": spatial_edge_density(graph), "nodes": {}}
    for node in graph.nodes:
        closeness = spatial_closeness(node, graph) if len(graph.nodes) > 1 else None
        report["nodes"][str(node)] = {
            "degree": myopic_degree(node, graph),
            "closeness": None if closeness in (None, float("inf")) else closeness,
            "clustering": spatial_clustering_coefficient(node, graph, args.cluster_threshold or theta),
        }
    if args.knockout:
        r = args.radius
        frames = {}
        for e in obj.get("events", []):
            frames.setdefault(e.get("frame", 0), []).append((e["row"], e["col"]))
        per_frame = [frames[k] for k in sorted(frames, key=lambda f: -1 if f is None else f)]
        base = temporal_coverage(obs, per_frame)
        seen = (bipartite_distance_matrix(obs, events) <= r).sum(axis=1) if len(events) else np.zeros(len(obs))
        order = sorted(range(len(obs)), key=lambda i: (-seen[i], i))[: args.knockout]
        keep = [i for i in range(len(obs)) if i not in set(order)]
        after = temporal_coverage(obs[keep], per_frame)
        report["knockout"] = {
            "removed": order,
            "average_before": base["average"],
            "average_after": after["average"] if np.isfinite(after["average"]) else None,
            "resilience": spatial_resilience(obs, order, resolution=args.resolution)["Rs"] if len(obs) else None,
        }
    _emit(report, _out_path(args.out, "measures.json"))


def cmd_roi(args) -> None:
    channels = [load_dataset(p) for p in args.dataset]
    nodes = roi_extract(channels, args.threshold)
    _emit({"threshold": args.threshold,
           "nodes": [{"row": n.position[0], "col": n.position[1],
                      "scores": {str(k): v for k, v in sorted(n.scores.items())}} for n in nodes]},
          _out_path(args.out, "roi.json"))


def cmd_montecarlo(args) -> None:
    series = load_dataset(args.dataset)
    events = get_events(series, args.theta)
    frame_events = [events.frame_positions(t) for t in range(series.snapshots)]
    if args.placement:
        with open(args.placement, encoding="utf-8") as fh:
            pobj = json.load(fh)
        obs = np.array([(o["x"], o["y"]) for o in pobj.get("observers", [])], dtype=np.float64).reshape(-1, 2)
    else:
        obs = np.zeros((0, 2))
    region = ((0.0, 0.0), (series.length - 1.0, series.width - 1.0))
    placed, results = obs, []
    for _ in range(args.insert):
        res = monte_carlo_insertion(placed, frame_events, args.trials, args.seed + len(results), region)
        results.append({"position": res["best_position"], "score": res["best_score"],
                        "baseline": res["baseline"] if np.isfinite(res["baseline"]) else None})
        placed = np.vstack([placed, res["best_position"]])
    _emit({"insertions": results}, _out_path(args.out, "montecarlo.json"))


def cmd_bench(args) -> None:
    out_dir = args.out or os.environ.get(OUT_DIR_ENV) or "."
    report = run_benchmark(args.config, out_dir)
    sys.stdout.write(f"{len(report['results'])} runs written to {out_dir}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sensorbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic heatmap dataset")
    g.add_argument("--kind", choices=KINDS, default="life-spatial")
    g.add_argument("--length", type=int, default=50)
    g.add_argument("--width", type=int, default=50)
    g.add_argument("--snapshots", type=int, default=20)
    g.add_argument("--p-alive", type=float, default=0.3)
    g.add_argument("--hot", type=float, default=0.9)
    g.add_argument("--warm", type=float, default=0.7)
    g.add_argument("--cool", type=float, default=0.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("static-bench", help="run one static placer on a dataset")
    s.add_argument("--dataset", required=True)
    s.add_argument("--algo", choices=STATIC_ALGOS, default="prep")
    s.add_argument("--sensors", type=int, default=10)
    s.add_argument("--radius", type=float, default=3.0)
    s.add_argument("--theta", type=float, default=0.9)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--timing", action="store_true", help="record wall time")
    s.add_argument("--out")
    s.set_defaults(func=cmd_static)

    m = sub.add_parser("mobile-bench", help="plan mobile sensors on a dataset")
    m.add_argument("--dataset", required=True)
    m.add_argument("--algo", choices=MOBILE_ALGOS, default="waitr")
    m.add_argument("--sensors", type=int, default=3)
    m.add_argument("--radius", type=float, default=2.0)
    m.add_argument("--hops", type=int, default=2)
    m.add_argument("--theta", type=float, default=0.9)
    m.add_argument("--beam", type=int, default=64)
    m.add_argument("--seed", type=int, default=0, help="accepted for symmetry; planners are deterministic")
    m.add_argument("--timing", action="store_true")
    m.add_argument("--out")
    m.set_defaults(func=cmd_mobile)

    ms = sub.add_parser("measure", help="spatial metrics of a placement + events JSON")
    ms.add_argument("--input", required=True)
    ms.add_argument("--theta", type=float, default=3.0, help="edge threshold distance")
    ms.add_argument("--cluster-threshold", type=float)
    ms.add_argument("--knockout", type=int, default=0, help="remove the k busiest observers")
    ms.add_argument("--radius", type=float, default=3.0)
    ms.add_argument("--resolution", type=int, default=200)
    ms.add_argument("--out")
    ms.set_defaults(func=cmd_measure)

    ro = sub.add_parser("roi", help="regions of interest from one or more channels")
    ro.add_argument("--dataset", nargs="+", required=True)
    ro.add_argument("--threshold", type=float, default=0.5)
    ro.add_argument("--out")
    ro.set_defaults(func=cmd_roi)

    mc = sub.add_parser("montecarlo", help="Monte Carlo observer insertion")
    mc.add_argument("--dataset", required=True)
    mc.add_argument("--placement")
    mc.add_argument("--trials", type=int, default=200)
    mc.add_argument("--insert", type=int, default=1)
    mc.add_argument("--theta", type=float, default=0.9)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--out")
    mc.set_defaults(func=cmd_montecarlo)

    b = sub.add_parser("bench", help="run a benchmark matrix from a JSON config")
    b.add_argument("--config", required=True)
    b.add_argument("--out", help="output directory")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        sys.stderr.write(f"sensorbench: error: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
