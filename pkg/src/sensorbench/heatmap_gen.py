"""Synthetic dynamic heatmap generators.

Four families are supported:

* ``life-spatial``   Game of Life states mapped through the neighbour-count rule.
* ``life-temporal``  Game of Life (state, next state) pairs mapped through the
                     persistence rule.
* ``random-weighted`` i.i.d. uniform frames quantised into hot/warm/cool levels.
* ``random-weighted-constrained`` as above, with every hot cell raising its
                     eight neighbours to at least warm.

All grids are toroidal. Randomness comes from a numpy ``Generator`` backed by
PCG64 seeded with the config seed, so a given seed reproduces the same series
on every platform.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

RNG_ALGORITHM = "numpy.PCG64"

KINDS = ("life-spatial", "life-temporal", "random-weighted", "random-weighted-constrained")

_MOORE = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)]


def make_rng(seed: int | None) -> np.random.Generator:
    """Return the suite's PRNG for ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class Thresholds:
    hot: float = 0.9
    warm: float = 0.7
    cool: float = 0.5

    def __post_init__(self):
        for name in ("hot", "warm", "cool"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"threshold {name}={v} outside [0, 1]")
        if not self.hot > self.warm > self.cool:
            raise ValueError(f"thresholds must satisfy hot > warm > cool, got {self}")


@dataclass(frozen=True)
class GeneratorConfig:
    kind: str = "life-spatial"
    length: int = 50
    width: int = 50
    snapshots: int = 20
    p_alive: float = 0.3
    thresholds: Thresholds = field(default_factory=Thresholds)
    seed: int | None = 0
    cell_size: float | None = None  # rendering only

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        for name in ("length", "width", "snapshots"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if not 0.0 <= self.p_alive <= 1.0:
            raise ValueError(f"p_alive must be in [0, 1], got {self.p_alive}")
        if isinstance(self.thresholds, dict):
            object.__setattr__(self, "thresholds", Thresholds(**self.thresholds))

    def parameters(self) -> dict[str, Any]:
        params: dict[str, Any] = {"p_alive": self.p_alive}
        if self.kind.startswith("random"):
            params = {
                "hot": self.thresholds.hot,
                "warm": self.thresholds.warm,
                "cool": self.thresholds.cool,
            }
        if self.cell_size is not None:
            params["cell_size"] = self.cell_size
        return params


@dataclass(frozen=True)
class HeatmapSeries:
    """Ordered frames of an ``length x width`` grid with values in [0, 1].

    ``frames`` has shape ``(snapshots, length, width)`` and is read-only.
    """

    frames: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.float64)
        if frames.ndim != 3 or min(frames.shape) < 1:
            raise ValueError(f"frames must be a non-empty 3-D array, got shape {frames.shape}")
        if np.isnan(frames).any() or frames.min() < 0.0 or frames.max() > 1.0:
            raise ValueError("frame values must lie in [0, 1]")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def snapshots(self) -> int:
        return self.frames.shape[0]

    @property
    def length(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames.shape[1], self.frames.shape[2]

    def __len__(self) -> int:
        return self.snapshots

    def __getitem__(self, t):
        return self.frames[t]


# ---------------------------------------------------------------------------
# primitives


def random_choice(values: Sequence, probs: Sequence[float], rng: np.random.Generator):
    """Pick ``values[i]`` with probability ``probs[i] / sum(probs)``.

    Walks the cumulative sum like a roulette wheel; if rounding leaves the
    draw past the final bin, the last value is returned.
    """
    if len(values) == 0 or len(values) != len(probs):
        raise ValueError("values and probs must be non-empty and the same length")
    if any(p < 0 for p in probs):
        raise ValueError("probabilities must be non-negative")
    total = float(sum(probs))
    draw = rng.random() * total
    cumulative = 0.0
    for value, p in zip(values, probs):
        cumulative += p
        if draw < cumulative:
            return value
    return values[-1]


def _random_choice_array(values, probs, rng, size) -> np.ndarray:
    # Vectorised twin of random_choice: same draws, same bin mapping.
    values = np.asarray(values)
    probs = np.asarray(probs, dtype=np.float64)
    draws = rng.random(size) * probs.sum()
    cumulative = np.cumsum(probs)
    idx = np.searchsorted(cumulative, draws, side="right")
    return values[np.minimum(idx, len(values) - 1)]


def generate_life_grid(length: int, width: int, p_alive: float, rng: np.random.Generator) -> np.ndarray:
    """Binary grid where each cell is alive independently with ``p_alive``."""
    if length < 1 or width < 1:
        raise ValueError(f"grid dimensions must be >= 1, got {length}x{width}")
    grid = _random_choice_array([0, 1], [1.0 - p_alive, p_alive], rng, (length, width))
    return grid.astype(np.int8)


def neighbor_counts(grid: np.ndarray) -> np.ndarray:
    """Alive Moore-neighbour count of every cell, with toroidal wrap."""
    grid = np.asarray(grid, dtype=np.int16)
    total = np.zeros_like(grid)
    for dr, dc in _MOORE:
        total += np.roll(grid, shift=(-dr, -dc), axis=(0, 1))
    return total


def count_alive_neighbors(grid: np.ndarray, row: int, col: int) -> int:
    grid = np.asarray(grid)
    rows, cols = grid.shape
    if not (0 <= row < rows and 0 <= col < cols):
        raise IndexError(f"cell ({row}, {col}) outside {rows}x{cols} grid")
    alive = 0
    for dr, dc in _MOORE:
        if grid[(row + dr + rows) % rows, (col + dc + cols) % cols] == 1:
            alive += 1
    return alive


def conways_rule(cell, num_alive_neighbors):
    """Conway's B3/S23 transition. Works elementwise on arrays too."""
    cell = np.asarray(cell)
    n = np.asarray(num_alive_neighbors)
    out = ((n == 3) | ((cell == 1) & (n == 2))).astype(np.int8)
    return int(out) if out.ndim == 0 else out


def evolve_grid(grid: np.ndarray, rule: Callable = conways_rule) -> np.ndarray:
    """One synchronous generation: every new cell is computed from ``grid``.

    ``rule(cells, counts)`` must act elementwise on arrays.
    """
    grid = np.asarray(grid, dtype=np.int8)
    return np.asarray(rule(grid, neighbor_counts(grid)), dtype=np.int8)


def grid_to_heatmap_spatial(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid)
    n = neighbor_counts(grid)
    # (5 + n) / 10 rather than 0.5 + 0.1 n keeps values on the nearest decimal floats
    values = np.where(grid == 1, (5 + n) / 10.0, n / 10.0)
    return np.minimum(values, 1.0)


def grid_to_heatmap_temporal(grid: np.ndarray, next_grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid)
    next_grid = np.asarray(next_grid)
    if grid.shape != next_grid.shape:
        raise ValueError(f"grid shapes differ: {grid.shape} vs {next_grid.shape}")
    n = neighbor_counts(grid) + (grid == 1)
    values = np.minimum(n / 8.0, 0.9)
    return np.where((grid == 1) & (next_grid == 1), 1.0, values)


def generate_random_frame(length: int, width: int, rng: np.random.Generator) -> np.ndarray:
    if length < 1 or width < 1:
        raise ValueError(f"grid dimensions must be >= 1, got {length}x{width}")
    return rng.random((length, width))


def apply_hotspot_distribution(frame: np.ndarray, thresholds: Thresholds = Thresholds()) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.float64)
    return np.select(
        [frame > thresholds.hot, frame > thresholds.warm, frame > thresholds.cool],
        [1.0, 0.5, 0.25],
        default=0.0,
    )


def enforce_neighborhood(frame: np.ndarray, warm_threshold: float = Thresholds.warm) -> np.ndarray:
    """Raise every sub-warm Moore neighbour of a 1-cell to 0.5 (toroidal)."""
    frame = np.asarray(frame, dtype=np.float64)
    hot = (frame == 1.0).astype(np.int16)
    near_hot = neighbor_counts(hot) > 0
    return np.where(near_hot & (frame < warm_threshold), 0.5, frame)


# ---------------------------------------------------------------------------
# series


def _life_states(config: GeneratorConfig, rng, count: int) -> list[np.ndarray]:
    grid = generate_life_grid(config.length, config.width, config.p_alive, rng)
    states = []
    for _ in range(count):
        grid = evolve_grid(grid, conways_rule)
        states.append(grid)
    return states


def generate_series(config: GeneratorConfig) -> HeatmapSeries:
    rng = make_rng(config.seed)
    if config.kind == "life-spatial":
        frames = [grid_to_heatmap_spatial(s) for s in _life_states(config, rng, config.snapshots)]
    elif config.kind == "life-temporal":
        states = _life_states(config, rng, config.snapshots + 1)
        frames = [grid_to_heatmap_temporal(a, b) for a, b in zip(states, states[1:])]
    else:
        frames = []
        for _ in range(config.snapshots):
            frame = apply_hotspot_distribution(
                generate_random_frame(config.length, config.width, rng), config.thresholds
            )
            if config.kind == "random-weighted-constrained":
                frame = enforce_neighborhood(frame, config.thresholds.warm)
            frames.append(frame)
    meta = {
        "length": config.length,
        "width": config.width,
        "snapshots": config.snapshots,
        "generator": config.kind,
        "seed": config.seed,
        "rng": RNG_ALGORITHM,
        "parameters": config.parameters(),
    }
    return HeatmapSeries(np.stack(frames), meta)
