import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sensorbench import heatmap_gen as hg
from sensorbench.heatmap_gen import GeneratorConfig, Thresholds, generate_series, make_rng


# random_choice ---------------------------------------------------------------

def test_random_choice_zero_probability_branch():
    for seed in range(50):
        assert hg.random_choice([0, 1], [1, 0], make_rng(seed)) == 0


def test_random_choice_singleton():
    assert hg.random_choice([7], [0.3], make_rng(3)) == 7


def test_random_choice_reproducible():
    a = [hg.random_choice([0, 1], [0.5, 0.5], make_rng(11)) for _ in range(5)]
    b = [hg.random_choice([0, 1], [0.5, 0.5], make_rng(11)) for _ in range(5)]
    assert a == b


def test_random_choice_empty_raises():
    with pytest.raises(ValueError):
        hg.random_choice([], [], make_rng(0))


def test_random_choice_frequencies():
    rng = make_rng(5)
    draws = [hg.random_choice(["a", "b", "c"], [1, 2, 7], rng) for _ in range(20000)]
    freq = {k: draws.count(k) / len(draws) for k in "abc"}
    assert abs(freq["a"] - 0.1) < 0.01 and abs(freq["b"] - 0.2) < 0.015 and abs(freq["c"] - 0.7) < 0.015


def test_vectorised_choice_matches_scalar_walk():
    # the grid generator must map each uniform draw with the same roulette rule
    probs = [0.7, 0.3]
    grid = hg._random_choice_array([0, 1], probs, make_rng(9), 200)
    rng = make_rng(9)
    scalar = [hg.random_choice([0, 1], probs, rng) for _ in range(200)]
    assert grid.tolist() == scalar


# life grid -------------------------------------------------------------------

def test_life_grid_extremes():
    assert hg.generate_life_grid(5, 6, 0.0, make_rng(1)).sum() == 0
    assert hg.generate_life_grid(5, 6, 1.0, make_rng(1)).sum() == 30


def test_life_grid_binomial_fraction():
    g = hg.generate_life_grid(100, 100, 0.5, make_rng(2))
    assert set(np.unique(g)) <= {0, 1}
    assert 0.45 <= g.mean() <= 0.55


def test_life_grid_bad_dims():
    with pytest.raises(ValueError):
        hg.generate_life_grid(0, 3, 0.5, make_rng(0))


def test_count_alive_neighbors_examples():
    assert hg.count_alive_neighbors(np.zeros((4, 4), int), 1, 1) == 0
    assert hg.count_alive_neighbors(np.ones((3, 3), int), 1, 1) == 8
    g = np.zeros((3, 3), int)
    g[0, 0] = g[2, 2] = 1
    # the eight wrapped offsets of (0,0) are rows {2,0,1} x cols {2,0,1} minus itself
    assert hg.count_alive_neighbors(g, 0, 0) == 1


def test_count_alive_neighbors_out_of_range():
    with pytest.raises(IndexError):
        hg.count_alive_neighbors(np.zeros((3, 3), int), 3, 0)


def test_neighbor_counts_matches_scalar():
    g = hg.generate_life_grid(7, 9, 0.4, make_rng(4))
    counts = hg.neighbor_counts(g)
    for r in range(7):
        for c in range(9):
            assert counts[r, c] == hg.count_alive_neighbors(g, r, c)


def test_conways_rule_examples():
    assert hg.conways_rule(0, 3) == 1
    assert hg.conways_rule(1, 2) == 1
    assert hg.conways_rule(1, 4) == 0
    assert hg.conways_rule(0, 2) == 0
    assert hg.conways_rule(1, 3) == 1


def _blinker():
    g = np.zeros((5, 5), dtype=np.int8)
    g[1:4, 2] = 1
    return g


def test_evolve_blinker_and_block():
    assert hg.evolve_grid(np.zeros((5, 5), int)).sum() == 0
    h = hg.evolve_grid(_blinker())
    expected = np.zeros((5, 5), dtype=np.int8)
    expected[2, 1:4] = 1
    assert np.array_equal(h, expected)
    assert np.array_equal(hg.evolve_grid(h), _blinker())
    block = np.zeros((4, 4), dtype=np.int8)
    block[1:3, 1:3] = 1
    assert np.array_equal(hg.evolve_grid(block), block)


def test_evolve_is_synchronous():
    # a sequential in-place update would let early births affect later cells
    g = hg.generate_life_grid(8, 8, 0.4, make_rng(7))
    expected = np.array([[hg.conways_rule(g[r, c], hg.count_alive_neighbors(g, r, c))
                          for c in range(8)] for r in range(8)])
    assert np.array_equal(hg.evolve_grid(g), expected)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 9), st.integers(0, 9))
def test_toroidal_translation_equivariance(seed, dr, dc):
    g = hg.generate_life_grid(10, 10, 0.35, make_rng(seed))
    a, b = g, np.roll(g, (dr, dc), axis=(0, 1))
    for _ in range(4):
        a, b = hg.evolve_grid(a), hg.evolve_grid(b)
        assert np.array_equal(np.roll(a, (dr, dc), axis=(0, 1)), b)


# heatmap mappings --------------------------------------------------------------

def test_spatial_map_examples():
    g = np.zeros((5, 5), int)
    g[2, 2] = 1
    assert hg.grid_to_heatmap_spatial(g)[2, 2] == 0.5
    g = np.zeros((5, 5), int)
    g[1, 1] = g[1, 2] = g[1, 3] = 1
    assert hg.grid_to_heatmap_spatial(g)[2, 2] == pytest.approx(0.3)
    assert hg.grid_to_heatmap_spatial(np.ones((3, 3), int))[1, 1] == 1.0


def test_temporal_map_examples():
    ones = np.ones((3, 3), int)
    assert np.all(hg.grid_to_heatmap_temporal(ones, ones) == 1.0)
    z = np.zeros((3, 3), int)
    assert hg.grid_to_heatmap_temporal(z, z)[1, 1] == 0.0
    # alive centre with 8 alive neighbours dying next frame: min(9/8, 0.9)
    nxt = np.ones((3, 3), int)
    nxt[1, 1] = 0
    assert hg.grid_to_heatmap_temporal(ones, nxt)[1, 1] == 0.9


def test_temporal_map_dimension_mismatch():
    with pytest.raises(ValueError):
        hg.grid_to_heatmap_temporal(np.zeros((3, 3)), np.zeros((3, 4)))


# random frames ---------------------------------------------------------------

def test_random_frame_properties():
    v = hg.generate_random_frame(1, 1, make_rng(0))
    assert 0.0 <= v[0, 0] <= 1.0
    assert np.array_equal(hg.generate_random_frame(10, 10, make_rng(3)), hg.generate_random_frame(10, 10, make_rng(3)))
    assert 0.45 <= hg.generate_random_frame(200, 200, make_rng(4)).mean() <= 0.55


def test_hotspot_distribution_branches():
    f = np.array([[0.95, 0.8, 0.6, 0.5], [0.9, 0.7, 0.0, 1.0]])
    out = hg.apply_hotspot_distribution(f)
    assert out.tolist() == [[1.0, 0.5, 0.25, 0.0], [0.5, 0.25, 0.0, 1.0]]
    assert hg.apply_hotspot_distribution(np.zeros((3, 3))).sum() == 0


def test_enforce_neighborhood_examples():
    z = np.full((3, 3), 0.25)
    assert np.array_equal(hg.enforce_neighborhood(z, 0.7), z)
    f = np.zeros((3, 3))
    f[1, 1] = 1.0
    out = hg.enforce_neighborhood(f, 0.7)
    assert out[1, 1] == 1.0 and (out == 0.5).sum() == 8
    f = np.zeros((5, 5))
    f[2, 2] = f[2, 3] = 1.0
    out = hg.enforce_neighborhood(f, 0.7)
    assert out[2, 3] == 1.0 and out[2, 2] == 1.0
    # toroidal wrap: a corner hot cell reaches the opposite corner
    f = np.zeros((5, 5))
    f[0, 0] = 1.0
    assert hg.enforce_neighborhood(f, 0.7)[4, 4] == 0.5


def test_enforce_reads_original():
    # a cell raised to 0.5 must not itself spread, even with a warm threshold above 0.5
    f = np.zeros((1, 7))
    f[0, 0] = 1.0
    out = hg.enforce_neighborhood(f, 0.7)
    assert out[0].tolist() == [1.0, 0.5, 0, 0, 0, 0, 0.5]


# series ---------------------------------------------------------------------

def test_series_random_weighted_alphabet():
    s = generate_series(GeneratorConfig(kind="random-weighted", snapshots=1, seed=5))
    assert s.snapshots == 1
    assert set(np.unique(s.frames)) <= {0.0, 0.25, 0.5, 1.0}


def test_series_life_spatial_dead():
    s = generate_series(GeneratorConfig(kind="life-spatial", p_alive=0.0, snapshots=4, length=6, width=6))
    assert s.frames.sum() == 0


def test_series_life_temporal_deterministic():
    cfg = GeneratorConfig(kind="life-temporal", seed=42)
    a, b = generate_series(cfg), generate_series(cfg)
    assert a.frames.tobytes() == b.frames.tobytes()
    assert a.frames.shape == (20, 50, 50)


def test_series_life_spatial_matches_manual_pipeline():
    cfg = GeneratorConfig(kind="life-spatial", length=8, width=9, snapshots=3, seed=12)
    rng = make_rng(12)
    grid = hg.generate_life_grid(8, 9, 0.3, rng)
    expected = []
    for _ in range(3):
        grid = hg.evolve_grid(grid)
        expected.append(hg.grid_to_heatmap_spatial(grid))
    assert np.array_equal(generate_series(cfg).frames, np.stack(expected))


def test_series_temporal_pairs_consecutive_states():
    cfg = GeneratorConfig(kind="life-temporal", length=6, width=6, snapshots=2, seed=3)
    rng = make_rng(3)
    g0 = hg.generate_life_grid(6, 6, 0.3, rng)
    s1 = hg.evolve_grid(g0)
    s2 = hg.evolve_grid(s1)
    assert np.array_equal(generate_series(cfg).frames[0], hg.grid_to_heatmap_temporal(s1, s2))


def test_series_constrained_has_warm_ring():
    s = generate_series(GeneratorConfig(kind="random-weighted-constrained", seed=1, snapshots=2))
    for f in s.frames:
        hot = f == 1.0
        near = hg.neighbor_counts(hot.astype(int)) > 0
        assert np.all(f[near] >= 0.5)


def test_series_meta_and_readonly():
    s = generate_series(GeneratorConfig(seed=9, length=5, width=4, snapshots=2))
    assert s.meta["seed"] == 9 and s.meta["rng"] == hg.RNG_ALGORITHM
    assert s.meta["generator"] == "life-spatial" and (s.length, s.width) == (5, 4)
    with pytest.raises(ValueError):
        s.frames[0, 0, 0] = 0.1


@pytest.mark.parametrize("kwargs", [
    {"kind": "nope"}, {"snapshots": 0}, {"length": -1}, {"p_alive": 1.5},
])
def test_invalid_config(kwargs):
    with pytest.raises(ValueError):
        GeneratorConfig(**kwargs)


def test_threshold_ordering():
    with pytest.raises(ValueError):
        Thresholds(0.5, 0.7, 0.3)


@settings(max_examples=60, deadline=None)
@given(
    st.sampled_from(hg.KINDS),
    st.integers(1, 12), st.integers(1, 12), st.integers(1, 4),
    st.floats(0, 1), st.integers(0, 2**63 - 1),
)
def test_fuzz_values_in_unit_interval(kind, length, width, snaps, p, seed):
    s = generate_series(GeneratorConfig(kind=kind, length=length, width=width, snapshots=snaps,
                                        p_alive=p, seed=seed))
    assert s.frames.shape == (snaps, length, width)
    assert s.frames.min() >= 0.0 and s.frames.max() <= 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_output_alphabets(seed):
    g = hg.generate_life_grid(9, 9, 0.4, make_rng(seed))
    g2 = hg.evolve_grid(g)
    spatial = hg.grid_to_heatmap_spatial(g)
    assert set(np.unique(spatial)) <= {k / 10 for k in range(11)}
    temporal = hg.grid_to_heatmap_temporal(g, g2)
    assert set(np.unique(temporal)) <= {min(k / 8, 0.9) for k in range(10)} | {1.0}
    q = hg.apply_hotspot_distribution(make_rng(seed).random((9, 9)))
    assert set(np.unique(q)) <= {0.0, 0.25, 0.5, 1.0}
