import time

import numpy as np
import pytest

from cmaes_sop.space import PointSet, voronoi_neighbors
from voronoi_oracle import grid_adjacency_2d, oracle_neighbors, sorted_adjacency


def test_square_corners_raster():
    square = [[0, 0], [1, 0], [0, 1], [1, 1]]
    pairs = grid_adjacency_2d(square, -1.0, 2.0, resolution=2001)
    assert pairs == {(0, 1), (0, 2), (1, 3), (2, 3)}
    ps = PointSet(square)
    for i in range(4):
        expected = tuple(sorted(j for p in pairs for j in p if i in p and j != i))
        assert voronoi_neighbors(ps, i).neighbors == expected
    assert voronoi_neighbors(ps, 0).neighbors == (1, 2)


def test_random_sets_match_raster_oracle():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    for _ in range(200):
        dim = int(rng.integers(1, 4))
        n = int(rng.integers(2, 21))
        pts = rng.uniform(-5, 5, (n, dim))
        close = int(rng.integers(n))
        got = voronoi_neighbors(PointSet(pts), close).neighbors
        assert got == oracle_neighbors(pts, close), (dim, n, close)
        if dim == 1:
            assert got == sorted_adjacency(pts, close)
    assert time.perf_counter() - t0 < 60


@pytest.mark.parametrize("seed", range(20))
def test_one_dim_sorted_adjacency(seed):
    rng = np.random.default_rng(seed)
    pts = rng.permutation(rng.uniform(-5, 5, int(rng.integers(1, 30))))
    ps = PointSet(pts)
    for c in range(len(pts)):
        assert voronoi_neighbors(ps, c).neighbors == sorted_adjacency(pts, c)


@pytest.mark.parametrize("seed", range(10))
def test_neighbor_symmetry(seed):
    rng = np.random.default_rng(100 + seed)
    dim = 1 + seed % 3
    pts = rng.uniform(-5, 5, (int(rng.integers(3, 16)), dim))
    ps = PointSet(pts)
    nb = {i: set(voronoi_neighbors(ps, i).neighbors) for i in range(len(pts))}
    for i, js in nb.items():
        assert i not in js
        for j in js:
            assert i in nb[j]
    # a fresh set (empty cache) gives the same answer from the other side
    fresh = PointSet(pts)
    for j in range(len(pts) - 1, -1, -1):
        assert set(voronoi_neighbors(fresh, j).neighbors) == nb[j]


def test_scale_and_translation_invariance():
    rng = np.random.default_rng(7)
    pts = rng.uniform(-5, 5, (12, 2))
    base = voronoi_neighbors(PointSet(pts), 3).neighbors
    assert voronoi_neighbors(PointSet(pts * 1e-4 + 1e3), 3).neighbors == base
    assert voronoi_neighbors(PointSet(pts * 1e5), 3).neighbors == base


def test_collinear_in_plane():
    # the middle point's cell separates the outer two
    ps = PointSet([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    assert voronoi_neighbors(ps, 0).neighbors == (1,)
    assert voronoi_neighbors(ps, 1).neighbors == (0, 2)
