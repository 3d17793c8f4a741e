import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from cmaes_sop.exceptions import ConfigurationError, InvalidSubspaceError
from cmaes_sop.space import (
    Continuous,
    PointSet,
    SearchSpace,
    closest_point_to_mean,
    encode,
    encode_subspace,
    load_space,
    save_space,
    voronoi_neighbors,
)


def test_encode_subspace_examples():
    ps = PointSet([[0, 0], [1, 1]])
    assert encode_subspace(np.array([0.1, 0.2]), ps).tolist() == [0, 0]
    assert encode_subspace(np.array([1.0, 1.0]), ps).tolist() == [1, 1]
    tie = PointSet([[0, 0], [2, 0]])
    assert encode_subspace(np.array([1.0, 0.0]), tie).tolist() == [0, 0]
    x = np.array([3.7, -1.0])
    assert np.array_equal(encode_subspace(x, Continuous(2)), x)


def test_encode_blockwise():
    space = SearchSpace([PointSet([[0, 0], [3, 3]]), Continuous(1)])
    assert encode(np.array([0.2, -0.1, 3.7]), space).tolist() == [0, 0, 3.7]
    cont = SearchSpace([Continuous(3)])
    x = np.array([1.5, -2.0, 0.25])
    assert np.array_equal(encode(x, cont), x)
    on = np.array([3.0, 3.0, 9.0])
    assert np.array_equal(encode(on, space), on)


def test_encode_batch_matches_rows():
    rng = np.random.default_rng(0)
    space = SearchSpace([PointSet(rng.uniform(-5, 5, (10, 2))), Continuous(2), PointSet(rng.uniform(-5, 5, (7, 3)))])
    xs = rng.normal(scale=4, size=(50, space.total_dim))
    batch = encode(xs, space)
    for row, enc in zip(xs, batch):
        assert np.array_equal(encode(row, space), enc)


@settings(max_examples=200, deadline=None)
@given(
    hnp.arrays(np.float64, st.tuples(st.integers(1, 50), st.integers(1, 5)), elements=st.floats(-10, 10)),
    st.integers(0, 2**32 - 1),
)
def test_nearest_matches_exhaustive_scan(points, seed):
    pts = np.unique(points, axis=0)
    ps = PointSet(pts)
    q = np.random.default_rng(seed).uniform(-12, 12, (20, pts.shape[1]))
    got = ps.nearest(q)
    for qi, g in zip(q, got):
        d = [float(np.sum((qi - p) ** 2)) for p in pts]
        assert g == d.index(min(d))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_encode_idempotent(seed):
    rng = np.random.default_rng(seed)
    space = SearchSpace([PointSet(rng.uniform(-5, 5, (8, 2))), Continuous(1), PointSet(rng.uniform(-5, 5, (5, 1)))])
    x = rng.normal(scale=5, size=space.total_dim)
    once = encode(x, space)
    assert np.array_equal(encode(once, space), once)


def test_offsets_and_blocks():
    space = SearchSpace([PointSet(np.zeros((1, 2))), Continuous(3), PointSet(np.zeros((1, 1)))])
    assert space.offsets == (0, 2, 5)
    assert space.total_dim == 6
    assert space.block(1) == slice(2, 5)
    assert space.point_set_indices == (0, 2)
    with pytest.raises(InvalidSubspaceError):
        space.point_set(1)


@pytest.mark.parametrize(
    "bad",
    [[], [[0, 0], [0, 0]], [[np.nan, 1.0]], np.zeros((0, 2))],
)
def test_point_set_validation(bad):
    with pytest.raises(ConfigurationError):
        PointSet(bad)


def test_other_validation():
    with pytest.raises(ConfigurationError):
        Continuous(0)
    with pytest.raises(ConfigurationError):
        SearchSpace([])
    with pytest.raises(ConfigurationError):
        SearchSpace.from_json({"subspaces": [{"type": "grid"}]})
    with pytest.raises(ConfigurationError):
        SearchSpace.from_json({})


def test_points_read_only():
    ps = PointSet([[0.0], [1.0]])
    with pytest.raises(ValueError):
        ps.points[0, 0] = 5.0


def test_json_round_trip(tmp_path):
    space = SearchSpace([PointSet([[0.5, 1.0], [2.0, -3.0]]), Continuous(4)])
    path = tmp_path / "space.json"
    save_space(space, path)
    raw = json.loads(path.read_text())
    assert raw == {"subspaces": [{"type": "points", "points": [[0.5, 1.0], [2.0, -3.0]]}, {"type": "continuous", "dim": 4}]}
    back = load_space(path)
    assert back.total_dim == 6
    assert np.array_equal(back.point_set(0).points, space.point_set(0).points)


def test_closest_point_to_mean():
    space = SearchSpace([Continuous(1), PointSet([[-5.0], [0.0], [5.0]])])
    assert closest_point_to_mean(np.array([9.0, 2.4]), space, 1) == 1
    assert closest_point_to_mean(np.array([9.0, 2.5]), space, 1) == 1
    assert closest_point_to_mean(np.array([9.0, 5.0]), space, 1) == 2
    with pytest.raises(InvalidSubspaceError):
        closest_point_to_mean(np.zeros(2), space, 0)


def test_neighbor_examples():
    line = PointSet([[0.0], [1.0], [2.0]])
    assert voronoi_neighbors(line, 1).neighbors == (0, 2)
    assert voronoi_neighbors(line, 0).neighbors == (1,)
    assert voronoi_neighbors(PointSet([[1.0, 2.0]]), 0).count == 0
    with pytest.raises(IndexError):
        voronoi_neighbors(line, 3)
