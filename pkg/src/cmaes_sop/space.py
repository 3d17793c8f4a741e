"""Search spaces built from point sets and continuous blocks."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy.optimize import linprog

from . import _kernels
from .exceptions import ConfigurationError, InvalidSubspaceError

# minimum normalized slack for a strict shared facet
_FACET_TOL = 1e-9


class PointSet:
    """A finite set of ``L`` distinct points in R^d."""

    kind = "points"

    def __init__(self, points):
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ConfigurationError(f"point set needs shape (L>=1, d>=1), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ConfigurationError("point set contains non-finite coordinates")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise ConfigurationError("point set contains duplicate points")
        pts.setflags(write=False)
        self.points = pts
        self._pairs: dict[tuple[int, int], bool] = {}
        self._neighbors: dict[int, tuple[int, ...]] = {}
        self._lock = threading.Lock()

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def __repr__(self) -> str:
        return f"PointSet(L={len(self)}, dim={self.dim})"

    def nearest(self, x: np.ndarray) -> np.ndarray:
        """Nearest-point indices for a batch ``(n, d)`` of queries."""
        return _kernels.nearest_index(np.atleast_2d(x), self.points)

    def shares_facet(self, i: int, j: int) -> bool:
        """Whether the Voronoi cells of points ``i`` and ``j`` share a facet."""
        if i == j:
            return False
        key = (i, j) if i < j else (j, i)
        hit = self._pairs.get(key)
        if hit is None:
            hit = _shares_facet(self.points, *key)
            with self._lock:
                self._pairs[key] = hit
        return hit

    def neighbors(self, i: int) -> tuple[int, ...]:
        """Indices whose cells share a facet with cell ``i`` (cached)."""
        hit = self._neighbors.get(i)
        if hit is None:
            hit = tuple(j for j in range(len(self)) if self.shares_facet(i, j))
            with self._lock:
                self._neighbors[i] = hit
        return hit

    def to_json(self) -> dict:
        return {"type": "points", "points": self.points.tolist()}


class Continuous:
    kind = "continuous"

    def __init__(self, dim: int):
        if int(dim) < 1:
            raise ConfigurationError(f"continuous block needs dim >= 1, got {dim}")
        self._dim = int(dim)

    @property
    def dim(self) -> int:
        return self._dim

    def __repr__(self) -> str:
        return f"Continuous(dim={self.dim})"

    def to_json(self) -> dict:
        return {"type": "continuous", "dim": self.dim}


Subspace = Union[PointSet, Continuous]


@dataclass(frozen=True)
class NeighborSet:
    closest: int
    neighbors: tuple[int, ...]

    @property
    def count(self) -> int:
        return len(self.neighbors)


class SearchSpace:
    """Ordered product of subspaces laid out as consecutive blocks of R^N."""

    def __init__(self, subspaces: Sequence[Subspace]):
        subspaces = list(subspaces)
        if not subspaces:
            raise ConfigurationError("a search space needs at least one subspace")
        for s in subspaces:
            if not isinstance(s, (PointSet, Continuous)):
                raise ConfigurationError(f"unsupported subspace {s!r}")
        self.subspaces = tuple(subspaces)
        dims = [s.dim for s in subspaces]
        self.offsets = tuple(int(o) for o in np.concatenate([[0], np.cumsum(dims)[:-1]]))
        self.total_dim = int(sum(dims))
        # all point sets packed flat so one kernel call encodes a whole batch
        sets = [(o, s) for o, s in zip(self.offsets, subspaces) if isinstance(s, PointSet)]
        self._packed = (
            np.concatenate([s.points.ravel() for _, s in sets]) if sets else np.empty(0),
            np.array([o for o, _ in sets], dtype=np.int64),
            np.array([s.dim for _, s in sets], dtype=np.int64),
            np.concatenate([[0], np.cumsum([s.points.size for _, s in sets])[:-1]]).astype(np.int64) if sets else np.empty(0, dtype=np.int64),
            np.array([len(s) for _, s in sets], dtype=np.int64),
        )

    def __len__(self) -> int:
        return len(self.subspaces)

    def __repr__(self) -> str:
        return f"SearchSpace({list(self.subspaces)!r})"

    def block(self, k: int) -> slice:
        return slice(self.offsets[k], self.offsets[k] + self.subspaces[k].dim)

    @property
    def point_set_indices(self) -> tuple[int, ...]:
        return tuple(k for k, s in enumerate(self.subspaces) if isinstance(s, PointSet))

    def point_set(self, k: int) -> PointSet:
        sub = self.subspaces[k]
        if not isinstance(sub, PointSet):
            raise InvalidSubspaceError(f"subspace {k} is {sub.kind}, not a point set")
        return sub

    def to_json(self) -> dict:
        return {"subspaces": [s.to_json() for s in self.subspaces]}

    @classmethod
    def from_json(cls, data: dict) -> "SearchSpace":
        try:
            raw = data["subspaces"]
        except (KeyError, TypeError) as exc:
            raise ConfigurationError("search-space JSON needs a 'subspaces' list") from exc
        subs: list[Subspace] = []
        for i, entry in enumerate(raw):
            kind = entry.get("type")
            if kind == "points":
                subs.append(PointSet(entry["points"]))
            elif kind == "continuous":
                subs.append(Continuous(entry["dim"]))
            else:
                raise ConfigurationError(f"subspace {i}: unknown type {kind!r}")
        return cls(subs)


def load_space(path: Union[str, Path]) -> SearchSpace:
    with open(path) as fh:
        return SearchSpace.from_json(json.load(fh))


def save_space(space: SearchSpace, path: Union[str, Path]) -> None:
    with open(path, "w") as fh:
        json.dump(space.to_json(), fh)


def encode_subspace(x_k: np.ndarray, subspace: Subspace) -> np.ndarray:
    """Nearest point of ``subspace`` to ``x_k`` (lowest index on ties)."""
    x_k = np.asarray(x_k, dtype=float)
    if isinstance(subspace, Continuous):
        return x_k.copy()
    return subspace.points[subspace.nearest(x_k.reshape(1, -1))[0]].copy()


def encode(x: np.ndarray, space: SearchSpace) -> np.ndarray:
    """Blockwise nearest-point encoding; accepts one vector or a batch of rows."""
    out = np.array(x, dtype=np.float64, order="C")
    if space._packed[1].size:
        _kernels.encode_blocks(np.atleast_2d(out), *space._packed)
    return out


def closest_point_to_mean(mean: np.ndarray, space: SearchSpace, k: int) -> int:
    ps = space.point_set(k)
    return int(ps.nearest(np.asarray(mean, dtype=float)[space.block(k)].reshape(1, -1))[0])


def voronoi_neighbors(subspace: PointSet, closest_index: int) -> NeighborSet:
    if not 0 <= closest_index < len(subspace):
        raise IndexError(f"closest_index {closest_index} out of range for {subspace!r}")
    return NeighborSet(closest_index, subspace.neighbors(closest_index))


def _shares_facet(points: np.ndarray, a: int, b: int) -> bool:
    """Exact facet test between the cells of ``points[a]`` and ``points[b]``.

    The cells share a facet iff some q on the bisector of (a, b) is strictly
    closer to a than to every other point. We maximize the smallest slack t of
    ``|q - s_l|^2 - |q - s_a|^2 >= t`` over the bisector as a linear program.
    """
    n, dim = points.shape
    if n == 2:
        return True
    # translate/scale so the LP tolerance is scale-free
    rel = points - points[a]
    scale = float(np.max(np.linalg.norm(rel, axis=1)))
    rel = rel / scale

    # Gabriel shortcut: the segment midpoint is a witness when it is strictly inside
    mid = 0.5 * rel[b]
    if _kernels.facet_gap(mid.reshape(1, -1), rel, a, b)[0] > _FACET_TOL:
        return True

    others = np.array([l for l in range(n) if l != a and l != b])
    sq = np.sum(rel * rel, axis=1)
    # |q - s_l|^2 - |q|^2 = |s_l|^2 - 2 s_l.q >= t   <=>   2 s_l.q + t <= |s_l|^2
    a_ub = np.hstack([2 * rel[others], np.ones((others.size, 1))])
    b_ub = sq[others]
    a_eq = np.hstack([2 * rel[b][None, :], np.zeros((1, 1))])
    b_eq = sq[[b]]
    cost = np.zeros(dim + 1)
    cost[-1] = -1.0
    res = linprog(
        cost,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=[(None, None)] * dim + [(None, 1.0)],
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        # the LP is always feasible and bounded; anything else is a solver failure
        raise RuntimeError(f"facet LP failed for pair ({a}, {b}): {res.message}")
    return -res.fun > _FACET_TOL
