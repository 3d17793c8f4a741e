"""Benchmark functions and seeded problem instances on sets of points."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import ConfigurationError
from .space import Continuous, PointSet, SearchSpace

FUNCTIONS = ("sphere", "ellipsoid", "reversed-ellipsoid", "rosenbrock")
MODES = ("discrete", "mixed")
MIXED_SUCCESS_THRESHOLD = 1e-4


def _coefficients(n: int, reverse: bool = False) -> np.ndarray:
    if n == 1:
        return np.ones(1)
    expo = np.arange(n) / (n - 1)
    if reverse:
        expo = expo[::-1]
    return 1000.0**expo


def sphere(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sum(x * x, axis=-1)


def ellipsoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sum((_coefficients(x.shape[-1]) * x) ** 2, axis=-1)


def reversed_ellipsoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sum((_coefficients(x.shape[-1], reverse=True) * x) ** 2, axis=-1)


def rosenbrock(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    head, tail = x[..., :-1], x[..., 1:]
    return np.sum(100.0 * (tail - head**2) ** 2 + (head - 1.0) ** 2, axis=-1)


_IMPL: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sphere": sphere,
    "ellipsoid": ellipsoid,
    "reversed-ellipsoid": reversed_ellipsoid,
    "rosenbrock": rosenbrock,
}


@dataclass(frozen=True)
class BenchmarkFunction:
    name: str
    dim: int

    def __post_init__(self):
        if self.name not in _IMPL:
            raise ConfigurationError(f"unknown function {self.name!r}; choose from {FUNCTIONS}")
        if self.dim < 2 and self.name == "rosenbrock":
            raise ConfigurationError("rosenbrock needs dim >= 2")

    @property
    def optimum(self) -> np.ndarray:
        return np.ones(self.dim) if self.name == "rosenbrock" else np.zeros(self.dim)

    @property
    def optimum_value(self) -> float:
        return 0.0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Value for one vector or row-wise values for a batch."""
        return _IMPL[self.name](x)


def evaluate(function: str, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(BenchmarkFunction(function, x.shape[-1])(x))


def generate_point_set(n_k: int, l_k: int, optimum_block: np.ndarray, rng: np.random.Generator) -> PointSet:
    """``l_k - 1`` uniform draws on [-5, 5]^n_k plus the optimum block."""
    if l_k < 1:
        raise ConfigurationError("L_k must be >= 1")
    opt = np.asarray(optimum_block, dtype=float).reshape(n_k)
    pts = [opt]
    while len(pts) < l_k:
        cand = rng.uniform(-5.0, 5.0, n_k)
        # a repeated draw is measure-zero; redraw keeps the set valid
        if not any(np.array_equal(cand, p) for p in pts):
            pts.append(cand)
    return PointSet(np.array(pts))


@dataclass
class ProblemInstance:
    function: BenchmarkFunction
    space: SearchSpace
    mode: str
    n_k: int
    l_k: int
    seed: int

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return self.function(x)

    def is_success(self, encoded: np.ndarray, value: float) -> bool:
        if self.mode == "discrete":
            # the optimum is the only point scoring the optimal value, so check that first
            return value == self.function.optimum_value and bool(np.array_equal(encoded, self.function.optimum))
        return value <= MIXED_SUCCESS_THRESHOLD

    def to_json(self) -> dict:
        return {
            "function": self.function.name,
            "mode": self.mode,
            "N": self.function.dim,
            "Nk": self.n_k,
            "Lk": self.l_k,
            "seed": self.seed,
            **self.space.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "ProblemInstance":
        space = SearchSpace.from_json(data)
        fn = BenchmarkFunction(data["function"], int(data["N"]))
        if space.total_dim != fn.dim:
            raise ConfigurationError("instance dimension does not match its search space")
        return cls(fn, space, data["mode"], int(data["Nk"]), int(data["Lk"]), int(data["seed"]))

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def build_instance(
    function: str,
    n: int,
    n_k: int,
    l_k: int,
    mode: str,
    seed,
    continuous_first: bool = False,
) -> ProblemInstance:
    """Random instance whose point sets each contain the optimum's block.

    ``seed`` may be an int or a ``numpy.random.SeedSequence``. Mixed instances
    put the point sets first and the continuous block last; pass
    ``continuous_first=True`` for the mirrored layout.
    """
    fn = BenchmarkFunction(function, n)
    if n_k < 1:
        raise ConfigurationError("N_k must be >= 1")
    if mode == "discrete":
        if n % n_k:
            raise ConfigurationError(f"discrete mode needs N_k | N, got N={n}, N_k={n_k}")
        n_sets = n // n_k
    elif mode == "mixed":
        n_sets = n // n_k // 2
        if n_sets < 1:
            raise ConfigurationError(f"mixed mode needs floor(N/N_k/2) >= 1, got N={n}, N_k={n_k}")
    else:
        raise ConfigurationError(f"unknown mode {mode!r}; choose from {MODES}")

    rng = np.random.default_rng(seed)
    opt = fn.optimum
    rest = n - n_sets * n_k
    lead = rest if continuous_first else 0
    subs: list = [
        generate_point_set(n_k, l_k, opt[lead + i * n_k : lead + (i + 1) * n_k], rng) for i in range(n_sets)
    ]
    if rest:
        if continuous_first:
            subs.insert(0, Continuous(rest))
        else:
            subs.append(Continuous(rest))
    seed_value = seed if isinstance(seed, (int, np.integer)) else -1
    return ProblemInstance(fn, SearchSpace(subs), mode, n_k, l_k, int(seed_value))
