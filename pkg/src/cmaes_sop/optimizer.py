"""CMA-ES on sets of points: encoding, margin correction and margin adaptation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .cma import (
    DistributionState,
    Eigen,
    Population,
    StrategyParams,
    cma_update,
    decompose,
    default_strategy_params,
    sample_population,
)
from .exceptions import InvalidFitnessError, InvalidStateError, NumericalError
from .margin import MarginState, adapt_margin, apply_margin_correction
from .space import SearchSpace, encode

MIN_EIGENVALUE = 1e-30


class TerminationReason(str, enum.Enum):
    SUCCESS = "success"
    EVALUATION_BUDGET = "evaluation-budget"
    EIGENVALUE_COLLAPSE = "eigenvalue-collapse"
    NUMERICAL_ERROR = "numerical-error"
    STILL_RUNNING = "still-running"


@dataclass
class BestSoFar:
    solution: Optional[np.ndarray] = None
    fitness: float = math.inf
    evaluations: int = 0

    def offer(self, solutions: np.ndarray, fitness: np.ndarray, evals_before: int) -> bool:
        i = int(np.argmin(fitness))
        if fitness[i] < self.fitness:
            self.solution = solutions[i].copy()
            self.fitness = float(fitness[i])
            self.evaluations = evals_before + i + 1
            return True
        return False


@dataclass
class Snapshot:
    iteration: int
    evaluations: int
    step_size: float
    min_eigenvalue: float
    max_eigenvalue: float
    alpha: tuple[float, ...]
    best_fitness: float


@dataclass
class OptimizerConfig:
    space: SearchSpace
    mean: np.ndarray
    step_size: float = 2.0
    covariance: Optional[np.ndarray] = None
    strategy: Optional[StrategyParams] = None
    margin: Optional[MarginState] = None
    max_evaluations: Optional[int] = None
    min_eigenvalue_threshold: float = MIN_EIGENVALUE
    seed: Optional[int] = None
    margin_enabled: bool = True
    adaptation_enabled: bool = True
    success: Optional[Callable[[np.ndarray, float], bool]] = field(default=None, repr=False)

    def __post_init__(self):
        n = self.space.total_dim
        self.mean = np.array(self.mean, dtype=float)
        if self.mean.shape != (n,):
            raise ValueError(f"mean must have length {n}")
        if self.strategy is None:
            self.strategy = default_strategy_params(n)
        if self.margin is None:
            self.margin = MarginState.default(len(self.space.point_set_indices), n, self.strategy.lam)
        if self.max_evaluations is None:
            self.max_evaluations = n * 10_000
        if self.max_evaluations < self.strategy.lam:
            raise ValueError("max_evaluations must be at least the population size")
        if self.min_eigenvalue_threshold <= 0:
            raise ValueError("min_eigenvalue_threshold must be positive")


def check_termination(
    succeeded: bool,
    evaluations: int,
    max_evaluations: int,
    state: DistributionState,
    eigen: Optional[Eigen],
    numerical_error: bool = False,
    min_eigenvalue: float = MIN_EIGENVALUE,
) -> TerminationReason:
    """Termination reason in precedence order; ``eigen`` decomposes ``state.covariance``."""
    if succeeded:
        return TerminationReason.SUCCESS
    if evaluations >= max_evaluations:
        return TerminationReason.EVALUATION_BUDGET
    if eigen is not None and state.step_size**2 * eigen.eigvals[0] < min_eigenvalue:
        return TerminationReason.EIGENVALUE_COLLAPSE
    if numerical_error or eigen is None:
        return TerminationReason.NUMERICAL_ERROR
    return TerminationReason.STILL_RUNNING


class CMAESSoP:
    """Ask-and-tell CMA-ES over a product of point sets and continuous blocks.

    ``ask`` returns the encoded candidates; the raw Gaussian samples stay
    inside and drive the distribution update in ``tell``. With
    ``margin_enabled=False`` this is plain CMA-ES with nearest-point encoding.

    Example::

        space = SearchSpace([PointSet(pts_a), PointSet(pts_b), Continuous(4)])
        opt = CMAESSoP(OptimizerConfig(space, mean=np.full(space.total_dim, 3.0), seed=0))
        while not opt.stopped:
            x = opt.ask()
            opt.tell(f(x))
    """

    def __init__(self, config: OptimizerConfig):
        self.config = config
        self.space = config.space
        self.params: StrategyParams = config.strategy
        self.margin: MarginState = MarginState(
            config.margin.alpha.copy(),
            config.margin.alpha_target,
            config.margin.beta,
            config.margin.alpha_min,
            config.margin.alpha_max,
        )
        self.state = DistributionState.initial(config.mean, config.step_size, config.covariance)
        seq = config.seed if isinstance(config.seed, np.random.SeedSequence) else np.random.SeedSequence(config.seed)
        self._rng = np.random.default_rng(seq)
        self._shuffle_rng = np.random.default_rng(seq.spawn(1)[0])
        self.evaluations = 0
        self.best = BestSoFar()
        self.history: list[Snapshot] = []
        self._pending: Optional[tuple[Population, np.ndarray]] = None
        self._numerical_error = False
        self._succeeded = False
        try:
            self._eigen: Optional[Eigen] = decompose(self.state.covariance, require_pd=False)
        except NumericalError:
            self._eigen = None
            self._numerical_error = True
        self.termination = self._check()

    @property
    def population_size(self) -> int:
        return self.params.lam

    @property
    def stopped(self) -> bool:
        return self.termination is not TerminationReason.STILL_RUNNING

    def _check(self) -> TerminationReason:
        return check_termination(
            self._succeeded,
            self.evaluations,
            self.config.max_evaluations,
            self.state,
            self._eigen,
            self._numerical_error,
            self.config.min_eigenvalue_threshold,
        )

    def ask(self) -> np.ndarray:
        """``(lambda, N)`` array of encoded candidates."""
        if self.stopped:
            raise InvalidStateError(f"optimizer terminated ({self.termination.value})")
        if self._pending is not None:
            raise InvalidStateError("ask() called twice without tell()")
        pop = sample_population(self.state, self.params, self._rng, self._eigen)
        encoded = encode(pop.x, self.space)
        self._pending = (pop, encoded)
        return encoded.copy()

    def tell(self, fitness) -> None:
        if self._pending is None:
            raise InvalidStateError("tell() called before ask()")
        pop, encoded = self._pending
        f = np.asarray(fitness, dtype=float)
        if f.shape != (self.params.lam,):
            raise InvalidFitnessError(f"expected {self.params.lam} fitness values, got shape {f.shape}")
        if not np.all(np.isfinite(f)):
            raise InvalidFitnessError("fitness values must be finite")
        self._pending = None

        self.best.offer(encoded, f, self.evaluations)
        self.evaluations += self.params.lam
        if self.config.success is not None:
            self._succeeded = any(self.config.success(encoded[i], f[i]) for i in range(f.size))

        try:
            self.state = cma_update(self.state, self.params, pop, f)
            # a round-off non-positive eigenvalue is reported as eigenvalue collapse
            eigen = decompose(self.state.covariance, require_pd=False)
            if eigen.eigvals[0] > 0 and self.config.margin_enabled and self.space.point_set_indices:
                eigen = self._margin_pass(eigen)
            self._eigen = eigen
        except NumericalError:
            self._eigen = None
            self._numerical_error = True

        self.termination = self._check()
        self._record()

    def _margin_pass(self, eigen: Eigen) -> Eigen:
        inverse = eigen.inverse
        touched = False
        for m, k in enumerate(self.space.point_set_indices):
            before = self.state.covariance
            _, inverse, probs = apply_margin_correction(
                self.state, self.space, float(self.margin.alpha[m]), k, self._shuffle_rng, inverse
            )
            touched |= self.state.covariance is not before
            if self.config.adaptation_enabled:
                self.margin.alpha[m] = adapt_margin(
                    float(self.margin.alpha[m]),
                    probs,
                    self.margin.alpha_target,
                    self.margin.beta,
                    self.margin.alpha_min,
                    self.margin.alpha_max,
                )
        return decompose(self.state.covariance, require_pd=False) if touched else eigen

    def _record(self) -> None:
        if self._eigen is not None:
            lo, hi = float(self._eigen.eigvals[0]), float(self._eigen.eigvals[-1])
        else:
            lo = hi = math.nan
        self.history.append(
            Snapshot(
                iteration=self.state.iteration,
                evaluations=self.evaluations,
                step_size=self.state.step_size,
                min_eigenvalue=lo,
                max_eigenvalue=hi,
                alpha=tuple(float(a) for a in self.margin.alpha),
                best_fitness=self.best.fitness,
            )
        )
