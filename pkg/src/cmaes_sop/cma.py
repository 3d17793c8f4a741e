"""Reference CMA-ES on raw real vectors.

The update rules are exposed as plain functions so the set-of-points
optimizer can run exactly the same arithmetic as the plain :class:`CMA`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import InvalidDimensionError, InvalidFitnessError, NumericalError


@dataclass
class DistributionState:
    mean: np.ndarray
    step_size: float
    covariance: np.ndarray
    path_sigma: np.ndarray
    path_c: np.ndarray
    iteration: int = 0

    @classmethod
    def initial(
        cls,
        mean: np.ndarray,
        step_size: float,
        covariance: Optional[np.ndarray] = None,
    ) -> "DistributionState":
        mean = np.array(mean, dtype=float)
        n = mean.shape[0]
        if step_size <= 0:
            raise ValueError("step_size must be positive")
        cov = np.eye(n) if covariance is None else np.array(covariance, dtype=float)
        if cov.shape != (n, n):
            raise ValueError(f"covariance must have shape {(n, n)}, got {cov.shape}")
        return cls(mean, float(step_size), cov, np.zeros(n), np.zeros(n), 0)

    def copy(self) -> "DistributionState":
        return DistributionState(
            self.mean.copy(),
            self.step_size,
            self.covariance.copy(),
            self.path_sigma.copy(),
            self.path_c.copy(),
            self.iteration,
        )


@dataclass(frozen=True)
class StrategyParams:
    dim: int
    lam: int
    mu: int
    weights: np.ndarray = field(repr=False)
    mu_eff: float
    c_m: float
    c_sigma: float
    d_sigma: float
    c_c: float
    c_1: float
    c_mu: float
    chi_n: float


def chi_n(dim: int) -> float:
    """Approximation of E||N(0, I_dim)||."""
    if dim < 1:
        raise InvalidDimensionError(f"dim must be >= 1, got {dim}")
    return math.sqrt(dim) * (1.0 - 1.0 / (4.0 * dim) + 1.0 / (21.0 * dim * dim))


def default_strategy_params(dim: int, population_size: Optional[int] = None) -> StrategyParams:
    """Default hyperparameters with positive recombination weights only."""
    if dim < 1:
        raise InvalidDimensionError(f"dim must be >= 1, got {dim}")
    n = dim
    lam = population_size if population_size is not None else 4 + int(math.floor(3 * math.log(n)))
    if lam < 2:
        raise ValueError("population_size must be >= 2")
    mu = lam // 2
    raw = np.array([math.log((lam + 1) / 2) - math.log(i) for i in range(1, mu + 1)])
    weights = raw / raw.sum()
    mu_eff = 1.0 / float(np.sum(weights**2))

    c_sigma = (mu_eff + 2) / (n + mu_eff + 5)
    d_sigma = 1 + 2 * max(0.0, math.sqrt((mu_eff - 1) / (n + 1)) - 1) + c_sigma
    c_c = (4 + mu_eff / n) / (n + 4 + 2 * mu_eff / n)
    c_1 = 2 / ((n + 1.3) ** 2 + mu_eff)
    c_mu = min(1 - c_1, 2 * (mu_eff - 2 + 1 / mu_eff) / ((n + 2) ** 2 + mu_eff))
    return StrategyParams(
        dim=n,
        lam=lam,
        mu=mu,
        weights=weights,
        mu_eff=mu_eff,
        c_m=1.0,
        c_sigma=c_sigma,
        d_sigma=d_sigma,
        c_c=c_c,
        c_1=c_1,
        c_mu=c_mu,
        chi_n=chi_n(n),
    )


@dataclass(frozen=True)
class Eigen:
    """Symmetric eigendecomposition ``C = B diag(eigvals) B^T``."""

    basis: np.ndarray
    eigvals: np.ndarray

    @property
    def sqrt(self) -> np.ndarray:
        root = (self.basis * np.sqrt(self.eigvals)) @ self.basis.T
        return (root + root.T) / 2

    @property
    def inverse(self) -> np.ndarray:
        inv = (self.basis / self.eigvals) @ self.basis.T
        return (inv + inv.T) / 2


def decompose(covariance: np.ndarray, require_pd: bool = True) -> Eigen:
    """Eigendecompose a symmetric covariance matrix.

    Raises NumericalError on non-finite input or a failed factorization, and
    also on a non-positive eigenvalue unless ``require_pd`` is false.
    """
    if not np.all(np.isfinite(covariance)):
        raise NumericalError("covariance has non-finite entries")
    try:
        eigvals, basis = np.linalg.eigh(covariance)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    if not np.all(np.isfinite(eigvals)):
        raise NumericalError("eigendecomposition produced non-finite eigenvalues")
    if require_pd and eigvals[0] <= 0:
        raise NumericalError(f"covariance is not positive definite (min eigenvalue {eigvals[0]:.3e})")
    return Eigen(basis, eigvals)


@dataclass
class Population:
    """One generation of raw samples; row ``i`` is sample ``i``."""

    z: np.ndarray
    y: np.ndarray
    x: np.ndarray

    def __len__(self) -> int:
        return self.x.shape[0]


def sample_population(
    state: DistributionState,
    params: StrategyParams,
    rng: np.random.Generator,
    eigen: Optional[Eigen] = None,
) -> Population:
    if eigen is None:
        eigen = decompose(state.covariance)
    z = rng.standard_normal((params.lam, params.dim))
    y = z @ eigen.sqrt  # sqrt(C) is symmetric, so rows are sqrt(C) z
    x = state.step_size * y + state.mean
    return Population(z, y, x)


def rank_samples(fitness) -> np.ndarray:
    """Indices sorted by ascending fitness, ties kept in original order."""
    f = np.asarray(fitness, dtype=float)
    if np.any(np.isnan(f)):
        raise InvalidFitnessError("fitness contains NaN")
    return np.argsort(f, kind="stable")


def heaviside(path_sigma_new: np.ndarray, c_sigma: float, iteration: int, dim: int, chi: float) -> int:
    norm = float(np.linalg.norm(path_sigma_new))
    denom = math.sqrt(1 - (1 - c_sigma) ** (2 * (iteration + 1)))
    return int(norm / denom < (1.4 + 2 / (dim + 1)) * chi)


def update_evolution_paths(
    state: DistributionState,
    params: StrategyParams,
    z_sel: np.ndarray,
    y_sel: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Return ``(path_sigma, path_c, h_sigma)``; ``*_sel`` hold the mu best rows in rank order."""
    w = params.weights
    cs, cc = params.c_sigma, params.c_c
    p_sigma = (1 - cs) * state.path_sigma + math.sqrt(cs * (2 - cs) * params.mu_eff) * (w @ z_sel)
    h_sigma = heaviside(p_sigma, cs, state.iteration, params.dim, params.chi_n)
    p_c = (1 - cc) * state.path_c + h_sigma * math.sqrt(cc * (2 - cc) * params.mu_eff) * (w @ y_sel)
    return p_sigma, p_c, h_sigma


def update_mean(state: DistributionState, params: StrategyParams, x_sel: np.ndarray) -> np.ndarray:
    return state.mean + params.c_m * (params.weights @ (x_sel - state.mean))


def update_step_size(state: DistributionState, params: StrategyParams, path_sigma_new: np.ndarray) -> float:
    exponent = (params.c_sigma / params.d_sigma) * (float(np.linalg.norm(path_sigma_new)) / params.chi_n - 1)
    try:
        sigma = state.step_size * math.exp(exponent)
    except OverflowError as exc:
        raise NumericalError("step-size overflow") from exc
    if not math.isfinite(sigma) or sigma <= 0:
        raise NumericalError(f"step-size left (0, inf): {sigma}")
    return sigma


def update_covariance(
    state: DistributionState,
    params: StrategyParams,
    y_sel: np.ndarray,
    path_c_new: np.ndarray,
    h_sigma: int,
) -> np.ndarray:
    c = state.covariance
    c1, cmu, cc = params.c_1, params.c_mu, params.c_c
    delta = (1 - h_sigma) * c1 * cc * (2 - cc)
    rank_mu = (y_sel.T * params.weights) @ y_sel
    new = (
        (1 + delta) * c
        + c1 * (np.outer(path_c_new, path_c_new) - c)
        + cmu * (rank_mu - float(np.sum(params.weights)) * c)
    )
    return (new + new.T) / 2


def cma_update(
    state: DistributionState,
    params: StrategyParams,
    population: Population,
    fitness,
) -> DistributionState:
    """One full CMA-ES generation update from raw samples; returns a new state."""
    order = rank_samples(fitness)[: params.mu]
    z_sel, y_sel, x_sel = population.z[order], population.y[order], population.x[order]
    p_sigma, p_c, h_sigma = update_evolution_paths(state, params, z_sel, y_sel)
    mean = update_mean(state, params, x_sel)
    sigma = update_step_size(state, params, p_sigma)
    cov = update_covariance(state, params, y_sel, p_c, h_sigma)
    return DistributionState(mean, sigma, cov, p_sigma, p_c, state.iteration + 1)


class CMA:
    """Plain CMA-ES with an ask/tell interface over raw vectors.

    Example::

        opt = CMA(mean=np.full(10, 3.0), sigma=2.0, seed=1)
        for _ in range(500):
            x = opt.ask()
            opt.tell(np.sum(x**2, axis=1))
    """

    def __init__(
        self,
        mean,
        sigma: float,
        covariance: Optional[np.ndarray] = None,
        params: Optional[StrategyParams] = None,
        seed=None,
    ):
        self.state = DistributionState.initial(mean, sigma, covariance)
        self.params = params or default_strategy_params(self.state.mean.shape[0])
        if self.params.dim != self.state.mean.shape[0]:
            raise InvalidDimensionError("params.dim does not match the mean length")
        self._rng = np.random.default_rng(seed)
        self._eigen: Optional[Eigen] = None
        self._population: Optional[Population] = None

    @property
    def eigen(self) -> Eigen:
        if self._eigen is None:
            self._eigen = decompose(self.state.covariance)
        return self._eigen

    def ask(self) -> np.ndarray:
        self._population = sample_population(self.state, self.params, self._rng, self.eigen)
        return self._population.x.copy()

    def tell(self, fitness) -> None:
        if self._population is None:
            raise RuntimeError("tell() called before ask()")
        fitness = np.asarray(fitness, dtype=float)
        if fitness.shape != (self.params.lam,):
            raise InvalidFitnessError(f"expected {self.params.lam} fitness values, got shape {fitness.shape}")
        self.state = cma_update(self.state, self.params, self._population, fitness)
        self._population = None
        self._eigen = None
