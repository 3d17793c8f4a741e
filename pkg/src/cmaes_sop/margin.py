"""Margin correction of the covariance toward Voronoi-neighbor mid-points."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._normal import norm_cdf, upper_quantile
from .cma import DistributionState, decompose
from .space import SearchSpace, closest_point_to_mean, voronoi_neighbors

ALPHA_MIN = 1e-12
ALPHA_MAX = 0.49


@dataclass
class MarginState:
    """Per-point-set margins ``alpha`` plus the adaptation constants."""

    alpha: np.ndarray
    alpha_target: float
    beta: float
    alpha_min: float = ALPHA_MIN
    alpha_max: float = ALPHA_MAX

    @classmethod
    def default(cls, n_point_sets: int, dim: int, lam: int) -> "MarginState":
        target = 1.0 / (dim * lam)
        return cls(np.full(n_point_sets, target), target, 1.0 + 1.0 / dim)

    def __post_init__(self):
        self.alpha = np.array(self.alpha, dtype=float)
        if not 0 < self.alpha_min <= self.alpha_max < 0.5:
            raise ValueError("margin bounds must satisfy 0 < alpha_min <= alpha_max < 0.5")
        if self.beta <= 1:
            raise ValueError("beta must exceed 1")
        if np.any(self.alpha < self.alpha_min) or np.any(self.alpha > self.alpha_max):
            raise ValueError("initial margins lie outside [alpha_min, alpha_max]")


@dataclass(frozen=True)
class CorrectionDirection:
    xi: np.ndarray = field(repr=False)
    midpoint: np.ndarray
    mahalanobis: float
    prob: float


def midpoint(mean_block: np.ndarray, neighbor: np.ndarray) -> np.ndarray:
    return (np.asarray(mean_block, dtype=float) + np.asarray(neighbor, dtype=float)) / 2


def xi_direction(
    mean: np.ndarray, midpoint_block: np.ndarray, step_size: float, space: SearchSpace, k: int
) -> np.ndarray:
    """Zero-padded ``(midpoint - mean_k) / sigma`` on block ``k``."""
    sl = space.block(k)
    xi = np.zeros(space.total_dim)
    xi[sl] = (np.asarray(midpoint_block, dtype=float) - np.asarray(mean, dtype=float)[sl]) / step_size
    return xi


def mahalanobis_distance(covariance: Optional[np.ndarray], xi: np.ndarray, inverse: Optional[np.ndarray] = None) -> float:
    """``sqrt(xi^T C^-1 xi)``; pass ``inverse`` to reuse a known ``C^-1``."""
    if inverse is None:
        inverse = decompose(covariance).inverse
    return math.sqrt(max(float(xi @ inverse @ xi), 0.0))


def marginal_probability(d: float) -> float:
    return norm_cdf(-d)


def correction_coefficient(d: float, gamma: float) -> float:
    return (d * d - gamma * gamma) / (d * d * gamma * gamma)


def correct_covariance(covariance: np.ndarray, xi: np.ndarray, d: float, gamma_alpha: float) -> np.ndarray:
    """Rank-one enlargement along ``xi`` so that ``xi^T C'^-1 xi = gamma_alpha^2``."""
    if not d >= gamma_alpha > 0:
        raise ValueError(f"margin correction needs d >= gamma > 0, got d={d}, gamma={gamma_alpha}")
    new = covariance + correction_coefficient(d, gamma_alpha) * np.outer(xi, xi)
    return (new + new.T) / 2


def _sherman_morrison(inverse: np.ndarray, xi: np.ndarray, coef: float) -> np.ndarray:
    u = inverse @ xi
    new = inverse - (coef / (1.0 + coef * float(xi @ u))) * np.outer(u, u)
    return (new + new.T) / 2


def apply_margin_correction(
    state: DistributionState,
    space: SearchSpace,
    alpha_k: float,
    k: int,
    rng: np.random.Generator,
    inverse: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Correct ``state.covariance`` toward every Voronoi neighbor of subspace ``k``.

    Neighbors are visited in a shuffled order, and each distance is measured
    against the covariance as already corrected for earlier neighbors. Returns
    ``(covariance, inverse, probs)`` where ``probs`` are the neighbor
    probabilities recomputed after the whole pass. ``state.covariance`` is
    replaced in place.
    """
    ps = space.point_set(k)
    sl = space.block(k)
    close = closest_point_to_mean(state.mean, space, k)
    nbrs = np.array(voronoi_neighbors(ps, close).neighbors, dtype=np.int64)
    cov = state.covariance
    if inverse is None:
        inverse = decompose(cov).inverse
    if nbrs.size == 0:
        return cov, inverse, []

    # xi is zero off block k, so every product only needs the block rows/columns
    mean_k = state.mean[sl]
    blocks = (midpoint(mean_k, ps.points[nbrs]) - mean_k) / state.step_size
    gamma = upper_quantile(alpha_k)
    cov = cov.copy()
    inverse = inverse.copy()
    touched = False
    for b in rng.permutation(nbrs.size):
        xb = blocks[b]
        u = inverse[:, sl] @ xb
        d2 = max(float(xb @ u[sl]), 0.0)
        d = math.sqrt(d2)
        if marginal_probability(d) < alpha_k and d > gamma:
            coef = correction_coefficient(d, gamma)
            cov[sl, sl] += coef * np.outer(xb, xb)
            inverse -= (coef / (1.0 + coef * d2)) * np.outer(u, u)
            touched = True
    if touched:
        state.covariance = cov
    else:
        cov = state.covariance
    inner = blocks @ inverse[sl, sl]
    d_final = np.sqrt(np.maximum(np.sum(inner * blocks, axis=1), 0.0))
    probs = [marginal_probability(float(d)) for d in d_final]
    return cov, inverse, probs


def adapt_margin(
    alpha_k: float,
    probs,
    alpha_target: float,
    beta: float,
    alpha_min: float = ALPHA_MIN,
    alpha_max: float = ALPHA_MAX,
) -> float:
    if len(probs) == 0:
        return alpha_k
    if alpha_target <= float(np.mean(probs)):
        new = alpha_k / beta
    else:
        new = beta * alpha_k
    return min(max(new, alpha_min), alpha_max)
