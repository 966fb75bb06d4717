"""Certificates and metrics used to audit solver output."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    BargainingGame,
    CostModel,
    NonFiniteValue,
    as_coords,
    project_simplex_coords,
)

# A point counts as Pareto stationary when the best convex combination of
# agent gradients has norm at most this.
STATIONARY_RESIDUAL_TOL = 1e-4


@dataclass(frozen=True)
class StationarityCertificate:
    """Least-norm convex combination of agent gradients at a point.

    residual is the Euclidean norm of sum_i weights[i] * grad_i; a residual
    of zero means zero lies in the convex hull of the gradients.
    """

    residual: float
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True).reshape(-1)
        if not np.all(np.isfinite(w)):
            raise NonFiniteValue("certificate weights must be finite")
        if np.any(w < -1e-9) or abs(float(w.sum()) - 1.0) > 1e-9:
            raise ValueError("certificate weights must lie on the simplex")
        if not (np.isfinite(self.residual) and self.residual >= 0.0):
            raise ValueError("certificate residual must be a nonnegative real")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def is_stationary(self) -> bool:
        return self.residual <= STATIONARY_RESIDUAL_TOL


def _residual_of(G: np.ndarray, beta: np.ndarray) -> float:
    return float(np.linalg.norm(G @ beta))


def _clean_weights(beta: np.ndarray) -> np.ndarray:
    w = np.maximum(beta, 0.0)
    s = float(w.sum())
    if s <= 0.0:
        return np.full(beta.shape[0], 1.0 / beta.shape[0])
    return w / s

def _solve_on_support(M: np.ndarray, support: tuple) -> np.ndarray | None:
    # Equality-constrained least squares on one face of the simplex:
    # minimize b' M b subject to sum(b) = 1, b zero off the support.
    k = len(support)
    n = M.shape[0]
    idx = list(support)
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = 2.0 * M[np.ix_(idx, idx)]
    K[:k, k] = 1.0
    K[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    beta_s = sol[:k]
    if not np.all(np.isfinite(beta_s)) or float(np.min(beta_s)) < -1e-9:
        return None
    beta = np.zeros(n)
    beta[idx] = np.maximum(beta_s, 0.0)
    s = float(beta.sum())
    if s <= 0.0:
        return None
    return beta / s


def stationarity_residual(game: BargainingGame, x, max_iters: int = 20_000) -> StationarityCertificate:
    """Certify Pareto stationarity of x by a simplex-constrained least-norm fit.

    Solves min over simplex weights beta of ||sum_i beta_i grad_i(x)|| via
    projected gradient descent on the convex quadratic from the uniform
    start, then re-solves the identified active face exactly to pin the
    minimum down. Deterministic.
    """
    arr = as_coords(x)
    G = np.column_stack(
        [np.asarray(m.gradient(arr), dtype=float) for m in game.agents]
    )
    if not np.all(np.isfinite(G)):
        raise NonFiniteValue("agent gradients must be finite")
    n_agents = G.shape[1]
    if n_agents == 1:
        w = np.array([1.0])
        return StationarityCertificate(residual=_residual_of(G, w), weights=w)

    M = G.T @ G
    lam_max = float(np.linalg.eigvalsh(M)[-1])
    if lam_max <= 0.0:
        w = np.full(n_agents, 1.0 / n_agents)
        return StationarityCertificate(residual=0.0, weights=w)

    step = 1.0 / (2.0 * lam_max)
    beta = np.full(n_agents, 1.0 / n_agents)
    for _ in range(max_iters):
        nxt = project_simplex_coords(beta - step * (2.0 * (M @ beta)))
        if float(np.linalg.norm(nxt - beta)) <= 1e-10 * step:
            beta = nxt
            break
        beta = nxt

    best = _clean_weights(beta)
    best_r = _residual_of(G, best)

    # Candidate active sets: the support the descent found (at two
    # thresholds), the full face, and every vertex.
    candidates = {
        tuple(np.nonzero(beta > 1e-10)[0]),
        tuple(np.nonzero(beta > 1e-6)[0]),
        tuple(range(n_agents)),
    }
    candidates.update({(j,) for j in range(n_agents)})
    for support in sorted(candidates):
        if not support:
            continue
        cand = _solve_on_support(M, support)
        if cand is None:
            continue
        r = _residual_of(G, cand)
        if r < best_r:
            best, best_r = cand, r

    return StationarityCertificate(residual=best_r, weights=best)


def ksbs_ratio_spread(game: BargainingGame, x) -> float:
    """Spread of proportional-gain ratios (d_i - cost_i(x)) / (d_i - ideal_i).

    Zero spread means every agent keeps the same share of its attainable
    gain, the equal-ratio condition the proportional-fairness baseline
    drives toward.
    """
    arr = as_coords(x)
    costs = game.costs_at(arr)
    d = np.asarray(game.disagreement, dtype=float)
    ideal = np.array(
        [m.evaluate(ps.coords) for m, ps in zip(game.agents, game.preferred_states)]
    )
    gaps = d - ideal
    if np.any(gaps <= 0.0):
        raise ValueError(
            "degenerate ideal gap: some disagreement value does not exceed "
            "the cost at that agent's preferred state"
        )
    ratios = (d - costs) / gaps
    return float(ratios.max() - ratios.min())


def relative_error(x_dir, x_comp, x0) -> float:
    """Displacement of x_comp from x_dir, relative to how far x_dir moved from x0."""
    a = as_coords(x_dir)
    b = as_coords(x_comp)
    o = as_coords(x0)
    denom = float(np.linalg.norm(a - o))
    if denom == 0.0:
        raise ZeroDivisionError("x_dir equals x0, relative error is undefined")
    return float(np.linalg.norm(a - b)) / denom


def check_bounded(trajectory, preferred_states, x0) -> bool:
    """True iff the whole trajectory stays inside the natural bounding ball.

    The ball is centered at the centroid of the preferred states with a
    radius reaching the farthest of x0 and the preferred states, plus a
    1e-9 margin.
    """
    points = [as_coords(p) for p in trajectory]
    if not points:
        raise ValueError("trajectory must be nonempty")
    stars = np.stack([as_coords(p) for p in preferred_states])
    centroid = stars.mean(axis=0)
    radius = max(
        float(np.linalg.norm(as_coords(x0) - centroid)),
        max(float(np.linalg.norm(s - centroid)) for s in stars),
    ) + 1e-9
    dists = np.linalg.norm(np.stack(points) - centroid, axis=1)
    return bool(np.all(dists <= radius))


def finite_diff_gradient(model: CostModel, x, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a model, one coordinate at a time."""
    if h <= 0.0:
        raise ValueError("finite-difference step must be positive")
    arr = as_coords(x).copy()
    grad = np.zeros_like(arr)
    for j in range(arr.size):
        old = arr[j]
        arr[j] = old + h
        fp = float(model.evaluate(arr))
        arr[j] = old - h
        fm = float(model.evaluate(arr))
        arr[j] = old
        grad[j] = (fp - fm) / (2.0 * h)
    return grad
