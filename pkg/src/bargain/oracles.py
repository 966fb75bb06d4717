"""Information channels: exact directions, comparisons, and the sign estimator."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import (
    CostModel,
    DimensionMismatch,
    InfeasibleState,
    NonFiniteValue,
    PreferredStateError,
    StateSpaceSpec,
    StateVector,
    ZERO_GRADIENT_TOL,
    as_coords,
)

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_EPS = float(np.finfo(float).eps)


def mix_seed(seed: int, *parts: int) -> int:
    """Derive a new 64-bit seed from a base seed and integer labels.

    splitmix64-style finalizer; pure integer arithmetic, so the derivation
    is identical on every platform. Used to give nested samplers (per
    scenario, per iteration, per agent) independent deterministic streams.
    """
    x = int(seed) & _MASK64
    for p in parts:
        x = (x + _GOLDEN + (int(p) & _MASK64)) & _MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        x = z ^ (z >> 31)
    return x


@dataclass(frozen=True)
class DirectionQueryResult:
    """One agent's most preferred direction at one state.

    Either a unit vector (is_zero False) or the zero vector (is_zero True,
    meaning the agent sees no improving direction).
    """

    direction: np.ndarray
    is_zero: bool

    def __post_init__(self):
        arr = np.array(self.direction, dtype=float, copy=True).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValue("direction entries must be finite")
        if self.is_zero:
            if np.any(arr != 0.0):
                raise ValueError("is_zero result must carry a zero vector")
        else:
            nrm = float(np.linalg.norm(arr))
            if abs(nrm - 1.0) > 1e-9:
                raise ValueError(f"non-zero direction must be unit norm, got {nrm!r}")
        arr.flags.writeable = False
        object.__setattr__(self, "direction", arr)


@dataclass(frozen=True)
class ComparisonVerdict:
    """Answer of a binary comparison: +1 better, 0 equal, -1 worse."""

    value: int

    def __post_init__(self):
        if self.value not in (1, 0, -1):
            raise ValueError("verdict must be +1, 0, or -1")

    def __int__(self) -> int:
        return self.value


@dataclass(frozen=True)
class EstimatorConfig:
    """Settings for the comparison-based direction estimator.

    smoothing_radius None means adaptive: 1e-3 * max(1, ||x||) at query
    time, keeping probes small relative to the current state.
    """

    queries_per_call: int = 100
    smoothing_radius: Optional[float] = None
    noise_flip_prob: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.queries_per_call < 1:
            raise ValueError("queries_per_call must be >= 1")
        if self.smoothing_radius is not None and not self.smoothing_radius > 0:
            raise ValueError("smoothing_radius must be positive")
        if not (0.0 <= self.noise_flip_prob < 0.5):
            raise ValueError("noise_flip_prob must lie in [0, 0.5)")


def exact_direction(model: CostModel, x, x_star=None) -> DirectionQueryResult:
    """Most preferred direction of a model at x: -grad/||grad||.

    Returns is_zero=True when the gradient norm is at most ZERO_GRADIENT_TOL,
    which covers the agent's own preferred state and any other critical
    point. x_star is accepted so callers can pass the agent's preferred
    state alongside, but the zero case triggers on the vanishing gradient,
    not on state equality.
    """
    arr = as_coords(x)
    if arr.shape[0] != model.dimension():
        raise DimensionMismatch("query point dimension differs from the model")
    direction, is_zero = model.unit_descent_direction(arr)
    if is_zero:
        return DirectionQueryResult(np.zeros(arr.shape[0]), True)
    return DirectionQueryResult(direction, False)


def compare(model: CostModel, x, y, noise_flip_prob: float = 0.0, rng=None) -> ComparisonVerdict:
    """Binary comparison of y against x under one model's cost.

    +1 when cost(y) < cost(x), 0 when the evaluated costs are exactly
    equal, -1 otherwise. No equality tolerance is applied. With
    noise_flip_prob > 0, a nonzero verdict flips sign with that
    probability, drawn from rng.
    """
    lx = float(model.evaluate(as_coords(x)))
    ly = float(model.evaluate(as_coords(y)))
    if not (np.isfinite(lx) and np.isfinite(ly)):
        raise NonFiniteValue("comparison requires finite cost values")
    if ly < lx:
        v = 1
    elif ly > lx:
        v = -1
    else:
        v = 0
    if v != 0 and noise_flip_prob > 0.0:
        if not (0.0 <= noise_flip_prob < 0.5):
            raise ValueError("noise_flip_prob must lie in [0, 0.5)")
        if rng is None:
            raise ValueError("an rng is required when noise_flip_prob > 0")
        if rng.random() < noise_flip_prob:
            v = -v
    return ComparisonVerdict(v)


def estimate_direction(model: CostModel, x, cfg: EstimatorConfig) -> DirectionQueryResult:
    """Estimate the most preferred direction from comparisons alone.

    Draws Q unit probes u_q (normalized Gaussians, seeded by cfg), asks for
    each whether x + eps*u_q beats x, and aggregates verdict * u_q. A probe
    the agent prefers contributes +u_q, so the aggregate already points
    down the cost surface. Consumes exactly Q comparisons.

    Args:
        model: cost model whose comparisons are queried.
        x: query state.
        cfg: probe count, smoothing radius, noise level, and seed.

    Returns:
        Unit-norm estimate, or is_zero=True when every verdict cancelled.
    """
    arr = as_coords(x)
    n = model.dimension()
    if arr.shape[0] != n:
        raise DimensionMismatch("query point dimension differs from the model")
    q = cfg.queries_per_call
    rng = np.random.default_rng(cfg.rng_seed)
    if cfg.smoothing_radius is not None:
        eps = float(cfg.smoothing_radius)
    else:
        eps = 1e-3 * max(1.0, float(np.linalg.norm(arr)))

    probes = rng.standard_normal((q, n))
    norms = np.linalg.norm(probes, axis=1)
    norms[norms < 1e-300] = 1.0
    probes /= norms[:, None]

    base = float(model.evaluate(arr))
    costs = np.asarray(model.evaluate_many(arr[None, :] + eps * probes), dtype=float)
    if not (np.isfinite(base) and np.all(np.isfinite(costs))):
        raise NonFiniteValue("estimator saw a non-finite cost")

    verdicts = np.where(costs < base, 1.0, np.where(costs > base, -1.0, 0.0))
    if cfg.noise_flip_prob > 0.0:
        flips = rng.random(q) < cfg.noise_flip_prob
        verdicts = np.where(flips, -verdicts, verdicts)

    ghat = verdicts @ probes
    nrm = float(np.linalg.norm(ghat))
    if nrm <= ZERO_GRADIENT_TOL:
        return DirectionQueryResult(np.zeros(n), True)
    return DirectionQueryResult(ghat / nrm, False)


def find_preferred_state(
    model: CostModel,
    space: StateSpaceSpec,
    x0,
    mode: str = "exact-gradient",
    cfg: Optional[EstimatorConfig] = None,
    budget: int = 100_000,
    tol: float = 1e-8,
) -> StateVector:
    """Minimize a single agent's cost over the feasible set.

    exact-gradient mode runs projected gradient descent with an adaptive
    step and returns the first iterate whose projected-gradient norm is at
    most tol; exhausting the budget first is an error. comparison mode
    walks along estimated directions, accepting a move only when the
    comparison oracle approves it, and returns once the step underflows.

    Args:
        model: the agent's cost.
        space: feasible set.
        x0: feasible starting point.
        mode: "exact-gradient" or "comparison".
        cfg: estimator settings (comparison mode only).
        budget: iteration cap.
        tol: projected-gradient target (exact mode).
    """
    x = as_coords(x0)
    if x.shape[0] != model.dimension() or x.shape[0] != space.dim:
        raise DimensionMismatch("x0, model, and space dimensions disagree")
    if not space.contains(x):
        raise InfeasibleState("x0 is not feasible")
    x = space.project(x)

    if mode == "exact-gradient":
        return _descend_exact(model, space, x, budget, tol)
    if mode == "comparison":
        return _descend_comparison(model, space, x, cfg or EstimatorConfig(), budget)
    raise ValueError(f"unknown mode: {mode!r}")


def _descend_exact(model, space, x, budget, tol):
    if space.kind == "box":
        return _descend_exact_box(model, space, x, budget, tol)
    return _descend_exact_coupled(model, space, x, budget, tol)


def _descend_exact_coupled(model, space, x, budget, tol):
    f = float(model.evaluate(x))
    g = np.asarray(model.gradient(x), dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonFiniteValue("gradient is not finite")
    step = 1.0 / max(1.0, float(np.linalg.norm(g)))
    for _ in range(budget):
        pg = x - space.project(x - g)
        if float(np.linalg.norm(pg)) <= tol:
            return StateVector(x)
        moved = False
        while step >= 1e-18:
            y = space.project(x - step * g)
            fy = float(model.evaluate(y))
            # Sufficient decrease along the projected move; the additive
            # slack only absorbs evaluation roundoff, so accepted moves
            # cannot drift the iterate away from a stationary point.
            decrease = 1e-4 * float(g @ (x - y))
            if fy <= f - decrease + 4.0 * _EPS * (1.0 + abs(f)):
                moved = True
                break
            step *= 0.5
        if not moved:
            raise PreferredStateError(
                f"projected descent stalled at gradient norm {np.linalg.norm(pg):.3e}"
            )
        x, f = y, fy
        g = np.asarray(model.gradient(x), dtype=float)
        if not np.all(np.isfinite(g)):
            raise NonFiniteValue("gradient is not finite")
        step = min(step * 1.25, 1e6)
    raise PreferredStateError(
        f"budget {budget} exhausted before projected-gradient tolerance {tol}"
    )


def _descend_exact_box(model, space, x, budget, tol):
    # Bound constraints decouple per coordinate, so each coordinate keeps
    # its own adaptive step. A single shared step cannot serve landscapes
    # that mix stiff directions with smooth ones: the stiff ones force the
    # step toward zero and the smooth ones then never move.
    x = np.array(x, dtype=float)
    f = float(model.evaluate(x))
    lower, upper = space.lower, space.upper
    n = x.shape[0]
    steps = None
    used = 0
    while used < budget:
        g = np.asarray(model.gradient(x), dtype=float)
        if not np.all(np.isfinite(g)):
            raise NonFiniteValue("gradient is not finite")
        pg = x - space.project(x - g)
        if float(np.linalg.norm(pg)) <= tol:
            return StateVector(x)
        if steps is None:
            steps = 1.0 / np.maximum(1.0, np.abs(g))
        moved_any = False
        for j in range(n):
            if used >= budget:
                break
            used += 1
            gj = float(np.asarray(model.gradient(x), dtype=float)[j])
            if gj == 0.0:
                continue
            s = steps[j]
            accepted = False
            while s >= 1e-18:
                yj = min(max(x[j] - s * gj, lower[j]), upper[j])
                if yj == x[j]:
                    # Pinned at a bound the descent direction points out of.
                    break
                y = x.copy()
                y[j] = yj
                fy = float(model.evaluate(y))
                decrease = 1e-4 * gj * (x[j] - yj)
                if fy <= f - decrease + 4.0 * _EPS * (1.0 + abs(f)):
                    accepted = True
                    break
                s *= 0.5
            if accepted:
                x, f = y, fy
                steps[j] = min(s * 1.25, 1e6)
                moved_any = True
            else:
                steps[j] = max(s, 1e-18)
        if not moved_any:
            g = np.asarray(model.gradient(x), dtype=float)
            pg = x - space.project(x - g)
            if float(np.linalg.norm(pg)) <= tol:
                return StateVector(x)
            raise PreferredStateError(
                f"projected descent stalled at gradient norm {np.linalg.norm(pg):.3e}"
            )
    g = np.asarray(model.gradient(x), dtype=float)
    pg = x - space.project(x - g)
    if float(np.linalg.norm(pg)) <= tol:
        return StateVector(x)
    raise PreferredStateError(
        f"budget {budget} exhausted before projected-gradient tolerance {tol}"
    )


def _descend_comparison(model, space, x, cfg, budget):
    step = 0.1 * max(1.0, float(np.linalg.norm(x)))
    underflow = 1e-12
    for it in range(budget):
        if step < underflow:
            break
        probe_cfg = replace(cfg, rng_seed=mix_seed(cfg.rng_seed, 2 * it))
        est = estimate_direction(model, x, probe_cfg)
        if est.is_zero:
            step *= 0.5
            continue
        y = space.project(x + step * est.direction)
        rng = np.random.default_rng(mix_seed(cfg.rng_seed, 2 * it + 1))
        verdict = compare(model, x, y, cfg.noise_flip_prob, rng)
        if verdict.value == 1:
            x = y
            step *= 1.25
        else:
            step *= 0.5
    return StateVector(x)
