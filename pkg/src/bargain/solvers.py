"""Bargaining procedures: distance-weighted direction steps and baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import analysis
from .core import (
    BargainingGame,
    IndividualRationalityViolated,
    InfeasibleState,
    SolveReport,
    StateVector,
    TERM_CONVERGED,
    TERM_MAX_ITERS,
    TERM_STEP_UNDERFLOW,
    as_coords,
    project_simplex_coords,
)
from .oracles import EstimatorConfig, estimate_direction, exact_direction, mix_seed

METHOD_DIBS = "dibs"
METHOD_NAIVE = "naive"
METHOD_NBS = "nbs"
METHODS = (METHOD_DIBS, METHOD_NAIVE, METHOD_NBS)

SCHEDULE_KINDS = ("harmonic", "constant", "shrink-on-violation")


@dataclass(frozen=True)
class StepSchedule:
    """Step-size rule for the iterative solvers.

    harmonic decays as alpha0/(k+1), which sums to infinity while its
    squares stay summable; constant holds alpha0; shrink-on-violation
    starts at alpha0 and only ever shrinks (by shrink_factor) when an
    iterate would leave the feasible region, terminating the run once it
    falls below underflow.
    """

    kind: str
    alpha0: float
    shrink_factor: float = 0.1
    underflow: float = 1e-12

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind: {self.kind!r}")
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        if not (0.0 < self.shrink_factor < 1.0):
            raise ValueError("shrink_factor must lie in (0, 1)")
        if not self.underflow > 0:
            raise ValueError("underflow must be positive")

    @classmethod
    def harmonic(cls, alpha0: float) -> "StepSchedule":
        return cls(kind="harmonic", alpha0=alpha0)

    @classmethod
    def constant(cls, alpha0: float) -> "StepSchedule":
        return cls(kind="constant", alpha0=alpha0)

    @classmethod
    def shrink_on_violation(
        cls, alpha0: float, shrink_factor: float = 0.1, underflow: float = 1e-12
    ) -> "StepSchedule":
        return cls(
            kind="shrink-on-violation",
            alpha0=alpha0,
            shrink_factor=shrink_factor,
            underflow=underflow,
        )


def step_schedule_value(s: StepSchedule, k: int, retained: Optional[float] = None) -> float:
    """Step size at iteration k. For shrink-on-violation the loop owns the
    retained value; absent one, the schedule starts at alpha0."""
    if k < 0:
        raise ValueError("iteration index must be nonnegative")
    if s.kind == "harmonic":
        return s.alpha0 / (k + 1.0)
    if s.kind == "constant":
        return s.alpha0
    return retained if retained is not None else s.alpha0


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for one solve call."""

    schedule: StepSchedule = StepSchedule.harmonic(0.01)
    max_iters: int = 1000
    update_norm_tol: float = 1e-9
    oracle_mode: str = "exact"
    estimator: Optional[EstimatorConfig] = None
    trajectory_stride: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.update_norm_tol > 0:
            raise ValueError("update_norm_tol must be positive")
        if self.oracle_mode not in ("exact", "comparison"):
            raise ValueError(f"unknown oracle mode: {self.oracle_mode!r}")
        if self.trajectory_stride < 0:
            raise ValueError("trajectory_stride must be >= 0")


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort and threshold)."""
    return project_simplex_coords(v)


def _tangent_project(v: np.ndarray) -> np.ndarray:
    # Projection onto the simplex tangent {w : sum(w) = 0}.
    return v - v.mean()


def _fsum_rows(contributions) -> np.ndarray:
    # Order-independent per-coordinate sum, so permuting the agents cannot
    # perturb the iterate even at the last bit.
    stacked = np.asarray(contributions, dtype=float)
    if stacked.shape[0] == 1:
        return stacked[0].copy()
    return np.array([math.fsum(col) for col in stacked.T.tolist()])


def _agent_direction(game, i, x_arr, oracle_mode, estimator):
    model = game.agents[i]
    if oracle_mode == "exact":
        res = exact_direction(model, x_arr, game.preferred_states[i])
    else:
        cfg = replace(estimator, rng_seed=mix_seed(estimator.rng_seed, i))
        res = estimate_direction(model, x_arr, cfg)
    return res.direction if not res.is_zero else None


def _dibs_field(game, x_arr, oracle_mode, estimator):
    simplex = game.state_space.kind == "simplex"
    contributions = []
    for i in range(game.n_agents):
        d = _agent_direction(game, i, x_arr, oracle_mode, estimator)
        if d is None:
            contributions.append(np.zeros_like(x_arr))
            continue
        scaled = float(np.linalg.norm(x_arr - game.preferred_states[i].coords)) * d
        contributions.append(_tangent_project(scaled) if simplex else scaled)
    return _fsum_rows(contributions)


def _naive_field(game, x_arr, oracle_mode, estimator):
    simplex = game.state_space.kind == "simplex"
    contributions = []
    for i in range(game.n_agents):
        d = _agent_direction(game, i, x_arr, oracle_mode, estimator)
        if d is None:
            contributions.append(np.zeros_like(x_arr))
            continue
        contributions.append(_tangent_project(d) if simplex else d)
    return _fsum_rows(contributions)


def _nbs_field(game, x_arr):
    d = np.asarray(game.disagreement, dtype=float)
    costs = game.costs_at(x_arr)
    gaps = d - costs
    if np.any(gaps <= 0.0):
        bad = int(np.argmin(gaps))
        raise IndividualRationalityViolated(
            f"agent {bad} has no strictly positive gain at the current state"
        )
    contributions = [
        -np.asarray(game.agents[i].gradient(x_arr), dtype=float) / gaps[i]
        for i in range(game.n_agents)
    ]
    return _fsum_rows(contributions)


def _field(game, x_arr, method, oracle_mode, estimator):
    if method == METHOD_DIBS:
        return _dibs_field(game, x_arr, oracle_mode, estimator)
    if method == METHOD_NAIVE:
        return _naive_field(game, x_arr, oracle_mode, estimator)
    if method == METHOD_NBS:
        return _nbs_field(game, x_arr)
    raise ValueError(f"unknown method: {method!r}")


def dibs_step(game: BargainingGame, x, alpha: float, oracle_mode: str = "exact",
              estimator: Optional[EstimatorConfig] = None) -> StateVector:
    """One distance-weighted direction step.

    Moves along alpha times the sum over agents of
    ||x - preferred_i|| * direction_i(x), then projects back onto the
    feasible set. On the simplex each agent's scaled direction is first
    projected onto the tangent plane so the blended move preserves the
    coordinate sum.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    arr = as_coords(x)
    field = _dibs_field(game, arr, oracle_mode, estimator or EstimatorConfig())
    return StateVector(game.state_space.project(arr + alpha * field))


def naive_step(game: BargainingGame, x, alpha: float, oracle_mode: str = "exact",
               estimator: Optional[EstimatorConfig] = None) -> StateVector:
    """Like dibs_step but with the plain (unweighted) sum of directions."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    arr = as_coords(x)
    field = _naive_field(game, arr, oracle_mode, estimator or EstimatorConfig())
    return StateVector(game.state_space.project(arr + alpha * field))


def nbs_step(game: BargainingGame, x, alpha: float) -> StateVector:
    """One product-of-gains ascent step: x - alpha * sum_i grad_i / gain_i.

    Raises IndividualRationalityViolated when some agent's gain
    d_i - cost_i(x) is not strictly positive at x, which callers treat as
    a signal to shrink the step.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    arr = as_coords(x)
    field = _nbs_field(game, arr)
    return StateVector(game.state_space.project(arr + alpha * field))


def _check_individual_rationality(game, x_arr, where: str):
    gaps = np.asarray(game.disagreement, dtype=float) - game.costs_at(x_arr)
    if np.any(gaps <= 0.0):
        bad = int(np.argmin(gaps))
        raise IndividualRationalityViolated(
            f"agent {bad} is not strictly better off than disagreement {where}"
        )


def _proposal_violates(game, method, raw: np.ndarray) -> bool:
    space = game.state_space
    if space.kind == "simplex" and method in (METHOD_DIBS, METHOD_NAIVE):
        # Leaving the nonnegative orthant triggers a step shrink instead of
        # silently relying on the projection.
        if float(raw.min()) < 0.0:
            return True
    if method == METHOD_NBS:
        nxt = space.project(raw)
        gaps = np.asarray(game.disagreement, dtype=float) - game.costs_at(nxt)
        if np.any(gaps <= 0.0):
            return True
    return False


def solve(game: BargainingGame, method: str, x0, cfg: SolverConfig) -> SolveReport:
    """Iterate one of the bargaining procedures until it settles.

    Runs the chosen step under cfg.schedule, terminating when the update
    norm drops to cfg.update_norm_tol, the iteration budget runs out, or
    the step size underflows after repeated feasibility violations. The
    returned report carries the final state, per-agent costs, an optional
    strided trajectory, and the stationarity certificate at the final
    state.

    Args:
        game: the bargaining game to solve.
        method: "dibs", "naive", or "nbs".
        x0: feasible initial state (strictly individually rational for nbs).
        cfg: schedule, budget, tolerance, oracle mode, and estimator.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method: {method!r}")
    x = as_coords(x0)
    space = game.state_space
    if x.shape[0] != space.dim:
        raise InfeasibleState("x0 has the wrong dimension")
    if not space.contains(x):
        raise InfeasibleState("x0 is not feasible")
    x = space.project(x)
    if method == METHOD_NBS:
        _check_individual_rationality(game, x, "at the initial state")

    comparison = cfg.oracle_mode == "comparison"
    est_base = cfg.estimator or EstimatorConfig()
    schedule = cfg.schedule
    retained = schedule.alpha0
    stride = cfg.trajectory_stride
    traj = [StateVector(x)] if stride >= 1 else None

    termination = TERM_MAX_ITERS
    iterations = cfg.max_iters

    for k in range(cfg.max_iters):
        alpha_k = step_schedule_value(schedule, k, retained)
        est_k = (
            replace(est_base, rng_seed=mix_seed(est_base.rng_seed, k))
            if comparison
            else None
        )
        field = _field(game, x, method, cfg.oracle_mode, est_k)

        a = alpha_k
        underflowed = False
        while True:
            if a < schedule.underflow:
                underflowed = True
                break
            raw = x + a * field
            if _proposal_violates(game, method, raw):
                if schedule.kind == "shrink-on-violation":
                    retained *= schedule.shrink_factor
                    a = retained
                else:
                    a *= schedule.shrink_factor
                continue
            break
        if underflowed:
            termination = TERM_STEP_UNDERFLOW
            iterations = k
            break

        x_next = space.project(raw)
        update = float(np.linalg.norm(x_next - x))
        x = x_next
        if traj is not None and (k + 1) % stride == 0:
            traj.append(StateVector(x))
        if update <= cfg.update_norm_tol:
            termination = TERM_CONVERGED
            iterations = k + 1
            break

    if traj is not None and not np.array_equal(traj[-1].coords, x):
        traj.append(StateVector(x))

    cert = analysis.stationarity_residual(game, x)
    return SolveReport(
        final_state=StateVector(x),
        trajectory=tuple(traj) if traj is not None else None,
        final_costs=tuple(float(c) for c in game.costs_at(x)),
        iterations=iterations,
        termination=termination,
        stationarity_residual=cert.residual,
        stationarity_weights=tuple(float(w) for w in cert.weights),
    )


def _ratio_penalty(game, ideal_gaps, t, x_arr):
    d = np.asarray(game.disagreement, dtype=float)
    ratios = (d - game.costs_at(x_arr)) / ideal_gaps
    deficit = np.maximum(0.0, t - ratios)
    phi = float(np.dot(deficit, deficit))
    return phi, deficit


def _ratio_penalty_grad(game, ideal_gaps, deficit, x_arr):
    grads = np.column_stack(
        [np.asarray(m.gradient(x_arr), dtype=float) for m in game.agents]
    )
    return grads @ (2.0 * deficit / ideal_gaps)


def _seek_ratio_level(game, ideal_gaps, t, start, budget, feas_eps):
    """Try to find a feasible x with every gain ratio >= t (within feas_eps).

    Projected descent on the squared hinge penalty, warm started. Returns
    (reached, x, iterations_used).
    """
    space = game.state_space
    x = start.copy()
    phi, deficit = _ratio_penalty(game, ideal_gaps, t, x)
    step = None
    used = 0
    for used in range(1, budget + 1):
        if float(deficit.max(initial=0.0)) <= feas_eps:
            return True, x, used
        g = _ratio_penalty_grad(game, ideal_gaps, deficit, x)
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            break
        if step is None:
            step = 1.0 / max(1.0, gn)
        moved = False
        while step >= 1e-15:
            y = space.project(x - step * g)
            phi_y, deficit_y = _ratio_penalty(game, ideal_gaps, t, y)
            if phi_y <= phi + 1e-14 * (1.0 + phi):
                moved = True
                break
            step *= 0.5
        if not moved:
            break
        x, phi, deficit = y, phi_y, deficit_y
        step *= 1.25
    reached = float(deficit.max(initial=0.0)) <= feas_eps
    return reached, x, used


def solve_ksbs(game: BargainingGame, x0, cfg: SolverConfig, ratio_tol: float = 1e-6) -> SolveReport:
    """Equal-proportional-gain solution by bisection on the shared ratio.

    Seeks the largest t in [0, 1] such that some feasible x gives every
    agent at least the fraction t of its attainable gain
    (d_i - cost_i(x)) / (d_i - ideal_i), using an inner penalized descent
    for each feasibility query. Termination is "converged" when the final
    ratio spread is at most ratio_tol.

    Raises:
        IndividualRationalityViolated: x0 not strictly individually rational.
        ValueError: some agent's ideal cost does not beat its disagreement
            value, so the gain ratios are ill-posed.
    """
    x = as_coords(x0)
    space = game.state_space
    if x.shape[0] != space.dim:
        raise InfeasibleState("x0 has the wrong dimension")
    if not space.contains(x):
        raise InfeasibleState("x0 is not feasible")
    x = space.project(x)
    _check_individual_rationality(game, x, "at the initial state")

    d = np.asarray(game.disagreement, dtype=float)
    ideal = np.array(
        [m.evaluate(ps.coords) for m, ps in zip(game.agents, game.preferred_states)]
    )
    ideal_gaps = d - ideal
    if np.any(ideal_gaps <= 0.0):
        bad = int(np.argmin(ideal_gaps))
        raise ValueError(
            f"infeasible ideal point: agent {bad}'s preferred-state cost does "
            "not beat its disagreement value"
        )

    feas_eps = 1e-9
    budget = cfg.max_iters
    total_used = 0

    lo_t, x_lo = 0.0, x.copy()
    ok, xx, used = _seek_ratio_level(game, ideal_gaps, 1.0, x_lo, budget, feas_eps)
    total_used += used
    if ok:
        lo_t, x_lo = 1.0, xx
    else:
        hi_t = 1.0
        for _ in range(60):
            mid = 0.5 * (lo_t + hi_t)
            ok, xx, used = _seek_ratio_level(game, ideal_gaps, mid, x_lo, budget, feas_eps)
            total_used += used
            if ok:
                lo_t, x_lo = mid, xx
            else:
                hi_t = mid

    final = space.project(x_lo)
    spread = analysis.ksbs_ratio_spread(game, final)
    termination = TERM_CONVERGED if spread <= ratio_tol else TERM_MAX_ITERS
    cert = analysis.stationarity_residual(game, final)
    return SolveReport(
        final_state=StateVector(final),
        trajectory=None,
        final_costs=tuple(float(c) for c in game.costs_at(final)),
        iterations=total_used,
        termination=termination,
        stationarity_residual=cert.residual,
        stationarity_weights=tuple(float(w) for w in cert.weights),
    )
