"""Shared domain types: states, cost models, state spaces, games, reports."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

# Gradient norms at or below this are treated as vanishing (critical point).
ZERO_GRADIENT_TOL = 1e-12

# Feasibility slack for membership checks.
_BOX_FEAS_TOL = 1e-12
_SIMPLEX_FEAS_TOL = 1e-12


class BargainError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatch(BargainError, ValueError):
    pass


class InfeasibleState(BargainError, ValueError):
    pass


class NonFiniteValue(BargainError, ValueError):
    pass


class IndividualRationalityViolated(BargainError, RuntimeError):
    """An iterate's cost reached or exceeded some agent's disagreement value."""


class PreferredStateError(BargainError, RuntimeError):
    """The preferred-state search exhausted its budget before the tolerance."""


def as_coords(x) -> np.ndarray:
    """Coerce a StateVector or array-like to a 1-D float64 array."""
    if isinstance(x, StateVector):
        return x.coords
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        arr = np.atleast_1d(arr.squeeze())
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D point, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """A point in the shared n-dimensional decision space.

    Entries must be finite; the dimension is fixed for the lifetime of a
    game and shared by every agent, solver, and oracle touching it.
    """

    coords: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coords, dtype=float, copy=True).reshape(-1)
        if arr.size == 0:
            raise DimensionMismatch("state vector must have at least one entry")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValue("state vector entries must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "coords", arr)

    @property
    def dim(self) -> int:
        return self.coords.shape[0]

    def as_array(self) -> np.ndarray:
        # Read-only view; copy before mutating.
        return self.coords

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def __len__(self) -> int:
        return self.dim

    def __eq__(self, other) -> bool:
        if not isinstance(other, StateVector):
            return NotImplemented
        return np.array_equal(self.coords, other.coords)

    __hash__ = None

    def __repr__(self) -> str:
        return f"StateVector({np.array2string(self.coords, max_line_width=70)})"


class CostModel(ABC):
    """Behavioral contract for one agent's differentiable cost.

    evaluate and gradient must be deterministic functions of the state, and
    gradient must match central finite differences of evaluate (relative
    error at most 1e-5 at interior points).
    """

    @abstractmethod
    def evaluate(self, x) -> float:
        """Cost at x."""

    @abstractmethod
    def gradient(self, x) -> np.ndarray:
        """Gradient of the cost at x, length dimension()."""

    @abstractmethod
    def dimension(self) -> int:
        """Number of coordinates this model expects."""

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Costs for a batch of row vectors. Override for speed."""
        pts = np.asarray(points, dtype=float)
        return np.array([self.evaluate(p) for p in pts])

    def unit_descent_direction(self, x) -> Tuple[np.ndarray, bool]:
        """Normalized negative gradient, or (zeros, True) at a critical point.

        Strictly increasing rescalings of a cost share this direction, so
        wrappers may delegate here to keep it stable under such rescalings.
        """
        g = np.asarray(self.gradient(x), dtype=float)
        if not np.all(np.isfinite(g)):
            raise NonFiniteValue("gradient is not finite")
        nrm = float(np.linalg.norm(g))
        if nrm <= ZERO_GRADIENT_TOL:
            return np.zeros_like(g), True
        return -g / nrm, False


def project_simplex_coords(v) -> np.ndarray:
    """Euclidean projection of v onto {x >= 0, sum(x) = 1}.

    Sort-and-threshold algorithm; output is feasible within 1e-12.
    """
    arr = np.asarray(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue("cannot project a non-finite vector")
    u = np.sort(arr)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, arr.size + 1)
    cond = u - css / idx > 0
    rho = int(np.nonzero(cond)[0][-1])
    theta = css[rho] / (rho + 1.0)
    return np.maximum(arr - theta, 0.0)


@dataclass(frozen=True)
class StateSpaceSpec:
    """Feasible set description: a coordinate box or the probability simplex."""

    kind: str  # "box" or "simplex"
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    dim: int = 0

    def __post_init__(self):
        if self.kind not in ("box", "simplex"):
            raise ValueError(f"unknown state-space kind: {self.kind!r}")
        if self.kind == "box":
            lo = np.array(self.lower, dtype=float).reshape(-1)
            hi = np.array(self.upper, dtype=float).reshape(-1)
            if lo.shape != hi.shape:
                raise DimensionMismatch("box bounds must have equal length")
            if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
                raise NonFiniteValue("box bounds must be finite")
            if np.any(lo > hi):
                raise ValueError("box lower bounds must not exceed upper bounds")
            lo.flags.writeable = False
            hi.flags.writeable = False
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)
            object.__setattr__(self, "dim", lo.shape[0])
        else:
            if self.dim < 1:
                raise DimensionMismatch("simplex dimension must be >= 1")
            object.__setattr__(self, "lower", None)
            object.__setattr__(self, "upper", None)

    @classmethod
    def box(cls, lower, upper) -> "StateSpaceSpec":
        return cls(kind="box", lower=lower, upper=upper)

    @classmethod
    def simplex(cls, dim: int) -> "StateSpaceSpec":
        return cls(kind="simplex", dim=dim)

    def contains(self, x) -> bool:
        arr = as_coords(x)
        if arr.shape[0] != self.dim:
            return False
        if self.kind == "box":
            return bool(
                np.all(arr >= self.lower - _BOX_FEAS_TOL)
                and np.all(arr <= self.upper + _BOX_FEAS_TOL)
            )
        return bool(
            np.all(arr >= -_SIMPLEX_FEAS_TOL)
            and abs(float(np.sum(arr)) - 1.0) <= _SIMPLEX_FEAS_TOL
        )

    def project(self, v) -> np.ndarray:
        arr = np.asarray(v, dtype=float).reshape(-1)
        if self.kind == "box":
            return np.clip(arr, self.lower, self.upper)
        return project_simplex_coords(arr)


# Termination reasons for solver reports.
TERM_CONVERGED = "converged"
TERM_MAX_ITERS = "max_iters"
TERM_STEP_UNDERFLOW = "step_underflow"
TERMINATIONS = (TERM_CONVERGED, TERM_MAX_ITERS, TERM_STEP_UNDERFLOW)


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one solver run."""

    final_state: StateVector
    trajectory: Optional[Tuple[StateVector, ...]]
    final_costs: Tuple[float, ...]
    iterations: int
    termination: str
    stationarity_residual: float
    stationarity_weights: Tuple[float, ...]

    def __post_init__(self):
        if self.termination not in TERMINATIONS:
            raise ValueError(f"unknown termination reason: {self.termination!r}")
        w = np.asarray(self.stationarity_weights, dtype=float)
        if w.size and (np.any(w < -1e-9) or abs(float(w.sum()) - 1.0) > 1e-9):
            raise ValueError("stationarity weights must lie on the simplex")


@dataclass(frozen=True)
class BargainingGame:
    """N agents' costs over a shared feasible set, with disagreement values.

    preferred_states[i] minimizes agents[i] over the space and stays fixed
    for the lifetime of the game. The disagreement values are consumed only
    by the utility-based baselines; the direction-driven solver stores and
    ignores them.
    """

    agents: Tuple[CostModel, ...]
    disagreement: Tuple[float, ...]
    state_space: StateSpaceSpec
    preferred_states: Tuple[StateVector, ...]

    def __post_init__(self):
        if len(self.agents) < 1:
            raise DimensionMismatch("a game needs at least one agent")
        if len(self.disagreement) != len(self.agents):
            raise DimensionMismatch("one disagreement value per agent required")
        if len(self.preferred_states) != len(self.agents):
            raise DimensionMismatch("one preferred state per agent required")
        n = self.state_space.dim
        for m in self.agents:
            if m.dimension() != n:
                raise DimensionMismatch("agent dimension differs from state space")
        for s in self.preferred_states:
            if s.dim != n:
                raise DimensionMismatch("preferred state has wrong dimension")

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def dimension(self) -> int:
        return self.state_space.dim

    def costs_at(self, x) -> np.ndarray:
        arr = as_coords(x)
        return np.array([m.evaluate(arr) for m in self.agents])


def make_game(
    models: Sequence[CostModel],
    disagreement: Sequence[float],
    space: StateSpaceSpec,
    x0,
    preferred_state_tol: float = 1e-8,
    budget: int = 200_000,
) -> BargainingGame:
    """Build a game, computing each agent's preferred state once.

    Each preferred state is found by deterministic projected descent from
    x0, so repeat construction with identical inputs agrees bit for bit.

    Args:
        models: one cost model per agent, all sharing the space dimension.
        disagreement: per-agent fallback values (used by the utility baselines).
        space: feasible-set description.
        x0: feasible starting point for the preferred-state searches.
        preferred_state_tol: projected-gradient norm each preferred state
            must reach.
        budget: iteration cap per preferred-state search.

    Raises:
        DimensionMismatch: models, disagreement, space, or x0 disagree on size.
        InfeasibleState: x0 lies outside the space.
        PreferredStateError: some agent's search missed the tolerance.
    """
    from . import oracles  # deferred: oracles depends on these types

    models = tuple(models)
    dvals = tuple(float(v) for v in disagreement)
    if not models:
        raise DimensionMismatch("a game needs at least one agent")
    if len(dvals) != len(models):
        raise DimensionMismatch("one disagreement value per agent required")
    n = space.dim
    for m in models:
        if m.dimension() != n:
            raise DimensionMismatch("agent dimension differs from state space")
    start = StateVector(as_coords(x0))
    if start.dim != n:
        raise DimensionMismatch("x0 has the wrong dimension")
    if not space.contains(start):
        raise InfeasibleState("x0 is not feasible for the given state space")

    preferred = tuple(
        oracles.find_preferred_state(
            m, space, start, mode="exact-gradient", budget=budget, tol=preferred_state_tol
        )
        for m in models
    )
    return BargainingGame(
        agents=models,
        disagreement=dvals,
        state_space=space,
        preferred_states=preferred,
    )
