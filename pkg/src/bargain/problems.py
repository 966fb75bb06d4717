"""Concrete cost models and scenario builders.

Covers the 1-D pedagogical games, the planar formation game, Markowitz
portfolio costs estimated from price history, monotone cost
transformations, and synthetic price generation.
"""

from __future__ import annotations

import datetime
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    BargainingGame,
    CostModel,
    StateSpaceSpec,
    StateVector,
    as_coords,
    make_game,
)


class QuadraticCost(CostModel):
    """Weighted separable quadratic sum_j w_j (x_j - c_j)^2."""

    def __init__(self, center, weights=None):
        center = np.asarray(center, dtype=float).reshape(-1)
        if center.size == 0 or not np.all(np.isfinite(center)):
            raise ValueError("center must be a non-empty finite vector")
        if weights is None:
            weights = np.ones_like(center)
        else:
            weights = np.asarray(weights, dtype=float).reshape(-1)
        if weights.shape != center.shape:
            raise ValueError("weights must match center in length")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise ValueError("weights must be positive and finite")
        self._center = center
        self._weights = weights

    def dimension(self) -> int:
        return self._center.shape[0]

    def evaluate(self, x) -> float:
        delta = as_coords(x) - self._center
        return float(np.dot(self._weights, delta * delta))

    def gradient(self, x) -> np.ndarray:
        return 2.0 * self._weights * (as_coords(x) - self._center)

    def evaluate_many(self, xs) -> np.ndarray:
        delta = np.asarray(xs, dtype=float) - self._center
        return (delta * delta) @ self._weights


class LinearCost(CostModel):
    """Affine-free linear cost a^T x."""

    def __init__(self, slope):
        slope = np.asarray(slope, dtype=float).reshape(-1)
        if slope.size == 0 or not np.all(np.isfinite(slope)):
            raise ValueError("slope must be a non-empty finite vector")
        self._slope = slope

    def dimension(self) -> int:
        return self._slope.shape[0]

    def evaluate(self, x) -> float:
        return float(np.dot(self._slope, as_coords(x)))

    def gradient(self, x) -> np.ndarray:
        as_coords(x)
        return self._slope.copy()

    def evaluate_many(self, xs) -> np.ndarray:
        return np.asarray(xs, dtype=float) @ self._slope


def toy_game(x0: float = 0.5) -> BargainingGame:
    """Two agents on [0, 1] with costs x^2 and (x-1)^2, disagreement (1, 1).

    Their preferred states sit at the opposite ends of the interval, so the
    even split at 0.5 is the natural meeting point.
    """
    space = StateSpaceSpec.box(np.array([0.0]), np.array([1.0]))
    return make_game(
        models=[QuadraticCost([0.0]), QuadraticCost([1.0])],
        disagreement=[1.0, 1.0],
        space=space,
        x0=np.array([float(x0)]),
    )


TRANSFORM_KINDS = ("signed-square", "power", "cubic-plus-linear")


@dataclass(frozen=True)
class MonotoneTransform:
    """Strictly increasing scalar map applied to selected agents' costs.

    kinds:
        signed-square: y |-> sign(y) * y^2, increasing on all of R.
        power: y |-> y^p with p > 0, valid where costs are nonnegative.
        cubic-plus-linear: y |-> y^3 + y, increasing on all of R.

    applied_to selects the agent indices a game-level wrapper should
    transform; None means every agent.
    """

    kind: str
    exponent: float = 2.0
    applied_to: Optional[frozenset] = None

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise ValueError(f"unknown transform kind: {self.kind!r}")
        if not self.exponent > 0:
            raise ValueError("exponent must be positive")
        if self.applied_to is not None:
            agents = frozenset(int(i) for i in self.applied_to)
            if any(i < 0 for i in agents):
                raise ValueError("agent indices must be nonnegative")
            object.__setattr__(self, "applied_to", agents)

    def applies_to(self, agent_index: int, n_agents: int) -> bool:
        if self.applied_to is None:
            return True
        return agent_index in self.applied_to

    def apply(self, y):
        arr = np.asarray(y, dtype=float)
        if self.kind == "signed-square":
            out = np.sign(arr) * arr * arr
        elif self.kind == "power":
            if np.any(arr < 0):
                raise ValueError("power transform requires nonnegative cost values")
            out = np.power(arr, self.exponent)
        else:
            out = arr * arr * arr + arr
        return float(out) if np.ndim(y) == 0 else out

    def derivative(self, y):
        arr = np.asarray(y, dtype=float)
        if self.kind == "signed-square":
            out = 2.0 * np.abs(arr)
        elif self.kind == "power":
            if np.any(arr < 0):
                raise ValueError("power transform requires nonnegative cost values")
            out = self.exponent * np.power(arr, self.exponent - 1.0)
        else:
            out = 3.0 * arr * arr + 1.0
        return float(out) if np.ndim(y) == 0 else out


class TransformedCostModel(CostModel):
    """Composition g(cost(x)) for a strictly increasing g.

    The gradient uses the chain rule. The unit descent direction delegates
    to the base model: a strictly increasing map rescales the gradient by
    a positive factor, so the normalized direction is the base model's own,
    and computing it on the base side keeps it bit-for-bit identical to the
    untransformed model's answer.
    """

    def __init__(self, base: CostModel, transform: MonotoneTransform):
        self._base = base
        self._transform = transform

    @property
    def base(self) -> CostModel:
        return self._base

    @property
    def transform(self) -> MonotoneTransform:
        return self._transform

    def dimension(self) -> int:
        return self._base.dimension()

    def evaluate(self, x) -> float:
        return float(self._transform.apply(self._base.evaluate(x)))

    def gradient(self, x) -> np.ndarray:
        scale = self._transform.derivative(self._base.evaluate(x))
        return scale * np.asarray(self._base.gradient(x), dtype=float)

    def evaluate_many(self, xs) -> np.ndarray:
        return np.asarray(self._transform.apply(self._base.evaluate_many(xs)))

    def unit_descent_direction(self, x):
        return self._base.unit_descent_direction(x)


def transform_cost(model: CostModel, t: MonotoneTransform) -> CostModel:
    """Wrap a cost model with a strictly increasing transformation."""
    return TransformedCostModel(model, t)


def transform_game(game: BargainingGame, t: MonotoneTransform) -> BargainingGame:
    """Game with t applied to the agents in t.applied_to (all when None).

    Preferred states are carried over from the input game rather than
    recomputed: a strictly increasing transform cannot move a minimizer,
    while re-running the numerical search on the flattened composite
    landscape would stop at a slightly different point and contaminate the
    distance weights. Disagreement values are kept as given.
    """
    n = game.n_agents
    models = [
        transform_cost(m, t) if t.applies_to(i, n) else m
        for i, m in enumerate(game.agents)
    ]
    return BargainingGame(
        agents=tuple(models),
        disagreement=game.disagreement,
        state_space=game.state_space,
        preferred_states=game.preferred_states,
    )


# --- formation game -------------------------------------------------------

@dataclass(frozen=True)
class FormationParams:
    """Parameters of the planar formation game.

    Each of n_agents holds a 2-D position inside a shared square box. An
    agent is drawn toward the anchor point and keeps a preferred spacing to
    every other agent through a difference-of-exponentials pair potential
    whose coefficients depend on index parity.
    """

    n_agents: int = 10
    anchor: Sequence[float] = (5.0, 5.0)
    attraction_scale: float = 10.0
    attraction_decay: float = 0.01
    alpha_same: float = 1.0
    beta_same: float = 3.0
    alpha_cross: float = 0.1
    beta_cross: float = 0.9
    init_radius: float = 3.0
    box: Sequence[float] = (0.0, 10.0)

    def __post_init__(self):
        if self.n_agents < 2:
            raise ValueError("need at least two agents")
        anchor = tuple(float(v) for v in self.anchor)
        if len(anchor) != 2 or not all(math.isfinite(v) for v in anchor):
            raise ValueError("anchor must be a finite 2-vector")
        object.__setattr__(self, "anchor", anchor)
        box = tuple(float(v) for v in self.box)
        if len(box) != 2 or not box[0] < box[1]:
            raise ValueError("box must be (lower, upper) with lower < upper")
        object.__setattr__(self, "box", box)
        for name in ("attraction_scale", "attraction_decay", "alpha_same",
                     "beta_same", "alpha_cross", "beta_cross", "init_radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.beta_same > self.alpha_same:
            raise ValueError("beta_same must exceed alpha_same")
        if not self.beta_cross > self.alpha_cross:
            raise ValueError("beta_cross must exceed alpha_cross")

    def pair_coefficients(self, i: int, j: int) -> tuple:
        if i % 2 == j % 2:
            return self.alpha_same, self.beta_same
        return self.alpha_cross, self.beta_cross


def equilibrium_distance(alpha: float, beta: float) -> float:
    """Spacing that maximizes exp(-alpha r) - exp(-beta r); needs beta > alpha."""
    if not (0 < alpha < beta):
        raise ValueError("need 0 < alpha < beta")
    return math.log(beta / alpha) / (beta - alpha)


_COINCIDENT_TOL = 1e-9


class FormationCost(CostModel):
    """One agent's cost over the joint 2N-dimensional position vector.

    cost_i = -a * exp(-b * ||p_i - anchor||)
             - sum_{j != i} (exp(-alpha_ij r_ij) - exp(-beta_ij r_ij))
    with r_ij the distance between agents i and j. The gradient is taken
    with respect to the full joint state, so pair terms contribute to both
    agents' coordinate blocks.
    """

    def __init__(self, params: FormationParams, agent_index: int):
        if not 0 <= agent_index < params.n_agents:
            raise ValueError("agent_index out of range")
        self._params = params
        self._i = agent_index
        n = params.n_agents
        alphas = np.empty(n)
        betas = np.empty(n)
        for j in range(n):
            alphas[j], betas[j] = params.pair_coefficients(agent_index, j)
        self._alphas = alphas
        self._betas = betas
        self._others = np.arange(n) != agent_index
        self._anchor = np.asarray(params.anchor, dtype=float)

    def dimension(self) -> int:
        return 2 * self._params.n_agents

    @property
    def agent_index(self) -> int:
        return self._i

    def _blocks(self, x) -> np.ndarray:
        arr = as_coords(x)
        if arr.shape[0] != self.dimension():
            raise ValueError("state has the wrong dimension")
        return arr.reshape(self._params.n_agents, 2)

    def evaluate(self, x) -> float:
        p = self._params
        blocks = self._blocks(x)
        own = blocks[self._i]
        s = float(np.linalg.norm(own - self._anchor))
        cost = -p.attraction_scale * math.exp(-p.attraction_decay * s)
        diff = own - blocks[self._others]
        r = np.linalg.norm(diff, axis=1)
        a = self._alphas[self._others]
        b = self._betas[self._others]
        cost -= float(np.sum(np.exp(-a * r) - np.exp(-b * r)))
        return cost

    def gradient(self, x) -> np.ndarray:
        p = self._params
        blocks = self._blocks(x)
        n = p.n_agents
        own = blocks[self._i]
        out = np.zeros((n, 2))

        to_anchor = own - self._anchor
        s = float(np.linalg.norm(to_anchor))
        if s >= _COINCIDENT_TOL:
            scale = p.attraction_scale * p.attraction_decay * math.exp(-p.attraction_decay * s) / s
            out[self._i] += scale * to_anchor

        diff = own - blocks          # row i is zero
        r = np.linalg.norm(diff, axis=1)
        # Pair gradients are singular at coincident positions; drop those pairs.
        active = self._others & (r >= _COINCIDENT_TOL)
        if np.any(active):
            a = self._alphas[active]
            b = self._betas[active]
            ra = r[active]
            coef = (a * np.exp(-a * ra) - b * np.exp(-b * ra)) / ra
            contrib = coef[:, None] * diff[active]
            out[active] -= contrib
            out[self._i] += contrib.sum(axis=0)
        return out.reshape(-1)


def formation_cost(params: FormationParams, agent_index: int) -> CostModel:
    """Cost model of one formation agent over the joint state."""
    return FormationCost(params, agent_index)


def formation_layout(params: FormationParams) -> np.ndarray:
    """Initial joint state: agents equally spaced on a circle around the
    anchor, starting at angle zero."""
    n = params.n_agents
    angles = 2.0 * np.pi * np.arange(n) / n
    pts = np.stack(
        [
            params.anchor[0] + params.init_radius * np.cos(angles),
            params.anchor[1] + params.init_radius * np.sin(angles),
        ],
        axis=1,
    )
    return pts.reshape(-1)


def formation_game(
    params: Optional[FormationParams] = None,
    preferred_state_tol: float = 1e-6,
    budget: int = 200_000,
):
    """Build the formation game and its circle initialization.

    Returns (game, x0). Disagreement is zero for every agent; each cost is
    strictly negative on the box, so the zero level is never attained.
    """
    params = params or FormationParams()
    dim = 2 * params.n_agents
    space = StateSpaceSpec.box(
        np.full(dim, params.box[0]), np.full(dim, params.box[1])
    )
    x0 = formation_layout(params)
    game = make_game(
        models=[formation_cost(params, i) for i in range(params.n_agents)],
        disagreement=np.zeros(params.n_agents),
        space=space,
        x0=x0,
        preferred_state_tol=preferred_state_tol,
        budget=budget,
    )
    return game, StateVector(x0)


# --- Markowitz portfolio --------------------------------------------------

WINDOW_TRADING_DAYS = {
    "5d": 5,
    "1m": 21,
    "3m": 63,
    "6m": 126,
    "1y": 252,
    "2y": 504,
    "5y": 1260,
    "all": None,
}


@dataclass(frozen=True)
class PortfolioProfile:
    """One investor's estimated return/risk view.

    mean_returns and covariance come from per-period simple returns over
    the investor's look-back window; risk_aversion trades expected return
    against variance.
    """

    window: str
    risk_aversion: float
    mean_returns: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        if self.window not in WINDOW_TRADING_DAYS:
            raise ValueError(f"unknown window: {self.window!r}")
        if not (math.isfinite(self.risk_aversion) and self.risk_aversion >= 0):
            raise ValueError("risk_aversion must be a nonnegative real")
        mu = np.asarray(self.mean_returns, dtype=float).reshape(-1)
        sigma = np.asarray(self.covariance, dtype=float)
        if mu.size == 0 or not np.all(np.isfinite(mu)):
            raise ValueError("mean_returns must be a non-empty finite vector")
        if sigma.shape != (mu.size, mu.size) or not np.all(np.isfinite(sigma)):
            raise ValueError("covariance must be a finite square matrix matching mean_returns")
        if not np.allclose(sigma, sigma.T, atol=1e-8, rtol=0.0):
            raise ValueError("covariance must be symmetric")
        if float(np.linalg.eigvalsh(sigma).min()) < -1e-10:
            raise ValueError("covariance must be positive semidefinite")
        mu.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "mean_returns", mu)
        object.__setattr__(self, "covariance", sigma)

    @property
    def dimension(self) -> int:
        return self.mean_returns.shape[0]


class MarkowitzCost(CostModel):
    """Mean-variance cost x^T Sigma x - risk_aversion * mu^T x."""

    def __init__(self, profile: PortfolioProfile):
        self._profile = profile
        self._drift = profile.risk_aversion * profile.mean_returns

    @property
    def profile(self) -> PortfolioProfile:
        return self._profile

    def dimension(self) -> int:
        return self._profile.dimension

    def evaluate(self, x) -> float:
        arr = as_coords(x)
        sigma = self._profile.covariance
        return float(arr @ sigma @ arr - self._drift @ arr)

    def gradient(self, x) -> np.ndarray:
        arr = as_coords(x)
        return 2.0 * (self._profile.covariance @ arr) - self._drift

    def evaluate_many(self, xs) -> np.ndarray:
        X = np.asarray(xs, dtype=float)
        quad = np.einsum("ij,ij->i", X @ self._profile.covariance, X)
        return quad - X @ self._drift


def markowitz_cost(profile: PortfolioProfile) -> CostModel:
    """Mean-variance cost model for one investor profile."""
    return MarkowitzCost(profile)


@dataclass(frozen=True)
class PriceSeries:
    """Daily close prices: dates (ISO strings), symbols, and a (T, n) matrix."""

    dates: tuple
    symbols: tuple
    prices: np.ndarray

    def __post_init__(self):
        dates = tuple(str(d) for d in self.dates)
        symbols = tuple(str(s) for s in self.symbols)
        prices = np.asarray(self.prices, dtype=float)
        if len(dates) < 2:
            raise ValueError("need at least two price rows")
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise ValueError("dates must be strictly increasing")
        if prices.shape != (len(dates), len(symbols)):
            raise ValueError("prices must have shape (len(dates), len(symbols))")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
            raise ValueError("prices must be positive and finite")
        prices.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "prices", prices)

    @property
    def n_rows(self) -> int:
        return self.prices.shape[0]

    @property
    def n_stocks(self) -> int:
        return self.prices.shape[1]


def synthesize_prices(
    n_stocks: int,
    n_days: int,
    seed: int,
    drift_range=(-5e-4, 1e-3),
    vol_range=(0.005, 0.03),
    initial_price_range=(20.0, 200.0),
    start_date: str = "2021-01-04",
) -> PriceSeries:
    """Geometric-Brownian-motion price paths, deterministic per seed.

    Per-stock log drift and volatility are drawn uniformly from the given
    ranges; dates are consecutive calendar days from start_date.
    """
    if n_stocks < 1:
        raise ValueError("n_stocks must be >= 1")
    if n_days < 10:
        raise ValueError("n_days must be >= 10")
    rng = np.random.default_rng(seed)
    drift = rng.uniform(drift_range[0], drift_range[1], n_stocks)
    vol = rng.uniform(vol_range[0], vol_range[1], n_stocks)
    s0 = rng.uniform(initial_price_range[0], initial_price_range[1], n_stocks)
    shocks = rng.standard_normal((n_days - 1, n_stocks))
    log_steps = drift + vol * shocks
    log_prices = np.vstack([np.zeros(n_stocks), np.cumsum(log_steps, axis=0)])
    prices = s0 * np.exp(log_prices)
    first = datetime.date.fromisoformat(start_date)
    dates = tuple(
        (first + datetime.timedelta(days=t)).isoformat() for t in range(n_days)
    )
    symbols = tuple(f"S{i:02d}" for i in range(n_stocks))
    return PriceSeries(dates=dates, symbols=symbols, prices=prices)


def load_prices_csv(path) -> PriceSeries:
    """Parse a price CSV: header 'date,SYM,...', one ISO-dated row per day.

    Raises ValueError naming the 1-based line number for a malformed
    header, ragged row, bad date or number, non-increasing or duplicate
    dates, and non-positive prices.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError("line 1: empty file")
    header = [c.strip() for c in lines[0].split(",")]
    if len(header) < 2 or header[0].lower() != "date" or any(not c for c in header):
        raise ValueError("line 1: malformed header, expected 'date,SYMBOL[,SYMBOL...]'")
    symbols = tuple(header[1:])
    n = len(symbols)

    dates = []
    rows = []
    prev = None
    for ln, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            raise ValueError(f"line {ln}: blank row")
        cells = [c.strip() for c in raw.split(",")]
        if len(cells) != n + 1:
            raise ValueError(f"line {ln}: expected {n + 1} fields, got {len(cells)}")
        try:
            day = datetime.date.fromisoformat(cells[0])
        except ValueError:
            raise ValueError(f"line {ln}: invalid date {cells[0]!r}") from None
        if prev is not None:
            if day == prev:
                raise ValueError(f"line {ln}: duplicate date {cells[0]}")
            if day < prev:
                raise ValueError(f"line {ln}: dates must be strictly increasing")
        prev = day
        try:
            values = [float(c) for c in cells[1:]]
        except ValueError:
            raise ValueError(f"line {ln}: invalid price value") from None
        if any(not math.isfinite(v) or v <= 0 for v in values):
            raise ValueError(f"line {ln}: non-positive price")
        dates.append(cells[0])
        rows.append(values)
    if len(rows) < 2:
        raise ValueError(f"line {len(lines)}: need at least two price rows")
    return PriceSeries(dates=tuple(dates), symbols=symbols, prices=np.array(rows))


_MIN_RETURN_ROWS = 3


def estimate_profile(
    prices: PriceSeries,
    window: str,
    risk_aversion: float,
    end_date: Optional[str] = None,
) -> PortfolioProfile:
    """Estimate an investor profile from the trailing price window.

    Takes the rows dated at or before end_date (all rows when None), keeps
    the last WINDOW_TRADING_DAYS[window] of them ('all' keeps everything),
    and computes simple returns p_t / p_{t-1} - 1, their mean, and their
    sample covariance (denominator T-1). The covariance is symmetrized
    and, if rounding left a negative eigenvalue, shifted by 1e-12 * I.

    Raises ValueError when the window does not fit or fewer than 3 return
    rows remain.
    """
    if window not in WINDOW_TRADING_DAYS:
        raise ValueError(f"unknown window: {window!r}")
    if not (math.isfinite(risk_aversion) and risk_aversion >= 0):
        raise ValueError("risk_aversion must be a nonnegative real")

    if end_date is None:
        cut = prices.n_rows
    else:
        # ISO date strings order lexicographically.
        cut = sum(1 for d in prices.dates if d <= end_date)
    rows = WINDOW_TRADING_DAYS[window]
    if rows is None:
        lo = 0
    else:
        if cut < rows:
            raise ValueError(
                f"insufficient history: window {window!r} needs {rows} price rows, "
                f"have {cut}"
            )
        lo = cut - rows
    window_prices = prices.prices[lo:cut]
    n_returns = window_prices.shape[0] - 1
    if n_returns < _MIN_RETURN_ROWS:
        raise ValueError(
            f"insufficient history: window {window!r} leaves {max(n_returns, 0)} "
            f"return rows, need at least {_MIN_RETURN_ROWS}"
        )
    returns = window_prices[1:] / window_prices[:-1] - 1.0
    mu = returns.mean(axis=0)
    sigma = np.cov(returns, rowvar=False, ddof=1)
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    sigma = 0.5 * (sigma + sigma.T)
    if float(np.linalg.eigvalsh(sigma).min()) < 0.0:
        sigma = sigma + 1e-12 * np.eye(sigma.shape[0])
    return PortfolioProfile(
        window=window,
        risk_aversion=float(risk_aversion),
        mean_returns=mu,
        covariance=sigma,
    )
