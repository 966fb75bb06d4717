"""Command-line front end: config ingestion, experiment runners, persistence.

Configs are JSON objects; unknown keys are rejected so a typo cannot
silently change an experiment. Every run is fully determined by the
config file plus the seed, and emitted files are byte-stable across
reruns (wall-clock timings are kept on the in-memory records only).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .analysis import relative_error
from .core import StateSpaceSpec, make_game
from .oracles import EstimatorConfig, mix_seed
from .problems import (
    FormationParams,
    MonotoneTransform,
    WINDOW_TRADING_DAYS,
    estimate_profile,
    formation_game,
    load_prices_csv,
    markowitz_cost,
    synthesize_prices,
    toy_game,
    transform_game,
)
from .solvers import SolverConfig, StepSchedule, solve, solve_ksbs

log = logging.getLogger("bargain")

EXPERIMENTS = ("toy", "formation", "portfolio")
ALL_METHODS = ("dibs", "naive", "nbs", "ksbs")
FORMATS = ("jsonl", "csv")

_DEFAULT_Q = (1, 10, 100, 1000)
_DEFAULT_METHODS = {
    "toy": ("dibs", "naive", "nbs", "ksbs"),
    "formation": ("dibs", "nbs"),
    "portfolio": ("dibs",),
}
_DEFAULT_SCENARIOS = {"toy": 10, "formation": 1, "portfolio": 20}
_DEFAULT_AGENTS = {"toy": 2, "formation": 10, "portfolio": 3}


class ConfigError(ValueError):
    """Invalid or unusable experiment configuration."""


KNOWN_KEYS = frozenset(
    {
        "experiment",
        "methods",
        "oracle_mode",
        "comparisons_per_iter",
        "n_stocks",
        "n_agents",
        "n_scenarios",
        "seed",
        "max_iters",
        "tol",
        "alpha0",
        "transform",
        "out",
        "format",
        "prices_csv",
        "n_days",
        "trajectory_stride",
    }
)


def _as_int(value, key, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}")
    return value


def _as_pos_float(value, key) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number")
    v = float(value)
    if not (math.isfinite(v) and v > 0):
        raise ConfigError(f"{key} must be a positive finite number")
    return v


def _parse_transform(value) -> MonotoneTransform:
    if not isinstance(value, dict):
        raise ConfigError("transform must be an object")
    unknown = sorted(set(value) - {"kind", "exponent", "agents"})
    if unknown:
        raise ConfigError(f"unknown transform key: {unknown[0]!r}")
    kind = value.get("kind")
    if not isinstance(kind, str):
        raise ConfigError("transform.kind must be a string")
    exponent = value.get("exponent", 2.0)
    if isinstance(exponent, bool) or not isinstance(exponent, (int, float)):
        raise ConfigError("transform.exponent must be a number")
    agents = value.get("agents")
    applied = None
    if agents is not None:
        if not isinstance(agents, list) or not all(
            isinstance(a, int) and not isinstance(a, bool) for a in agents
        ):
            raise ConfigError("transform.agents must be a list of integers")
        applied = frozenset(agents)
    try:
        return MonotoneTransform(kind=kind, exponent=float(exponent), applied_to=applied)
    except ValueError as exc:
        raise ConfigError(f"transform: {exc}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved run description."""

    experiment: str
    methods: tuple
    oracle_mode: str
    comparisons_per_iter: tuple
    n_stocks: int
    n_agents: int
    n_scenarios: int
    seed: int
    max_iters: Optional[int]
    tol: Optional[float]
    alpha0: Optional[float]
    transform: Optional[MonotoneTransform]
    out: Optional[str]
    format: str
    prices_csv: Optional[str]
    n_days: int
    trajectory_stride: Optional[int]

    @classmethod
    def from_mapping(
        cls,
        data: dict,
        experiment: Optional[str] = None,
        seed: Optional[int] = None,
        out: Optional[str] = None,
        fmt: Optional[str] = None,
    ) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        for key in sorted(data):
            if key not in KNOWN_KEYS:
                raise ConfigError(f"unknown config key: {key!r}")

        exp = data.get("experiment", experiment)
        if exp is None:
            raise ConfigError("experiment is required")
        if exp not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
        if experiment is not None and exp != experiment:
            raise ConfigError(
                f"config experiment {exp!r} conflicts with command {experiment!r}"
            )

        methods_raw = data.get("methods")
        if methods_raw is None:
            methods = _DEFAULT_METHODS[exp]
        else:
            if not isinstance(methods_raw, list) or not methods_raw:
                raise ConfigError("methods must be a non-empty list")
            for m in methods_raw:
                if m not in ALL_METHODS:
                    raise ConfigError(f"unknown method: {m!r}")
            # Canonical order keeps output ordering independent of config phrasing.
            methods = tuple(m for m in ALL_METHODS if m in methods_raw)

        oracle_mode = data.get("oracle_mode", "exact")
        if oracle_mode not in ("exact", "comparison"):
            raise ConfigError("oracle_mode must be 'exact' or 'comparison'")

        q_raw = data.get("comparisons_per_iter")
        if q_raw is None:
            q_set = _DEFAULT_Q
        else:
            if not isinstance(q_raw, list) or not q_raw:
                raise ConfigError("comparisons_per_iter must be a non-empty list")
            q_set = tuple(sorted({_as_int(q, "comparisons_per_iter", 1) for q in q_raw}))

        n_stocks = _as_int(data.get("n_stocks", 10), "n_stocks", 2)
        n_agents = _as_int(data.get("n_agents", _DEFAULT_AGENTS[exp]), "n_agents", 1)
        n_scenarios = _as_int(
            data.get("n_scenarios", _DEFAULT_SCENARIOS[exp]), "n_scenarios", 1
        )

        seed_value = seed if seed is not None else data.get("seed")
        if seed_value is not None:
            seed_value = _as_int(seed_value, "seed", 0)
        if seed_value is None:
            if oracle_mode == "comparison":
                raise ConfigError("seed is required when oracle_mode is 'comparison'")
            if exp == "portfolio":
                raise ConfigError("seed is required for the portfolio experiment")
            seed_value = 0

        max_iters = data.get("max_iters")
        if max_iters is not None:
            max_iters = _as_int(max_iters, "max_iters", 1)
        tol = data.get("tol")
        if tol is not None:
            tol = _as_pos_float(tol, "tol")
        alpha0 = data.get("alpha0")
        if alpha0 is not None:
            alpha0 = _as_pos_float(alpha0, "alpha0")

        transform = data.get("transform")
        if transform is not None:
            transform = _parse_transform(transform)

        out_value = out if out is not None else data.get("out")
        if out_value is not None and not isinstance(out_value, str):
            raise ConfigError("out must be a path string")

        fmt_value = fmt if fmt is not None else data.get("format", "jsonl")
        if fmt_value not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")

        prices_csv = data.get("prices_csv")
        if prices_csv is not None and not isinstance(prices_csv, str):
            raise ConfigError("prices_csv must be a path string")
        n_days = _as_int(data.get("n_days", 1311), "n_days", 10)

        stride = data.get("trajectory_stride")
        if stride is not None:
            stride = _as_int(stride, "trajectory_stride", 0)

        if exp == "toy" and n_agents != 2:
            raise ConfigError("the toy experiment is a two-agent game")
        if exp == "formation" and (n_agents < 2 or n_agents % 2):
            raise ConfigError("formation needs an even number of agents (>= 2)")
        if exp == "portfolio":
            if methods != ("dibs",):
                raise ConfigError("the portfolio experiment runs the 'dibs' method only")
            if transform is not None:
                raise ConfigError("transform is not supported for the portfolio experiment")
        if prices_csv is not None and exp != "portfolio":
            raise ConfigError("prices_csv only applies to the portfolio experiment")

        return cls(
            experiment=exp,
            methods=methods,
            oracle_mode=oracle_mode,
            comparisons_per_iter=q_set,
            n_stocks=n_stocks,
            n_agents=n_agents,
            n_scenarios=n_scenarios,
            seed=seed_value,
            max_iters=max_iters,
            tol=tol,
            alpha0=alpha0,
            transform=transform,
            out=out_value,
            format=fmt_value,
            prices_csv=prices_csv,
            n_days=n_days,
            trajectory_stride=stride,
        )

    @classmethod
    def from_file(
        cls,
        path,
        experiment: Optional[str] = None,
        seed: Optional[int] = None,
        out: Optional[str] = None,
        fmt: Optional[str] = None,
    ) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_mapping(data, experiment=experiment, seed=seed, out=out, fmt=fmt)


@dataclass(frozen=True)
class ResultRecord:
    """One solver run. wall_time_s is informational and never serialized,
    so rerunning a config reproduces output files byte for byte."""

    scenario: str
    method: str
    oracle_mode: str
    q: Optional[int]
    final_state: tuple
    final_costs: tuple
    iterations: int
    termination: str
    stationarity_residual: float
    relative_error: Optional[float]
    wall_time_s: float = field(default=0.0, compare=False)


EMIT_FIELDS = (
    "scenario",
    "method",
    "oracle_mode",
    "q",
    "iterations",
    "termination",
    "stationarity_residual",
    "relative_error",
    "final_state",
    "final_costs",
)


def _fmt_float(v: float) -> str:
    return "%.17g" % float(v)


def _sort_key(r: ResultRecord):
    return (r.scenario, r.method, r.q if r.q is not None else -1)


def _record_from_report(scenario, method, mode, q, report, rel, wall) -> ResultRecord:
    return ResultRecord(
        scenario=scenario,
        method=method,
        oracle_mode=mode,
        q=q,
        final_state=tuple(float(v) for v in report.final_state.coords),
        final_costs=tuple(float(v) for v in report.final_costs),
        iterations=int(report.iterations),
        termination=report.termination,
        stationarity_residual=float(report.stationarity_residual),
        relative_error=None if rel is None else float(rel),
        wall_time_s=float(wall),
    )


def render_jsonl(records: Sequence[ResultRecord]) -> str:
    lines = []
    for r in sorted(records, key=_sort_key):
        parts = [
            '"scenario": ' + json.dumps(r.scenario),
            '"method": ' + json.dumps(r.method),
            '"oracle_mode": ' + json.dumps(r.oracle_mode),
            '"q": ' + ("null" if r.q is None else str(int(r.q))),
            '"iterations": ' + str(int(r.iterations)),
            '"termination": ' + json.dumps(r.termination),
            '"stationarity_residual": ' + _fmt_float(r.stationarity_residual),
            '"relative_error": '
            + ("null" if r.relative_error is None else _fmt_float(r.relative_error)),
            '"final_state": [' + ", ".join(_fmt_float(v) for v in r.final_state) + "]",
            '"final_costs": [' + ", ".join(_fmt_float(v) for v in r.final_costs) + "]",
        ]
        lines.append("{" + ", ".join(parts) + "}")
    return "\n".join(lines) + ("\n" if lines else "")


def render_csv(records: Sequence[ResultRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EMIT_FIELDS)
    for r in sorted(records, key=_sort_key):
        writer.writerow(
            [
                r.scenario,
                r.method,
                r.oracle_mode,
                "" if r.q is None else str(int(r.q)),
                str(int(r.iterations)),
                r.termination,
                _fmt_float(r.stationarity_residual),
                "" if r.relative_error is None else _fmt_float(r.relative_error),
                "[" + ", ".join(_fmt_float(v) for v in r.final_state) + "]",
                "[" + ", ".join(_fmt_float(v) for v in r.final_costs) + "]",
            ]
        )
    return buf.getvalue()


def emit_results(records: Sequence[ResultRecord], path, format: str = "jsonl") -> None:
    """Write records sorted by (scenario, method, q), floats at 17
    significant digits."""
    if format not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    text = render_jsonl(records) if format == "jsonl" else render_csv(records)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _record_from_payload(d: dict) -> ResultRecord:
    return ResultRecord(
        scenario=d["scenario"],
        method=d["method"],
        oracle_mode=d["oracle_mode"],
        q=None if d["q"] is None else int(d["q"]),
        final_state=tuple(float(v) for v in d["final_state"]),
        final_costs=tuple(float(v) for v in d["final_costs"]),
        iterations=int(d["iterations"]),
        termination=d["termination"],
        stationarity_residual=float(d["stationarity_residual"]),
        relative_error=None if d["relative_error"] is None else float(d["relative_error"]),
    )


def parse_results_jsonl(path) -> list:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(_record_from_payload(json.loads(line)))
    return records


def parse_results_csv(path) -> list:
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is not None and tuple(header) != EMIT_FIELDS:
            raise ValueError("unexpected CSV header")
        for row in reader:
            d = dict(zip(EMIT_FIELDS, row))
            records.append(
                _record_from_payload(
                    {
                        "scenario": d["scenario"],
                        "method": d["method"],
                        "oracle_mode": d["oracle_mode"],
                        "q": None if d["q"] == "" else int(d["q"]),
                        "iterations": int(d["iterations"]),
                        "termination": d["termination"],
                        "stationarity_residual": float(d["stationarity_residual"]),
                        "relative_error": None
                        if d["relative_error"] == ""
                        else float(d["relative_error"]),
                        "final_state": json.loads(d["final_state"]),
                        "final_costs": json.loads(d["final_costs"]),
                    }
                )
            )
    return records


def summary_path(out_path) -> str:
    base, _ = os.path.splitext(str(out_path))
    return base + ".summary.csv"


def trajectory_path(out_path) -> str:
    base, _ = os.path.splitext(str(out_path))
    return base + ".traj.csv"


def write_portfolio_summary(records: Sequence[ResultRecord], path) -> None:
    """Percentile table of relative errors per comparison budget.

    Emits the 1.5/25/50/75/98.5 percentiles and flags scenarios whose
    relative error falls outside [Q1 - 1.5 IQR, Q3 + 1.5 IQR].
    """
    by_q = {}
    for r in records:
        if r.relative_error is not None and r.q is not None:
            by_q.setdefault(int(r.q), []).append((r.scenario, float(r.relative_error)))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["q", "count", "p1_5", "p25", "p50", "p75", "p98_5", "outlier_count", "outliers"]
    )
    for q in sorted(by_q):
        pairs = sorted(by_q[q])
        values = np.array([v for _, v in pairs])
        pct = np.percentile(values, [1.5, 25.0, 50.0, 75.0, 98.5])
        iqr = pct[3] - pct[1]
        lo, hi = pct[1] - 1.5 * iqr, pct[3] + 1.5 * iqr
        outliers = [s for s, v in pairs if v < lo or v > hi]
        writer.writerow(
            [
                str(q),
                str(len(pairs)),
                *(_fmt_float(p) for p in pct),
                str(len(outliers)),
                ";".join(outliers),
            ]
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(buf.getvalue())


# --- runners ---------------------------------------------------------------

def _method_runs(cfg: ExperimentConfig, scenario_seed: int, method: str):
    """Yield (q, estimator, oracle_mode) for each solve of one method.

    nbs and ksbs consume gradients directly, so the comparison sweep only
    applies to the direction-oracle methods.
    """
    if cfg.oracle_mode == "exact" or method in ("nbs", "ksbs"):
        yield None, None, "exact"
        return
    for q in cfg.comparisons_per_iter:
        est = EstimatorConfig(
            queries_per_call=q,
            rng_seed=mix_seed(scenario_seed, 900 + ALL_METHODS.index(method), q),
        )
        yield q, est, "comparison"


_TOY_ALPHA0 = {"dibs": 0.2, "naive": 0.2, "nbs": 0.05}

# The utility-gap scaling makes the nbs field two orders of magnitude
# weaker than the distance-weighted field on the formation costs, so nbs
# needs a larger base step to traverse comparable ground in 5000 rounds.
_FORMATION_ALPHA0 = {"dibs": 0.005, "naive": 0.005, "nbs": 1.0}


def run_toy(cfg: ExperimentConfig) -> list:
    """Two-agent interval game, plain and transformed, over seeded starts."""
    transform = cfg.transform or MonotoneTransform(
        kind="power", exponent=2.0, applied_to=frozenset({0})
    )
    max_iters = cfg.max_iters or 200
    tol = cfg.tol or 1e-9
    records = []
    for s in range(cfg.n_scenarios):
        scenario_seed = mix_seed(cfg.seed, s)
        x0_value = 0.05 + 0.9 * float(np.random.default_rng(scenario_seed).random())
        game = toy_game(x0_value)
        variants = (("plain", game), ("transformed", transform_game(game, transform)))
        x0 = np.array([x0_value])
        for variant, g in variants:
            scenario = f"s{s:03d}/{variant}"
            for method in cfg.methods:
                for q, est, mode in _method_runs(cfg, scenario_seed, method):
                    started = time.perf_counter()
                    if method == "ksbs":
                        report = solve_ksbs(
                            g, x0, SolverConfig(max_iters=max_iters, update_norm_tol=tol)
                        )
                    else:
                        alpha0 = cfg.alpha0 or _TOY_ALPHA0[method]
                        run_cfg = SolverConfig(
                            schedule=StepSchedule.constant(alpha0),
                            max_iters=max_iters,
                            update_norm_tol=tol,
                            oracle_mode=mode,
                            estimator=est,
                        )
                        report = solve(g, method, x0, run_cfg)
                    records.append(
                        _record_from_report(
                            scenario, method, mode, q, report, None,
                            time.perf_counter() - started,
                        )
                    )
    return records


def run_formation(cfg: ExperimentConfig, trajectory_sink: Optional[list] = None) -> list:
    """Planar formation game, plain and with the parity transform.

    When trajectory_sink is a list, strided trajectory rows
    (scenario, method, iteration, agent, x, y) are appended to it for
    plot emission.
    """
    n = cfg.n_agents
    transform = cfg.transform or MonotoneTransform(
        kind="signed-square", applied_to=frozenset(range(1, n, 2))
    )
    stride = cfg.trajectory_stride if cfg.trajectory_stride is not None else 50
    max_iters = cfg.max_iters or 5000
    tol = cfg.tol or 1e-9

    log.info("building formation game with %d agents", n)
    game, x0 = formation_game(FormationParams(n_agents=n))
    variants = (("plain", game), ("transformed", transform_game(game, transform)))
    records = []
    for variant, g in variants:
        for method in cfg.methods:
            for q, est, mode in _method_runs(cfg, cfg.seed, method):
                started = time.perf_counter()
                if method == "ksbs":
                    report = solve_ksbs(
                        g, x0, SolverConfig(max_iters=max_iters, update_norm_tol=tol)
                    )
                else:
                    alpha0 = cfg.alpha0 or _FORMATION_ALPHA0[method]
                    run_cfg = SolverConfig(
                        schedule=StepSchedule.harmonic(alpha0),
                        max_iters=max_iters,
                        update_norm_tol=tol,
                        oracle_mode=mode,
                        estimator=est,
                        trajectory_stride=stride,
                    )
                    report = solve(g, method, x0, run_cfg)
                    if trajectory_sink is not None and report.trajectory:
                        for idx, sv in enumerate(report.trajectory):
                            label = min(idx * stride, report.iterations)
                            pts = sv.as_array().reshape(-1, 2)
                            for agent, (px, py) in enumerate(pts):
                                trajectory_sink.append(
                                    (variant, method, label, agent, px, py)
                                )
                records.append(
                    _record_from_report(
                        variant, method, mode, q, report, None,
                        time.perf_counter() - started,
                    )
                )
                log.info("formation %s/%s done in %d iterations", variant, method,
                         records[-1].iterations)
    return records


def write_formation_trajectories(rows: Sequence[tuple], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["scenario", "method", "iteration", "agent", "x", "y"])
        for variant, method, label, agent, px, py in rows:
            writer.writerow(
                [variant, method, str(label), str(agent), _fmt_float(px), _fmt_float(py)]
            )


_PORTFOLIO_WINDOWS = tuple(w for w in WINDOW_TRADING_DAYS if w != "all")
_RESAMPLE_LIMIT = 100


def _sample_profiles(cfg: ExperimentConfig, prices, scenario: int):
    """Draw per-agent (window, risk aversion) pairs; resample on short history."""
    for attempt in range(_RESAMPLE_LIMIT):
        rng = np.random.default_rng(mix_seed(cfg.seed, scenario, attempt))
        picks = rng.integers(0, len(_PORTFOLIO_WINDOWS), cfg.n_agents)
        lambdas = rng.uniform(0.0, 0.1, cfg.n_agents)
        try:
            return [
                estimate_profile(prices, _PORTFOLIO_WINDOWS[int(p)], float(lam))
                for p, lam in zip(picks, lambdas)
            ]
        except ValueError as exc:
            log.info("scenario %d attempt %d resampled: %s", scenario, attempt, exc)
    raise RuntimeError(
        f"scenario {scenario}: no feasible window assignment after "
        f"{_RESAMPLE_LIMIT} attempts"
    )


def run_portfolio(cfg: ExperimentConfig) -> list:
    """Markowitz games on the simplex: exact runs, then comparison sweeps.

    Each scenario builds one game from seeded investor profiles, solves it
    with exact direction oracles, then re-solves with the comparison-based
    estimator at every requested query budget and records the relative
    error against the exact solution.
    """
    if cfg.prices_csv:
        prices = load_prices_csv(cfg.prices_csv)
    else:
        prices = synthesize_prices(cfg.n_stocks, cfg.n_days, mix_seed(cfg.seed, 7771))
    n = prices.n_stocks
    x0 = np.full(n, 1.0 / n)
    space = StateSpaceSpec.simplex(n)
    schedule = StepSchedule.shrink_on_violation(cfg.alpha0 or 0.01)
    base_cfg = SolverConfig(
        schedule=schedule,
        max_iters=cfg.max_iters or 1000,
        update_norm_tol=cfg.tol or 1e-12,
        oracle_mode="exact",
    )

    records = []
    for s in range(cfg.n_scenarios):
        profiles = _sample_profiles(cfg, prices, s)
        models = [markowitz_cost(p) for p in profiles]
        disagreement = [m.evaluate(x0) + 1.0 for m in models]
        game = make_game(models, disagreement, space, x0)
        scenario = f"s{s:03d}"

        started = time.perf_counter()
        exact_report = solve(game, "dibs", x0, base_cfg)
        records.append(
            _record_from_report(
                scenario, "dibs", "exact", None, exact_report, None,
                time.perf_counter() - started,
            )
        )
        for q in cfg.comparisons_per_iter:
            est = EstimatorConfig(
                queries_per_call=q, rng_seed=mix_seed(cfg.seed, s, 5000 + q)
            )
            run_cfg = replace(base_cfg, oracle_mode="comparison", estimator=est)
            started = time.perf_counter()
            report = solve(game, "dibs", x0, run_cfg)
            rel = relative_error(exact_report.final_state, report.final_state, x0)
            records.append(
                _record_from_report(
                    scenario, "dibs", "comparison", q, report, rel,
                    time.perf_counter() - started,
                )
            )
        log.info("portfolio scenario %s done", scenario)
    return records


# --- entry point -----------------------------------------------------------

def _setup_logging() -> None:
    mode = os.environ.get("BARGAIN_LOG", "off").strip().lower()
    if mode == "debug":
        level = logging.DEBUG
    elif mode == "info":
        level = logging.INFO
    else:
        # Unknown values behave like "off".
        level = logging.CRITICAL + 10
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="bargain",
        description="Run cooperative-bargaining experiments from a JSON config.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="path to a JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--out", default=None, help="output file (stdout when omitted)")
    parser.add_argument("--format", choices=FORMATS, default=None, dest="fmt")
    args = parser.parse_args(argv)
    _setup_logging()

    try:
        cfg = ExperimentConfig.from_file(
            args.config,
            experiment=args.experiment,
            seed=args.seed,
            out=args.out,
            fmt=args.fmt,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if cfg.experiment == "toy":
            records = run_toy(cfg)
        elif cfg.experiment == "formation":
            traj_rows = [] if cfg.out else None
            records = run_formation(cfg, trajectory_sink=traj_rows)
            if cfg.out and traj_rows:
                write_formation_trajectories(traj_rows, trajectory_path(cfg.out))
        else:
            records = run_portfolio(cfg)

        if cfg.out:
            emit_results(records, cfg.out, cfg.format)
            if cfg.experiment == "portfolio":
                write_portfolio_summary(records, summary_path(cfg.out))
            log.info("wrote %d records to %s", len(records), cfg.out)
        else:
            text = render_jsonl(records) if cfg.format == "jsonl" else render_csv(records)
            sys.stdout.write(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        log.exception("run failed")
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
