"""Progressive Hedging for the two-stage data-gathering tour problem.

Every scenario keeps its own copy of the first-stage edge vector; copies
are pulled toward their probability-weighted average by dual weights and a
proximal penalty until they agree.  Edge vectors are stored as
``tour_size x tour_size`` 0/1 matrices (the diagonal is unused).

Because first-stage variables are binary, the proximal term
``rho/2 * ||x - xbar||^2`` equals ``sum(rho/2 * (1 - 2 xbar) * x) +
rho/2 * ||xbar||^2``, so each subproblem stays a plain ATSP whose edge costs
absorb the weights and penalty and whose constant rides in the offset.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import atsp
from .atsp import AtspProblem, Tour
from .detour import DetourTable, beta, effective_costs
from .instance import Instance
from .scenario import Scenario, ScenarioSet

log = logging.getLogger(__name__)

NONE = "none"
BEST_SCENARIO = "best-scenario-solution"
BINARY_TOL = 1e-6

CONVERGED = "converged"
FALLBACK = "fallback"
NOT_CONVERGED = "not-converged"


@dataclass(frozen=True)
class PhConfig:
    rho: float | str = "auto"
    epsilon: float = 1e-5
    max_iterations: int = 500
    fallback: str = NONE
    threads: int = 1
    merge_duplicates: bool = True

    def __post_init__(self):
        if self.rho != "auto":
            if isinstance(self.rho, str) or not self.rho > 0 or not math.isfinite(self.rho):
                raise ValueError(f"rho must be positive or 'auto', got {self.rho!r}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.fallback not in (NONE, BEST_SCENARIO):
            raise ValueError(f"unknown fallback {self.fallback!r}")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


@dataclass
class PhState:
    iteration: int
    x: np.ndarray       # (scenarios, t, t)
    w: np.ndarray       # (scenarios, t, t)
    xbar: np.ndarray    # (t, t)
    residuals: list[float] = field(default_factory=list)


@dataclass
class SolveReport:
    tour: Tour
    objective: float
    first_stage_cost: float
    expected_recourse: float
    iterations: int
    residual_trace: list[float]
    converged: bool
    status: str
    rho: float
    wall_time: float
    subproblem_solves: int
    scenario_count: int
    state: PhState | None = field(default=None, repr=False)

    @property
    def first_stage_tour(self) -> Tour:
        return self.tour


def cost_proportional_rho(values) -> float:
    """Mean of the costs after dividing by their maximum."""
    v = np.asarray(values, dtype=float).ravel()
    top = v.max() if v.size else 0.0
    if not top > 0.0:
        raise ValueError("cost values are all zero; rho cannot be derived from them")
    return float(np.mean(v / top))


def auto_rho(inst: Instance) -> float:
    """Cost-proportional penalty over first-stage edges between distinct vertices."""
    t = inst.tour_size
    mask = ~np.eye(t, dtype=bool)
    for a, b in inst.forced_edges:
        mask[a, b] = False
    return cost_proportional_rho(inst.c1[mask])


def subproblem(inst: Instance, cost: np.ndarray, w=None, xbar=None, rho=None) -> AtspProblem:
    """ATSP for one scenario given its effective costs.

    Without ``w``/``xbar``/``rho`` this is the initialization solve.
    """
    c = np.array(cost, dtype=float)
    offset = 0.0
    if w is not None:
        c = c + w
    if rho is not None:
        xb = np.zeros_like(c) if xbar is None else np.asarray(xbar, dtype=float)
        c = c + 0.5 * rho * (1.0 - 2.0 * xb)
        offset = 0.5 * rho * float(np.sum(xb * xb))
    np.fill_diagonal(c, 0.0)
    return AtspProblem(c, inst.forced_edges, offset)


def proximal_objective(cost, w, xbar, rho, x) -> float:
    """Scenario objective with the quadratic proximal term written out."""
    x = np.asarray(x, dtype=float)
    off = ~np.eye(x.shape[0], dtype=bool)
    d = (x - xbar)[off]
    return (math.fsum((np.asarray(cost) * x)[off]) + math.fsum((np.asarray(w) * x)[off])
            + 0.5 * rho * math.fsum(d * d))


def evaluate(inst: Instance, table: DetourTable, tour: Tour, scenarios: ScenarioSet):
    """Two-stage objective of a fixed tour: (total, first stage, expected recourse)."""
    first = tour.cost(inst.c1)
    rec = 0.0
    for s, p in scenarios:
        rec += float(p) * beta(inst, table, tour, s).beta
    return first + rec, first, rec


def _aggregate(p, X):
    xbar = np.zeros(X.shape[1:])
    for k in range(len(p)):
        xbar += p[k] * X[k]
    return xbar


def _residual(p, X, xbar) -> float:
    r = 0.0
    for k in range(len(p)):
        r += float(p[k]) * float(np.linalg.norm(X[k] - xbar))
    return r


def _is_binary(xbar) -> bool:
    return bool(np.all(np.minimum(np.abs(xbar), np.abs(1.0 - xbar)) <= BINARY_TOL))


class _Pool:
    def __init__(self, threads):
        self.ex = ThreadPoolExecutor(threads) if threads > 1 else None

    def map(self, fn, items):
        if self.ex is None:
            return [fn(it) for it in items]
        return list(self.ex.map(fn, items))

    def close(self):
        if self.ex is not None:
            self.ex.shutdown()


def solve(inst: Instance, scenarios: ScenarioSet, config: PhConfig = PhConfig(),
          table: DetourTable | None = None) -> SolveReport:
    """Run Progressive Hedging and report the consensus tour.

    Subproblem solves within an iteration may run on ``config.threads``
    workers; aggregation always walks scenarios in their listed order, so
    the result does not depend on the thread count.
    """
    t0 = time.perf_counter()
    if scenarios.n != inst.n:
        raise ValueError(f"scenarios cover {scenarios.n} targets, instance has {inst.n}")
    table = table or DetourTable.build(inst)
    work = scenarios.merged() if config.merge_duplicates else scenarios
    p = np.asarray(work.weights, dtype=float)
    p = p / math.fsum(p)  # exact 1.0 for a single scenario
    K = len(work)
    rho = auto_rho(inst) if config.rho == "auto" else float(config.rho)
    costs = [effective_costs(inst, table, s) for s in work.scenarios]
    pool = _Pool(config.threads)
    solves = 0
    seen: dict[tuple, Tour] = {}

    def run(problems):
        nonlocal solves
        sols = pool.map(atsp.solve_exact, problems)
        solves += len(sols)
        X = np.stack([s.tour.to_x() for s in sols])
        for s in sols:
            seen.setdefault(s.tour.sequence, s.tour)
        return sols, X

    try:
        sols, X = run([subproblem(inst, c) for c in costs])
        xbar = _aggregate(p, X)
        W = np.stack([rho * (X[k] - xbar) for k in range(K)])
        trace = [_residual(p, X, xbar)]
        log.debug("ph k=0 residual=%.3e", trace[-1])
        k = 0
        converged = False
        while k < config.max_iterations:
            k += 1
            sols, X = run([subproblem(inst, costs[q], W[q], xbar, rho) for q in range(K)])
            xbar = _aggregate(p, X)
            for q in range(K):
                W[q] = W[q] + rho * (X[q] - xbar)
            trace.append(_residual(p, X, xbar))
            log.debug("ph k=%d residual=%.3e", k, trace[-1])
            if trace[-1] <= config.epsilon and _is_binary(xbar):
                converged = True
                break
    finally:
        pool.close()

    state = PhState(k, X, W, xbar, trace)
    if converged:
        tour = Tour.from_x(xbar)
        status = CONVERGED
    else:
        if config.fallback == BEST_SCENARIO:
            pool_tours = list(seen.values())
            status = FALLBACK
        else:
            pool_tours = list({s.tour.sequence: s.tour for s in sols}.values())
            status = NOT_CONVERGED
        scored = [(evaluate(inst, table, tr, scenarios)[0], tr.sequence, tr) for tr in pool_tours]
        tour = min(scored, key=lambda z: (z[0], z[1]))[2]
        log.warning("ph stopped after %d iterations without consensus (residual %.3e)", k, trace[-1])
    total, first, rec = evaluate(inst, table, tour, scenarios)
    return SolveReport(
        tour=tour, objective=total, first_stage_cost=first, expected_recourse=rec,
        iterations=k, residual_trace=trace, converged=converged, status=status, rho=rho,
        wall_time=time.perf_counter() - t0, subproblem_solves=solves, scenario_count=K,
        state=state,
    )


def deterministic_tour(inst: Instance, s: Scenario, table: DetourTable | None = None) -> atsp.AtspSolution:
    """Exact tour for a single known scenario."""
    table = table or DetourTable.build(inst)
    return atsp.solve_exact(subproblem(inst, effective_costs(inst, table, s)))
