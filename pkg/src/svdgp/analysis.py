"""Ground-truth oracles and experiment helpers.

* :func:`extensive_form_bruteforce` enumerates every first-stage tour and
  prices it against every scenario, giving the exact two-stage optimum for
  small instances.
* :func:`solve_evp` / :func:`vss` compare the stochastic solution with the
  expected-value tour.
* :func:`run_sweep` drives one PH solve per value of a single parameter
  and writes plot-ready CSV.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import instance as instance_mod
from . import ph
from . import scenario as scenario_mod
from .atsp import Tour, solve_exact
from .detour import DetourTable, effective_costs
from .instance import GenConfig, Instance
from .scenario import FidelityModel, Scenario, ScenarioSet

log = logging.getLogger(__name__)

ORACLE_MAX_N = 9
TIE_RTOL = 1e-12


def _all_tours(inst: Instance) -> np.ndarray:
    """Every tour sequence in lexicographic order, one per row."""
    free = list(inst.targets)
    tail = [inst.destination] if inst.depot_mode == instance_mod.SPLIT else []
    rows = [(0, *perm, *tail) for perm in itertools.permutations(free)]
    return np.array(rows, dtype=np.int64)


def extensive_form_bruteforce(inst: Instance, scenarios: ScenarioSet,
                              table: DetourTable | None = None) -> tuple[Tour, float]:
    """Exact two-stage optimum by enumerating all first-stage tours.

    Each tour is priced scenario by scenario with its effective edge costs;
    ties go to the lexicographically smallest sequence.
    """
    if inst.n > ORACLE_MAX_N:
        raise ValueError(f"brute force is limited to n <= {ORACLE_MAX_N}, got n={inst.n}")
    table = table or DetourTable.build(inst)
    seqs = _all_tours(inst)
    nxt = np.roll(seqs, -1, axis=1)
    values = np.zeros(len(seqs))
    for s, p in scenarios:
        c = effective_costs(inst, table, s)
        values += float(p) * c[seqs, nxt].sum(axis=1)
    best = values.min()
    tol = TIE_RTOL * (1.0 + abs(best)) * seqs.shape[1]
    k = int(np.flatnonzero(values <= best + tol)[0])
    tour = Tour(tuple(seqs[k]))
    return tour, ph.evaluate(inst, table, tour, scenarios)[0]


def ev_scenario(model: FidelityModel) -> Scenario:
    """Expected-value scenario: a target fails when its probability is >= 0.5."""
    return Scenario(tuple(0 if i == 0 else int(p >= 0.5) for i, p in enumerate(model.p)))


def solve_evp(inst: Instance, model: FidelityModel, table: DetourTable | None = None) -> Tour:
    table = table or DetourTable.build(inst)
    s = ev_scenario(model)
    return solve_exact(ph.subproblem(inst, effective_costs(inst, table, s))).tour


@dataclass
class VssReport:
    rp: float
    rp_tour: Tour
    rp_source: str
    ev_tour: Tour
    eev: float
    vss: float
    vss_percent: float


def vss(inst: Instance, model: FidelityModel, scenarios: ScenarioSet, rp_source: str = "auto",
        config: ph.PhConfig | None = None, table: DetourTable | None = None) -> VssReport:
    """Value of the stochastic solution, EEV - RP.

    ``rp_source`` is ``"oracle"`` (brute force), ``"ph"`` (heuristic RP) or
    ``"auto"`` (oracle when the instance is small enough).
    """
    table = table or DetourTable.build(inst)
    if rp_source == "auto":
        rp_source = "oracle" if inst.n <= ORACLE_MAX_N else "ph"
    if rp_source == "oracle":
        rp_tour, rp = extensive_form_bruteforce(inst, scenarios, table)
    elif rp_source == "ph":
        rep = ph.solve(inst, scenarios, config or ph.PhConfig(), table)
        rp_tour, rp = rep.tour, rep.objective
    else:
        raise ValueError(f"unknown rp source {rp_source!r}")
    ev_tour = solve_evp(inst, model, table)
    eev = ph.evaluate(inst, table, ev_tour, scenarios)[0]
    gap = eev - rp
    pct = 100.0 * gap / eev if eev != 0 else 0.0
    return VssReport(rp, rp_tour, rp_source, ev_tour, eev, gap, pct)


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

AXES = ("scenario_count", "m", "R", "probability")


@dataclass
class SweepSpec:
    """One-parameter experiment grid.

    Every cell shares ``instance_seed`` and ``scenario_seed``; only the
    swept parameter changes.  ``instance_path`` pins a fixed instance
    (incompatible with the ``m`` and ``R`` axes).
    """

    axis: str
    values: list
    n: int = 10
    m: int = 5
    radius: float = 5.0
    grid: float = 100.0
    turn_radius: float = 5.0
    depot_mode: str = instance_mod.SPLIT
    instance_seed: int = 0
    instance_path: str | None = None
    scenario_count: int = 25
    probability: float = 0.5
    scenario_seed: int = 0
    rho: float | str = "auto"
    epsilon: float = 1e-5
    max_iterations: int = 500
    threads: int = 1

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if self.instance_path and self.axis in ("m", "R"):
            raise ValueError("a fixed instance cannot be swept over m or R")

    @classmethod
    def from_json(cls, text: str) -> "SweepSpec":
        return cls(**json.loads(text))

    @classmethod
    def load(cls, path) -> "SweepSpec":
        return cls.from_json(Path(path).read_text())


@dataclass
class SweepRow:
    axis: str
    value: float
    n: int
    objective: float
    iterations: int
    seconds: float
    converged: bool
    status: str
    subproblems: int
    scenarios: int
    dp_states: int
    residuals: list[float] = field(default_factory=list)


def _cell(spec: SweepSpec, value, cache: dict) -> SweepRow:
    params = asdict(spec)
    key = {"scenario_count": "scenario_count", "m": "m", "R": "radius", "probability": "probability"}[spec.axis]
    params[key] = value
    if spec.instance_path:
        inst = cache.setdefault("inst", instance_mod.load(spec.instance_path))
    else:
        cfg = GenConfig(n=params["n"], m=int(params["m"]), radius=float(params["radius"]),
                        grid=params["grid"], turn_radius=params["turn_radius"],
                        seed=params["instance_seed"], depot_mode=params["depot_mode"])
        inst = instance_mod.generate(cfg)
    model = FidelityModel.uniform(inst.n, float(params["probability"]))
    sset = scenario_mod.sample(model, int(params["scenario_count"]), params["scenario_seed"])
    t0 = time.perf_counter()
    table = DetourTable.build(inst)
    cfg = ph.PhConfig(rho=spec.rho, epsilon=spec.epsilon, max_iterations=spec.max_iterations,
                      threads=spec.threads)
    rep = ph.solve(inst, sset, cfg, table)
    return SweepRow(spec.axis, value, inst.n, rep.objective, rep.iterations,
                    time.perf_counter() - t0, rep.converged, rep.status, rep.subproblem_solves,
                    rep.scenario_count, table.dp_states, rep.residual_trace)


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """One PH solve per axis value; failing cells are recorded, not raised."""
    rows, cache = [], {}
    for value in spec.values:
        try:
            rows.append(_cell(spec, value, cache))
        except Exception as exc:  # noqa: BLE001 - a bad cell must not sink the sweep
            log.error("sweep cell %s=%r failed: %s", spec.axis, value, exc)
            rows.append(SweepRow(spec.axis, value, spec.n, float("nan"), 0, 0.0, False,
                                 f"error: {exc}", 0, 0, 0))
    return rows


def _num(x) -> str:
    return f"{x:.9g}" if isinstance(x, float) else str(x)


def sweep_csv(rows: list[SweepRow], timing: bool = True) -> str:
    """Sweep table; ``timing=False`` drops the wall-clock column."""
    out = io.StringIO()
    wr = csv.writer(out, lineterminator="\n")
    head = ["axis", "value", "n", "objective", "iterations"]
    head += ["seconds"] if timing else []
    head += ["converged", "status", "subproblems", "scenarios", "dp_states"]
    wr.writerow(head)
    for r in rows:
        line = [r.axis, _num(r.value), r.n, _num(r.objective), r.iterations]
        line += [_num(r.seconds)] if timing else []
        line += [int(r.converged), r.status, r.subproblems, r.scenarios, r.dp_states]
        wr.writerow(line)
    return out.getvalue()


def residual_csv(trace, value=None, axis=None) -> str:
    out = io.StringIO()
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(([axis] if axis else []) + ["iteration", "residual"])
    for k, r in enumerate(trace):
        wr.writerow(([_num(value)] if axis else []) + [k, _num(float(r))])
    return out.getvalue()


def sweep_residuals_csv(rows: list[SweepRow]) -> str:
    out = io.StringIO()
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(["axis", "value", "iteration", "residual"])
    for r in rows:
        for k, res in enumerate(r.residuals):
            wr.writerow([r.axis, _num(r.value), k, _num(float(res))])
    return out.getvalue()


def vss_csv(reports: list[tuple[float, VssReport]]) -> str:
    out = io.StringIO()
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(["p", "rp", "eev", "vss", "vss_percent", "rp_source"])
    for p, rep in reports:
        wr.writerow([_num(float(p)), _num(rep.rp), _num(rep.eev), _num(rep.vss),
                     _num(rep.vss_percent), rep.rp_source])
    return out.getvalue()
