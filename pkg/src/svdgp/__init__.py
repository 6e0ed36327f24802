"""Two-stage stochastic tour planning for UAV data-gathering missions.

Targets are toured once in a fixed order; when the data collected at a
target turns out to be of insufficient fidelity the vehicle detours through
that target's supplemental locations before moving on.  The first-stage
tour is chosen by Progressive Hedging over failure scenarios, with every
scenario subproblem solved as an exact asymmetric TSP.
"""
from .atsp import AtspProblem, AtspSolution, Tour, branch_and_bound, held_karp, solve_exact
from .detour import DetourTable, beta, effective_costs, min_detour
from .geometry import DubinsPath, Pose, cost, dubins_shortest_path
from .instance import GenConfig, Instance, generate
from .ph import PhConfig, SolveReport, auto_rho, evaluate, solve
from .scenario import FidelityModel, Scenario, ScenarioSet, enumerate_scenarios, probability, sample

__version__ = "0.1.0"

__all__ = [
    "AtspProblem", "AtspSolution", "Tour", "branch_and_bound", "held_karp", "solve_exact",
    "DetourTable", "beta", "effective_costs", "min_detour",
    "DubinsPath", "Pose", "cost", "dubins_shortest_path",
    "GenConfig", "Instance", "generate",
    "PhConfig", "SolveReport", "auto_rho", "evaluate", "solve",
    "FidelityModel", "Scenario", "ScenarioSet", "enumerate_scenarios", "probability", "sample",
]
