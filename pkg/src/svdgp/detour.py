"""Exact second-stage evaluation.

With the first-stage order frozen, the second stage splits into one
independent problem per failed tour edge (i, j): leave target i, visit every
supplemental location of i exactly once, then continue to j.  Each of these
is a shortest Hamiltonian path over S_i with fixed endpoints, solved here by
subset dynamic programming.  The per-edge optima are tabulated once per
instance in a :class:`DetourTable`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .atsp import Tour
from .instance import Instance
from .scenario import Scenario

DETOUR_MAX_M = 20
TIE_RTOL = 1e-12


@numba.njit(cache=True, nogil=True)
def _detour_dp(start, within, end, tol):
    """Shortest i -> (all of S) -> j for every exit column j of ``end``.

    ``start[a]`` is the cost i -> s_a, ``within[a, b]`` the cost s_a -> s_b
    and ``end[a, j]`` the cost s_a -> j.  Returns the optimal values and the
    lexicographically smallest optimal visiting order per column.
    """
    m = start.shape[0]
    nj = end.shape[1]
    full = (1 << m) - 1
    values = np.empty(nj)
    orders = np.empty((nj, m), dtype=np.int64)
    # h[mask, a]: cheapest walk from s_a through every s_b in mask, then to j
    h = np.empty((1 << m, m))
    for j in range(nj):
        for a in range(m):
            h[0, a] = end[a, j]
        for mask in range(1, full + 1):
            for a in range(m):
                if mask & (1 << a):
                    h[mask, a] = np.inf
                    continue
                best = np.inf
                for b in range(m):
                    bit = 1 << b
                    if mask & bit:
                        v = within[a, b] + h[mask ^ bit, b]
                        if v < best:
                            best = v
                h[mask, a] = best
        best = np.inf
        for a in range(m):
            v = start[a] + h[full ^ (1 << a), a]
            if v < best:
                best = v
        values[j] = best
        # forward walk picking the smallest index that stays optimal
        mask = full
        target = best
        prev = -1
        for pos in range(m):
            for a in range(m):
                bit = 1 << a
                if mask & bit:
                    step = start[a] if prev < 0 else within[prev, a]
                    v = step + h[mask ^ bit, a]
                    if v <= target + tol:
                        orders[j, pos] = a
                        mask ^= bit
                        target = h[mask, a]
                        prev = a
                        break
    return values, orders


def _pair_data(inst: Instance, i: int):
    s = np.asarray(inst.supplementals[i])
    c2 = inst.c2
    start = np.ascontiguousarray(c2[i, s])
    within = np.ascontiguousarray(c2[np.ix_(s, s)])
    np.fill_diagonal(within, 0.0)
    end = np.ascontiguousarray(c2[np.ix_(s, np.arange(inst.tour_size))])
    tol = TIE_RTOL * (1.0 + np.abs(start).sum() + np.abs(within).sum() + np.abs(end).sum())
    return s, start, within, end, tol


def _check_m(inst: Instance) -> None:
    if inst.m > DETOUR_MAX_M:
        raise ValueError(f"detour DP supports m <= {DETOUR_MAX_M}, got m={inst.m}")


def min_detour(inst: Instance, i: int, j: int) -> tuple[float, tuple[int, ...]]:
    """Cheapest path i -> every supplemental of i -> j, and its visiting order."""
    _check_m(inst)
    if i not in inst.targets:
        raise ValueError(f"{i} is not a target")
    if not 0 <= j < inst.tour_size or j == i:
        raise ValueError(f"invalid successor {j} for target {i}")
    s, start, within, end, tol = _pair_data(inst, i)
    values, orders = _detour_dp(start, within, end[:, j:j + 1], tol)
    return float(values[0]), tuple(int(s[a]) for a in orders[0])


@dataclass(frozen=True)
class DetourTable:
    """Optimal detour costs ``D[i, j]`` and orders for every target i.

    Rows of non-targets and the diagonal hold NaN.  ``delta`` is
    ``D - c1`` with zeros where ``D`` is undefined, which is the extra cost
    of edge (i, j) when target i fails.
    """

    D: np.ndarray
    orders: dict
    delta: np.ndarray
    dp_states: int

    @classmethod
    def build(cls, inst: Instance) -> "DetourTable":
        _check_m(inst)
        t = inst.tour_size
        D = np.full((t, t), np.nan)
        orders = {}
        for i in inst.targets:
            s, start, within, end, tol = _pair_data(inst, i)
            values, ords = _detour_dp(start, within, end, tol)
            for j in range(t):
                if j == i:
                    continue
                D[i, j] = values[j]
                orders[i, j] = tuple(int(s[a]) for a in ords[j])
        delta = np.where(np.isnan(D), 0.0, D - inst.c1)
        for a in (D, delta):
            a.setflags(write=False)
        states = inst.n * (t - 1) * (1 << inst.m) * inst.m
        return cls(D, orders, delta, states)

    def effective_costs(self, inst: Instance, s: Scenario) -> np.ndarray:
        return effective_costs(inst, self, s)


def omega_vector(inst: Instance, s: Scenario) -> np.ndarray:
    """Scenario padded to the tour vertex count (the destination never fails)."""
    if s.n != inst.n:
        raise ValueError(f"scenario covers {s.n} targets, instance has {inst.n}")
    w = np.zeros(inst.tour_size)
    w[: inst.n + 1] = s.omega
    return w


def effective_costs(inst: Instance, table: DetourTable, s: Scenario) -> np.ndarray:
    """First-stage costs with failed targets' out-edges replaced by detours."""
    w = omega_vector(inst, s)
    return inst.c1 + w[:, None] * table.delta


@dataclass(frozen=True)
class Leg:
    target: int
    successor: int
    order: tuple[int, ...]
    delta: float


@dataclass(frozen=True)
class Recourse:
    beta: float
    legs: tuple[Leg, ...]


def beta(inst: Instance, table: DetourTable, tour: Tour, s: Scenario) -> Recourse:
    """Recourse cost of ``tour`` under ``s``: the extra travel over the tour."""
    w = omega_vector(inst, s)
    legs = []
    total = 0.0
    for i, j in tour.edges():
        if w[i]:
            d = float(table.delta[i, j])
            legs.append(Leg(i, j, table.orders[i, j], d))
            total += d
    return Recourse(total, tuple(legs))


def second_stage_route(inst: Instance, table: DetourTable, tour: Tour, s: Scenario) -> list[int]:
    """Full closed vertex route flown under ``s`` (ends back at vertex 0)."""
    w = omega_vector(inst, s)
    route = []
    for i, j in tour.edges():
        route.append(i)
        if w[i]:
            route.extend(table.orders[i, j])
    route.append(tour.sequence[0])
    return route


def route_cost(inst: Instance, route) -> float:
    """Cost of a vertex route priced with second-stage edge costs."""
    return float(sum(inst.cost2(a, b) for a, b in zip(route, route[1:])))
