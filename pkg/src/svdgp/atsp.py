"""Exact asymmetric TSP over the tour vertex set.

Two exact methods share one contract: Held-Karp bitmask dynamic
programming for small problems and a branch-and-bound that bounds with the
assignment relaxation and branches on its shortest subtour.  Both return
the lexicographically smallest optimal sequence anchored at vertex 0.
"""
from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np
from scipy.optimize import linear_sum_assignment

HELD_KARP_MAX = 18
DISPATCH_MAX = 16
TIE_RTOL = 1e-12


class InfeasibleError(ValueError):
    """Forced edges cannot be completed to a Hamiltonian cycle."""


@dataclass(frozen=True)
class Tour:
    """Closed tour given as a vertex sequence starting at vertex 0.

    The closing edge from the last vertex back to 0 is implied.
    """

    sequence: tuple[int, ...]

    def __post_init__(self):
        seq = tuple(int(v) for v in self.sequence)
        object.__setattr__(self, "sequence", seq)
        if not seq or seq[0] != 0:
            raise ValueError(f"tour must start at vertex 0: {seq}")
        if sorted(seq) != list(range(len(seq))):
            raise ValueError(f"tour must visit every vertex exactly once: {seq}")

    def __len__(self):
        return len(self.sequence)

    def edges(self) -> list[tuple[int, int]]:
        s = self.sequence
        return [(s[k], s[(k + 1) % len(s)]) for k in range(len(s))]

    def cost(self, matrix) -> float:
        m = np.asarray(matrix, dtype=float)
        s = np.asarray(self.sequence)
        return float(m[s, np.roll(s, -1)].sum())

    def to_x(self) -> np.ndarray:
        x = np.zeros((len(self), len(self)))
        s = np.asarray(self.sequence)
        x[s, np.roll(s, -1)] = 1.0
        return x

    @classmethod
    def from_x(cls, x, atol: float = 1e-6) -> "Tour":
        """Decode a binary edge matrix; raises ValueError if it is not a tour."""
        x = np.asarray(x, dtype=float)
        check_tour_x(x, atol=atol)
        succ = np.argmax(x, axis=1)
        seq = [0]
        while len(seq) < x.shape[0]:
            seq.append(int(succ[seq[-1]]))
        return cls(tuple(seq))

    def __str__(self):
        return " ".join(map(str, self.sequence))


def check_tour_x(x, atol: float = 1e-6) -> None:
    """Validate the degree, binary and subtour constraints on an edge matrix."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if x.shape != (n, n):
        raise ValueError("edge matrix must be square")
    if np.any(np.minimum(np.abs(x), np.abs(x - 1.0)) > atol):
        raise ValueError("edge matrix is not binary")
    xb = np.rint(x)
    if np.any(np.diag(xb) != 0):
        raise ValueError("self loops are not edges")
    if np.any(xb.sum(axis=1) != 1) or np.any(xb.sum(axis=0) != 1):
        raise ValueError("every vertex needs in-degree 1 and out-degree 1")
    succ = np.argmax(xb, axis=1)
    v, seen = 0, 1
    while succ[v] != 0:
        v = succ[v]
        seen += 1
    if seen != n:
        raise ValueError(f"edge matrix contains a subtour of length {seen} < {n}")


@dataclass
class AtspProblem:
    cost: np.ndarray
    forced_edges: tuple[tuple[int, int], ...] = ()
    offset: float = 0.0

    def __post_init__(self):
        self.cost = np.asarray(self.cost, dtype=float)
        self.forced_edges = tuple((int(a), int(b)) for a, b in self.forced_edges)
        n = self.cost.shape[0]
        if self.cost.shape != (n, n):
            raise ValueError("cost matrix must be square")

    @property
    def size(self) -> int:
        return self.cost.shape[0]


class AtspSolution(NamedTuple):
    tour: Tour
    objective: float
    proven: bool = True
    nodes: int = 1


# --------------------------------------------------------------------------
# forced-edge contraction
# --------------------------------------------------------------------------

@dataclass
class _Contraction:
    chains: list[list[int]]
    cost: np.ndarray

    @property
    def size(self) -> int:
        return len(self.chains)

    def expand(self, seq) -> tuple[int, ...]:
        flat = [v for c in seq for v in self.chains[c]]
        k = flat.index(0)
        return tuple(flat[k:] + flat[:k])


def _contract(problem: AtspProblem) -> _Contraction:
    n = problem.size
    succ, pred = {}, {}
    for a, b in problem.forced_edges:
        if a == b or not (0 <= a < n and 0 <= b < n):
            raise InfeasibleError(f"invalid forced edge ({a}, {b})")
        if succ.get(a, b) != b or pred.get(b, a) != a:
            raise InfeasibleError(f"forced edges conflict at ({a}, {b})")
        succ[a], pred[b] = b, a
    chains, used = [], set()
    for v in range(n):
        if v in used or v in pred:
            continue
        chain = [v]
        while chain[-1] in succ:
            chain.append(succ[chain[-1]])
        used.update(chain)
        chains.append(chain)
    if len(used) != n:
        cycle = [0]
        while cycle[-1] in succ and succ[cycle[-1]] != 0 and len(cycle) <= n:
            cycle.append(succ[cycle[-1]])
        if len(cycle) != n or succ.get(cycle[-1]) != 0:
            raise InfeasibleError("forced edges close a subtour")
        return _Contraction([cycle], np.zeros((1, 1)))
    # the chain holding vertex 0 becomes contracted vertex 0
    chains.sort(key=lambda c: (0 not in c, c[0]))
    heads = np.array([c[0] for c in chains])
    tails = np.array([c[-1] for c in chains])
    cost = problem.cost[np.ix_(tails, heads)].copy()
    np.fill_diagonal(cost, 0.0)
    return _Contraction(chains, cost)


# --------------------------------------------------------------------------
# Held-Karp
# --------------------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _held_karp_table(c):
    n = c.shape[0]
    k = n - 1
    full = (1 << k) - 1
    g = np.full((1 << k, n), np.inf)
    for j in range(1, n):
        g[0, j] = c[j, 0]
    for mask in range(1, full + 1):
        for j in range(1, n):
            if mask & (1 << (j - 1)):
                continue
            best = np.inf
            for q in range(1, n):
                bit = 1 << (q - 1)
                if mask & bit:
                    v = c[j, q] + g[mask ^ bit, q]
                    if v < best:
                        best = v
            g[mask, j] = best
    best = np.inf
    for q in range(1, n):
        v = c[0, q] + g[full ^ (1 << (q - 1)), q]
        if v < best:
            best = v
    g[full, 0] = best
    return g


@numba.njit(cache=True, nogil=True)
def _held_karp_walk(c, g, tol):
    n = c.shape[0]
    k = n - 1
    mask = (1 << k) - 1
    seq = np.zeros(n, dtype=np.int64)
    cur = 0
    target = g[mask, 0]
    for pos in range(1, n):
        for q in range(1, n):
            bit = 1 << (q - 1)
            if mask & bit:
                v = c[cur, q] + g[mask ^ bit, q]
                if v <= target + tol:
                    seq[pos] = q
                    mask ^= bit
                    target = g[mask, q]
                    cur = q
                    break
    return seq


def _held_karp_core(c: np.ndarray) -> tuple[tuple[int, ...], float]:
    n = c.shape[0]
    if n == 1:
        return (0,), 0.0
    if n == 2:
        return (0, 1), float(c[0, 1] + c[1, 0])
    c = np.ascontiguousarray(c, dtype=np.float64)
    g = _held_karp_table(c)
    tol = TIE_RTOL * (1.0 + np.abs(c).sum())
    seq = tuple(int(v) for v in _held_karp_walk(c, g, tol))
    value = float(sum(c[seq[i], seq[(i + 1) % n]] for i in range(n)))
    return seq, value


def held_karp(problem: AtspProblem) -> AtspSolution:
    """Exact ATSP by subset dynamic programming, O(2^n n^2)."""
    con = _contract(problem)
    if con.size > HELD_KARP_MAX:
        raise ValueError(f"held_karp supports at most {HELD_KARP_MAX} free vertices, got {con.size}")
    seq, value = _held_karp_core(con.cost)
    tour = Tour(con.expand(seq))
    return AtspSolution(tour, tour.cost(problem.cost) + problem.offset, True, 1)


# --------------------------------------------------------------------------
# branch and bound on the assignment relaxation
# --------------------------------------------------------------------------

def _cycles(assign: np.ndarray) -> list[list[int]]:
    seen = np.zeros(len(assign), dtype=bool)
    out = []
    for s in range(len(assign)):
        if seen[s]:
            continue
        cyc = []
        v = s
        while not seen[v]:
            seen[v] = True
            cyc.append(v)
            v = int(assign[v])
        out.append(cyc)
    return out


def assignment_bound(cost, excluded=(), included=()) -> tuple[float, np.ndarray | None]:
    """Assignment-relaxation lower bound; returns (value, successor array).

    ``(inf, None)`` when the restricted assignment problem is infeasible.
    """
    c = np.array(cost, dtype=float)
    n = c.shape[0]
    big = (np.abs(c).max() + 1.0) * n * 4.0 + 1e6
    np.fill_diagonal(c, big)
    for a, b in included:
        keep = c[a, b]
        c[a, :] = big
        c[:, b] = big
        c[a, b] = keep
    for a, b in excluded:
        c[a, b] = big
    rows, cols = linear_sum_assignment(c)
    if np.any(c[rows, cols] >= big):
        return np.inf, None
    succ = np.empty(n, dtype=np.int64)
    succ[rows] = cols
    return float(c[rows, cols].sum()), succ


def _nearest_neighbour(c: np.ndarray) -> tuple[tuple[int, ...], float]:
    n = c.shape[0]
    seq, left = [0], set(range(1, n))
    while left:
        cur = seq[-1]
        nxt = min(left, key=lambda j: (c[cur, j], j))
        seq.append(nxt)
        left.remove(nxt)
    return tuple(seq), float(sum(c[seq[i], seq[(i + 1) % n]] for i in range(n)))


def _anchored(succ: np.ndarray) -> tuple[int, ...]:
    seq = [0]
    while len(seq) < len(succ):
        seq.append(int(succ[seq[-1]]))
    return tuple(seq)


def _branch_and_bound_core(c: np.ndarray, time_limit: float | None):
    n = c.shape[0]
    if n <= 2:
        seq, val = _held_karp_core(c)
        return seq, val, True, 1
    tol = TIE_RTOL * (1.0 + np.abs(c).sum())
    best_seq, best_val = _nearest_neighbour(c)
    start = time.perf_counter()
    counter = itertools.count()
    root_val, root_succ = assignment_bound(c)
    heap = [(root_val, next(counter), (), (), root_succ)]
    nodes, proven = 0, True
    while heap:
        bound, _, excl, incl, succ = heapq.heappop(heap)
        if bound > best_val + tol:
            break
        nodes += 1
        if time_limit is not None and time.perf_counter() - start > time_limit:
            proven = False
            break
        cycles = _cycles(succ)
        if len(cycles) == 1:
            seq = _anchored(succ)
            if bound < best_val - tol or (bound <= best_val + tol and seq < best_seq):
                best_seq, best_val = seq, bound
            # the rest of this node may still hold tied tours that sort earlier
        inc_set = set(incl)
        cyc = min(cycles, key=lambda cy: (sum((v, int(succ[v])) not in inc_set for v in cy), min(cy)))
        free = [(v, int(succ[v])) for v in cyc if (v, int(succ[v])) not in inc_set]
        # child k excludes free[k] and fixes free[:k]: a partition of the node
        for k, edge in enumerate(free):
            ch_excl = excl + (edge,)
            ch_incl = incl + tuple(free[:k])
            val, ch_succ = assignment_bound(c, ch_excl, ch_incl)
            if ch_succ is not None and val <= best_val + tol:
                heapq.heappush(heap, (val, next(counter), ch_excl, ch_incl, ch_succ))
    best_val = float(sum(c[best_seq[i], best_seq[(i + 1) % n]] for i in range(n)))
    return best_seq, best_val, proven, nodes


def branch_and_bound(problem: AtspProblem, time_limit: float | None = None) -> AtspSolution:
    """Exact ATSP by best-first branch and bound.

    Bounds come from the assignment relaxation; each node branches on the
    relaxation's subtour with the fewest free edges.  When ``time_limit``
    (seconds) runs out the incumbent is returned with ``proven=False``.
    """
    con = _contract(problem)
    seq, _, proven, nodes = _branch_and_bound_core(con.cost, time_limit)
    tour = Tour(con.expand(seq))
    return AtspSolution(tour, tour.cost(problem.cost) + problem.offset, proven, nodes)


def solve_exact(problem: AtspProblem, time_limit: float | None = None) -> AtspSolution:
    """Optimal tour, dispatching on the contracted problem size."""
    if problem.size < 2:
        raise ValueError("an ATSP needs at least two vertices")
    con = _contract(problem)
    if con.size <= DISPATCH_MAX:
        return held_karp(problem)
    return branch_and_bound(problem, time_limit=time_limit)
