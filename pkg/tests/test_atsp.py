import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import atsp_enumerate
from svdgp.atsp import (AtspProblem, InfeasibleError, Tour, assignment_bound, branch_and_bound,
                        check_tour_x, held_karp, solve_exact)

FROZEN = np.array([[0, 3, 9, 4, 7, 2], [5, 0, 6, 8, 1, 7], [2, 8, 0, 3, 9, 4],
                   [7, 1, 5, 0, 2, 8], [3, 9, 2, 6, 0, 5], [8, 4, 7, 1, 6, 0]], dtype=float)


def test_frozen_matrix():
    for solver in (held_karp, branch_and_bound, solve_exact):
        sol = solver(AtspProblem(FROZEN))
        assert sol.objective == 9.0
        assert sol.tour.sequence == (0, 5, 3, 1, 4, 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 8), st.integers(0, 2**32 - 1), st.booleans())
def test_solvers_agree_with_enumeration(n, seed, integral):
    rng = np.random.default_rng(seed)
    c = rng.integers(0, 5, (n, n)).astype(float) if integral else rng.random((n, n)) * 100
    best, seq = atsp_enumerate(c)
    hk, bb = held_karp(AtspProblem(c)), branch_and_bound(AtspProblem(c))
    assert hk.objective == pytest.approx(best, abs=1e-9)
    assert bb.objective == pytest.approx(best, abs=1e-9)
    # both pick the lexicographically smallest optimal tour
    assert hk.tour.sequence == seq == bb.tour.sequence


def test_all_equal_costs_lex_smallest():
    c = np.ones((7, 7))
    assert solve_exact(AtspProblem(c)).tour.sequence == tuple(range(7))
    assert branch_and_bound(AtspProblem(c)).tour.sequence == tuple(range(7))


def test_forced_edges_and_offset():
    rng = np.random.default_rng(3)
    c = rng.random((7, 7))
    sol = solve_exact(AtspProblem(c, forced_edges=((6, 0), (2, 5)), offset=1.5))
    assert sol.tour.sequence[-1] == 6
    seq = sol.tour.sequence
    assert seq[seq.index(2) + 1] == 5
    # brute force over tours with the forced edges
    big = c.copy()
    big[6, :] = 1e6
    big[6, 0] = c[6, 0]
    big[2, :] = 1e6
    big[2, 5] = c[2, 5]
    best, _ = atsp_enumerate(big)
    assert sol.objective == pytest.approx(best + 1.5)


def test_forced_subtour_infeasible():
    c = np.ones((4, 4))
    with pytest.raises(InfeasibleError):
        solve_exact(AtspProblem(c, forced_edges=((1, 2), (2, 1))))
    with pytest.raises(InfeasibleError):
        solve_exact(AtspProblem(c, forced_edges=((1, 2), (1, 3))))


def test_full_forced_cycle():
    c = np.arange(16, dtype=float).reshape(4, 4)
    sol = solve_exact(AtspProblem(c, forced_edges=((0, 2), (2, 1), (1, 3), (3, 0))))
    assert sol.tour.sequence == (0, 2, 1, 3)
    assert sol.objective == c[0, 2] + c[2, 1] + c[1, 3] + c[3, 0]


def test_large_instance_uses_branch_and_bound():
    rng = np.random.default_rng(0)
    c = rng.random((22, 22)) * 100
    sol = solve_exact(AtspProblem(c))
    assert sol.proven
    with pytest.raises(ValueError):
        held_karp(AtspProblem(c))


def test_assignment_bound_is_lower_bound():
    rng = np.random.default_rng(9)
    c = rng.random((7, 7))
    lb, succ = assignment_bound(c)
    assert lb <= atsp_enumerate(c)[0] + 1e-12
    assert sorted(succ) == list(range(7))


def test_tour_edges_and_x():
    t = Tour((0, 2, 1, 3))
    assert t.edges() == [(0, 2), (2, 1), (1, 3), (3, 0)]
    x = t.to_x()
    check_tour_x(x)
    assert Tour.from_x(x) == t
    with pytest.raises(ValueError):
        Tour((1, 0, 2))
    x2 = np.zeros((4, 4))
    x2[0, 1] = x2[1, 0] = x2[2, 3] = x2[3, 2] = 1
    with pytest.raises(ValueError):
        check_tour_x(x2)
