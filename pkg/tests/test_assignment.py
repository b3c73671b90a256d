import itertools

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from seltrack.assignment import Assignment, solve


def brute_force(costs: np.ndarray, gate: float):
    """Exhaustive search over all partial injective row->col mappings.

    Returns (cardinality, total cost, lexicographically smallest match list)
    of the max-cardinality min-cost feasible matching.
    """
    n, m = costs.shape
    best = None

    def rec(r, used, cur, cost):
        nonlocal best
        if r == n:
            key = (-len(cur), cost, cur)
            if best is None or key < best:
                best = key
            return
        rec(r + 1, used, cur, cost)  # leave row r unmatched
        for c in range(m):
            if c in used or not np.isfinite(costs[r, c]) or costs[r, c] > gate:
                continue
            rec(r + 1, used | {c}, cur + [(r, c)], cost + costs[r, c])

    rec(0, frozenset(), [], 0.0)
    return -best[0], best[1], best[2]


# dyadic costs make float sums exact, so "equal total" has no rounding slack
dyadic = st.integers(0, 64).map(lambda k: k / 16.0)
cell = st.one_of(dyadic, st.just(np.inf))


def matrices(max_side=6):
    return st.integers(1, max_side).flatmap(
        lambda n: st.integers(1, max_side).flatmap(
            lambda m: st.lists(cell, min_size=n * m, max_size=n * m).map(
                lambda vals: np.array(vals).reshape(n, m)
            )
        )
    )


class TestExamples:
    def test_single_feasible_cell(self):
        a = solve(np.array([[0.3]]), gate=0.5)
        assert a.matches == [(0, 0)]
        assert a.unmatched_rows == [] and a.unmatched_cols == []

    def test_two_by_two_diagonal(self):
        a = solve(np.array([[1.0, 2.0], [2.0, 1.0]]), gate=10.0)
        assert a.matches == [(0, 0), (1, 1)]

    def test_gated_out(self):
        a = solve(np.array([[0.9]]), gate=0.5)
        assert a.matches == []
        assert a.unmatched_rows == [0] and a.unmatched_cols == [0]

    def test_empty_matrix(self):
        a = solve(np.zeros((0, 3)), gate=1.0)
        assert a == Assignment([], [], [0, 1, 2])
        a = solve(np.zeros((3, 0)), gate=1.0)
        assert a == Assignment([], [0, 1, 2], [])

    def test_cost_at_gate_is_feasible(self):
        a = solve(np.array([[0.5]]), gate=0.5)
        assert a.matches == [(0, 0)]

    def test_sentinel_never_matches(self):
        a = solve(np.array([[np.inf, 0.1], [0.2, np.inf]]), gate=10.0)
        assert a.matches == [(0, 1), (1, 0)]

    def test_rectangular_padding(self):
        a = solve(np.array([[5.0, 1.0, 3.0]]), gate=10.0)
        assert a.matches == [(0, 1)]
        assert a.unmatched_cols == [0, 2]

    def test_prefers_cardinality_over_cost(self):
        # matching both rows costs 10, matching only row 0 would cost 1
        costs = np.array([[1.0, np.inf], [1.0, 9.0]])
        a = solve(costs, gate=10.0)
        assert a.matches == [(0, 0), (1, 1)]

    def test_lexicographic_tie_break(self):
        a = solve(np.zeros((2, 2)), gate=1.0)
        assert a.matches == [(0, 0), (1, 1)]
        a = solve(np.array([[1.0, 0.0], [0.0, 1.0]]), gate=2.0)
        assert a.matches == [(0, 1), (1, 0)]

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            solve(np.array([[np.nan]]), gate=1.0)

    def test_rejects_non_finite_gate(self):
        with pytest.raises(ValueError):
            solve(np.zeros((1, 1)), gate=np.inf)


class TestAgainstBruteForce:
    @settings(max_examples=300, deadline=None)
    @given(matrices(), st.one_of(dyadic, st.just(4.0)))
    def test_matches_exhaustive_optimum(self, costs, gate):
        a = solve(costs, gate)
        card, cost, lex = brute_force(costs, gate)
        assert len(a.matches) == card
        assert sum(costs[r, c] for r, c in a.matches) == cost
        assert a.matches == lex

    @settings(max_examples=200, deadline=None)
    @given(matrices())
    def test_no_match_exceeds_gate(self, costs):
        gate = 2.0
        a = solve(costs, gate)
        assert all(costs[r, c] <= gate for r, c in a.matches)

    @settings(max_examples=200, deadline=None)
    @given(matrices())
    def test_partition_is_exact(self, costs):
        a = solve(costs, gate=3.0)
        rows = sorted(r for r, _ in a.matches) + a.unmatched_rows
        cols = sorted(c for _, c in a.matches) + a.unmatched_cols
        assert sorted(rows) == list(range(costs.shape[0]))
        assert sorted(cols) == list(range(costs.shape[1]))


class TestPermutationEquivariance:
    @settings(max_examples=100, deadline=None)
    @given(
        # dyadic grid: float sums are exact, so "unique optimum" is decidable
        st.integers(2, 4).flatmap(
            lambda n: st.lists(
                dyadic, min_size=n * n, max_size=n * n
            ).map(lambda vals: np.array(vals).reshape(n, n))
        ),
        st.randoms(use_true_random=False),
    )
    def test_row_permutation(self, costs, rng):
        n = costs.shape[0]
        gate = 100.0
        base = solve(costs, gate)
        # equivariance is only well-defined when the optimum is unique
        card, cost, lex = brute_force(costs, gate)
        alt = brute_force_count_optima(costs, gate, card, cost)
        assume(alt == 1)
        perm = list(range(n))
        rng.shuffle(perm)
        permuted = solve(costs[perm, :], gate)
        expect = sorted((perm.index(r), c) for r, c in base.matches)
        assert sorted(permuted.matches) == expect


def brute_force_count_optima(costs, gate, card, cost):
    n, m = costs.shape
    count = 0
    for k in range(card, card + 1):
        for rows in itertools.combinations(range(n), k):
            for cols in itertools.permutations(range(m), k):
                if all(
                    np.isfinite(costs[r, c]) and costs[r, c] <= gate
                    for r, c in zip(rows, cols)
                ):
                    total = sum(costs[r, c] for r, c in zip(rows, cols))
                    if total == cost:
                        count += 1
    return count
