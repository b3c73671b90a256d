"""Gated minimum-cost bipartite assignment with deterministic tie-breaking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

INFEASIBLE = np.inf


@dataclass(frozen=True)
class Assignment:
    matches: list[tuple[int, int]]
    unmatched_rows: list[int]
    unmatched_cols: list[int]


def _validate(costs) -> np.ndarray:
    m = np.asarray(costs, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {m.shape}")
    if np.isnan(m).any() or np.isneginf(m).any():
        raise ValueError("cost matrix entries must be finite or +inf (infeasible)")
    return m


def _optimum(feasible: np.ndarray) -> tuple[int, float]:
    """(cardinality, total cost) of a max-cardinality min-cost matching.

    `feasible` marks forbidden cells with +inf. Infeasible cells are padded
    with a constant large enough that dropping a real match never pays off.
    """
    n, m = feasible.shape
    if n == 0 or m == 0:
        return 0, 0.0
    mask = np.isfinite(feasible)
    if not mask.any():
        return 0, 0.0
    big = 2.0 * (float(np.abs(feasible[mask]).max()) + 1.0) * (min(n, m) + 1)
    rows, cols = linear_sum_assignment(np.where(mask, feasible, big))
    used = mask[rows, cols]
    return int(used.sum()), float(feasible[rows[used], cols[used]].sum())


def _costs_equal(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-9 * max(1.0, abs(a), abs(b))


def solve(costs, gate: float) -> Assignment:
    """Assign rows to columns over the cells with cost <= gate (and not inf).

    Maximizes the number of matches first, then minimizes their total cost.
    Ties between equal-cost optima are broken toward the lexicographically
    smallest match list (lowest row, then lowest column), by fixing matches
    in scan order and re-solving the remainder. Totals within a relative
    1e-9 of each other count as tied, so costs need coarser granularity
    than that for the tie-break to be meaningful. Output is reproducible
    bit-for-bit across runs.
    """
    m = _validate(costs)
    if not np.isfinite(gate):
        raise ValueError(f"gate must be finite, got {gate!r}")
    n_rows, n_cols = m.shape
    feasible = np.where(m <= gate, m, INFEASIBLE)
    target_card, target_cost = _optimum(feasible)

    matches: list[tuple[int, int]] = []
    if target_card > 0:
        open_cols = np.arange(n_cols)
        fixed_cost = 0.0
        for r in range(n_rows):
            if len(matches) == target_card:
                break
            row = feasible[r, open_cols]
            sub_rows = feasible[r + 1 :, :]
            for k in np.flatnonzero(np.isfinite(row)):
                c = open_cols[k]
                rest = sub_rows[:, np.delete(open_cols, k)]
                card, cost = _optimum(rest)
                total = fixed_cost + feasible[r, c] + cost
                if len(matches) + 1 + card == target_card and _costs_equal(
                    total, target_cost
                ):
                    matches.append((r, int(c)))
                    fixed_cost += feasible[r, c]
                    open_cols = np.delete(open_cols, k)
                    break
            # no column keeps the optimum reachable: row r is unmatched in it

    matched_rows = {r for r, _ in matches}
    matched_cols = {c for _, c in matches}
    return Assignment(
        matches=matches,
        unmatched_rows=[r for r in range(n_rows) if r not in matched_rows],
        unmatched_cols=[c for c in range(n_cols) if c not in matched_cols],
    )
