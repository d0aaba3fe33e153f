"""Maximum-weight bipartite matching between multicast groups and PRBs.

This is the polynomial-time realization of the argmax scheduling policies:
build the group-by-PRB weight matrix for the active policy, match, and read
the allocation off the matching. The implementation is the classic
potential/augmenting-path (Kuhn-Munkres) method on the rectangular matrix,
O(N * L^2) for L groups and N PRBs.

With all weights nonnegative, a matching that saturates the smaller side is
simultaneously weight-optimal and cardinality-maximal, so the matcher always
assigns min(L, N) pairs. Ties are broken deterministically: rows are
processed in order and the lowest-index column is preferred at equal slack,
which yields the lexicographically smallest assignment in fully degenerate
cases (e.g. an all-zero matrix).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# absolute tolerance for tightness/equality tests on real-valued weights
_TOL = 1e-12


@dataclass
class Matching:
    """Result of a max-weight matching: partial injective row -> column map."""

    assignment: dict[int, int]  # 0-based row (group) -> 0-based column (PRB)
    total_weight: float


def max_weight_matching(weights) -> Matching:
    """Match rows (groups) to distinct columns (PRBs) maximizing total weight.

    ``weights`` is an L x N array-like of finite, nonnegative reals. Returns a
    matching of cardinality min(L, N); zero-weight edges may be used, which
    never lowers the total.
    """
    w_orig = np.asarray(weights, dtype=float)
    if w_orig.ndim != 2 or w_orig.size == 0:
        raise ValidationError("weight matrix must be 2-dimensional and nonempty")
    if not np.all(np.isfinite(w_orig)):
        raise ValidationError("weight matrix entries must be finite")
    if np.any(w_orig < 0):
        raise ValidationError("weight matrix entries must be nonnegative")
    assignment = assign_max_weight(w_orig.tolist(), *w_orig.shape)
    total = float(sum(w_orig[r, c] for r, c in assignment.items()))
    return Matching(assignment=assignment, total_weight=total)


def assign_max_weight(rows: list[list[float]], num_rows: int,
                      num_cols: int) -> dict[int, int]:
    """Matcher core on a trusted (finite, nonnegative) list-of-lists matrix.

    Same result as max_weight_matching but without input validation; used on
    the per-sub-frame hot path where weights are constructed internally.
    """
    transposed = num_rows > num_cols
    if transposed:
        rows = [list(col) for col in zip(*rows)]
        num_rows, num_cols = num_cols, num_rows

    lu = [max(r) for r in rows]
    lv = [0.0] * num_cols
    xy = [-1] * num_rows  # row -> col
    yx = [-1] * num_cols  # col -> row

    for root in range(num_rows):
        prev_row = [-1] * num_rows
        prev_row[root] = -2
        in_s = [False] * num_rows
        in_s[root] = True
        in_t = [False] * num_cols
        wroot = rows[root]
        lu_root = lu[root]
        slack = [lu_root + lv[j] - wroot[j] for j in range(num_cols)]
        slack_from = [root] * num_cols

        while True:
            # lowest-index column among those of minimum slack
            jmin, smin = -1, None
            for j in range(num_cols):
                if not in_t[j] and (smin is None or slack[j] < smin - _TOL):
                    jmin, smin = j, slack[j]
            delta = max(smin, 0.0)
            if delta > _TOL:
                for i in range(num_rows):
                    if in_s[i]:
                        lu[i] -= delta
                for j in range(num_cols):
                    if in_t[j]:
                        lv[j] += delta
                    else:
                        slack[j] -= delta
            in_t[jmin] = True
            owner = yx[jmin]
            if owner == -1:
                # augment along the alternating path ending at jmin
                i, j = slack_from[jmin], jmin
                while i != -2:
                    yx[j] = i
                    j_prev = xy[i]
                    xy[i] = j
                    i, j = prev_row[i], j_prev
                break
            in_s[owner] = True
            prev_row[owner] = slack_from[jmin]
            lo, wo = lu[owner], rows[owner]
            for j in range(num_cols):
                if not in_t[j]:
                    ns = lo + lv[j] - wo[j]
                    if ns < slack[j] - _TOL:
                        slack[j] = ns
                        slack_from[j] = owner

    if transposed:
        return {c: r for r, c in enumerate(xy) if c != -1}
    return {r: c for r, c in enumerate(xy) if c != -1}


def matching_to_allocation(m: Matching, num_groups: int) -> np.ndarray:
    """Allocation vector from a matching: b[i] = 1-based PRB or 0 if unmatched."""
    b = np.zeros(num_groups, dtype=np.int64)
    for group, prb in m.assignment.items():
        b[group] = prb + 1
    return b
