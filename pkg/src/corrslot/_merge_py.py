"""Pure-numpy greedy merge kernel (fallback for the compiled extension).

Semantics must stay bit-identical to ``_merge_core``: same merge order, same
tie-breaking, same float operation order for merged edge weights. Both
backends are exercised against each other in the test suite.

The kernel repeatedly finds the cheapest edge (i, j) of a symmetric cost
matrix (smallest value; ties broken by the lexicographically smallest index
pair with i < j), folds vertex i into vertex j, and updates j's edges by the
requested rule until only ``k`` vertices survive:

* rule 0 (max):        C[j, n] <- max(C[n, i], C[n, j])
* rule 1 (sum):        C[j, n] <- C[i, j] + C[n, i] + C[n, j]
* rule 2 (cross sum):  C[j, n] <- C[n, i] + C[n, j]

A per-row cache of (min value, smallest argmin column) keeps the scan cost
near O(n) per merge for generic inputs.
"""
import numpy as np

RULE_MAX = 0
RULE_SUM = 1
RULE_CROSS_SUM = 2


def merge_groups(cost: np.ndarray, k: int, rule: int) -> np.ndarray:
    """Reduce ``cost`` to ``k`` groups; returns the surviving vertex per user.

    ``cost`` is mutated in place; pass a copy. The diagonal is overwritten
    with the +inf sentinel. Off-diagonal entries must be non-negative (the
    cache maintenance assumes merged edges never shrink).
    """
    n = cost.shape[0]
    np.fill_diagonal(cost, np.inf)
    active = np.ones(n, dtype=bool)
    leader = np.arange(n, dtype=np.int64)
    alive = n
    if alive <= k:
        return leader

    rcol = np.argmin(cost, axis=1)
    rmin = cost[np.arange(n), rcol]

    while alive > k and alive >= 2:
        masked = np.where(active, rmin, np.inf)
        i = int(np.argmin(masked))
        j = int(rcol[i])
        v = cost[i, j]

        col_i = cost[:, i].copy()
        col_j = cost[:, j].copy()
        if rule == RULE_MAX:
            new = np.maximum(col_i, col_j)
        elif rule == RULE_SUM:
            new = (v + col_i) + col_j
        else:
            new = col_i + col_j
        new[~active] = np.inf
        new[i] = np.inf
        new[j] = np.inf

        cost[:, j] = new
        cost[j, :] = new
        cost[:, i] = np.inf
        cost[i, :] = np.inf
        active[i] = False
        leader[leader == i] = j
        alive -= 1

        # Cache maintenance: a row's entries changed only at columns i
        # (removed) and j (merged value). Rows whose cached argmin pointed
        # there are rescanned; otherwise the new value at j can only improve
        # the cache (costs are non-negative, so merged values never shrink
        # below existing minima except through these two columns).
        rescan = active & ((rcol == i) | (rcol == j))
        untouched = active & ~rescan
        improved = untouched & (new < rmin)
        rmin[improved] = new[improved]
        rcol[improved] = j
        tied = untouched & ~improved & (new == rmin) & (j < rcol)
        rcol[tied] = j
        rescan[j] = True
        rows = np.nonzero(rescan)[0]
        if rows.size:
            sub = cost[rows]
            cols = np.argmin(sub, axis=1)
            rcol[rows] = cols
            rmin[rows] = sub[np.arange(rows.size), cols]

    return leader
