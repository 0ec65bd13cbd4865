# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled greedy merge kernel.

Mirrors ``_merge_py.merge_groups`` exactly: same merge order, tie-breaking,
and float operation order. See that module for the algorithm description.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

RULE_MAX = 0
RULE_SUM = 1
RULE_CROSS_SUM = 2


cdef inline void _rescan_row(double[:, ::1] c, Py_ssize_t n, Py_ssize_t row,
                             double[::1] rmin, Py_ssize_t[::1] rcol,
                             double floor) noexcept nogil:
    # Deleted columns and the diagonal hold +inf, so a plain min scan needs
    # no activity test. ``floor`` is a proven lower bound on the row minimum
    # (edge weights never shrink under the merge rules); hitting it ends the
    # scan early, which collapses the cost on tie-heavy inputs. The first
    # strict improvement per value keeps the smallest-column tie-break.
    cdef double best = INFINITY
    cdef Py_ssize_t best_col = row
    cdef Py_ssize_t m
    cdef double v
    for m in range(n):
        v = c[row, m]
        if v < best:
            best = v
            best_col = m
            if best <= floor:
                break
    rmin[row] = best
    rcol[row] = best_col


def merge_groups(double[:, ::1] cost, Py_ssize_t k, int rule):
    """Reduce ``cost`` to ``k`` groups; returns the surviving vertex per user.

    ``cost`` is mutated in place; pass a copy. Off-diagonal entries must be
    non-negative (the cache maintenance assumes merged edges never shrink).
    """
    cdef Py_ssize_t n = cost.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] leader_arr = np.arange(n, dtype=np.int64)
    cdef cnp.int64_t[::1] leader = leader_arr
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] active_arr = np.ones(n, dtype=np.uint8)
    cdef unsigned char[::1] active = active_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rmin_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] rmin = rmin_arr
    cdef cnp.ndarray[cnp.intp_t, ndim=1] rcol_arr = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] rcol = rcol_arr

    cdef Py_ssize_t alive = n
    cdef Py_ssize_t i, j, m, row
    cdef double v, best, new_val

    if alive <= k:
        return leader_arr

    with nogil:
        for row in range(n):
            cost[row, row] = INFINITY
        for row in range(n):
            _rescan_row(cost, n, row, rmin, rcol, 0.0)

        while alive > k and alive >= 2:
            # Cheapest edge; smallest row first, then smallest column.
            best = INFINITY
            i = -1
            for row in range(n):
                if active[row] and rmin[row] < best:
                    best = rmin[row]
                    i = row
            j = rcol[i]
            v = cost[i, j]

            # Fold i into j.
            for m in range(n):
                if m == i or m == j:
                    continue
                if rule == 0:
                    new_val = cost[m, i] if cost[m, i] > cost[m, j] else cost[m, j]
                elif rule == 1:
                    new_val = (v + cost[m, i]) + cost[m, j]
                else:
                    new_val = cost[m, i] + cost[m, j]
                if not active[m]:
                    new_val = INFINITY
                cost[m, j] = new_val
                cost[j, m] = new_val
            for m in range(n):
                cost[m, i] = INFINITY
                cost[i, m] = INFINITY
            cost[j, j] = INFINITY
            active[i] = 0
            for m in range(n):
                if leader[m] == i:
                    leader[m] = j
            alive -= 1

            _rescan_row(cost, n, j, rmin, rcol, 0.0)
            for m in range(n):
                if not active[m] or m == j:
                    continue
                if rcol[m] == i or rcol[m] == j:
                    # The minimum cannot drop below the previous one except
                    # through the refreshed column j, checked jointly here.
                    new_val = cost[m, j]
                    _rescan_row(cost, n, m, rmin, rcol,
                                new_val if new_val < rmin[m] else rmin[m])
                else:
                    new_val = cost[m, j]
                    if new_val < rmin[m]:
                        rmin[m] = new_val
                        rcol[m] = j
                    elif new_val == rmin[m] and j < rcol[m]:
                        rcol[m] = j

    return leader_arr
