"""Slot allocation from pairwise activity statistics.

Two greedy schemes reduce a fully connected "co-activity" graph, whose edge
weights are the pairwise product expectations E[x_i x_j], by repeatedly
merging the two cheapest vertices until only K remain:

* ``rule="max"``  -- the merged edge keeps the worst (maximum) pairwise
  co-activity between the groups; minimizes the largest within-slot pair.
* ``rule="sum"``  -- the merged edge accumulates C[i,j] + C[n,i] + C[n,j];
  minimizes the summed within-slot co-activity. The recurrence folds the
  internal edge C[i,j] into every surviving edge once per merge, which
  over-counts internal mass relative to a pure cross-group sum; it is kept
  that way deliberately, with ``rule="cross_sum"`` as the strict variant.

Slot indices are 0-based throughout, numbered by ascending smallest member
of each group.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import RULE_CROSS_SUM, RULE_MAX, RULE_SUM, merge_groups
from .errors import ConfigurationError, EstimationError
from .traffic import PairwiseStats

__all__ = [
    "SlotAssignment",
    "cost_matrix",
    "cost_matrix_to_text",
    "cost_matrix_from_text",
    "min_edge",
    "greedy_allocate",
    "assignment_to_allocation",
    "uniform_allocation",
    "scale_allocation",
    "scaling_objective",
    "minmax_objective",
    "minsum_objective",
]

_RULES = {"max": RULE_MAX, "sum": RULE_SUM, "cross_sum": RULE_CROSS_SUM}


@dataclass(frozen=True)
class SlotAssignment:
    """Deterministic user -> slot map over ``n_slots`` slots (0-based)."""

    slot_of: np.ndarray
    n_slots: int

    def __post_init__(self):
        s = np.asarray(self.slot_of, dtype=np.int64)
        object.__setattr__(self, "slot_of", s)
        n, k = s.size, self.n_slots
        if k < 1 or n < 1:
            raise ConfigurationError("need at least one user and one slot")
        if np.any(s < 0) or np.any(s >= k):
            raise ConfigurationError("slot indices must lie in [0, n_slots)")
        used = np.unique(s)
        if n >= k and used.size != k:
            raise ConfigurationError("every slot must be non-empty when users >= slots")
        if n < k and not np.array_equal(s, np.arange(n)):
            raise ConfigurationError("with fewer users than slots each user keeps its own slot")

    @property
    def n_users(self) -> int:
        return self.slot_of.size

    def groups(self) -> list[np.ndarray]:
        """User indices per slot, in slot order."""
        return [np.nonzero(self.slot_of == s)[0] for s in range(self.n_slots)]

    def to_text(self) -> str:
        return "\n".join(f"{u} {int(s)}" for u, s in enumerate(self.slot_of)) + "\n"

    @classmethod
    def from_text(cls, text: str, n_slots: int | None = None) -> "SlotAssignment":
        pairs = []
        for ln, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                u, s = (int(tok) for tok in line.split())
            except ValueError as exc:
                raise ConfigurationError(f"assignment line {ln}: {exc}") from None
            pairs.append((u, s))
        if not pairs:
            raise ConfigurationError("assignment text contains no entries")
        pairs.sort()
        if [u for u, _ in pairs] != list(range(len(pairs))):
            raise ConfigurationError("assignment must list every user exactly once")
        slots = np.array([s for _, s in pairs], dtype=np.int64)
        if n_slots is None:
            n_slots = int(slots.max()) + 1
        return cls(slots, n_slots)


def cost_matrix(stats: PairwiseStats) -> np.ndarray:
    """Merge-cost matrix: pairwise product expectations, +inf on the diagonal."""
    c = stats.second_order.astype(np.float64).copy()
    np.fill_diagonal(c, np.inf)
    return c


def cost_matrix_to_text(c: np.ndarray) -> str:
    rows = []
    for row in np.asarray(c, dtype=float):
        rows.append(" ".join("inf" if np.isinf(v) else f"{v:.17g}" for v in row))
    return "\n".join(rows) + "\n"


def cost_matrix_from_text(text: str) -> np.ndarray:
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([np.inf if tok == "inf" else float(tok) for tok in line.split()])
    if not rows:
        raise ConfigurationError("cost matrix text contains no rows")
    c = np.array(rows, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ConfigurationError("cost matrix must be square")
    return c


def _check_cost(c) -> np.ndarray:
    c = np.ascontiguousarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("cost matrix must be square")
    off = ~np.eye(c.shape[0], dtype=bool)
    if not np.all(np.isfinite(c[off])):
        raise ValueError("off-diagonal costs must be finite")
    if np.any(c[off] < 0):
        raise ValueError("costs must be non-negative")
    zero_diag = c.copy()
    np.fill_diagonal(zero_diag, 0.0)
    if not np.array_equal(zero_diag, zero_diag.T):
        raise ValueError("cost matrix must be symmetric")
    return c


def min_edge(c) -> tuple[int, int]:
    """Cheapest off-diagonal position of a symmetric cost matrix.

    Ties break to the lexicographically smallest (i, j) with i < j.
    """
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 2:
        raise ValueError("need a square cost matrix with at least two rows")
    n = c.shape[0]
    upper = np.where(np.triu(np.ones((n, n), dtype=bool), 1), c, np.inf)
    flat = int(np.argmin(upper))
    return flat // n, flat % n


def greedy_allocate(c, k: int, rule: str = "max") -> SlotAssignment:
    """Merge the cost graph down to ``k`` slots.

    Each step folds the cheapest pair (i, j) into j (see module docstring
    for the edge-update rules), so mutually co-active users end up in
    different slots. With ``k >= n`` no merge happens and every user keeps
    its own slot.
    """
    if k < 1:
        raise ConfigurationError(f"slot count must be >= 1, got {k}")
    if rule not in _RULES:
        raise ConfigurationError(f"unknown merge rule {rule!r}; expected one of {sorted(_RULES)}")
    c = _check_cost(c).copy()
    leader = merge_groups(c, k, _RULES[rule])
    # Groups take the index of their smallest member; slots are numbered by
    # ascending group label.
    uniq, first, inverse = np.unique(leader, return_index=True, return_inverse=True)
    rank = np.empty(uniq.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(uniq.size)
    return SlotAssignment(rank[inverse], k)


def assignment_to_allocation(assignment: SlotAssignment) -> np.ndarray:
    """Binary N x K matrix with a single 1 per row at the assigned slot."""
    a = np.zeros((assignment.n_users, assignment.n_slots))
    a[np.arange(assignment.n_users), assignment.slot_of] = 1.0
    return a


def uniform_allocation(n: int, k: int) -> np.ndarray:
    """Every user transmits in a uniformly drawn slot (classic framed ALOHA)."""
    if n < 1 or k < 1:
        raise ConfigurationError("need at least one user and one slot")
    return np.full((n, k), 1.0 / k)


def scaling_objective(a, weights) -> float:
    """Sum over the group of (E[N_i] - 1)^2.

    ``weights[i, n]`` is the expected number of transmissions user n adds to
    user i's slot per transmission of i, i.e. E[x_n x_i]/E[x_i] off the
    diagonal and 1 on it; E[N_i] = (weights @ a)[i].
    """
    r = np.asarray(weights) @ np.asarray(a) - 1.0
    return float(r @ r)


def _scale_group(weights: np.ndarray, tol: float = 1e-9, max_iter: int = 10_000) -> np.ndarray:
    """Projected gradient descent for min ||W a - 1||^2 over the box [0, 1]^g."""
    g = weights.shape[0]
    hess = 2.0 * weights.T @ weights
    step = 1.0 / np.abs(hess).sum(axis=1).max()  # Gershgorin curvature bound
    a = np.ones(g)
    obj = scaling_objective(a, weights)
    for _ in range(max_iter):
        grad = 2.0 * weights.T @ (weights @ a - 1.0)
        a = np.clip(a - step * grad, 0.0, 1.0)
        new_obj = scaling_objective(a, weights)
        if abs(obj - new_obj) <= tol:
            break
        obj = new_obj
    return a


def scale_allocation(assignment: SlotAssignment, stats: PairwiseStats) -> np.ndarray:
    """Damp transmission probabilities so each user expects one tx in its slot.

    Per slot, solves the box-constrained least squares that pushes E[N_i]
    (the expected number of transmissions in user i's slot, conditioned on
    user i being active) to 1 for every user sharing the slot. Users alone
    in a slot keep probability 1. Rows of the result sum to at most 1: a
    user stays silent with the residual probability even when active.
    """
    if assignment.n_users != stats.n_users:
        raise ValueError("assignment and stats disagree on the number of users")
    a = np.zeros((assignment.n_users, assignment.n_slots))
    for members in assignment.groups():
        if members.size == 0:
            continue
        if members.size == 1:
            a[members[0], assignment.slot_of[members[0]]] = 1.0
            continue
        p = stats.first_order[members]
        if np.any(p <= 0):
            bad = members[np.argmin(p)]
            raise EstimationError(
                f"user {bad} shares a slot but has zero first-order activity"
            )
        weights = stats.second_order[np.ix_(members, members)] / p[:, None]
        np.fill_diagonal(weights, 1.0)
        solved = _scale_group(weights)
        a[members, assignment.slot_of[members]] = solved
    return a


def minmax_objective(a, stats: PairwiseStats) -> float:
    """Sum over slots of the largest co-located pairwise co-activity."""
    a = np.asarray(a, dtype=float)
    q = stats.second_order
    total = 0.0
    for k in range(a.shape[1]):
        col = a[:, k]
        nz = np.nonzero(col)[0]
        if nz.size < 2:
            continue
        pair = np.outer(col[nz], col[nz]) * q[np.ix_(nz, nz)]
        np.fill_diagonal(pair, 0.0)
        total += float(pair.max())
    return total


def minsum_objective(a, stats: PairwiseStats) -> float:
    """Per-slot average of the summed co-located co-activity (ordered pairs)."""
    a = np.asarray(a, dtype=float)
    k = a.shape[1]
    return float(np.einsum("nk,nm,mk->", a, stats.second_order, a)) / k
