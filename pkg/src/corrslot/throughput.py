"""Throughput evaluation under the collision channel.

A frame holds K slots. Active users pick a slot according to their row of
the allocation matrix (rows may sum to less than 1, the remainder being the
probability of staying silent); a slot carries a success iff exactly one
user transmits in it. Throughput is reported both as expected successes per
frame and normalized per slot.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .traffic import PairwiseStats, TrafficModel

__all__ = [
    "ThroughputReport",
    "BoundPair",
    "exact_throughput",
    "throughput_bounds",
    "simulate",
    "two_user_throughput",
    "two_user_optimal",
]

MAX_ENUMERATION = 1 << 20

DEFAULT_CHUNK_FRAMES = 4096


def format_value(x) -> str:
    """Fixed-precision string used in all CSV output (determinism contract)."""
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


@dataclass(frozen=True)
class ThroughputReport:
    """Expected successes per frame plus the per-slot normalization.

    ``std_error`` is the Monte Carlo standard error of the per-frame mean
    (0 for exact evaluations); ``frames_simulated`` is 0 for exact results.
    """

    per_frame_successes: float
    per_slot_rate: float
    std_error: float
    frames_simulated: int

    def __post_init__(self):
        if self.per_frame_successes < -1e-12 or self.std_error < 0:
            raise ValueError("throughput and standard error must be non-negative")
        if not -1e-12 <= self.per_slot_rate <= 1 + 1e-12:
            raise ValueError("per-slot rate must lie in [0, 1]")

    def csv_row(self, scheme: str, n_slots: int, event_rate=None) -> str:
        lam = "" if event_rate is None else format_value(float(event_rate))
        fields = (
            scheme,
            str(n_slots),
            lam,
            format_value(self.per_frame_successes),
            format_value(self.per_slot_rate),
            format_value(self.std_error),
            str(self.frames_simulated),
        )
        return ",".join(fields)


@dataclass(frozen=True)
class BoundPair:
    """Pairwise-statistics throughput bounds (successes per frame).

    ``lower``/``upper`` are clamped into [0, n_slots]; the raw sums are kept
    alongside because the lower bound's per-user terms can go negative and
    the upper bound can exceed the trivial slot-count cap.
    """

    lower: float
    upper: float
    lower_unclamped: float
    upper_unclamped: float

    def __post_init__(self):
        if self.lower > self.upper + 1e-12:
            raise ValueError("lower bound exceeds upper bound")


def _as_allocation(a, n_users: int | None = None) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("allocation must be an (N, K) matrix")
    if n_users is not None and a.shape[0] != n_users:
        raise ValueError(
            f"allocation has {a.shape[0]} rows but the model has {n_users} users"
        )
    if np.any(a < -1e-12) or np.any(a > 1 + 1e-12):
        raise ValueError("allocation entries must lie in [0, 1]")
    if np.any(a.sum(axis=1) > 1 + 1e-9):
        raise ValueError("allocation rows must sum to at most 1")
    return a


def _is_binary(a: np.ndarray) -> bool:
    return bool(np.isin(a, (0.0, 1.0)).all())


def _pattern_successes(patterns: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Expected successes per frame for each activity pattern row."""
    x = patterns.astype(np.float64)
    if _is_binary(a):
        counts = x @ a
        return (counts == 1.0).sum(axis=1).astype(np.float64)
    # General fractional allocation: per slot k the success probability is
    # sum_n t_n * prod_{m != n} (1 - t_m) with t_n = x_n * A_nk. Factors
    # equal to zero (t == 1) are pulled out of the product and counted.
    t = x[:, :, None] * a[None, :, :]
    certain = t >= 1.0
    residual = np.where(certain, 1.0, 1.0 - t)
    prod = residual.prod(axis=1)
    zeros = certain.sum(axis=1)
    ratio_sum = (t / residual).sum(axis=1)
    per_slot = np.where(zeros == 0, prod * ratio_sum, np.where(zeros == 1, prod, 0.0))
    return per_slot.sum(axis=1)


def exact_throughput(model: TrafficModel, a) -> ThroughputReport:
    """Exact expected throughput by enumerating the model's joint distribution.

    Requires a model with tractable enumeration (cyclic patterns, explicit
    joint tables, independent users with few enough users); raises
    ``CapabilityError`` otherwise.
    """
    patterns, probs = model.enumerate_joint()
    if patterns.shape[0] > MAX_ENUMERATION:
        raise ConfigurationError(
            f"joint distribution with {patterns.shape[0]} patterns is too large"
        )
    a = _as_allocation(a, model.n_users)
    k = a.shape[1]
    total = 0.0
    step = max(1, MAX_ENUMERATION // max(1, 4 * model.n_users * k))
    for lo in range(0, patterns.shape[0], step):
        batch = slice(lo, lo + step)
        total += float(probs[batch] @ _pattern_successes(patterns[batch], a))
    return ThroughputReport(total, total / k, 0.0, 0)


def throughput_bounds(stats: PairwiseStats, a) -> BoundPair:
    """Inclusion-exclusion bounds on per-frame throughput from pairwise stats.

    Upper: each user's success in a slot is capped by its activity minus the
    strongest co-located pairwise joint activity. Lower: subtract all
    co-located pairwise joint activity, clamping each user-slot term at 0.
    """
    a = _as_allocation(a, stats.n_users)
    p = stats.first_order
    q = stats.second_order
    k = a.shape[1]

    pair_sums = q @ a  # (N, K): sum_m A_mk * E[x_n x_m]
    lower_terms = a * (p[:, None] - pair_sums)
    lower_raw = float(lower_terms.sum())
    lower = float(np.maximum(lower_terms, 0.0).sum())

    upper_raw = 0.0
    for col in a.T:
        weighted = q * col[None, :]
        max_term = weighted.max(axis=1)
        upper_raw += float((col * (p - max_term)).sum())

    return BoundPair(
        lower=min(lower, float(k)),
        upper=min(upper_raw, float(k)),
        lower_unclamped=lower_raw,
        upper_unclamped=upper_raw,
    )


class _SlotSampler:
    """Pre-computed machinery for drawing transmission slots from an allocation."""

    def __init__(self, a: np.ndarray):
        self.k = a.shape[1]
        row_sums = a.sum(axis=1)
        self.one_hot = _is_binary(a) and bool(np.all(row_sums == 1.0))
        if self.one_hot:
            self.slot_of = np.argmax(a, axis=1)
            self.aug = None
        else:
            n = a.shape[0]
            self.slot_of = None
            self.aug = (np.cumsum(a, axis=1) + np.arange(n)[:, None]).ravel()

    def draw(self, frame_idx, users, rng):
        """Transmission (frame, slot) pairs for the given active entries."""
        if self.one_hot:
            return frame_idx, self.slot_of[users]
        u = rng.random(users.size)
        pos = np.searchsorted(self.aug, users + u, side="right")
        slots = pos - users * self.k
        keep = slots < self.k
        return frame_idx[keep], slots[keep]


def _chunk_sums(model, sampler, count, start, rng):
    active = model.sample_frames(count, rng, start=start)
    arrivals = int(active.sum())
    frame_idx, users = np.nonzero(active)
    frame_idx, slots = sampler.draw(frame_idx, users, rng)
    counts = np.bincount(frame_idx * sampler.k + slots, minlength=count * sampler.k)
    per_frame = (counts.reshape(count, sampler.k) == 1).sum(axis=1, dtype=np.int64)
    return int(per_frame.sum()), int((per_frame * per_frame).sum()), arrivals


def _simulate_sums(model, a, frames, rng, workers=1, chunk_frames=DEFAULT_CHUNK_FRAMES):
    """Integer success/arrival sums over fixed-size frame chunks.

    Chunks are seeded from the generator's spawn sequence by chunk index and
    merged in chunk order, so the result is exactly independent of the
    worker count.
    """
    if frames < 1:
        raise ConfigurationError(f"need at least one frame, got {frames}")
    sampler = _SlotSampler(_as_allocation(a, model.n_users))
    n_chunks = (frames + chunk_frames - 1) // chunk_frames
    children = rng.spawn(n_chunks)
    tasks = []
    for c in range(n_chunks):
        start = c * chunk_frames
        tasks.append((min(chunk_frames, frames - start), start, children[c]))

    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(lambda t: _chunk_sums(model, sampler, *t), tasks)
            )
    else:
        results = [_chunk_sums(model, sampler, *t) for t in tasks]

    succ = sum(r[0] for r in results)
    sqsum = sum(r[1] for r in results)
    arrivals = sum(r[2] for r in results)
    return succ, sqsum, arrivals, sampler.k


def _report_from_sums(succ, sqsum, frames, k) -> ThroughputReport:
    mean = succ / frames
    if frames > 1:
        var = (sqsum - succ * succ / frames) / (frames - 1)
        stderr = math.sqrt(max(var, 0.0) / frames)
    else:
        stderr = 0.0
    return ThroughputReport(mean, mean / k, stderr, frames)


def simulate(model: TrafficModel, a, frames: int, rng: np.random.Generator,
             workers: int = 1, chunk_frames: int = DEFAULT_CHUNK_FRAMES) -> ThroughputReport:
    """Monte Carlo throughput of an allocation under the collision channel.

    Per frame: sample activity, let each active user draw a transmission
    slot from its allocation row (or stay silent with the residual
    probability), and count slots with exactly one transmission. The result
    is reproducible from the generator state and independent of ``workers``.
    """
    succ, sqsum, _, k = _simulate_sums(model, a, frames, rng, workers, chunk_frames)
    return _report_from_sums(succ, sqsum, frames, k)


def _check_two_user(lam: float, p11: float) -> None:
    if not 0.0 <= lam <= 2.0:
        raise ValueError(f"expected per-frame transmissions must lie in [0, 2], got {lam}")
    if p11 < -1e-12 or p11 - lam / 2 > 1e-12:
        raise ValueError(f"joint probability must lie in [0, {lam / 2}], got {p11}")
    if 1.0 - lam + p11 < -1e-12:
        raise ValueError(
            f"infeasible pair (lam={lam}, p11={p11}): both-silent probability is negative"
        )


def two_user_throughput(k: int, lam: float, p11: float) -> float:
    """Per-slot throughput of two users on k slots (k in {1, 2}).

    With one slot the users collide whenever both are active; with two
    dedicated slots every transmission succeeds.
    """
    if k not in (1, 2):
        raise ValueError(f"slot count must be 1 or 2, got {k}")
    _check_two_user(lam, p11)
    p = lam / 2 - p11
    return (2 * p + (2 * p11 if k > 1 else 0.0)) / k


def two_user_optimal(lam: float, p11: float) -> tuple[int, float]:
    """Slot count in {1, 2} maximizing two-user per-slot throughput.

    Returns (best k, its throughput); ties go to the single slot. Two slots
    win exactly when p11 > lam / 4.
    """
    _check_two_user(lam, p11)
    tp1 = two_user_throughput(1, lam, p11)
    tp2 = two_user_throughput(2, lam, p11)
    return (2, tp2) if tp2 > tp1 else (1, tp1)
