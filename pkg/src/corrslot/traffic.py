"""Correlated-activity traffic models and pairwise activity statistics.

Users are points in a square region. Activity is a binary vector per frame
(1 = the user transmits in that frame). Every model exposes:

* ``sample_frames(count, rng, start=0)`` -- batch of activity vectors,
* ``exact_stats()`` -- exact first/second-order activity statistics,
* ``enumerate_joint()`` -- the full joint distribution where tractable.

All randomness flows through an explicit ``numpy.random.Generator`` (PCG64
via ``numpy.random.default_rng``), so every sampling operation is
reproducible from a seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import CapabilityError, ConfigurationError, EstimationError

__all__ = [
    "PairwiseStats",
    "UserLocations",
    "CyclicPattern",
    "TrafficModel",
    "SpatioTemporalModel",
    "CyclicModel",
    "IndependentModel",
    "TabularModel",
    "deploy_users",
    "disk_intersection_area",
    "analytic_pair_stats",
    "empirical_pair_stats",
    "sample_frame",
    "cyclic_model",
    "independent_model",
]

_STAT_ATOL = 1e-9


@dataclass(frozen=True)
class PairwiseStats:
    """First-order activity probabilities and pairwise product expectations.

    ``first_order[i]`` is E[x_i]; ``second_order[i, j]`` is E[x_i x_j] for
    i != j (the probability that users i and j are both active in the same
    frame). The diagonal of ``second_order`` is unused and stored as zero.
    """

    first_order: np.ndarray
    second_order: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.first_order, dtype=float)
        q = np.asarray(self.second_order, dtype=float)
        if p.ndim != 1 or q.shape != (p.size, p.size):
            raise ValueError("second_order must be square with one row per user")
        q = q.copy()
        np.fill_diagonal(q, 0.0)
        object.__setattr__(self, "first_order", p)
        object.__setattr__(self, "second_order", q)
        if np.any(p < -_STAT_ATOL) or np.any(p > 1 + _STAT_ATOL):
            raise ValueError("first-order probabilities must lie in [0, 1]")
        if np.any(q < -_STAT_ATOL) or np.any(q > 1 + _STAT_ATOL):
            raise ValueError("product expectations must lie in [0, 1]")
        if not np.allclose(q, q.T, atol=_STAT_ATOL, rtol=0):
            raise ValueError("second_order must be symmetric")
        # Joint-probability sandwich: Frechet bounds per pair.
        upper = np.minimum.outer(p, p)
        lower = np.maximum(0.0, np.add.outer(p, p) - 1.0)
        np.fill_diagonal(upper, 1.0)
        np.fill_diagonal(lower, 0.0)
        if np.any(q > upper + _STAT_ATOL):
            raise ValueError("E[x_i x_j] exceeds min(E[x_i], E[x_j]) for some pair")
        if np.any(q < lower - _STAT_ATOL):
            raise ValueError("E[x_i x_j] violates the Frechet lower bound for some pair")

    @property
    def n_users(self) -> int:
        return self.first_order.size


@dataclass(frozen=True)
class UserLocations:
    """User positions inside a square region with an activation radius.

    With ``activation_radius > 0`` every position must keep its full
    activation disk inside the region (border method), i.e. lie in
    [r, L-r]^2.
    """

    positions: np.ndarray
    region_side: float
    activation_radius: float

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] < 1:
            raise ConfigurationError("positions must be an (N, 2) array with N >= 1")
        object.__setattr__(self, "positions", pos)
        L, r = self.region_side, self.activation_radius
        if r < 0:
            raise ConfigurationError(f"activation_radius must be >= 0, got {r}")
        if r > 0 and L <= 2 * r:
            raise ConfigurationError(
                f"region_side must exceed twice the radius (L={L}, r={r})"
            )
        if L <= 0:
            raise ConfigurationError(f"region_side must be positive, got {L}")
        lo, hi = r, L - r
        if np.any(pos < lo - 1e-9) or np.any(pos > hi + 1e-9):
            raise ConfigurationError("positions must lie in [r, L-r]^2")

    @property
    def n_users(self) -> int:
        return self.positions.shape[0]

    def pairwise_distances(self) -> np.ndarray:
        d = self.positions[:, None, :] - self.positions[None, :, :]
        return np.sqrt((d * d).sum(axis=2))


@dataclass(frozen=True)
class CyclicPattern:
    """A finite activity pattern of T frames repeated indefinitely."""

    frames: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frames)
        if f.ndim != 2 or f.shape[0] < 1 or f.shape[1] < 1:
            raise ConfigurationError("pattern must be a non-empty (T, N) matrix")
        if not np.isin(f, (0, 1)).all():
            raise ConfigurationError("pattern entries must be 0 or 1")
        object.__setattr__(self, "frames", f.astype(np.uint8))

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_users(self) -> int:
        return self.frames.shape[1]

    @classmethod
    def from_text(cls, text: str) -> "CyclicPattern":
        """Parse the plain-text format: T lines of N space-separated 0/1."""
        rows = []
        for ln, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                row = [int(tok) for tok in line.split()]
            except ValueError as exc:
                raise ConfigurationError(f"pattern line {ln}: {exc}") from None
            rows.append(row)
        if not rows:
            raise ConfigurationError("pattern file contains no frames")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise ConfigurationError("pattern lines must all have the same width")
        return cls(np.array(rows))

    def to_text(self) -> str:
        return "\n".join(" ".join(str(int(v)) for v in row) for row in self.frames) + "\n"


def deploy_users(n: int, region_side: float, radius: float, rng: np.random.Generator) -> UserLocations:
    """Drop ``n`` users uniformly at random, keeping activation disks inside.

    Positions are uniform on [r, L-r]^2, which is distribution-identical to
    drawing on [0, L]^2 and resampling anything closer than ``radius`` to an
    edge. ``radius == 0`` disables the border margin.
    """
    if n < 1:
        raise ConfigurationError(f"need at least one user, got n={n}")
    if radius < 0:
        raise ConfigurationError(f"radius must be >= 0, got {radius}")
    if radius > 0 and region_side <= 2 * radius:
        raise ConfigurationError(
            f"region_side must exceed twice the radius (L={region_side}, r={radius})"
        )
    lo, hi = radius, region_side - radius
    pos = lo + (hi - lo) * rng.random((n, 2))
    return UserLocations(pos, region_side, radius)


def disk_intersection_area(distance, radius: float):
    """Area of the intersection of two disks of equal ``radius``.

    Vectorized over ``distance``; zero once the centres are at least two
    radii apart.
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    d = np.asarray(distance, dtype=float)
    if np.any(d < 0):
        raise ValueError("distance must be non-negative")
    ratio = np.minimum(d / (2.0 * radius), 1.0)
    area = 2.0 * radius**2 * np.arccos(ratio) - 0.5 * d * np.sqrt(
        np.maximum(4.0 * radius**2 - d * d, 0.0)
    )
    area = np.where(d >= 2.0 * radius, 0.0, area)
    return float(area) if np.isscalar(distance) else area


class TrafficModel:
    """Interface shared by all activity generators."""

    @property
    def n_users(self) -> int:
        raise NotImplementedError

    def sample_frames(self, count: int, rng: np.random.Generator, start: int = 0) -> np.ndarray:
        """Return a (count, N) uint8 activity matrix, one row per frame.

        ``start`` is the absolute index of the first frame; only
        deterministic (cycling) models use it.
        """
        raise NotImplementedError

    def exact_stats(self) -> PairwiseStats:
        raise NotImplementedError

    def enumerate_joint(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (patterns, probabilities) for the full joint distribution."""
        raise CapabilityError(
            f"{type(self).__name__} does not support exact joint enumeration"
        )


@dataclass(frozen=True)
class SpatioTemporalModel(TrafficModel):
    """Poisson events on the region activate every user within the radius.

    Events arrive as a homogeneous spatio-temporal Poisson process with
    ``event_rate`` events per unit area per frame; counts in disjoint
    regions are independent and frames are sampled independently.
    """

    locations: UserLocations
    event_rate: float
    _tree: cKDTree = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.event_rate < 0:
            raise ConfigurationError(f"event_rate must be >= 0, got {self.event_rate}")
        object.__setattr__(self, "_tree", cKDTree(self.locations.positions))

    @property
    def n_users(self) -> int:
        return self.locations.n_users

    def sample_frames(self, count, rng, start=0):
        L = self.locations.region_side
        r = self.locations.activation_radius
        events_per_frame = rng.poisson(self.event_rate * L * L, size=count)
        out = np.zeros((count, self.n_users), dtype=np.uint8)
        total = int(events_per_frame.sum())
        if total == 0 or r == 0:
            return out
        points = rng.random((total, 2)) * L
        frame_of = np.repeat(np.arange(count), events_per_frame)
        hits = self._tree.query_ball_point(points, r)
        sizes = np.fromiter((len(h) for h in hits), dtype=np.int64, count=total)
        if sizes.sum() == 0:
            return out
        users = np.fromiter(
            (u for h in hits for u in h), dtype=np.int64, count=int(sizes.sum())
        )
        out[np.repeat(frame_of, sizes), users] = 1
        return out

    def exact_stats(self) -> PairwiseStats:
        return analytic_pair_stats(self)


def analytic_pair_stats(model: SpatioTemporalModel, printed_formula: bool = False) -> PairwiseStats:
    """Closed-form activity statistics of the spatio-temporal model.

    Each user's disk has area pi*r^2, so E[x_i] = 1 - exp(-lambda*pi*r^2).
    For a pair at distance d with disk-overlap area D, splitting the union
    of the two disks into the overlap and the two exclusive crescents gives
    three independent Poisson counts, hence

        E[x_i x_j] = p_I + (1 - p_I) * (1 - exp(-lambda*(pi*r^2 - D)))^2,
        p_I = 1 - exp(-lambda * D).

    This reduces to the independent product when D = 0 (d >= 2r) and to
    E[x_i] when d = 0. ``printed_formula=True`` switches to the
    approximation that drops the (1 - p_I) factor and treats pairs at
    d >= r as independent.
    """
    loc = model.locations
    lam = model.event_rate
    r = loc.activation_radius
    disk = np.pi * r * r
    p = np.full(loc.n_users, 1.0 - np.exp(-lam * disk))
    d = loc.pairwise_distances()
    if r == 0:
        q = np.zeros_like(d)
    else:
        overlap = disk_intersection_area(d, r)
        p_both = 1.0 - np.exp(-lam * overlap)
        p_excl = 1.0 - np.exp(-lam * (disk - overlap))
        if printed_formula:
            q = np.where(d >= r, np.outer(p, p), p_both + p_excl**2)
            q = np.minimum(q, np.minimum.outer(p, p))
        else:
            q = p_both + (1.0 - p_both) * p_excl**2
    np.fill_diagonal(q, 0.0)
    return PairwiseStats(p, q)


class CyclicModel(TrafficModel):
    """Deterministic repetition (or uniform resampling) of a finite pattern.

    ``sampling="cycle"`` replays the pattern frames in order starting at the
    absolute frame index; ``sampling="uniform"`` draws a pattern frame
    uniformly at random per frame. Both realize the same stationary joint
    distribution: the T pattern frames with probability 1/T each.
    """

    def __init__(self, pattern: CyclicPattern, sampling: str = "cycle"):
        if sampling not in ("cycle", "uniform"):
            raise ConfigurationError(f"unknown sampling mode {sampling!r}")
        self.pattern = pattern
        self.sampling = sampling

    @property
    def n_users(self) -> int:
        return self.pattern.n_users

    def sample_frames(self, count, rng, start=0):
        T = self.pattern.n_frames
        if self.sampling == "cycle":
            idx = (start + np.arange(count)) % T
        else:
            idx = rng.integers(0, T, size=count)
        return self.pattern.frames[idx]

    def exact_stats(self) -> PairwiseStats:
        x = self.pattern.frames.astype(float)
        T = self.pattern.n_frames
        q = (x.T @ x) / T
        np.fill_diagonal(q, 0.0)
        return PairwiseStats(x.mean(axis=0), q)

    def enumerate_joint(self):
        T = self.pattern.n_frames
        return self.pattern.frames.copy(), np.full(T, 1.0 / T)


class IndependentModel(TrafficModel):
    """Each user is active independently per frame with its own probability."""

    def __init__(self, p):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if np.any(p < 0) or np.any(p > 1):
            raise ConfigurationError("activity probabilities must lie in [0, 1]")
        self.p = p

    @property
    def n_users(self) -> int:
        return self.p.size

    def sample_frames(self, count, rng, start=0):
        return (rng.random((count, self.n_users)) < self.p).astype(np.uint8)

    def exact_stats(self) -> PairwiseStats:
        q = np.outer(self.p, self.p)
        np.fill_diagonal(q, 0.0)
        return PairwiseStats(self.p.copy(), q)

    def enumerate_joint(self):
        n = self.n_users
        if n > 20:
            raise CapabilityError(
                f"joint enumeration over 2^{n} patterns is not tractable"
            )
        codes = np.arange(2**n, dtype=np.uint32)
        patterns = ((codes[:, None] >> np.arange(n)) & 1).astype(np.uint8)
        probs = np.where(patterns == 1, self.p, 1.0 - self.p).prod(axis=1)
        return patterns, probs


class TabularModel(TrafficModel):
    """Explicit joint activity distribution given as (patterns, probabilities)."""

    def __init__(self, patterns, probs):
        patterns = np.asarray(patterns)
        probs = np.asarray(probs, dtype=float)
        if patterns.ndim != 2 or patterns.shape[0] != probs.size:
            raise ConfigurationError("need one probability per pattern row")
        if not np.isin(patterns, (0, 1)).all():
            raise ConfigurationError("patterns must be binary")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ConfigurationError("probabilities must be non-negative and sum to 1")
        self.patterns = patterns.astype(np.uint8)
        self.probs = probs
        self._cum = np.cumsum(probs)

    @property
    def n_users(self) -> int:
        return self.patterns.shape[1]

    def sample_frames(self, count, rng, start=0):
        idx = np.searchsorted(self._cum, rng.random(count), side="right")
        idx = np.minimum(idx, self.patterns.shape[0] - 1)
        return self.patterns[idx]

    def exact_stats(self) -> PairwiseStats:
        x = self.patterns.astype(float)
        first = self.probs @ x
        q = x.T @ (self.probs[:, None] * x)
        np.fill_diagonal(q, 0.0)
        return PairwiseStats(first, q)

    def enumerate_joint(self):
        return self.patterns.copy(), self.probs.copy()


def cyclic_model(pattern: CyclicPattern, sampling: str = "cycle") -> CyclicModel:
    """Build the traffic model that repeats ``pattern`` indefinitely."""
    return CyclicModel(pattern, sampling=sampling)


def independent_model(p) -> IndependentModel:
    """Build the baseline model with independently active users."""
    return IndependentModel(p)


def sample_frame(model: TrafficModel, rng: np.random.Generator) -> np.ndarray:
    """Draw a single activity vector from the model."""
    return model.sample_frames(1, rng)[0]


def empirical_pair_stats(frames) -> PairwiseStats:
    """Sample means of per-user activity and per-pair co-activity."""
    x = np.asarray(frames, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[0] < 1:
        raise EstimationError("need at least one observed frame")
    T = x.shape[0]
    q = (x.T @ x) / T
    np.fill_diagonal(q, 0.0)
    return PairwiseStats(x.mean(axis=0), q)
