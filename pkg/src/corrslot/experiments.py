"""Experiment sweeps, overhead accounting, and CSV emission.

A sweep is described by a flat key=value config file (see ``CONFIG_KEYS``).
For every sweep point and scheme the runner deploys users, derives pairwise
statistics, builds the scheme's allocation, evaluates it, and emits one CSV
row. All randomness is derived from a single 64-bit seed via spawned
seed sequences keyed by sweep-point and scheme index, so the CSV is
byte-identical across runs and worker counts.

CSV columns: ``lambda,mean_arrivals,scheme,K,tp_per_frame,tp_per_slot,
stderr,frames,seed``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .allocation import (
    assignment_to_allocation,
    cost_matrix,
    greedy_allocate,
    scale_allocation,
    uniform_allocation,
)
from .errors import ConfigurationError
from .throughput import (
    _report_from_sums,
    _simulate_sums,
    exact_throughput,
    format_value,
    two_user_optimal,
    two_user_throughput,
)
from .traffic import (
    CyclicModel,
    CyclicPattern,
    IndependentModel,
    SpatioTemporalModel,
    TrafficModel,
    deploy_users,
    empirical_pair_stats,
)

__all__ = [
    "SCHEMES",
    "ExperimentConfig",
    "OverheadQuery",
    "signaling_overhead",
    "two_user_curves",
    "builtin_patterns",
    "run_pattern_examples",
    "run_experiment",
    "load_config_file",
    "config_from_mapping",
    "default_event_rate_grid",
]

SCHEMES = ("uniform", "minmax", "minsum", "minmax_scaled", "minsum_scaled")

CSV_HEADER = "lambda,mean_arrivals,scheme,K,tp_per_frame,tp_per_slot,stderr,frames,seed"

CONFIG_KEYS = {
    "model": "spatiotemporal | cyclic | independent",
    "users": "number of users (spatiotemporal)",
    "region_side": "square region side length L",
    "radius": "activation radius r",
    "lambda": "comma-separated event rates per unit area per frame",
    "lambda_min": "log-spaced sweep start (alternative to 'lambda')",
    "lambda_max": "log-spaced sweep end",
    "lambda_points": "number of log-spaced sweep points (default 20)",
    "pattern_file": "path to a 0/1 pattern matrix (cyclic)",
    "p": "comma-separated per-user activity probabilities (independent)",
    "slots": "number of slots K per frame",
    "schemes": "comma-separated subset of " + ",".join(SCHEMES),
    "frames": "Monte Carlo frame budget per point",
    "stats_source": "analytic | empirical:FRAMES",
    "seed": "64-bit root seed",
    "evaluation": "simulate | exact",
}


def default_event_rate_grid(region_side: float, points: int = 20) -> list[float]:
    """Log-spaced event-rate sweep covering 0.1 to 30 expected events/frame."""
    area = region_side * region_side
    return list(np.geomspace(0.1 / area, 30.0 / area, points))


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of a sweep run (model, schemes, budget, seed)."""

    model: str
    slots: int
    schemes: tuple[str, ...]
    frames: int = 1000
    seed: int = 0
    stats_source: str = "analytic"
    empirical_frames: int = 0
    evaluation: str = "simulate"
    users: int = 0
    region_side: float = 0.0
    radius: float = 0.0
    event_rates: tuple[float, ...] = ()
    pattern: CyclicPattern | None = None
    activity: tuple[float, ...] = ()

    def __post_init__(self):
        if self.model not in ("spatiotemporal", "cyclic", "independent"):
            raise ConfigurationError(f"field 'model': unknown model {self.model!r}")
        if not self.schemes:
            raise ConfigurationError("field 'schemes': at least one scheme is required")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigurationError(
                    f"field 'schemes': unknown scheme {s!r}; expected one of {', '.join(SCHEMES)}"
                )
        if self.slots < 1:
            raise ConfigurationError(f"field 'slots': must be >= 1, got {self.slots}")
        if self.frames < 1:
            raise ConfigurationError(f"field 'frames': must be >= 1, got {self.frames}")
        if self.evaluation not in ("simulate", "exact"):
            raise ConfigurationError(
                f"field 'evaluation': expected simulate or exact, got {self.evaluation!r}"
            )
        if self.stats_source not in ("analytic", "empirical"):
            raise ConfigurationError(
                f"field 'stats_source': expected analytic or empirical:FRAMES, got {self.stats_source!r}"
            )
        if self.stats_source == "empirical" and self.empirical_frames < 1:
            raise ConfigurationError(
                "field 'stats_source': empirical mode needs a positive frame count"
            )
        if self.model == "spatiotemporal":
            if self.users < 1:
                raise ConfigurationError("field 'users': must be >= 1")
            if any(l < 0 for l in self.event_rates) or not self.event_rates:
                raise ConfigurationError(
                    "field 'lambda': need at least one non-negative event rate"
                )
        if self.model == "cyclic" and self.pattern is None:
            raise ConfigurationError("field 'pattern_file': required for the cyclic model")
        if self.model == "independent" and not self.activity:
            raise ConfigurationError("field 'p': required for the independent model")


def load_config_file(path: str) -> dict[str, str]:
    """Parse a flat ``key = value`` config file ('#' starts a comment)."""
    mapping: dict[str, str] = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{ln}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ConfigurationError(
                    f"{path}:{ln}: unknown field {key!r}; known fields: {', '.join(sorted(CONFIG_KEYS))}"
                )
            mapping[key] = value
    return mapping


def _parse_floats(value: str, fieldname: str) -> list[float]:
    try:
        return [float(tok) for tok in value.split(",") if tok.strip()]
    except ValueError:
        raise ConfigurationError(f"field {fieldname!r}: could not parse {value!r}") from None


def _parse_int(value, fieldname: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"field {fieldname!r}: could not parse {value!r}") from None


def config_from_mapping(mapping: dict[str, str], **overrides) -> ExperimentConfig:
    """Build an ``ExperimentConfig`` from config-file fields plus overrides."""
    m = dict(mapping)
    for key, value in overrides.items():
        if value is not None:
            m[key] = value
    for key in m:
        if key not in CONFIG_KEYS:
            raise ConfigurationError(f"unknown field {key!r}")

    model = m.get("model", "spatiotemporal")
    kwargs: dict = {
        "model": model,
        "slots": _parse_int(m.get("slots", 0), "slots"),
        "schemes": tuple(s.strip() for s in m.get("schemes", "").split(",") if s.strip()),
        "frames": _parse_int(m.get("frames", 1000), "frames"),
        "seed": _parse_int(m.get("seed", 0), "seed"),
        "evaluation": m.get("evaluation", "simulate"),
    }

    source = m.get("stats_source", "analytic")
    if source.startswith("empirical"):
        _, _, count = source.partition(":")
        kwargs["stats_source"] = "empirical"
        kwargs["empirical_frames"] = _parse_int(count or 0, "stats_source")
    else:
        kwargs["stats_source"] = source

    if model == "spatiotemporal":
        kwargs["users"] = _parse_int(m.get("users", 0), "users")
        try:
            kwargs["region_side"] = float(m.get("region_side", 0))
            kwargs["radius"] = float(m.get("radius", 0))
        except ValueError:
            raise ConfigurationError("fields 'region_side'/'radius' must be numbers") from None
        if "lambda" in m:
            rates = _parse_floats(m["lambda"], "lambda")
        else:
            points = _parse_int(m.get("lambda_points", 20), "lambda_points")
            if "lambda_min" in m or "lambda_max" in m:
                lo = float(m.get("lambda_min", 0.1 / kwargs["region_side"] ** 2))
                hi = float(m.get("lambda_max", 30.0 / kwargs["region_side"] ** 2))
                rates = list(np.geomspace(lo, hi, points))
            else:
                rates = default_event_rate_grid(kwargs["region_side"], points)
        kwargs["event_rates"] = tuple(rates)
    elif model == "cyclic":
        path = m.get("pattern_file")
        if not path:
            raise ConfigurationError("field 'pattern_file': required for the cyclic model")
        try:
            with open(path) as fh:
                kwargs["pattern"] = CyclicPattern.from_text(fh.read())
        except OSError as exc:
            raise ConfigurationError(f"field 'pattern_file': {exc}") from None
    elif model == "independent":
        kwargs["activity"] = tuple(_parse_floats(m.get("p", ""), "p"))

    return ExperimentConfig(**kwargs)


OVERLOAD_FACTOR = 1.5


def build_scheme_allocation(scheme: str, stats, k: int) -> np.ndarray:
    """Allocation matrix for one named scheme.

    ``minmax``/``minsum`` transmit deterministically in their greedy slot,
    except under overload (expected arrivals above ``OVERLOAD_FACTOR``
    times the slot count), where deterministic transmission collapses and
    the least-squares scaling takes over; the ``*_scaled`` variants always
    apply the scaling. Scaling is skipped when no user is ever active.
    """
    n = stats.n_users
    if scheme == "uniform":
        return uniform_allocation(n, k)
    rule = "max" if scheme.startswith("minmax") else "sum"
    assignment = greedy_allocate(cost_matrix(stats), k, rule=rule)
    expected_arrivals = float(stats.first_order.sum())
    want_scaling = scheme.endswith("_scaled") or expected_arrivals > OVERLOAD_FACTOR * k
    if want_scaling and expected_arrivals > 0:
        return scale_allocation(assignment, stats)
    return assignment_to_allocation(assignment)


def _point_stats(model: TrafficModel, config: ExperimentConfig, rng) :
    if config.stats_source == "empirical":
        frames = model.sample_frames(config.empirical_frames, rng)
        return empirical_pair_stats(frames)
    return model.exact_stats()


def _run_point(config: ExperimentConfig, event_rate, point_seed) -> list[str]:
    streams = point_seed.spawn(3)
    if config.model == "spatiotemporal":
        locations = deploy_users(
            config.users, config.region_side, config.radius,
            np.random.default_rng(streams[0]),
        )
        model: TrafficModel = SpatioTemporalModel(locations, event_rate)
    elif config.model == "cyclic":
        model = CyclicModel(config.pattern)
    else:
        model = IndependentModel(np.array(config.activity))

    stats = _point_stats(model, config, np.random.default_rng(streams[1]))
    lam_field = "" if event_rate is None else format_value(float(event_rate))

    rows = []
    for scheme in config.schemes:
        alloc = build_scheme_allocation(scheme, stats, config.slots)
        if config.evaluation == "exact":
            report = exact_throughput(model, alloc)
            mean_arrivals = float(model.exact_stats().first_order.sum())
        else:
            # All schemes at a sweep point replay the same generator stream,
            # i.e. they face identical activity frames (common random
            # numbers), which makes the per-point scheme comparison a paired
            # one without biasing any individual estimate. The seed sequence
            # is cloned because spawning children mutates its spawn counter.
            sim_seed = np.random.SeedSequence(
                streams[2].entropy, spawn_key=streams[2].spawn_key
            )
            succ, sqsum, arrivals, k = _simulate_sums(
                model, alloc, config.frames, np.random.default_rng(sim_seed)
            )
            report = _report_from_sums(succ, sqsum, config.frames, k)
            mean_arrivals = arrivals / config.frames
        rows.append(
            ",".join(
                (
                    lam_field,
                    format_value(mean_arrivals),
                    scheme,
                    str(config.slots),
                    format_value(report.per_frame_successes),
                    format_value(report.per_slot_rate),
                    format_value(report.std_error),
                    str(report.frames_simulated),
                    str(config.seed),
                )
            )
        )
    return rows


def run_experiment(config: ExperimentConfig, workers: int = 1) -> str:
    """Run the configured sweep and return the CSV text.

    Sweep points execute independently (optionally in a thread pool); rows
    are emitted in sweep order with schemes in configured order, so the
    output does not depend on ``workers``.
    """
    if config.evaluation == "exact" and config.model == "spatiotemporal":
        raise ConfigurationError(
            "field 'evaluation': exact evaluation needs an enumerable model"
        )
    rates: list = list(config.event_rates) if config.model == "spatiotemporal" else [None]
    root = np.random.SeedSequence(config.seed)
    point_seeds = root.spawn(len(rates))
    tasks = list(zip(rates, point_seeds))

    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(lambda t: _run_point(config, t[0], t[1]), tasks))
    else:
        blocks = [_run_point(config, rate, seed) for rate, seed in tasks]

    lines = [CSV_HEADER]
    for block in blocks:
        lines.extend(block)
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class OverheadQuery:
    """Signaling bill of materials for distributing an allocation."""

    n_users: int
    n_slots: int
    n_scheduled: int = 0
    bits_per_probability: int = 1
    assignment: str = "single_slot"
    scope: str = "all_users"

    def __post_init__(self):
        if self.assignment not in ("single_slot", "probabilistic"):
            raise ConfigurationError(
                f"field 'assignment': expected single_slot or probabilistic, got {self.assignment!r}"
            )
        if self.scope not in ("all_users", "subset"):
            raise ConfigurationError(
                f"field 'scope': expected all_users or subset, got {self.scope!r}"
            )
        if self.n_users < 1 or self.n_slots < 1:
            raise ConfigurationError("need at least one user and one slot")
        if self.scope == "subset" and not 0 <= self.n_scheduled <= self.n_users:
            raise ConfigurationError("field 'scheduled': must lie in [0, users]")
        if self.bits_per_probability < 1:
            raise ConfigurationError("field 'prob_bits': must be >= 1")


def signaling_overhead(query: OverheadQuery) -> float:
    """Bits needed to signal an allocation (exact value; caller rounds up).

    Scheduling every user costs N*log2(K) bits for single-slot assignments
    and N*(K-1)*P bits for probabilistic ones (K-1 degrees of freedom per
    row). Scheduling only M users additionally names them: M*log2(N*K),
    respectively M*(K-1)*P*log2(N).
    """
    n, k = query.n_users, query.n_slots
    m, p = query.n_scheduled, query.bits_per_probability
    if query.assignment == "single_slot":
        if query.scope == "all_users":
            return n * math.log2(k)
        return m * math.log2(n * k)
    if query.scope == "all_users":
        return float(n * (k - 1) * p)
    return m * (k - 1) * p * math.log2(n)


def two_user_curves(lam: float, points: int = 101) -> str:
    """CSV table of two-user per-slot throughput across the joint probability.

    For each feasible joint-activity probability the table reports the
    classical single-shared-slot baseline next to the throughput of the
    correlation-aware slot count (two dedicated slots as soon as the joint
    probability exceeds lam/4). The feasible range and the breakpoint are
    always included as grid points.
    """
    if not 0 < lam <= 2:
        raise ValueError(f"expected per-frame transmissions must lie in (0, 2], got {lam}")
    if points < 2:
        raise ValueError(f"need at least two grid points, got {points}")
    lo, hi = max(0.0, lam - 1.0), lam / 2.0
    grid = np.linspace(lo, hi, points)
    anchors = [x for x in (lam / 4.0,) if lo <= x <= hi]
    grid = np.unique(np.concatenate([grid, anchors]))

    lines = ["lambda,p11,k_traditional,tp_traditional,k_correlation,tp_correlation"]
    for p11 in grid:
        tp_trad = two_user_throughput(1, lam, float(p11))
        k_best, tp_best = two_user_optimal(lam, float(p11))
        lines.append(
            ",".join(
                (
                    format_value(float(lam)),
                    format_value(float(p11)),
                    "1",
                    format_value(tp_trad),
                    str(k_best),
                    format_value(tp_best),
                )
            )
        )
    return "\n".join(lines) + "\n"


def builtin_patterns() -> dict[str, CyclicPattern]:
    """Two four-user worked examples with opposite winning merge rules.

    In ``joint_bursts`` all pairwise co-activity stems from one common
    frame, so the max rule (which assumes exactly that) packs users 1-3
    together and wins. In ``pairwise_spread`` co-activity is spread across
    frames with weak higher-order overlap, favoring the sum rule.
    """
    joint_bursts = CyclicPattern(
        np.array(
            [
                [1, 1, 1, 1],
                [1, 0, 0, 1],
                [0, 1, 0, 1],
                [0, 0, 1, 1],
            ]
        )
    )
    pairwise_spread = CyclicPattern(
        np.array(
            [
                [1, 0, 1, 1],
                [0, 1, 1, 1],
                [1, 0, 1, 1],
                [0, 1, 1, 0],
                [1, 0, 0, 1],
                [0, 1, 0, 1],
            ]
        )
    )
    return {"joint_bursts": joint_bursts, "pairwise_spread": pairwise_spread}


def run_pattern_examples(pattern: CyclicPattern | None = None, slots: int = 2,
                         schemes=("minmax", "minsum"), seed: int = 0) -> str:
    """Exact throughput of the greedy schemes on cyclic patterns (CSV).

    With no pattern, runs both built-in worked examples. The ``lambda``
    column carries the pattern name (or 'pattern' for user input).
    """
    patterns = {"pattern": pattern} if pattern is not None else builtin_patterns()
    lines = [CSV_HEADER]
    for name, pat in patterns.items():
        model = CyclicModel(pat)
        stats = model.exact_stats()
        mean_arrivals = float(stats.first_order.sum())
        for scheme in schemes:
            alloc = build_scheme_allocation(scheme, stats, slots)
            report = exact_throughput(model, alloc)
            lines.append(
                ",".join(
                    (
                        name,
                        format_value(mean_arrivals),
                        scheme,
                        str(slots),
                        format_value(report.per_frame_successes),
                        format_value(report.per_slot_rate),
                        format_value(report.std_error),
                        str(report.frames_simulated),
                        str(seed),
                    )
                )
            )
    return "\n".join(lines) + "\n"
