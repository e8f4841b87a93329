"""Data-caching benchmark: geographically distributed stations store popular
items to maximise the total query rate served.

Instances are drawn on a square grid: station and item positions uniform,
item query rates Zipf by rank. All randomness flows through a per-instance
seed derived from (base_seed, instance_index, attempt) with a splitmix64
finaliser, so the whole experiment is a pure function of its config.
Dynamics run in float mode; 1500 exact-rational Zipf values would be
needlessly slow at this scale.
"""
from __future__ import annotations

import statistics
from dataclasses import dataclass, field, replace

import numpy as np

from . import game
from .dynamics import (
    RoundRobin,
    default_initial,
    run_best_response,
    run_learning,
)
from .game import CapacityForm, CoveringProblem, cardinality
from .rules import optimal_rule, risky_rule

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class ResampleCapExceeded(RuntimeError):
    pass


def _splitmix64_fin(x: int) -> int:
    """The splitmix64 output finaliser; bijective 64-bit mixing."""
    z = x & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, instance_index: int, attempt: int = 0) -> int:
    """Per-(instance, resample-attempt) seed: distinct golden-ratio strides on
    the two counters, then the splitmix64 finaliser."""
    x = (base_seed + _GOLDEN * (instance_index + 1) + 0xD1342543DE82EF95 * attempt) & _MASK64
    return _splitmix64_fin(x)


@dataclass(frozen=True)
class BenchConfig:
    n_instances: int
    base_seed: int
    grid_side: float = 800.0
    n_stations: int = 150
    n_items: int = 1500
    radius: float = 50.0
    capacity: int = 10
    zipf_alpha: float = 0.6
    rules: tuple = ("risky:2", "optimal:5", "optimal:3", "learning")
    # order of the risky rule's tail when a bare "risky:P" spec is given
    risky_kbar: int = 5
    require_k: int | None = None
    resample_cap: int = 1000
    max_rounds: int = 10_000


@dataclass
class ExperimentRow:
    instance: int
    rule: str
    welfare: float
    w_tot: float
    ratio: float
    rounds: int
    k: int
    k_m: int | None  # only for learning rows


def _generate_once(config: BenchConfig, seed: int) -> CoveringProblem:
    rng = np.random.Generator(np.random.PCG64(seed))
    stations = rng.uniform(0.0, config.grid_side, size=(config.n_stations, 2))
    items = rng.uniform(0.0, config.grid_side, size=(config.n_items, 2))
    d2 = ((items[:, None, :] - stations[None, :, :]) ** 2).sum(axis=-1)
    within = d2 <= config.radius**2  # (n_items, n_stations)
    values = tuple(1.0 / (rank**config.zipf_alpha) for rank in range(1, config.n_items + 1))
    resources = tuple(f"i{j + 1}" for j in range(config.n_items))
    agents = tuple(f"s{i + 1}" for i in range(config.n_stations))
    action_sets = []
    for i in range(config.n_stations):
        accessible = frozenset(resources[j] for j in np.flatnonzero(within[:, i]))
        action_sets.append(CapacityForm(accessible, config.capacity))
    return CoveringProblem(agents, resources, values, tuple(action_sets))


def generate_caching_instance(config: BenchConfig, instance_index: int) -> CoveringProblem:
    """Deterministic instance for the given index; resamples geometry until
    the cardinality matches `require_k` when that is set."""
    for attempt in range(config.resample_cap + 1):
        problem = _generate_once(config, derive_seed(config.base_seed, instance_index, attempt))
        if config.require_k is None or cardinality(problem) == config.require_k:
            return problem
    raise ResampleCapExceeded(
        f"could not reach cardinality {config.require_k} for instance "
        f"{instance_index} within {config.resample_cap} resamples"
    )


def _rule_for_spec(spec: str, config: BenchConfig, k: int):
    """Instantiate the rule behind a bench spec, or None for 'learning'."""
    if spec == "learning":
        return None
    parts = spec.split(":")
    if parts[0] == "optimal" and len(parts) == 2:
        return optimal_rule(int(parts[1]))
    if parts[0] == "risky":
        p = int(parts[1])
        k_bar = int(parts[2]) if len(parts) == 3 else config.risky_kbar
        return risky_rule(p, k_bar)
    raise ValueError(f"unrecognised bench rule spec {spec!r}")


def run_experiment(config: BenchConfig):
    """One row per (instance, rule): equilibrium welfare ratio, best-response
    rounds, instance cardinality, and the learned order for learning rows."""
    rows = []
    w_tot = sum(1.0 / (rank**config.zipf_alpha) for rank in range(1, config.n_items + 1))
    for idx in range(config.n_instances):
        problem = generate_caching_instance(config, idx)
        k = cardinality(problem)
        initial = default_initial(problem)
        for spec in config.rules:
            rule = _rule_for_spec(spec, config, k)
            if rule is None:
                trace = run_learning(
                    problem, initial, RoundRobin(0), config.max_rounds,
                    float_mode=True, record_steps=False,
                )
                k_m = trace.k_m
            else:
                trace = run_best_response(
                    problem, rule, initial, RoundRobin(0), config.max_rounds,
                    float_mode=True, record_steps=False,
                )
                k_m = None
            w = game.welfare(problem, trace.final_allocation)
            rows.append(
                ExperimentRow(
                    instance=idx,
                    rule=spec,
                    welfare=w,
                    w_tot=w_tot,
                    ratio=w / w_tot,
                    rounds=trace.rounds,
                    k=k,
                    k_m=k_m,
                )
            )
    return rows


@dataclass
class RuleSummary:
    rule: str
    n: int
    min_ratio: float
    max_ratio: float
    mean_ratio: float
    min_rounds: int
    max_rounds: int
    mean_rounds: float


def summarize(rows, hist_bin_width: float = 0.002):
    """Per-rule summary plus histogram counts of the welfare ratio.

    Returns (summaries, histogram) where histogram maps rule -> sorted list of
    (bin_start, count) with bins of the given width starting at 0.
    """
    if not rows:
        raise ValueError("no rows to summarise")
    by_rule: dict[str, list] = {}
    for row in rows:
        by_rule.setdefault(row.rule, []).append(row)
    summaries = []
    histogram = {}
    for rule, group in by_rule.items():
        ratios = [r.ratio for r in group]
        rounds = [r.rounds for r in group]
        summaries.append(
            RuleSummary(
                rule=rule,
                n=len(group),
                min_ratio=min(ratios),
                max_ratio=max(ratios),
                mean_ratio=statistics.fmean(ratios),
                min_rounds=min(rounds),
                max_rounds=max(rounds),
                mean_rounds=statistics.fmean(rounds),
            )
        )
        bins: dict[int, int] = {}
        for ratio in ratios:
            b = int(ratio / hist_bin_width)
            bins[b] = bins.get(b, 0) + 1
        histogram[rule] = [(b * hist_bin_width, c) for b, c in sorted(bins.items())]
    return summaries, histogram


def _fmt(x: float) -> str:
    return format(x, ".12g")


def rows_to_csv(rows) -> str:
    lines = ["instance,rule,welfare,w_tot,ratio,rounds,k,k_m"]
    for r in rows:
        k_m = "" if r.k_m is None else str(r.k_m)
        lines.append(
            f"{r.instance},{r.rule},{_fmt(r.welfare)},{_fmt(r.w_tot)},"
            f"{_fmt(r.ratio)},{r.rounds},{r.k},{k_m}"
        )
    return "\n".join(lines) + "\n"


def histogram_to_csv(histogram) -> str:
    lines = ["rule,bin_start,count"]
    for rule in sorted(histogram):
        for start, count in histogram[rule]:
            lines.append(f"{rule},{_fmt(start)},{count}")
    return "\n".join(lines) + "\n"


def summary_table(summaries) -> str:
    lines = [
        f"{'rule':<14}{'min ratio':>12}{'max ratio':>12}{'avg ratio':>12}"
        f"{'min BR':>8}{'max BR':>8}{'avg BR':>8}"
    ]
    for s in summaries:
        lines.append(
            f"{s.rule:<14}{s.min_ratio:>12.4f}{s.max_ratio:>12.4f}"
            f"{s.mean_ratio:>12.4f}{s.min_rounds:>8}{s.max_rounds:>8}"
            f"{s.mean_rounds:>8.2f}"
        )
    return "\n".join(lines)
