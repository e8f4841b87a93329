"""Best-response dynamics, with fixed rules or learned per-resource rules.

The learning run keeps a per-resource counter equal to the maximum number of
agents that have simultaneously occupied the resource so far, and lets each
resource pay out according to the optimal rule of that order (extended
constantly). A run is a single sequential process; agents move one at a time.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from . import game
from .game import CoveringProblem, _FloatTable, cardinality, welfare
from .rules import DistributionRule, alg_rule, optimal_poa

DEFAULT_MAX_ROUNDS = 10_000
# quiet full-pass multiplier for the random schedule, which has no natural
# notion of "everyone had a turn"
RANDOM_QUIET_PASSES = 20

STATUS_CONVERGED = "converged"
STATUS_MAX_ROUNDS = "max-rounds-exceeded"


@dataclass(frozen=True)
class RoundRobin:
    """Agent at step t is (t + offset) mod n; offset 0 matches the reference
    round-robin rotation starting from the first agent."""

    offset: int = 0


@dataclass(frozen=True)
class RandomUniform:
    seed: int


@dataclass(frozen=True)
class CustomPermutation:
    order: tuple  # agent indices, repeated cyclically; must cover all agents


@dataclass
class DynamicsTrace:
    steps: list  # (t, agent, old choice, new choice, counters snapshot)
    final_allocation: tuple
    final_counters: tuple
    converged: bool
    status: str
    rounds: int
    k_m: int


def _pass_order(schedule, n: int):
    if isinstance(schedule, RoundRobin):
        return [(i + schedule.offset) % n for i in range(n)]
    if isinstance(schedule, CustomPermutation):
        order = tuple(schedule.order)
        if sorted(order) != list(range(n)):
            raise ValueError(f"permutation {order} must cover all {n} agents exactly once")
        return list(order)
    raise TypeError(f"unsupported schedule {schedule!r}")


def default_initial(problem: CoveringProblem) -> tuple:
    """First declared action (Explicit) or greedy top-capacity by raw value."""
    choices = []
    for aset in problem.action_sets:
        if isinstance(aset, game.Explicit):
            choices.append(aset.actions[0])
        else:
            ranked = sorted(
                (r for r in aset.accessible if problem.value_of(r) > 0),
                key=lambda r: (-problem.values[problem.resource_index(r)],
                               problem.resource_index(r)),
            )
            choices.append(frozenset(ranked[: aset.capacity]))
    return tuple(choices)


def random_initial(problem: CoveringProblem, seed: int) -> tuple:
    rng = random.Random(seed)
    choices = []
    for aset in problem.action_sets:
        if isinstance(aset, game.Explicit):
            choices.append(rng.choice(aset.actions))
        else:
            pool = sorted(aset.accessible, key=problem.resource_index)
            size = rng.randint(0, min(aset.capacity, len(pool)))
            choices.append(frozenset(rng.sample(pool, size)))
    return tuple(choices)


class _LearningAccessor:
    """resource index -> rule of order counters[idx], cached per order."""

    def __init__(self, counters, n: int, float_mode: bool):
        self.counters = counters
        self.n = n
        self.float_mode = float_mode
        self._tables = {}

    def table(self, level: int):
        tab = self._tables.get(level)
        if tab is None:
            rule = alg_rule(level, self.n)
            tab = _FloatTable(rule.as_floats()) if self.float_mode else rule
            self._tables[level] = tab
        return tab

    def __call__(self, idx: int):
        return self.table(max(self.counters[idx], 1))


def _run(
    problem: CoveringProblem,
    rule_at,
    initial,
    schedule,
    max_rounds: int,
    float_mode: bool,
    counters,  # live list shared with rule_at for learning runs, else None
    record_steps: bool,
) -> DynamicsTrace:
    problem.check_feasible(initial)
    n = problem.n_agents
    allocation = list(frozenset(c) for c in initial)
    counts = problem.coverage(allocation)
    steps = []
    t = 0
    rounds = 0
    converged = False

    def snapshot():
        return tuple(counters) if counters is not None else None

    def do_step(agent) -> bool:
        nonlocal t
        old = allocation[agent]
        new = game.best_response(problem, rule_at, agent, allocation, float_mode)
        changed = new != old
        if changed:
            for r in old:
                counts[problem.resource_index(r)] -= 1
            allocation[agent] = new
            for r in new:
                idx = problem.resource_index(r)
                counts[idx] += 1
                if counters is not None and counts[idx] > counters[idx]:
                    counters[idx] = counts[idx]
        if record_steps:
            steps.append((t, agent, old, new, snapshot()))
        t += 1
        return changed

    if isinstance(schedule, RandomUniform):
        rng = random.Random(schedule.seed)
        quiet = 0
        quiet_needed = RANDOM_QUIET_PASSES * n
        max_steps = max_rounds * n
        while t < max_steps:
            before = snapshot()
            if do_step(rng.randrange(n)):
                quiet = 0
            elif counters is not None and snapshot() != before:
                quiet = 0
            else:
                quiet += 1
            if quiet >= quiet_needed:
                converged = True
                break
        rounds = -(-t // n)
    else:
        order = _pass_order(schedule, n)
        while rounds < max_rounds:
            before = snapshot()
            changed = False
            for agent in order:
                if do_step(agent):
                    changed = True
            rounds += 1
            if not changed and snapshot() == before:
                converged = True
                break

    final = tuple(allocation)
    if counters is not None:
        final_counters = tuple(counters)
    else:
        final_counters = tuple(problem.coverage(final))
    k_m = max(final_counters, default=0)
    return DynamicsTrace(
        steps=steps,
        final_allocation=final,
        final_counters=final_counters,
        converged=converged,
        status=STATUS_CONVERGED if converged else STATUS_MAX_ROUNDS,
        rounds=rounds,
        k_m=k_m,
    )


def run_best_response(
    problem: CoveringProblem,
    rule: DistributionRule,
    initial=None,
    schedule=RoundRobin(),
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    float_mode: bool = False,
    record_steps: bool = True,
) -> DynamicsTrace:
    """Iterate single-agent best responses under a fixed rule until a full
    pass changes nothing, or the round cap is hit."""
    if initial is None:
        initial = default_initial(problem)
    k = cardinality(problem)
    rule = rule.extended(max(k, 1))
    rule_at = game.fixed_rule_accessor(rule, float_mode)
    return _run(problem, rule_at, initial, schedule, max_rounds, float_mode, None, record_steps)


def run_learning(
    problem: CoveringProblem,
    initial=None,
    schedule=RoundRobin(),
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    float_mode: bool = False,
    record_steps: bool = True,
) -> DynamicsTrace:
    """Asynchronous cardinality learning: counters start at the initial
    coverage, each scheduled agent best-responds against per-resource rules of
    order equal to the counter, and counters ratchet up with coverage."""
    if initial is None:
        initial = default_initial(problem)
    problem.check_feasible(initial)
    counters = problem.coverage(initial)
    n = max(problem.n_agents, 1)
    rule_at = _LearningAccessor(counters, n, float_mode)
    return _run(problem, rule_at, initial, schedule, max_rounds, float_mode, counters, record_steps)


def check_theorem2_bound(problem: CoveringProblem, trace: DynamicsTrace, optimal_welfare):
    """Equilibrium quality chain for a converged learning run.

    Returns (ratio, (poa at the learned order, poa at the true cardinality),
    chain holds). The ratio of a zero-optimum instance is defined as 1.
    """
    if not trace.converged:
        raise ValueError("theorem-2 check requires a converged trace")
    if optimal_welfare < 0:
        raise ValueError("optimal welfare must be non-negative")
    if optimal_welfare == 0:
        ratio = Fraction(1)
    else:
        w = welfare(problem, trace.final_allocation)
        ratio = Fraction(w) / Fraction(optimal_welfare)
    k = max(cardinality(problem), 1)
    lb_learned = optimal_poa(max(trace.k_m, 1))
    lb_card = optimal_poa(k)
    return ratio, (lb_learned, lb_card), bool(ratio >= lb_learned >= lb_card)
