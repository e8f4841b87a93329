"""Brute-force ground truth on small instances.

Everything here is exhaustive (or refuses via SizeCapExceeded): exact optimum
by enumeration, the complete set of Nash allocations, and sweeps of the
learning dynamics from every feasible initial allocation. Used as the
independent oracle against which the analytical results are checked.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

from . import game
from .dynamics import RoundRobin, run_learning, welfare
from .game import CapacityForm, CoveringProblem, Explicit

ENUMERATION_CAP = 10**6
CAPACITY_EXPANSION_LIMIT = 12


class SizeCapExceeded(RuntimeError):
    pass


@dataclass
class OracleReport:
    optimal_welfare: Fraction
    optimal_allocations: list
    nash_allocations: list  # (allocation, welfare)
    worst_nash_welfare: Fraction
    worst_ratio: Fraction


def _action_list(problem: CoveringProblem, agent: int) -> list:
    aset = problem.action_sets[agent]
    if isinstance(aset, Explicit):
        return list(aset.actions)
    if len(aset.accessible) > CAPACITY_EXPANSION_LIMIT:
        raise SizeCapExceeded(
            f"capacity-form agent {problem.agents[agent]!r} has "
            f"{len(aset.accessible)} accessible resources (> {CAPACITY_EXPANSION_LIMIT})"
        )
    pool = sorted(aset.accessible, key=problem.resource_index)
    actions = []
    for size in range(0, min(aset.capacity, len(pool)) + 1):
        for combo in itertools.combinations(pool, size):
            actions.append(frozenset(combo))
    return actions


def enumerate_joint_allocations(problem: CoveringProblem, cap: int = ENUMERATION_CAP):
    """Every feasible joint allocation exactly once, in declared-action order."""
    per_agent = [_action_list(problem, i) for i in range(problem.n_agents)]
    total = 1
    for acts in per_agent:
        total *= len(acts)
    if total > cap:
        raise SizeCapExceeded(f"{total} joint allocations exceed the cap of {cap}")
    return itertools.product(*per_agent)


def optimal_allocation(problem: CoveringProblem, cap: int = ENUMERATION_CAP):
    """Exact maximum-welfare allocation (welfare, allocation)."""
    best_w, best_a = None, None
    for alloc in enumerate_joint_allocations(problem, cap):
        w = _fast_welfare(problem, alloc)
        if best_w is None or w > best_w:
            best_w, best_a = w, alloc
    if best_a is None:
        raise ValueError("problem has no agents")
    return best_w, best_a


def _fast_welfare(problem: CoveringProblem, allocation):
    covered = set()
    for choice in allocation:
        covered |= choice
    total = 0
    for r in covered:
        total += problem.values[problem.resource_index(r)]
    return total


def all_nash(problem: CoveringProblem, rule_at, cap: int = ENUMERATION_CAP) -> OracleReport:
    """Filter every joint allocation through the Nash test."""
    optimal_w = None
    optimal_allocs = []
    nash = []
    for alloc in enumerate_joint_allocations(problem, cap):
        w = _fast_welfare(problem, alloc)
        if optimal_w is None or w > optimal_w:
            optimal_w, optimal_allocs = w, [alloc]
        elif w == optimal_w:
            optimal_allocs.append(alloc)
        if game.is_nash(problem, rule_at, alloc):
            nash.append((alloc, w))
    worst = min((w for _, w in nash), default=None)
    if worst is None:
        raise ValueError("no Nash equilibrium found; enumeration inconsistent")
    ratio = Fraction(1) if optimal_w == 0 else Fraction(worst) / Fraction(optimal_w)
    return OracleReport(
        optimal_welfare=optimal_w,
        optimal_allocations=optimal_allocs,
        nash_allocations=nash,
        worst_nash_welfare=worst,
        worst_ratio=ratio,
    )


def learning_over_all_initials(problem: CoveringProblem, schedules=None, cap: int = ENUMERATION_CAP):
    """Run the learning dynamics from every feasible initial allocation under
    every schedule given (round-robin with all offsets by default).

    Returns a list of (initial allocation, schedule, final welfare).
    """
    if schedules is None:
        schedules = [RoundRobin(offset) for offset in range(problem.n_agents)]
    results = []
    for initial in enumerate_joint_allocations(problem, cap):
        for schedule in schedules:
            trace = run_learning(problem, initial, schedule, record_steps=False)
            results.append((initial, schedule, welfare(problem, trace.final_allocation)))
    return results


def random_small_instance(
    seed: int,
    max_agents: int = 5,
    max_resources: int = 6,
    max_actions: int = 4,
) -> CoveringProblem:
    """Seeded generator of small explicit instances with integer values in [0, 20]."""
    rng = random.Random(seed)
    n = rng.randint(1, max_agents)
    m = rng.randint(1, max_resources)
    resources = tuple(f"r{j + 1}" for j in range(m))
    values = tuple(Fraction(rng.randint(0, 20)) for _ in range(m))
    action_sets = []
    for _ in range(n):
        n_actions = rng.randint(1, max_actions)
        actions = []
        for _ in range(n_actions):
            size = rng.randint(0, min(m, 3))
            actions.append(frozenset(rng.sample(resources, size)))
        action_sets.append(Explicit(tuple(actions)))
    agents = tuple(f"p{i + 1}" for i in range(n))
    return CoveringProblem(agents, resources, values, tuple(action_sets))


# ---------------------------------------------------------------------------
# built-in named instances (the two hand-built games whose equilibria separate
# the learning dynamics from the fixed optimal rule, in either direction)

def counterexample_i(values=("11", "5", "7", "6")) -> CoveringProblem:
    """Three agents picking one resource each among four; the learning run
    always ends optimal while the fixed order-3 optimal rule admits a
    suboptimal equilibrium."""
    v = [Fraction(s) for s in values]
    resources = ("r1", "r2", "r3", "r4")
    reach = (("r1", "r2", "r3"), ("r2", "r3", "r4"), ("r1", "r2", "r3", "r4"))
    action_sets = tuple(
        Explicit(tuple(frozenset((r,)) for r in rs)) for rs in reach
    )
    return CoveringProblem(("p1", "p2", "p3"), resources, tuple(v), action_sets)


def validate_counterexample_i(problem: CoveringProblem) -> None:
    from .rules import optimal_rule

    v1, v2, v3, v4 = problem.values
    f3_2 = optimal_rule(3)(2)
    f2_2 = optimal_rule(2)(2)
    if not (v1 > v3 > v4 > v2):
        raise ValueError("need v1 > v3 > v4 > v2")
    if not (v1 * f3_2 < v2 < v1 * f2_2 < v4):
        raise ValueError("need v1*f3(2) < v2 < v1*f2(2) < v4")


def counterexample_ii(values=("9", "9.5", "20")) -> CoveringProblem:
    """Three agents over three resources; the fixed order-3 optimal rule only
    admits fully spread equilibria while one learning run gets stuck sharing
    the top resource."""
    v = [Fraction(s) for s in values]
    resources = ("r1", "r2", "r3")
    reach = (("r1", "r2"), ("r2", "r3"), ("r1", "r2", "r3"))
    action_sets = tuple(
        Explicit(tuple(frozenset((r,)) for r in rs)) for rs in reach
    )
    return CoveringProblem(("p1", "p2", "p3"), resources, tuple(v), action_sets)


def validate_counterexample_ii(problem: CoveringProblem) -> None:
    from .rules import optimal_rule

    v1, v2, v3 = problem.values
    f3_2 = optimal_rule(3)(2)
    if not (v3 * f3_2 < v1 < v2 < v3 / 2 < v3):
        raise ValueError("need v3*f3(2) < v1 < v2 < v3/2")


BUILTIN_INSTANCES = {
    "counterexample-i": counterexample_i,
    "counterexample-ii": counterexample_ii,
}
