"""Covering problems, allocations, welfare, utilities and Nash checks.

Resource values are exact rationals when parsed from instance files (decimal
strings like "9.5" become 19/2), so equilibrium membership is unambiguous.
The benchmark path stores plain floats instead and passes float_mode=True to
the comparison-based operations, which then use a relative tie tolerance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

from .rules import DistributionRule

Action = frozenset
# accessor: resource index -> 1-based-indexable rule (DistributionRule or
# anything supporting rule(j)); lets fixed-rule and learning paths share code
RuleAccessor = Callable[[int], Callable[[int], object]]

FLOAT_TIE_TOL = 1e-9


class InfeasibleAllocationError(ValueError):
    pass


@dataclass(frozen=True)
class Explicit:
    """An ordered list of allowed actions; each action is a set of resources."""

    actions: tuple[frozenset, ...]


@dataclass(frozen=True)
class CapacityForm:
    """Any subset of `accessible` with at most `capacity` resources."""

    accessible: frozenset
    capacity: int


@dataclass(frozen=True)
class CoveringProblem:
    agents: tuple[str, ...]
    resources: tuple[str, ...]
    values: tuple  # aligned with resources; Fraction (exact) or float (bench)
    action_sets: tuple

    def __post_init__(self) -> None:
        if len(self.values) != len(self.resources):
            raise ValueError("values must align with resources")
        if len(self.action_sets) != len(self.agents):
            raise ValueError("action_sets must align with agents")
        rindex = {r: i for i, r in enumerate(self.resources)}
        if len(rindex) != len(self.resources):
            raise ValueError("duplicate resource ids")
        for v in self.values:
            if v < 0:
                raise ValueError(f"resource values must be non-negative, got {v}")
        for aset in self.action_sets:
            if isinstance(aset, Explicit):
                if not aset.actions:
                    raise ValueError("explicit agents need at least one action")
                refs = set().union(*aset.actions) if aset.actions else set()
            elif isinstance(aset, CapacityForm):
                if aset.capacity < 1:
                    raise ValueError("capacity must be >= 1")
                refs = aset.accessible
            else:
                raise TypeError(f"unknown action set type {type(aset)!r}")
            unknown = refs - rindex.keys()
            if unknown:
                raise ValueError(f"action set references unknown resources {sorted(unknown)}")
        object.__setattr__(self, "_rindex", rindex)

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    def resource_index(self, resource: str) -> int:
        try:
            return self._rindex[resource]
        except KeyError:
            raise KeyError(f"unknown resource id {resource!r}") from None

    def value_of(self, resource: str):
        return self.values[self.resource_index(resource)]

    def is_feasible_choice(self, agent: int, choice: frozenset) -> bool:
        aset = self.action_sets[agent]
        if isinstance(aset, Explicit):
            return choice in aset.actions
        return choice <= aset.accessible and len(choice) <= aset.capacity

    def check_feasible(self, allocation) -> None:
        if len(allocation) != self.n_agents:
            raise InfeasibleAllocationError("allocation must list one choice per agent")
        for i, choice in enumerate(allocation):
            if not self.is_feasible_choice(i, frozenset(choice)):
                raise InfeasibleAllocationError(
                    f"choice {sorted(choice)} infeasible for agent {self.agents[i]!r}"
                )

    def coverage(self, allocation) -> list[int]:
        """Per-resource-index count of agents choosing each resource."""
        counts = [0] * len(self.resources)
        for choice in allocation:
            for r in choice:
                counts[self._rindex[r]] += 1
        return counts


def coverage_count(problem: CoveringProblem, allocation, resource: str) -> int:
    problem.resource_index(resource)  # raises on unknown ids
    return sum(1 for choice in allocation if resource in choice)


def welfare(problem: CoveringProblem, allocation):
    """Total value of resources covered by at least one agent."""
    problem.check_feasible(allocation)
    counts = problem.coverage(allocation)
    total = 0
    for i, c in enumerate(counts):
        if c >= 1:
            total += problem.values[i]
    return total


def total_value(problem: CoveringProblem):
    total = 0
    for v in problem.values:
        total += v
    return total


def cardinality(problem: CoveringProblem) -> int:
    """Maximum number of agents that can concurrently select one resource."""
    counts = [0] * len(problem.resources)
    for aset in problem.action_sets:
        if isinstance(aset, Explicit):
            reachable = set().union(*aset.actions)
        else:
            reachable = aset.accessible
        for r in reachable:
            counts[problem.resource_index(r)] += 1
    return max(counts, default=0)


def utility(problem: CoveringProblem, rule: DistributionRule, agent: int, allocation):
    """Sum over chosen resources of v_r * f(number of agents sharing r)."""
    counts = problem.coverage(allocation)
    total = 0
    for r in allocation[agent]:
        total += problem.values[problem.resource_index(r)] * rule(counts[problem.resource_index(r)])
    return total


def utility_learning(
    problem: CoveringProblem,
    rules_by_counter: Mapping[int, DistributionRule],
    counters,
    agent: int,
    allocation,
):
    """Utility under resource-specific rules selected by per-resource counters."""
    counts = problem.coverage(allocation)
    total = 0
    for r in allocation[agent]:
        idx = problem.resource_index(r)
        try:
            x_r = counters[idx]
        except (KeyError, IndexError):
            raise KeyError(f"missing counter for resource {r!r}") from None
        rule = rules_by_counter[x_r]
        total += problem.values[idx] * rule(counts[idx])
    return total


def _strictly_better(a, b, float_mode: bool) -> bool:
    if not float_mode:
        return a > b
    return a > b + FLOAT_TIE_TOL * max(1.0, abs(a), abs(b))


def _other_counts(problem: CoveringProblem, allocation, agent: int) -> list[int]:
    counts = problem.coverage(allocation)
    for r in allocation[agent]:
        counts[problem.resource_index(r)] -= 1
    return counts


def _choice_utility(problem, rule_at, choice, other_counts):
    total = 0
    for r in choice:
        idx = problem.resource_index(r)
        total += problem.values[idx] * rule_at(idx)(other_counts[idx] + 1)
    return total


def best_response(
    problem: CoveringProblem,
    rule_at: RuleAccessor,
    agent: int,
    allocation,
    float_mode: bool = False,
):
    """An action maximising the agent's utility with the others held fixed.

    Tie-breaking: if the current action attains the maximum it is kept;
    otherwise the earliest maximiser in declared order (Explicit) or the
    top-capacity set with smallest resource indices (CapacityForm) wins.
    Capacity-form selection drops resources with non-positive marginal value.
    """
    others = _other_counts(problem, allocation, agent)
    current = frozenset(allocation[agent])
    current_u = _choice_utility(problem, rule_at, current, others)
    aset = problem.action_sets[agent]

    if isinstance(aset, Explicit):
        best, best_u = None, None
        for act in aset.actions:
            u = _choice_utility(problem, rule_at, act, others)
            if best_u is None or _strictly_better(u, best_u, float_mode):
                best, best_u = act, u
        if _strictly_better(best_u, current_u, float_mode):
            return best
        return current

    marginals = []
    for r in sorted(aset.accessible, key=problem.resource_index):
        idx = problem.resource_index(r)
        m = problem.values[idx] * rule_at(idx)(others[idx] + 1)
        if _strictly_better(m, 0, float_mode):
            marginals.append((m, idx, r))
    marginals.sort(key=lambda t: (-t[0], t[1]))
    picked = frozenset(r for _, _, r in marginals[: aset.capacity])
    picked_u = sum(m for m, _, _ in marginals[: aset.capacity])
    if _strictly_better(picked_u, current_u, float_mode):
        return picked
    return current


def is_nash(
    problem: CoveringProblem,
    rule_at: RuleAccessor,
    allocation,
    float_mode: bool = False,
) -> bool:
    """True iff no agent has a strictly improving unilateral deviation."""
    for agent in range(problem.n_agents):
        if best_response(problem, rule_at, agent, allocation, float_mode) != frozenset(
            allocation[agent]
        ):
            return False
    return True


def potential(problem: CoveringProblem, rule_at: RuleAccessor, allocation):
    """Rosenthal potential: sum_r v_r * sum_{j=1}^{|a|_r} f_r(j).

    With the rules frozen, a strict unilateral improvement strictly
    increases this quantity, which is what makes best-response terminate.
    """
    counts = problem.coverage(allocation)
    total = 0
    for idx, c in enumerate(counts):
        rule = rule_at(idx)
        for j in range(1, c + 1):
            total += problem.values[idx] * rule(j)
    return total


def fixed_rule_accessor(rule: DistributionRule, float_mode: bool = False) -> RuleAccessor:
    if float_mode:
        table = _FloatTable(rule.as_floats())
        return lambda idx: table
    return lambda idx: rule


class _FloatTable:
    """1-based float view of a rule, for the benchmark's fast mode."""

    __slots__ = ("vals",)

    def __init__(self, vals):
        self.vals = vals

    def __call__(self, j: int) -> float:
        return self.vals[j - 1]


# ---------------------------------------------------------------------------
# instance / allocation file formats (JSON)

def problem_from_dict(doc: dict) -> CoveringProblem:
    agents_field = doc["agents"]
    if isinstance(agents_field, int):
        agents = tuple(f"p{i + 1}" for i in range(agents_field))
    else:
        agents = tuple(agents_field)
    resources = tuple(r["id"] for r in doc["resources"])
    values = tuple(Fraction(str(r["value"])) for r in doc["resources"])
    action_sets = []
    for spec in doc["action_sets"]:
        if spec["type"] == "explicit":
            action_sets.append(Explicit(tuple(frozenset(a) for a in spec["actions"])))
        elif spec["type"] == "capacity":
            action_sets.append(
                CapacityForm(frozenset(spec["accessible"]), int(spec["capacity"]))
            )
        else:
            raise ValueError(f"unknown action set type {spec['type']!r}")
    return CoveringProblem(agents, resources, values, tuple(action_sets))


def problem_to_dict(problem: CoveringProblem) -> dict:
    def fmt(v):
        if isinstance(v, Fraction) and v.denominator == 1:
            return str(v.numerator)
        return str(v)

    action_sets = []
    for aset in problem.action_sets:
        if isinstance(aset, Explicit):
            action_sets.append(
                {
                    "type": "explicit",
                    "actions": [sorted(a, key=problem.resource_index) for a in aset.actions],
                }
            )
        else:
            action_sets.append(
                {
                    "type": "capacity",
                    "accessible": sorted(aset.accessible, key=problem.resource_index),
                    "capacity": aset.capacity,
                }
            )
    return {
        "agents": list(problem.agents),
        "resources": [
            {"id": r, "value": fmt(v)} for r, v in zip(problem.resources, problem.values)
        ],
        "action_sets": action_sets,
    }


def load_problem(path) -> CoveringProblem:
    with open(path) as fh:
        return problem_from_dict(json.load(fh))


def allocation_from_list(problem: CoveringProblem, lists) -> tuple:
    alloc = tuple(frozenset(part) for part in lists)
    problem.check_feasible(alloc)
    return alloc


def load_allocation(problem: CoveringProblem, path) -> tuple:
    with open(path) as fh:
        return allocation_from_list(problem, json.load(fh))


def allocation_to_list(problem: CoveringProblem, allocation) -> list:
    return [sorted(choice, key=problem.resource_index) for choice in allocation]
