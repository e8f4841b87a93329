from fractions import Fraction as F

import pytest

from covergames.dynamics import RoundRobin, run_best_response
from covergames.game import (
    CapacityForm,
    CoveringProblem,
    Explicit,
    cardinality,
    fixed_rule_accessor,
)
from covergames.oracle import (
    SizeCapExceeded,
    all_nash,
    counterexample_i,
    counterexample_ii,
    enumerate_joint_allocations,
    learning_over_all_initials,
    optimal_allocation,
    random_small_instance,
    validate_counterexample_i,
    validate_counterexample_ii,
)
from covergames.rules import optimal_rule


def test_enumeration_counts():
    assert sum(1 for _ in enumerate_joint_allocations(counterexample_i())) == 36
    single = CoveringProblem(
        ("p1",), ("r1", "r2", "r3"), (F(1), F(2), F(3)),
        (Explicit(tuple(frozenset({r}) for r in ("r1", "r2", "r3"))),),
    )
    assert sum(1 for _ in enumerate_joint_allocations(single)) == 3
    two = CoveringProblem(
        ("p1", "p2"), ("r1", "r2"), (F(1), F(2)),
        (Explicit((frozenset({"r1"}), frozenset({"r2"}))),) * 2,
    )
    assert sum(1 for _ in enumerate_joint_allocations(two)) == 4


def test_enumeration_caps():
    p = counterexample_i()
    with pytest.raises(SizeCapExceeded):
        list(enumerate_joint_allocations(p, cap=10))
    wide = CoveringProblem(
        ("p1",), tuple(f"r{i}" for i in range(13)), (F(1),) * 13,
        (CapacityForm(frozenset(f"r{i}" for i in range(13)), 2),),
    )
    with pytest.raises(SizeCapExceeded):
        list(enumerate_joint_allocations(wide))


def test_capacity_form_expansion():
    p = CoveringProblem(
        ("p1",), ("r1", "r2"), (F(1), F(2)),
        (CapacityForm(frozenset({"r1", "r2"}), 1),),
    )
    allocs = list(enumerate_joint_allocations(p))
    assert (frozenset(),) in allocs and len(allocs) == 3


def test_optimal_allocation_values():
    assert optimal_allocation(counterexample_i())[0] == 24
    assert optimal_allocation(counterexample_ii())[0] == F(77, 2)
    zero = CoveringProblem(
        ("p1",), ("r1",), (F(0),), (Explicit((frozenset({"r1"}),)),),
    )
    assert optimal_allocation(zero)[0] == 0


def test_all_nash_counterexample_i():
    p = counterexample_i()
    report = all_nash(p, fixed_rule_accessor(optimal_rule(3)))
    assert report.optimal_welfare == 24
    suboptimal = (frozenset({"r2"}), frozenset({"r3"}), frozenset({"r1"}))
    assert (suboptimal, F(23)) in report.nash_allocations
    assert report.worst_nash_welfare == 23
    assert report.worst_ratio == F(23, 24)


def test_all_nash_counterexample_ii_fully_spread():
    p = counterexample_ii()
    report = all_nash(p, fixed_rule_accessor(optimal_rule(3)))
    assert {w for _, w in report.nash_allocations} == {F(77, 2)}
    for alloc, _ in report.nash_allocations:
        covered = set().union(*alloc)
        assert covered == {"r1", "r2", "r3"}
        assert all(len(c) == 1 for c in alloc)


def test_all_nash_single_agent():
    p = CoveringProblem(
        ("p1",), ("r1", "r2"), (F(3), F(7)),
        (Explicit((frozenset({"r1"}), frozenset({"r2"}))),),
    )
    report = all_nash(p, fixed_rule_accessor(optimal_rule(1, 1)))
    assert [a for a, _ in report.nash_allocations] == [(frozenset({"r2"}),)]


def test_learning_over_all_initials_counterexample_i():
    runs = learning_over_all_initials(counterexample_i())
    assert len(runs) == 36 * 3
    assert all(w == 24 for _, _, w in runs)


def test_learning_over_all_initials_cardinality_one():
    p = CoveringProblem(
        ("p1",), ("r1", "r2"), (F(3), F(7)),
        (Explicit((frozenset({"r1"}), frozenset({"r2"}))),),
    )
    runs = learning_over_all_initials(p)
    assert all(w == 7 for _, _, w in runs)


def test_random_small_instance_determinism_and_bounds():
    for seed in range(200):
        a = random_small_instance(seed)
        b = random_small_instance(seed)
        assert a == b
        assert 1 <= a.n_agents <= 5
        assert 1 <= len(a.resources) <= 6
        assert all(0 <= v <= 20 for v in a.values)
        assert all(len(s.actions) <= 4 for s in a.action_sets)
        assert 0 <= cardinality(a) <= a.n_agents


def test_counterexample_validators():
    validate_counterexample_i(counterexample_i())
    validate_counterexample_ii(counterexample_ii())
    with pytest.raises(ValueError):
        validate_counterexample_i(counterexample_i(("11", "7", "5", "6")))
    with pytest.raises(ValueError):
        validate_counterexample_ii(counterexample_ii(("9", "11", "20")))


@pytest.mark.parametrize("seed", range(50))
def test_best_response_lands_in_the_nash_set(seed):
    problem = random_small_instance(seed)
    k = max(cardinality(problem), 1)
    rule = optimal_rule(k)
    report = all_nash(problem, fixed_rule_accessor(rule.extended(k)))
    trace = run_best_response(problem, rule, schedule=RoundRobin(0))
    assert trace.converged
    assert trace.final_allocation in [a for a, _ in report.nash_allocations]
