from fractions import Fraction as F

import pytest

from covergames import rules
from covergames.rules import (
    DistributionRule,
    RuleDomainError,
    alg_rule,
    chi,
    chi_risky,
    optimal_poa,
    optimal_rule,
    parse_rule_spec,
    poa_of_rule,
    risky_rule,
    solve_tail_recursion,
)

UNIT = DistributionRule((F(1),), "unit")


def test_rule_validation():
    with pytest.raises(ValueError):
        DistributionRule((F(1, 2),))  # f(1) != 1
    with pytest.raises(ValueError):
        DistributionRule((F(1), F(2)))  # increasing
    with pytest.raises(ValueError):
        DistributionRule((F(1), F(-1)))  # negative
    with pytest.raises(ValueError):
        DistributionRule(())


def test_rule_indexing_and_extension():
    r = optimal_rule(2)
    assert r(1) == 1 and r(2) == F(1, 2)
    with pytest.raises(RuleDomainError):
        r(3)
    ext = r.extended(4)
    assert ext.values == (F(1), F(1, 2), F(1, 2), F(1, 2))
    assert r.extended(1) is r


def test_chi_examples():
    assert chi(UNIT, 1) == 0
    assert chi(optimal_rule(3), 3) == F(4, 7)  # (k-1) * f(k) = 2 * 2/7
    assert chi(optimal_rule(2), 2) == F(1, 2)
    with pytest.raises(RuleDomainError):
        chi(optimal_rule(2), 3)


def test_poa_examples():
    assert poa_of_rule(optimal_rule(3), 3) == F(7, 11)
    assert poa_of_rule(UNIT, 1) == 1
    assert poa_of_rule(risky_rule(2, 3), 3) == F(3, 5)


def test_optimal_rule_values():
    assert optimal_rule(2).values == (F(1), F(1, 2))
    assert optimal_rule(1, 3).values == (F(1), F(1), F(1))
    assert optimal_rule(3).values == (F(1), F(3, 7), F(2, 7))


def test_optimal_rule_invariants_up_to_30():
    for k in range(1, 31):
        r = optimal_rule(k)
        assert r(1) == 1
        for j in range(1, k + 1):
            assert j * r(j) <= 1  # never overpays
            if j < k:
                assert r(j + 1) <= r(j)


def test_optimal_poa_monotone_and_limit():
    prev = optimal_poa(1)
    assert prev == 1
    for k in range(2, 31):
        cur = optimal_poa(k)
        assert cur < prev
        prev = cur
    import math

    # exact comparison against a rational truncation of 1 - 1/e, since the
    # gap at k = 30 is far below float resolution
    limit_below = F(632120558828, 10**12)
    assert all(optimal_poa(k) > limit_below for k in range(1, 31))
    assert abs(float(optimal_poa(25)) - (1 - 1 / math.e)) < 1e-6


def test_risky_rule_examples():
    assert risky_rule(2, 3).values == (F(1), F(1, 2), F(1, 3))
    assert risky_rule(2, 10).values[:2] == (F(1), F(1, 2))
    with pytest.raises(ValueError):
        risky_rule(1, 3)
    with pytest.raises(ValueError):
        risky_rule(3, 3)


def test_chi_risky_examples():
    assert chi_risky(2, 3) == F(2, 3)
    assert chi_risky(2, 3) == chi(risky_rule(2, 3), 3)
    assert chi_risky(5, 6) > chi(optimal_rule(6), 6)


@pytest.mark.parametrize("k_bar", range(3, 13))
def test_chi_risky_matches_direct_chi(k_bar):
    for p in range(2, k_bar):
        assert chi_risky(p, k_bar) == chi(risky_rule(p, k_bar), k_bar)


def test_tail_recursion_examples():
    assert solve_tail_recursion(2, 3).values == (F(1), F(1, 2), F(1, 3))
    # residuals of the equality system, exact
    p, k_bar = 3, 6
    r = solve_tail_recursion(p, k_bar)
    x = chi_risky(p, k_bar)
    for j in range(p, k_bar):
        assert j * r(j) - r(j + 1) == x
    assert (k_bar - 1) * r(k_bar) == x


@pytest.mark.parametrize("k_bar", range(3, 13))
def test_tail_recursion_equals_closed_form(k_bar):
    for p in range(2, k_bar):
        assert solve_tail_recursion(p, k_bar).values == risky_rule(p, k_bar).values


def test_alg_rule():
    assert alg_rule(1, 3).values == (F(1), F(1), F(1))
    assert alg_rule(2, 3).values == (F(1), F(1, 2), F(1, 2))
    assert alg_rule(4, 4).values == optimal_rule(4).values
    with pytest.raises(ValueError):
        alg_rule(5, 4)


def test_table_one_relative_differences():
    ref = poa_of_rule(optimal_rule(6), 3)
    deltas = [
        float(100 * (poa_of_rule(risky_rule(p, 6), 3) - ref) / ref) for p in (2, 3, 4, 5)
    ]
    assert [f"{d:.3f}" for d in deltas] == ["-6.727", "0.670", "0.083", "0.009"]


def test_order_cap_configurable():
    old = rules.MAX_K
    try:
        rules.MAX_K = 5
        with pytest.raises(ValueError):
            optimal_rule(6)
        rules.MAX_K = 80
        assert len(optimal_rule(70)) == 70
    finally:
        rules.MAX_K = old


def test_serialize_and_parse():
    text = optimal_rule(3).serialize()
    assert text.splitlines() == ["optimal:3", "1/1", "3/7", "2/7"]
    assert parse_rule_spec("optimal:3").values == optimal_rule(3).values
    assert parse_rule_spec("risky:2:5").values == risky_rule(2, 5).values
    assert parse_rule_spec("alg:2:4").values == alg_rule(2, 4).values
    assert parse_rule_spec("optimal:2:6").values == optimal_rule(2, 6).values
    with pytest.raises(ValueError):
        parse_rule_spec("nonsense:3")
