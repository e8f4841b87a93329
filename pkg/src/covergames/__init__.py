"""Utility design for distributed covering games: optimal, risky and learned
distribution rules, exact price-of-anarchy computation, best-response
dynamics, brute-force oracles and the data-caching benchmark."""

from .dynamics import (
    CustomPermutation,
    DynamicsTrace,
    RandomUniform,
    RoundRobin,
    check_theorem2_bound,
    run_best_response,
    run_learning,
)
from .game import (
    CapacityForm,
    CoveringProblem,
    Explicit,
    best_response,
    cardinality,
    coverage_count,
    is_nash,
    potential,
    utility,
    utility_learning,
    welfare,
)
from .rules import (
    DistributionRule,
    alg_rule,
    chi,
    chi_risky,
    optimal_poa,
    optimal_rule,
    poa_of_rule,
    risky_rule,
    solve_tail_recursion,
)

__all__ = [
    "CapacityForm",
    "CoveringProblem",
    "CustomPermutation",
    "DistributionRule",
    "DynamicsTrace",
    "Explicit",
    "RandomUniform",
    "RoundRobin",
    "alg_rule",
    "best_response",
    "cardinality",
    "check_theorem2_bound",
    "chi",
    "chi_risky",
    "coverage_count",
    "is_nash",
    "optimal_poa",
    "optimal_rule",
    "poa_of_rule",
    "potential",
    "risky_rule",
    "run_best_response",
    "run_learning",
    "solve_tail_recursion",
    "utility",
    "utility_learning",
    "welfare",
]
