"""Distribution rules for covering games and their exact efficiency metrics.

All arithmetic here is exact: entries are `fractions.Fraction` backed by
arbitrary-precision integers, so equality assertions on chi / price-of-anarchy
values are meaningful.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial

# Cap on the order k of exactly-constructed rules. Factorials grow fast; the
# cap mostly bounds table output, big integers handle the arithmetic fine.
# Reassign covergames.rules.MAX_K if you need larger orders.
MAX_K = 64

ZERO = Fraction(0)
ONE = Fraction(1)


class RuleDomainError(ValueError):
    """A rule was evaluated or analysed beyond its domain length."""


def _check_order(k: int) -> None:
    if k < 1:
        raise ValueError(f"rule order must be >= 1, got {k}")
    if k > MAX_K:
        raise ValueError(f"rule order {k} exceeds configured cap MAX_K={MAX_K}")


@dataclass(frozen=True)
class DistributionRule:
    """A finite non-increasing sequence f(1..L) with f(1) = 1.

    Entry j is the fraction of a resource's value credited to each of j agents
    sharing it. Access is 1-based via call syntax: ``rule(j)``.
    """

    values: tuple[Fraction, ...]
    label: str = "custom"

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("a distribution rule needs at least one entry")
        vals = tuple(Fraction(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if vals[0] != 1:
            raise ValueError(f"f(1) must equal 1, got {vals[0]}")
        if vals[-1] < 0:
            raise ValueError("rule entries must be non-negative")
        for a, b in zip(vals, vals[1:]):
            if b > a:
                raise ValueError("rule entries must be non-increasing")

    def __len__(self) -> int:
        return len(self.values)

    def __call__(self, j: int) -> Fraction:
        if j < 1 or j > len(self.values):
            raise RuleDomainError(
                f"f({j}) outside domain [1, {len(self.values)}] of rule {self.label!r}"
            )
        return self.values[j - 1]

    def extended(self, to_len: int) -> "DistributionRule":
        """Constant extension: repeat the last entry up to length `to_len`."""
        if to_len <= len(self.values):
            return self
        tail = (self.values[-1],) * (to_len - len(self.values))
        return DistributionRule(self.values + tail, self.label)

    def as_floats(self) -> tuple[float, ...]:
        return tuple(float(v) for v in self.values)

    def serialize(self) -> str:
        """Text format: label line, then one exact fraction per entry."""
        lines = [self.label]
        for v in self.values:
            lines.append(f"{v.numerator}/{v.denominator}")
        return "\n".join(lines)


def chi(f: DistributionRule, k: int) -> Fraction:
    """max over j in [1, k-1] of j*f(j) - f(j+1), together with (k-1)*f(k).

    For k = 1 both candidate sets collapse to 0.
    """
    if k < 1:
        raise ValueError(f"cardinality must be >= 1, got {k}")
    if len(f) < k:
        raise RuleDomainError(
            f"chi needs rule entries up to {k}, rule {f.label!r} has {len(f)}"
        )
    candidates = [j * f(j) - f(j + 1) for j in range(1, k)]
    candidates.append((k - 1) * f(k))
    return max(candidates)


def poa_of_rule(f: DistributionRule, k: int) -> Fraction:
    """Price of anarchy of rule f over games with cardinality k: 1/(1 + chi)."""
    return 1 / (1 + chi(f, k))


@lru_cache(maxsize=None)
def _optimal_values(k: int) -> tuple[Fraction, ...]:
    if k == 1:
        return (ONE,)
    inv_tail = Fraction(1, (k - 1) * factorial(k - 1))
    denom = inv_tail + sum(Fraction(1, factorial(i)) for i in range(1, k))
    vals = []
    for j in range(1, k + 1):
        num = inv_tail + sum(Fraction(1, factorial(i)) for i in range(j, k))
        vals.append(factorial(j - 1) * num / denom)
    return tuple(vals)


def optimal_rule(k: int, extend_to: int | None = None) -> DistributionRule:
    """The PoA-maximising non-increasing rule of order k, extended constantly.

    For k = 1 the rule is the single entry [1].
    """
    _check_order(k)
    if extend_to is not None and extend_to < k:
        raise ValueError(f"extend_to={extend_to} must be >= k={k}")
    rule = DistributionRule(_optimal_values(k), f"optimal:{k}")
    if extend_to is not None:
        rule = rule.extended(extend_to)
    return rule


def optimal_poa(k: int) -> Fraction:
    """Best achievable price of anarchy at cardinality k.

    Computed as 1/(1 + chi) of the optimal rule; decreases towards 1 - 1/e.
    """
    _check_order(k)
    if k == 1:
        return ONE
    return poa_of_rule(optimal_rule(k), k)


def _check_risky_args(p: int, k_bar: int) -> None:
    if not 1 < p < k_bar:
        raise ValueError(f"need 1 < p < k_bar, got p={p}, k_bar={k_bar}")
    _check_order(k_bar)


def chi_risky(p: int, k_bar: int) -> Fraction:
    """Closed-form chi of the risky rule with prefix order p and length k_bar."""
    _check_risky_args(p, k_bar)
    f_pp = _optimal_values(p)[p - 1]
    s = sum(
        Fraction(factorial(k_bar - 1), factorial(k_bar - h - 1))
        for h in range(1, k_bar - p)
    )
    head = Fraction((k_bar - 1) * factorial(k_bar - 1), k_bar + (k_bar - 1) * s)
    return head * f_pp / factorial(p - 1)


def risky_rule(p: int, k_bar: int) -> DistributionRule:
    """Rule matching the order-p optimal rule on [p], tail filled to maximise
    the price of anarchy at cardinality k_bar (closed form)."""
    _check_risky_args(p, k_bar)
    vals = list(_optimal_values(p))
    x = chi_risky(p, k_bar)
    f_pp = vals[-1]
    for j in range(p + 1, k_bar + 1):
        coeff = (
            sum(Fraction(factorial(j - 1), factorial(j - h - 1)) for h in range(1, j - p))
            + 1
        )
        vals.append(Fraction(factorial(j - 1), factorial(p - 1)) * f_pp - x * coeff)
    return DistributionRule(tuple(vals), f"risky:{p}:{k_bar}")


def solve_tail_recursion(p: int, k_bar: int) -> DistributionRule:
    """Independent construction of the risky rule via its equality system.

    The tail satisfies j*f(j) - f(j+1) = x for j in [p, k_bar-1] and
    (k_bar-1)*f(k_bar) = x, with f fixed to the order-p optimal rule on [p].
    Backward substitution makes every tail entry linear in x with zero
    constant term, f(j) = c_j * x; the j = p equation then pins x. This route
    never touches the closed forms used by `risky_rule` / `chi_risky`.
    """
    _check_risky_args(p, k_bar)
    coeff = {k_bar: Fraction(1, k_bar - 1)}
    for j in range(k_bar - 1, p, -1):
        coeff[j] = (1 + coeff[j + 1]) / j
    f_pp = _optimal_values(p)[p - 1]
    x = p * f_pp / (1 + coeff[p + 1])
    vals = list(_optimal_values(p))
    for j in range(p + 1, k_bar + 1):
        vals.append(coeff[j] * x)
    return DistributionRule(tuple(vals), f"tailrec:{p}:{k_bar}")


def alg_rule(level: int, n: int) -> DistributionRule:
    """The order-`level` optimal rule extended constantly up to length n.

    This is the per-resource rule selected by the cardinality-learning
    dynamics when the resource's counter equals `level`.
    """
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    if n < level:
        raise ValueError(f"need n >= level, got level={level}, n={n}")
    _check_order(level)
    rule = DistributionRule(_optimal_values(level), f"alg:{level}:{n}")
    return DistributionRule(rule.extended(n).values, f"alg:{level}:{n}")


def parse_rule_spec(spec: str) -> DistributionRule:
    """Parse 'optimal:K[:EXT]' | 'risky:P:KBAR' | 'alg:L:N' into a rule."""
    parts = spec.split(":")
    try:
        if parts[0] == "optimal" and len(parts) in (2, 3):
            k = int(parts[1])
            ext = int(parts[2]) if len(parts) == 3 else None
            return optimal_rule(k, ext)
        if parts[0] == "risky" and len(parts) == 3:
            return risky_rule(int(parts[1]), int(parts[2]))
        if parts[0] == "alg" and len(parts) == 3:
            return alg_rule(int(parts[1]), int(parts[2]))
    except ValueError as exc:
        raise ValueError(f"bad rule spec {spec!r}: {exc}") from exc
    raise ValueError(f"unrecognised rule spec {spec!r}")
