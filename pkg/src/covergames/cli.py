"""Command-line entry point: rule inspection, PoA tables, dynamics runs,
oracle checks, counterexample verification and the caching benchmark.

Exit codes: 0 success, 2 validation error, 3 assertion failure, 4 cap
exceeded. All output is deterministic given the flags; decimals are rendered
at 12 significant digits, fractions exactly.
"""
from __future__ import annotations

import json
import sys
from fractions import Fraction

import click

from . import bench as bench_mod
from . import dynamics as dyn
from . import game, oracle, rules
from .bench import BenchConfig, ResampleCapExceeded
from .oracle import SizeCapExceeded

EXIT_VALIDATION = 2
EXIT_ASSERTION = 3
EXIT_CAP = 4


class CheckFailed(Exception):
    pass


def _dec(x) -> str:
    return format(float(x), ".12g")


def _frac(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _guarded(fn):
    def wrapper(*args, **kwargs):
        try:
            fn(*args, **kwargs)
        except (SizeCapExceeded, ResampleCapExceeded) as exc:
            click.echo(f"cap exceeded: {exc}", err=True)
            sys.exit(EXIT_CAP)
        except CheckFailed as exc:
            click.echo(f"FAIL: {exc}", err=True)
            sys.exit(EXIT_ASSERTION)
        except (ValueError, TypeError, KeyError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)

    wrapper.__name__ = fn.__name__
    return wrapper


def _load_instance(spec: str) -> game.CoveringProblem:
    if spec.startswith("builtin:"):
        name = spec[len("builtin:"):]
        try:
            return oracle.BUILTIN_INSTANCES[name]()
        except KeyError:
            raise ValueError(
                f"unknown builtin {name!r}; have {sorted(oracle.BUILTIN_INSTANCES)}"
            ) from None
    return game.load_problem(spec)


def _parse_schedule(spec: str, n: int):
    if spec.startswith("round-robin"):
        parts = spec.split(":")
        offset = int(parts[1]) if len(parts) == 2 else 0
        return dyn.RoundRobin(offset)
    if spec.startswith("random:"):
        return dyn.RandomUniform(int(spec.split(":", 1)[1]))
    if spec.startswith("perm:"):
        order = tuple(int(tok) - 1 for tok in spec.split(":", 1)[1].split(","))
        return dyn.CustomPermutation(order)
    raise ValueError(f"unrecognised schedule {spec!r}")


def _parse_initial(spec: str, problem: game.CoveringProblem):
    if spec == "first":
        return dyn.default_initial(problem)
    if spec.startswith("random:"):
        return dyn.random_initial(problem, int(spec.split(":", 1)[1]))
    if spec.startswith("file:"):
        return game.load_allocation(problem, spec.split(":", 1)[1])
    raise ValueError(f"unrecognised initial allocation spec {spec!r}")


@click.group()
def main():
    """Utility design and dynamics for distributed covering games."""


@main.command("rules")
@click.option("--rule", "rule_spec", required=True,
              help="optimal:K[:EXT] | risky:P:KBAR | alg:L:N")
@_guarded
def rules_cmd(rule_spec):
    """Print a distribution rule as exact fractions and decimals."""
    rule = rules.parse_rule_spec(rule_spec)
    click.echo(rule.serialize())
    click.echo("decimal: " + " ".join(_dec(v) for v in rule.values))


@main.command("poa-table")
@click.option("--k-max", type=int, default=10, show_default=True)
@click.option("--kbar", type=int, default=None,
              help="upper-bound order for the relative-difference columns")
@click.option("--p-list", default=None, help="comma-separated prefix orders")
@_guarded
def poa_table_cmd(k_max, kbar, p_list):
    """Best-achievable price of anarchy per cardinality, and optionally the
    percentage difference of risky rules against the upper-bound design."""
    click.echo(f"{'k':>4}  {'poa (exact)':>16}  {'poa':>16}")
    for k in range(1, k_max + 1):
        poa = rules.optimal_poa(k)
        click.echo(f"{k:>4}  {_frac(poa):>16}  {_dec(poa):>16}")
    if kbar is None and p_list is None:
        return
    if kbar is None or p_list is None:
        raise ValueError("--kbar and --p-list must be given together")
    ps = [int(tok) for tok in p_list.split(",")]
    k = k_max
    ref = rules.poa_of_rule(rules.optimal_rule(kbar), k)
    click.echo(f"relative difference vs optimal:{kbar} at cardinality {k} (%):")
    for p in ps:
        poa_r = rules.poa_of_rule(rules.risky_rule(p, kbar), k)
        delta = 100 * (poa_r - ref) / ref
        click.echo(f"{p:>4}  {float(delta):>10.3f}")


@main.command("dynamics")
@click.option("--instance", "instance_spec", required=True,
              help="path to a JSON instance or builtin:NAME")
@click.option("--rule", "rule_spec", default="learning", show_default=True,
              help="optimal:K | risky:P:KBAR | alg:L:N | learning")
@click.option("--schedule", "schedule_spec", default="round-robin", show_default=True,
              help="round-robin[:OFFSET] | random:SEED | perm:i1,i2,...")
@click.option("--init", "init_spec", default="first", show_default=True,
              help="first | random:SEED | file:PATH")
@click.option("--max-rounds", type=int, default=dyn.DEFAULT_MAX_ROUNDS, show_default=True)
@click.option("--trace-out", type=click.Path(), default=None)
@_guarded
def dynamics_cmd(instance_spec, rule_spec, schedule_spec, init_spec, max_rounds, trace_out):
    """Run best-response dynamics and report the outcome."""
    problem = _load_instance(instance_spec)
    schedule = _parse_schedule(schedule_spec, problem.n_agents)
    initial = _parse_initial(init_spec, problem)
    if rule_spec == "learning":
        trace = dyn.run_learning(problem, initial, schedule, max_rounds)
    else:
        rule = rules.parse_rule_spec(rule_spec)
        trace = dyn.run_best_response(problem, rule, initial, schedule, max_rounds)
    lines = []
    for t, agent, old, new, counters in trace.steps:
        before = ",".join(sorted(old, key=problem.resource_index)) or "-"
        after = ",".join(sorted(new, key=problem.resource_index)) or "-"
        ctr = " ".join(str(c) for c in counters) if counters is not None else "-"
        lines.append(f"t={t} agent={problem.agents[agent]} {before} -> {after} x=[{ctr}]")
    w = game.welfare(problem, trace.final_allocation)
    lines.append("summary:")
    lines.append(f"  welfare   = {_dec(w)}")
    lines.append(f"  rounds    = {trace.rounds}")
    lines.append(f"  k_m       = {trace.k_m}")
    lines.append(f"  converged = {str(trace.converged).lower()} ({trace.status})")
    text = "\n".join(lines)
    click.echo(text)
    if trace_out:
        with open(trace_out, "w") as fh:
            fh.write(text + "\n")


@main.command("oracle")
@click.option("--instance", "instance_spec", required=True)
@click.option("--rule", "rule_spec", required=True,
              help="fixed rule spec for the Nash filter")
@click.option("--json-out", type=click.Path(), default=None)
@_guarded
def oracle_cmd(instance_spec, rule_spec, json_out):
    """Exhaustive optimum and Nash set of a small instance."""
    problem = _load_instance(instance_spec)
    rule = rules.parse_rule_spec(rule_spec).extended(max(game.cardinality(problem), 1))
    report = oracle.all_nash(problem, game.fixed_rule_accessor(rule))
    click.echo(f"optimal welfare : {_dec(report.optimal_welfare)}")
    click.echo(f"nash equilibria : {len(report.nash_allocations)}")
    click.echo(f"worst nash      : {_dec(report.worst_nash_welfare)}")
    click.echo(f"worst ratio     : {_frac(report.worst_ratio)} = {_dec(report.worst_ratio)}")
    for alloc, w in report.nash_allocations:
        pretty = "; ".join(
            ",".join(sorted(c, key=problem.resource_index)) or "-" for c in alloc
        )
        click.echo(f"  W={_dec(w):<14} {pretty}")
    if json_out:
        doc = {
            "optimal_welfare": _dec(report.optimal_welfare),
            "worst_nash_welfare": _dec(report.worst_nash_welfare),
            "worst_ratio": _frac(report.worst_ratio),
            "nash": [
                {"welfare": _dec(w), "allocation": game.allocation_to_list(problem, a)}
                for a, w in report.nash_allocations
            ],
        }
        with open(json_out, "w") as fh:
            json.dump(doc, fh, indent=2)


@main.command("counterexample")
@click.argument("case", type=click.Choice(["i", "ii"]))
@_guarded
def counterexample_cmd(case):
    """Verify the two built-in separation instances."""
    f3 = rules.optimal_rule(3)
    if case == "i":
        problem = oracle.counterexample_i()
        oracle.validate_counterexample_i(problem)
        report = oracle.all_nash(problem, game.fixed_rule_accessor(f3))
        if report.optimal_welfare != 24:
            raise CheckFailed(f"expected optimum 24, got {report.optimal_welfare}")
        if report.worst_nash_welfare != 23:
            raise CheckFailed(f"expected worst fixed-rule Nash 23, got {report.worst_nash_welfare}")
        runs = oracle.learning_over_all_initials(problem)
        bad = [w for _, _, w in runs if w != 24]
        if bad:
            raise CheckFailed(f"{len(bad)} learning runs ended below welfare 24")
        worst_learning = min(w for _, _, w in runs)
        if not worst_learning > report.worst_nash_welfare:
            raise CheckFailed("learning worst equilibrium does not beat the fixed-rule worst")
        click.echo(f"PASS case i: worst fixed-rule Nash ratio "
                   f"{_frac(report.worst_ratio)}; all {len(runs)} learning runs optimal")
    else:
        problem = oracle.counterexample_ii()
        oracle.validate_counterexample_ii(problem)
        report = oracle.all_nash(problem, game.fixed_rule_accessor(f3))
        spread = Fraction(77, 2)
        wrong = [w for _, w in report.nash_allocations if w != spread]
        if wrong:
            raise CheckFailed(f"fixed-rule Nash welfares other than 38.5: {wrong}")
        initial = game.allocation_from_list(problem, [["r2"], ["r3"], ["r1"]])
        trace = dyn.run_learning(problem, initial, dyn.CustomPermutation((2, 0, 1)))
        w = game.welfare(problem, trace.final_allocation)
        if w != Fraction(59, 2):
            raise CheckFailed(f"expected learning welfare 29.5, got {w}")
        click.echo(f"PASS case ii: fixed-rule equilibria all at 38.5, "
                   f"learning run from (r2,r3,r1) ends at {_dec(w)}")


@main.command("bench")
@click.option("--instances", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--rules", "rules_csv", default="risky:2,optimal:5,optimal:3,learning",
              show_default=True)
@click.option("--require-k", type=int, default=None)
@click.option("--out", type=click.Path(), default=None, help="rows CSV path")
@click.option("--hist-out", type=click.Path(), default=None, help="histogram CSV path")
@_guarded
def bench_cmd(instances, seed, rules_csv, require_k, out, hist_out):
    """Run the data-caching experiment and print the summary table."""
    config = BenchConfig(
        n_instances=instances,
        base_seed=seed,
        rules=tuple(rules_csv.split(",")),
        require_k=require_k,
    )
    rows = bench_mod.run_experiment(config)
    summaries, histogram = bench_mod.summarize(rows)
    click.echo(bench_mod.summary_table(summaries))
    if out:
        with open(out, "w") as fh:
            fh.write(bench_mod.rows_to_csv(rows))
    if hist_out:
        with open(hist_out, "w") as fh:
            fh.write(bench_mod.histogram_to_csv(histogram))


if __name__ == "__main__":
    main()
