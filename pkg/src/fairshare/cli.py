"""Command-line entry point.

Exit codes: 0 success, 1 audit or fixture check failed, 2 bad input or
flags, 3 LCP-X search budget exhausted. FAIRSHARE_TOL overrides the
relative equality tolerance (default 1e-9).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .audit import audit
from .core import Schedule, Tolerances, check_schedule, log_cost_product
from .errors import FairshareError
from .experiments import (
    check_fixture,
    format_table,
    grid_oracle_two_agents,
    quasiconcavity_probe,
    run_table1,
    write_csv,
    write_records,
)
from .instances import FIXTURE_NAMES, MASK64, Xoshiro256, canned, read_instance, write_instance
from .mechanisms import DEFAULT_BUDGET, enumerate_sjf_orders, run_drf_w, run_lcp_x, run_sjf

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3

MECHANISMS = ("drfw", "sjf", "lcpx")


class BudgetExceeded(FairshareError):
    pass


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if not 0 <= value <= MASK64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _fmt(values) -> str:
    return " ".join(str(round(float(x), 6)) for x in values)


def _lcp(instance, budget, tol):
    result = run_lcp_x(instance, budget=budget, tol=tol)
    if result.budget_exceeded:
        raise BudgetExceeded(f"search budget of {budget} nodes exhausted")
    return result


def _distribution(instance, mechanism, budget, tol):
    """Schedules with probabilities for a mechanism's (possibly random) outcome."""
    if mechanism == "drfw":
        return [(run_drf_w(instance, tol), 1.0)]
    if mechanism == "sjf":
        return [(run_sjf(instance, o), o.probability) for o in enumerate_sjf_orders(instance, tol)]
    optima = _lcp(instance, budget, tol).optima
    return [(s, 1.0 / len(optima)) for s in optima]


def cmd_solve(args, tol) -> int:
    inst = read_instance(args.instance)
    if args.mechanism == "lcpx":
        result = _lcp(inst, args.budget, tol)
        payload = [s.to_dict() for s in result.optima]
        costs = result.expected_costs()
        print(f"costs: {_fmt(costs)}")
        print(f"log cost product: {round(result.log_cost_product, 9)}")
        print(f"co-optima: {len(result.optima)}")
    else:
        if args.mechanism == "drfw":
            sched = run_drf_w(inst, tol)
        else:
            orders = enumerate_sjf_orders(inst, tol)
            pick = orders[Xoshiro256(args.seed).integer(0, len(orders) - 1)]
            sched = run_sjf(inst, pick)
            print(f"order: {' '.join(map(str, pick.order))}")
        payload = sched.to_dict()
        print(f"costs: {_fmt(sched.completion_times)}")
        print(f"log cost product: {round(log_cost_product(sched.completion_times), 9)}")
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=1) + "\n")
    return EXIT_OK


def _read_schedules(path, instance, tol):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FairshareError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    items = data if isinstance(data, list) else [data]
    if not items:
        raise FairshareError(f"{path}: no schedules")
    out = []
    for item in items:
        sched = Schedule.from_dict(item, instance, tol)
        check_schedule(instance, sched, tol)
        out.append(sched)
    return out


def cmd_audit(args, tol) -> int:
    inst = read_instance(args.instance)
    if args.schedule:
        dist = _read_schedules(args.schedule, inst, tol)
    else:
        dist = _distribution(inst, args.mechanism, args.budget, tol)
    report = audit(inst, dist, tol)
    print(json.dumps(report.to_dict(), indent=1))
    return EXIT_OK if report.ef_in_expectation and report.si else EXIT_FAILED


def cmd_experiment(args, tol) -> int:
    if args.n_from < 1 or args.n_to < args.n_from:
        raise FairshareError("need 1 <= --n-from <= --n-to")
    summary = run_table1(
        args.seed,
        range(args.n_from, args.n_to + 1),
        args.count,
        workers=args.workers,
        tol=tol,
        budget=args.budget,
        keep_records=bool(args.records),
    )
    write_csv(summary, args.out)
    if args.records:
        write_records(summary, args.records)
    print(format_table(summary))
    skipped = sum(r.skipped for r in summary.rows)
    if skipped:
        print(f"skipped {skipped} instances whose search budget ran out")
    return EXIT_OK


def cmd_fixtures(args, tol) -> int:
    if args.dump:
        inst, _ = canned(args.name)
        write_instance(inst, args.dump)
    ok = True
    for fact, passed, detail in check_fixture(args.name):
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {fact}: {detail}")
        if fact == "tie_crossover_n":
            print(f"crossover n = {detail}")
    return EXIT_OK if ok else EXIT_FAILED


def cmd_oracle(args, tol) -> int:
    inst = read_instance(args.instance)
    value = grid_oracle_two_agents(inst, args.grid)
    lcp = _lcp(inst, args.budget, tol)
    print(f"grid minimum: {value:.9f}")
    print(f"LCP-X: {lcp.log_cost_product:.9f}")
    print(f"gap: {value - lcp.log_cost_product:.3e}")
    return EXIT_OK


def cmd_probe(args, tol) -> int:
    violations = quasiconcavity_probe(args.trials, args.seed)
    print(f"segments checked: {args.trials}")
    print(f"violations: {len(violations)}")
    return EXIT_OK if not violations else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairshare", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one mechanism on an instance file")
    p.add_argument("--mechanism", choices=MECHANISMS, required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--out", help="write the schedule JSON here (lcpx: array of co-optima)")
    p.add_argument("--seed", type=_u64, default=0, help="picks the sjf tie order")
    p.add_argument("--budget", type=_positive, default=DEFAULT_BUDGET)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("audit", help="check envy-freeness and sharing incentives")
    p.add_argument("--instance", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--schedule", help="schedule JSON (object, or array for a uniform mix)")
    src.add_argument("--mechanism", choices=MECHANISMS)
    p.add_argument("--budget", type=_positive, default=DEFAULT_BUDGET)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("experiment", help="compare LCP-X with DRF-W on random instances")
    p.add_argument("--n-from", type=int, required=True)
    p.add_argument("--n-to", type=int, required=True)
    p.add_argument("--count", type=_positive, required=True)
    p.add_argument("--seed", type=_u64, required=True)
    p.add_argument("--out", required=True, help="summary CSV")
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--records", help="also write per-instance results as JSON")
    p.add_argument("--budget", type=_positive, default=DEFAULT_BUDGET)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("fixtures", help="verify a worked example")
    p.add_argument("--name", choices=FIXTURE_NAMES, required=True)
    p.add_argument("--dump", help="write the fixture instance JSON here")
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("oracle", help="brute-force grid check for two agents")
    p.add_argument("--instance", required=True)
    p.add_argument("--grid", type=_positive, default=2000)
    p.add_argument("--budget", type=_positive, default=DEFAULT_BUDGET)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("probe", help="quasiconcavity probe on two-agent segments")
    p.add_argument("--trials", type=_positive, default=1000)
    p.add_argument("--seed", type=_u64, default=0)
    p.set_defaults(func=cmd_probe)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        tol = Tolerances.from_env()
        return args.func(args, tol)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (FairshareError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
