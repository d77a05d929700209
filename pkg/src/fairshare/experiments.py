"""Batch comparison of LCP-X against DRF-W, plus two-agent probes."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .audit import Dominance, audit, pareto_compare
from .core import DEFAULT_TOL, Instance, Tolerances, log_cost_product, validate_instance
from .errors import NotTwoAgents
from .instances import GenConfig, canned, random_instance
from .mechanisms import (
    DEFAULT_BUDGET,
    closed_form_tie_costs,
    run_drf_w,
    run_lcp_x,
    tie_crossover,
)

DEFAULT_COUNT = 500


@dataclass(frozen=True)
class InstanceRecord:
    n: int
    index: int
    m: int
    drfw_costs: tuple
    lcpx_costs: tuple
    drfw_log_cp: float
    lcpx_log_cp: float
    lcpx_optima: int
    lcpx_ef: bool
    drfw_ef: bool
    lcpx_si: bool
    drfw_si: bool
    makespan_winner: str  # "lcpx", "drfw" or "equal"
    mct_winner: str
    lcpx_dominates: bool
    budget_exceeded: bool


def _winner(lcpx: float, drfw: float, tol: Tolerances) -> str:
    if abs(lcpx - drfw) <= tol.tie * max(abs(lcpx), abs(drfw)):
        return "equal"
    return "lcpx" if lcpx < drfw else "drfw"


def evaluate_instance(
    instance: Instance,
    *,
    n: int = 0,
    index: int = 0,
    tol: Tolerances = DEFAULT_TOL,
    budget: int = DEFAULT_BUDGET,
) -> InstanceRecord:
    drfw = run_drf_w(instance, tol)
    lcp = run_lcp_x(instance, budget, tol)
    drfw_report = audit(instance, drfw, tol)
    lcp_report = audit(instance, list(lcp.optima), tol)
    lcp_costs = lcp.expected_costs()
    return InstanceRecord(
        n=n or instance.n,
        index=index,
        m=instance.m,
        drfw_costs=tuple(float(x) for x in drfw.completion_times),
        lcpx_costs=tuple(float(x) for x in lcp_costs),
        drfw_log_cp=log_cost_product(drfw.completion_times),
        lcpx_log_cp=lcp.log_cost_product,
        lcpx_optima=len(lcp.optima),
        lcpx_ef=lcp_report.ef_in_expectation,
        drfw_ef=drfw_report.ef_in_expectation,
        lcpx_si=lcp_report.si,
        drfw_si=drfw_report.si,
        makespan_winner=_winner(lcp_report.makespan, drfw_report.makespan, tol),
        mct_winner=_winner(lcp_report.mean_completion, drfw_report.mean_completion, tol),
        lcpx_dominates=pareto_compare(lcp_costs, drfw.completion_times, tol)
        is Dominance.A_DOMINATES,
        budget_exceeded=lcp.budget_exceeded,
    )


def _evaluate_task(task) -> InstanceRecord:
    config, index, tol, budget = task
    inst = random_instance(config, index)
    return evaluate_instance(inst, n=config.n, index=index, tol=tol, budget=budget)


@dataclass(frozen=True)
class SummaryRow:
    n: int
    instances: int
    lcpx_ef_pct: float
    drfw_ef_pct: float
    lcpx_si_pct: float
    drfw_si_pct: float
    lcpx_lower_makespan_pct: float
    drfw_lower_makespan_pct: float
    equal_makespan_pct: float
    lcpx_lower_mct_pct: float
    drfw_lower_mct_pct: float
    lcpx_pareto_dominates_pct: float
    skipped: int
    equal_mct: int


COLUMNS = tuple(f.name for f in fields(SummaryRow))


@dataclass(frozen=True)
class ExperimentSummary:
    rows: tuple
    records: tuple = ()

    def row(self, n: int) -> SummaryRow:
        for r in self.rows:
            if r.n == n:
                return r
        raise KeyError(n)


def summarize(n: int, records) -> SummaryRow:
    """Percentages over the records that finished within budget.

    Equal mean completion times are split evenly between the two
    ``lower_mct`` columns and counted in ``equal_mct``.
    """
    kept = [r for r in records if not r.budget_exceeded]
    total = len(kept)

    def pct(count):
        return 100.0 * count / total if total else 0.0

    equal_mct = sum(r.mct_winner == "equal" for r in kept)
    return SummaryRow(
        n=n,
        instances=len(records),
        lcpx_ef_pct=pct(sum(r.lcpx_ef for r in kept)),
        drfw_ef_pct=pct(sum(r.drfw_ef for r in kept)),
        lcpx_si_pct=pct(sum(r.lcpx_si for r in kept)),
        drfw_si_pct=pct(sum(r.drfw_si for r in kept)),
        lcpx_lower_makespan_pct=pct(sum(r.makespan_winner == "lcpx" for r in kept)),
        drfw_lower_makespan_pct=pct(sum(r.makespan_winner == "drfw" for r in kept)),
        equal_makespan_pct=pct(sum(r.makespan_winner == "equal" for r in kept)),
        lcpx_lower_mct_pct=pct(sum(r.mct_winner == "lcpx" for r in kept) + equal_mct / 2),
        drfw_lower_mct_pct=pct(sum(r.mct_winner == "drfw" for r in kept) + equal_mct / 2),
        lcpx_pareto_dominates_pct=pct(sum(r.lcpx_dominates for r in kept)),
        skipped=len(records) - total,
        equal_mct=equal_mct,
    )


def run_table1(
    seed: int,
    n_values=range(2, 6),
    count: int = DEFAULT_COUNT,
    *,
    workers: int = 1,
    m_min: int = 1,
    m_max: int = 10,
    k_max: float = 100.0,
    tol: Tolerances = DEFAULT_TOL,
    budget: int = DEFAULT_BUDGET,
    keep_records: bool = False,
) -> ExperimentSummary:
    """Run DRF-W and LCP-X on ``count`` random instances per agent count.

    Results are gathered in instance order, so the summary does not depend
    on ``workers``.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    tasks = [
        (GenConfig(seed, n, m_min, m_max, k_max), index, tol, budget)
        for n in n_values
        for index in range(count)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, len(tasks) // (8 * workers))
            records = list(pool.map(_evaluate_task, tasks, chunksize=chunk))
    else:
        records = [_evaluate_task(t) for t in tasks]
    rows = []
    for n in n_values:
        rows.append(summarize(n, [r for r in records if r.n == n]))
    return ExperimentSummary(tuple(rows), tuple(records) if keep_records else ())


def format_csv(summary: ExperimentSummary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in summary.rows:
        out = []
        for name in COLUMNS:
            value = getattr(row, name)
            out.append(f"{value:.4f}" if isinstance(value, float) else str(value))
        writer.writerow(out)
    return buf.getvalue()


def write_csv(summary: ExperimentSummary, path) -> None:
    Path(path).write_text(format_csv(summary))


def write_records(summary: ExperimentSummary, path) -> None:
    data = [asdict(r) for r in summary.records]
    Path(path).write_text(json.dumps(data, indent=1) + "\n")


def format_table(summary: ExperimentSummary) -> str:
    """Human-readable percentages, one column per agent count."""
    labels = [
        ("EF  LCP-X", "lcpx_ef_pct"),
        ("EF  DRF-W", "drfw_ef_pct"),
        ("SI  LCP-X", "lcpx_si_pct"),
        ("SI  DRF-W", "drfw_si_pct"),
        ("lower makespan LCP-X", "lcpx_lower_makespan_pct"),
        ("lower makespan DRF-W", "drfw_lower_makespan_pct"),
        ("equal makespan", "equal_makespan_pct"),
        ("lower mean completion LCP-X", "lcpx_lower_mct_pct"),
        ("lower mean completion DRF-W", "drfw_lower_mct_pct"),
        ("LCP-X Pareto dominates DRF-W", "lcpx_pareto_dominates_pct"),
    ]
    width = max(len(label) for label, _ in labels)
    head = " " * width + "".join(f"{'n=' + str(r.n):>10}" for r in summary.rows)
    lines = [head]
    for label, attr in labels:
        cells = "".join(f"{getattr(r, attr):>9.2f}%" for r in summary.rows)
        lines.append(f"{label:<{width}}{cells}")
    lines.append(f"{'instances':<{width}}" + "".join(f"{r.instances:>10}" for r in summary.rows))
    return "\n".join(lines)


# --- two-agent tools ----------------------------------------------------------


def two_agent_log_cp(instance: Instance, shares):
    """Log cost product when ``shares`` run until the first agent finishes
    and the survivor then runs alone.

    ``shares`` may be a single pair or an array of pairs (last axis 2).
    Returns ``(log_cp, first)`` where ``first`` is the index of the agent
    that finishes first; ``log_cp`` is inf if neither agent progresses.
    """
    lam = np.asarray(shares, dtype=float)
    k = instance.work
    with np.errstate(divide="ignore"):
        tau = np.where(lam > 0, k / np.where(lam > 0, lam, 1.0), np.inf)
    first = np.where(tau[..., 0] <= tau[..., 1], 0, 1)
    t_first = np.minimum(tau[..., 0], tau[..., 1])
    other = 1 - first
    k_other = k[other]
    lam_other = np.take_along_axis(lam, other[..., None], axis=-1)[..., 0]
    with np.errstate(invalid="ignore"):
        t_other = t_first + (k_other - lam_other * t_first)
        value = np.log(t_first) + np.log(t_other)
    value = np.where(np.isfinite(t_first), value, np.inf)
    return value, first


def _max_second_share(instance: Instance, first_share):
    d1, d2 = instance.demands
    used = d2 > 0
    room = 1.0 - np.multiply.outer(first_share, d1[used])
    return np.maximum(0.0, np.min(room / d2[used], axis=-1))


def grid_oracle_two_agents(instance: Instance, grid: int = 2000) -> float:
    """Brute-force minimum log cost product over the Pareto frontier.

    Sweeps agent 0's share on ``grid`` equal steps from 0 to its maximum,
    gives agent 1 everything left over, and lets the survivor run alone
    after the first completion.
    """
    if instance.n != 2:
        raise NotTwoAgents(f"grid oracle needs exactly 2 agents, got {instance.n}")
    top = 1.0 / instance.demands[0].max()
    lam1 = np.linspace(0.0, top, grid + 1)
    lam2 = _max_second_share(instance, lam1)
    values, _ = two_agent_log_cp(instance, np.stack([lam1, lam2], axis=-1))
    return float(values.min())


def _random_two_agent_instance(rng: np.random.Generator) -> Instance:
    m = int(rng.integers(1, 11))
    raw = 1.0 - rng.random((2, m))
    work = 100.0 * (1.0 - rng.random(2))
    return validate_instance(raw / raw.max(axis=1, keepdims=True), work)


def _random_feasible_shares(instance: Instance, rng: np.random.Generator) -> np.ndarray:
    direction = rng.random(2)
    load = float((direction @ instance.demands).max())
    return direction / load * rng.random()


PROBE_THETAS = np.linspace(0.0, 1.0, 11)


def probe_segment(instance: Instance, lam_a, lam_b, slack: float = 1e-7):
    """Check quasiconcavity of the two-agent cost product along a segment.

    Returns None when the finishing order is not the same at every probe
    point (the segment is outside the property's scope), else the list of
    violating ``theta`` values.
    """
    lam_a = np.asarray(lam_a, dtype=float)
    lam_b = np.asarray(lam_b, dtype=float)
    pts = PROBE_THETAS[:, None] * lam_a + (1 - PROBE_THETAS[:, None]) * lam_b
    values, first = two_agent_log_cp(instance, pts)
    if not np.all(np.isfinite(values)) or np.any(first != first[0]):
        return None
    cp = np.exp(values)
    floor = min(cp[0], cp[-1]) - slack
    return [float(th) for th, v in zip(PROBE_THETAS, cp) if v < floor]


def quasiconcavity_probe(trials: int = 1000, seed: int = 0, *, max_draws: int | None = None) -> list:
    """Sample order-consistent segments until ``trials`` have been checked.

    Returns a list of violations (expected empty); each is a dict with the
    instance, both endpoints and the failing ``theta`` values.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    max_draws = max_draws or 100 * trials
    violations = []
    checked = 0
    draws = 0
    while checked < trials and draws < max_draws:
        draws += 1
        inst = _random_two_agent_instance(rng)
        lam_a = _random_feasible_shares(inst, rng)
        lam_b = _random_feasible_shares(inst, rng)
        bad = probe_segment(inst, lam_a, lam_b)
        if bad is None:
            continue
        checked += 1
        if bad:
            violations.append(
                {
                    "instance": inst.to_dict(),
                    "lambda": lam_a.tolist(),
                    "lambda_prime": lam_b.tolist(),
                    "theta": bad,
                }
            )
    if checked < trials:
        raise RuntimeError(f"only {checked} order-consistent segments in {draws} draws")
    return violations


# --- worked examples ----------------------------------------------------------


def _close(actual, expected, tol=1e-9) -> bool:
    a = np.asarray(actual, dtype=float)
    e = np.asarray(expected, dtype=float)
    return a.shape == e.shape and bool(np.all(np.abs(a - e) <= tol * np.maximum(1.0, np.abs(e))))


def check_fixture(name: str, **params) -> list:
    """Run the mechanisms on a canned example and compare every expected fact.

    Returns ``(fact, passed, detail)`` triples.
    """
    inst, expected = canned(name, **params)
    results = []
    drfw = lcp = None
    for fact, want in expected.items():
        if fact.startswith("drfw_"):
            drfw = drfw or run_drf_w(inst)
            if fact == "drfw_shares":
                got = drfw.segments[0].shares
                results.append((fact, _close(got, want), list(map(float, got))))
            elif fact == "drfw_costs":
                got = drfw.completion_times
                results.append((fact, _close(got, want), list(map(float, got))))
            elif fact == "drfw_envy_pairs":
                got = audit(inst, drfw).envy_pairs
                pairs = tuple((p[0], p[1]) for p in got)
                results.append((fact, pairs == tuple(want), pairs))
        elif fact.startswith("lcpx_"):
            lcp = lcp or run_lcp_x(inst)
            if fact == "lcpx_first_shares":
                got = lcp.schedule.segments[0].shares
                results.append((fact, len(lcp.optima) == 1 and _close(got, want), list(map(float, got))))
            elif fact == "lcpx_costs":
                got = lcp.schedule.completion_times
                results.append((fact, len(lcp.optima) == 1 and _close(got, want), list(map(float, got))))
            elif fact == "lcpx_log_cp":
                got = lcp.log_cost_product
                results.append((fact, _close(got, want), got))
            elif fact == "lcpx_envy_pairs":
                got = audit(inst, list(lcp.optima)).envy_pairs
                pairs = tuple((p[0], p[1]) for p in got)
                results.append((fact, pairs == tuple(want), pairs))
        elif fact == "tie_crossover_n":
            got = tie_crossover(1000)
            results.append((fact, got == want, got))
            beats_ext1 = all(
                closed_form_tie_costs(n)[0] < closed_form_tie_costs(n)[1] for n in range(3, 501)
            )
            results.append(("tie_beats_extreme1_n3_to_500", beats_ext1, beats_ext1))
    return results
