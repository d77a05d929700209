"""Acceptance gate: every criterion at its stated tolerance.

Run ``pytest tests/test_acceptance.py`` to see one PASS/FAIL line per
criterion in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from fairshare.audit import audit, check_ef
from fairshare.cli import main
from fairshare.core import check_schedule, log_cost_product
from fairshare.experiments import (
    check_fixture,
    format_csv,
    grid_oracle_two_agents,
    quasiconcavity_probe,
    run_table1,
)
from fairshare.instances import GenConfig, canned, random_instance
from fairshare.mechanisms import (
    closed_form_tie_costs,
    enumerate_sjf_orders,
    run_drf_w,
    run_lcp_x,
    run_sjf,
    tie_crossover,
)
from oracles import sjf_costs

SEED = 42
COUNT = 500
TRIALS = 1000

TARGET_MCT = {2: 95.65, 3: 99.3, 4: 100.0, 5: 100.0}
TARGET_DRFW_MAKESPAN = {2: 58.3, 3: 73.6, 4: 76.0, 5: 78.6}
TARGET_DOMINATES = {2: 39.6, 3: 24.0, 4: 20.3, 5: 18.15}


def _timed(fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - start


def _close(a, b, tol=1e-9):
    return bool(np.all(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) <= tol))


# --- 1. fixture exactness -------------------------------------------------------


def test_fixture_drfw_example(criterion):
    inst, _ = canned("drfw-example")
    sched, secs = _timed(run_drf_w, inst)
    ok = (
        _close(sched.segments[0].shares, [2 / 3, 2 / 3])
        and _close(sched.completion_times, [1.5, 1.5])
        and secs < 1.0
    )
    assert criterion("1.1 DRF-W two-agent example", ok, f"costs={sched.completion_times.tolist()} {secs:.3f}s")


def test_fixture_lcp_example(criterion):
    inst, _ = canned("lcp-example")
    res, secs = _timed(run_lcp_x, inst)
    sched = res.schedule
    ok = (
        len(res.optima) == 1
        and _close(sched.completion_times, [7 / 6, 3 / 2])
        and _close(sched.segments[0].shares, [6 / 7, 4 / 7])
        and _close(res.log_cost_product, math.log(7 / 4))
        and secs < 1.0
    )
    assert criterion("1.2 LCP-X two-agent example", ok, f"logCP={res.log_cost_product:.12f} {secs:.3f}s")


def test_fixture_strategy_proofness_pair(criterion):
    truthful, _ = canned("sp-truthful")
    lied, _ = canned("sp-misreport")
    (a, sa), (b, sb) = _timed(run_lcp_x, truthful), _timed(run_lcp_x, lied)
    ta, tb = a.schedule.completion_times, b.schedule.completion_times
    ok = (
        len(a.optima) == 1
        and len(b.optima) == 1
        and _close(ta, [11 / 10, 15 / 10])
        and _close(tb, [16 / 15, 5 / 3])
        and tb[0] < ta[0]
        and max(sa, sb) < 1.0
    )
    assert criterion("1.3 LCP-X misreport lowers agent 0's cost", ok, f"{ta.tolist()} -> {tb.tolist()}")


def test_fixture_envy(criterion):
    eps, k3 = 0.01, 3.0
    inst, _ = canned("envy", epsilon=eps, k3=k3)
    start = time.perf_counter()
    res = run_lcp_x(inst)
    lcp_report = audit(inst, list(res.optima))
    drfw_report = audit(inst, run_drf_w(inst))
    secs = time.perf_counter() - start
    pairs = [p[:2] for p in lcp_report.envy_pairs]
    ok = (
        _close(res.log_cost_product, math.log((2 + eps) * (1 + eps + k3)))
        and pairs == [(1, 0)]
        and drfw_report.ef
        and drfw_report.ef_in_expectation
        and secs < 1.0
    )
    assert criterion("1.4 three-agent envy example", ok, f"pairs={pairs} drfw_ef={drfw_report.ef}")


def test_fixture_tie(criterion):
    start = time.perf_counter()
    beats_ext1 = all(
        closed_form_tie_costs(n)[0] < closed_form_tie_costs(n)[1] for n in range(3, 501)
    )
    crossover = tie_crossover()
    secs = time.perf_counter() - start
    ok = beats_ext1 and crossover == 132 and secs < 1.0
    assert criterion("1.5 tie example crossover", ok, f"crossover={crossover} beats_ext1={beats_ext1} {secs:.3f}s")


@pytest.mark.parametrize("name", ["drfw-example", "lcp-example", "sp-truthful", "sp-misreport", "envy", "tie"])
def test_fixture_runner_under_one_second(name):
    results, secs = _timed(check_fixture, name)
    assert all(passed for _, passed, _ in results)
    assert secs < 1.0


# --- 2. table reproduction ----------------------------------------------------------


@pytest.fixture(scope="module")
def table():
    summary, secs = _timed(run_table1, SEED, range(2, 6), COUNT)
    return summary, secs


def test_table_fairness(table, criterion):
    summary, secs = table
    rows = summary.rows
    ok = (
        all(r.skipped == 0 for r in rows)
        and all(r.lcpx_si_pct == 100.0 and r.drfw_si_pct == 100.0 for r in rows)
        and all(r.drfw_ef_pct == 100.0 for r in rows)
        and all(r.lcpx_ef_pct >= 99.0 for r in rows)
        and secs < 600
    )
    detail = " ".join(f"n={r.n}:EF {r.lcpx_ef_pct:.1f}" for r in rows) + f" {secs:.0f}s"
    assert criterion("2.1 SI 100%, DRF-W EF 100%, LCP-X EF >= 99%", ok, detail)


def test_table_mean_completion(table, criterion):
    summary, _ = table
    got = {r.n: r.lcpx_lower_mct_pct for r in summary.rows}
    ok = all(abs(got[n] - TARGET_MCT[n]) <= 3.0 for n in TARGET_MCT)
    detail = " ".join(f"n={n}:{got[n]:.2f}/{TARGET_MCT[n]}" for n in TARGET_MCT)
    assert criterion("2.2 LCP-X lower mean completion +-3pp", ok, detail)


def test_table_makespan_and_dominance(table, criterion):
    summary, _ = table
    mk = {r.n: r.drfw_lower_makespan_pct for r in summary.rows}
    dom = {r.n: r.lcpx_pareto_dominates_pct for r in summary.rows}
    ok = all(abs(mk[n] - TARGET_DRFW_MAKESPAN[n]) <= 7.0 for n in mk) and all(
        abs(dom[n] - TARGET_DOMINATES[n]) <= 7.0 for n in dom
    )
    detail = " ".join(f"n={n}:{mk[n]:.1f}/{dom[n]:.1f}" for n in mk)
    assert criterion("2.3 DRF-W lower makespan, LCP-X dominates +-7pp", ok, detail)


# --- 3. property suites -------------------------------------------------------------


def _instances(seed, trials, n_values):
    n_values = list(n_values)
    for t in range(trials):
        n = n_values[t % len(n_values)]
        yield random_instance(GenConfig(seed, n), t)


def test_property_feasibility(criterion):
    bad = 0
    schedules = 0
    for inst in _instances(101, TRIALS, range(1, 6)):
        produced = [run_drf_w(inst)] + list(run_lcp_x(inst).optima)
        produced += [run_sjf(inst, o) for o in enumerate_sjf_orders(inst)]
        for sched in produced:
            schedules += 1
            try:
                check_schedule(inst, sched)
            except ValueError:
                bad += 1
    assert criterion("3.1 feasibility and work conservation", bad == 0, f"{schedules} schedules, {bad} bad")


def test_property_single_resource(criterion):
    worst = 0.0
    for t in range(TRIALS):
        inst = random_instance(GenConfig(202, 1 + t % 6, m_min=1, m_max=1), t)
        res = run_lcp_x(inst)
        worst = max(worst, float(np.max(np.abs(res.expected_costs() - sjf_costs(inst.work)))))
    assert criterion("3.2 one resource gives SJF prefix sums", worst <= 1e-9, f"max error {worst:.2e}")


def test_property_two_agent_ef(criterion):
    envious = 0
    for inst in _instances(303, TRIALS, [2]):
        res = run_lcp_x(inst)
        dist = [(s, 1.0 / len(res.optima)) for s in res.optima]
        if any(v.envious for v in check_ef(inst, dist)):
            envious += 1
    assert criterion("3.3 two agents envy-free in expectation", envious == 0, f"{envious}/{TRIALS} envious")


def test_property_optimality_sandwich(criterion):
    worst = -math.inf
    for inst in _instances(404, TRIALS, range(2, 6)):
        lcp = run_lcp_x(inst).log_cost_product
        others = [log_cost_product(run_drf_w(inst).completion_times)]
        others += [log_cost_product(run_sjf(inst, o).completion_times) for o in enumerate_sjf_orders(inst)]
        worst = max(worst, lcp - min(others))
    assert criterion("3.4 LCP-X <= DRF-W and every SJF order", worst <= 1e-9, f"max excess {worst:.2e}")


def test_property_grid_oracle(criterion):
    lo, hi = math.inf, -math.inf
    for inst in _instances(505, 200, [2]):
        lcp = run_lcp_x(inst).log_cost_product
        gap = grid_oracle_two_agents(inst, 2000) - lcp
        lo, hi = min(lo, gap), max(hi, gap)
    ok = lo >= -1e-6 and hi <= 5e-3
    assert criterion("3.5 grid oracle brackets LCP-X", ok, f"gap in [{lo:.2e}, {hi:.2e}]")


def test_property_quasiconcavity(criterion):
    violations = quasiconcavity_probe(TRIALS, seed=606)
    assert criterion("3.6 quasiconcavity probe", not violations, f"{len(violations)} violations")


# --- 4. determinism -----------------------------------------------------------------


def test_determinism(table, tmp_path, capsys, criterion):
    summary, _ = table
    base = ["experiment", "--n-from", "2", "--n-to", "5", "--count", str(COUNT), "--seed", str(SEED)]
    one, four = tmp_path / "w1.csv", tmp_path / "w4.csv"
    assert main(base + ["--out", str(one), "--workers", "1"]) == 0
    assert main(base + ["--out", str(four), "--workers", "4"]) == 0
    capsys.readouterr()
    in_memory = format_csv(summary).encode()
    ok = one.read_bytes() == in_memory and four.read_bytes() == in_memory
    assert criterion("4 CSV identical across runs and worker counts", ok)
