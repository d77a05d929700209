"""Fairness and efficiency audits over concrete schedules."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_TOL, Instance, Schedule, Tolerances, bundle_cost, equal_split_cost
from .errors import LengthMismatch, ValidationError


@dataclass(frozen=True)
class PairVerdict:
    """Expected costs of agent ``i`` on its own and on ``j``'s bundle.

    ``other_cost`` is None when some realization leaves ``i`` unable to
    finish on ``j``'s bundle.
    """

    i: int
    j: int
    own_cost: float
    other_cost: float | None
    envious: bool


def _as_distribution(schedules):
    if isinstance(schedules, Schedule):
        return [(schedules, 1.0)]
    out = []
    for item in schedules:
        if isinstance(item, Schedule):
            out.append((item, None))
        else:
            sched, prob = item
            out.append((sched, float(prob)))
    if not out:
        raise ValidationError("need at least one schedule")
    if any(p is None for _, p in out):
        if not all(p is None for _, p in out):
            raise ValidationError("give probabilities for all schedules or for none")
        out = [(s, 1.0 / len(out)) for s, _ in out]
    total = sum(p for _, p in out)
    if abs(total - 1.0) > 1e-12:
        raise ValidationError(f"probabilities sum to {total}, not 1")
    return out


def check_ef(instance: Instance, schedules, tol: Tolerances = DEFAULT_TOL) -> list:
    """Envy verdict for every ordered pair, in expectation over ``schedules``.

    ``schedules`` is a Schedule, a list of Schedules (uniform), or a list
    of ``(Schedule, probability)`` pairs. A pair is envious only if ``i``
    can finish on ``j``'s bundle in every realization and does so strictly
    sooner on average.
    """
    dist = _as_distribution(schedules)
    n = instance.n
    verdicts = []
    for i in range(n):
        own = sum(p * float(s.completion_times[i]) for s, p in dist)
        for j in range(n):
            if i == j:
                continue
            other = 0.0
            for s, p in dist:
                c = bundle_cost(instance, s, i, j, tol)
                if c is None:
                    other = None
                    break
                other += p * c
            envious = other is not None and other < own - tol.tie * own
            verdicts.append(PairVerdict(i, j, own, other, envious))
    return verdicts


@dataclass(frozen=True)
class AuditReport:
    envy_pairs: tuple
    ef: bool
    ef_in_expectation: bool
    si_violations: tuple
    si: bool
    makespan: float
    mean_completion: float

    def to_dict(self) -> dict:
        return {
            "envy_pairs": [list(p) for p in self.envy_pairs],
            "ef": self.ef,
            "ef_in_expectation": self.ef_in_expectation,
            "si_violations": [list(v) for v in self.si_violations],
            "si": self.si,
            "makespan": self.makespan,
            "mean_completion": self.mean_completion,
        }


def check_si(instance: Instance, schedule: Schedule, tol: Tolerances = DEFAULT_TOL) -> list:
    """Agents finishing later than under an equal split, as (i, cost, n*k_i)."""
    out = []
    for i, t in enumerate(schedule.completion_times):
        cap = equal_split_cost(instance, i)
        if t > cap * (1 + tol.tie):
            out.append((i, float(t), cap))
    return out


class Dominance(enum.Enum):
    A_DOMINATES = "A_dominates"
    B_DOMINATES = "B_dominates"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


def pareto_compare(costs_a, costs_b, tol: Tolerances = DEFAULT_TOL) -> Dominance:
    """Compare cost vectors; lower is better, equality is relative."""
    a = np.asarray(costs_a, dtype=float)
    b = np.asarray(costs_b, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(f"{a.shape} vs {b.shape}")
    same = np.abs(a - b) <= tol.tie * np.maximum(np.abs(a), np.abs(b))
    a_better = ~same & (a < b)
    b_better = ~same & (b < a)
    if np.all(same):
        return Dominance.EQUAL
    if not np.any(b_better):
        return Dominance.A_DOMINATES
    if not np.any(a_better):
        return Dominance.B_DOMINATES
    return Dominance.INCOMPARABLE


def metrics(costs) -> tuple:
    c = np.asarray(costs, dtype=float)
    if c.size == 0:
        raise ValidationError("metrics need at least one cost")
    return float(c.max()), float(c.mean())


def audit(instance: Instance, schedules, tol: Tolerances = DEFAULT_TOL) -> AuditReport:
    """Full report for one schedule or a distribution over schedules.

    ``envy_pairs`` and ``ef`` are ex post: a pair is listed if it envies in
    any single realization. ``ef_in_expectation`` uses expected costs.
    Completion metrics and SI use expected completion times.
    """
    dist = _as_distribution(schedules)
    pairs = {}
    for sched, _ in dist:
        for v in check_ef(instance, sched, tol):
            if v.envious and (v.i, v.j) not in pairs:
                pairs[(v.i, v.j)] = (v.i, v.j, v.own_cost, v.other_cost)
    expected = check_ef(instance, dist, tol)
    costs = np.sum([p * s.completion_times for s, p in dist], axis=0)
    si_violations = []
    for sched, _ in dist:
        for v in check_si(instance, sched, tol):
            if v[0] not in [x[0] for x in si_violations]:
                si_violations.append(v)
    makespan, mean_completion = metrics(costs)
    return AuditReport(
        envy_pairs=tuple(pairs[key] for key in sorted(pairs)),
        ef=not pairs,
        ef_in_expectation=not any(v.envious for v in expected),
        si_violations=tuple(sorted(si_violations)),
        si=not si_violations,
        makespan=makespan,
        mean_completion=mean_completion,
    )
