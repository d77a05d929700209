"""Allocation mechanisms: DRF-W, shortest-job-first, and LCP-X."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations, product

import numpy as np

from .core import (
    DEFAULT_TOL,
    Instance,
    Schedule,
    Tolerances,
    _SegmentBuilder,
    log_cost_product,
)
from .errors import TieGroupTooLarge
from .polytope import ActiveSet, drf_share, enumerate_vertices, pareto_prune

DEFAULT_BUDGET = 10**7
MAX_TIE_ORDERS = 720


def run_drf_w(instance: Instance, tol: Tolerances = DEFAULT_TOL) -> Schedule:
    """Rerun DRF on the unfinished agents after every completion."""
    k = instance.work
    rem = k.astype(float).copy()
    active = list(range(instance.n))
    times = np.zeros(instance.n)
    builder = _SegmentBuilder(instance)
    now = 0.0
    while active:
        lam = drf_share(ActiveSet.of(instance, active))
        dur = min(rem[i] for i in active) / lam
        shares = np.zeros(instance.n)
        shares[active] = lam
        builder.add(shares, dur)
        now = now + dur
        still = []
        for i in active:
            rem[i] -= lam * dur
            if rem[i] <= tol.work * k[i]:
                rem[i] = 0.0
                times[i] = now
            else:
                still.append(i)
        active = still
    return builder.build(times)


@dataclass(frozen=True)
class SjfOrder:
    order: tuple
    probability: float


def _tie_groups(work, tol: Tolerances) -> list:
    idx = sorted(range(len(work)), key=lambda i: (work[i], i))
    groups = [[idx[0]]]
    for prev, cur in zip(idx, idx[1:]):
        if work[cur] - work[prev] <= tol.tie * max(abs(work[cur]), abs(work[prev])):
            groups[-1].append(cur)
        else:
            groups.append([cur])
    return groups


def enumerate_sjf_orders(instance: Instance, tol: Tolerances = DEFAULT_TOL) -> list:
    """Every order that sorts work ascending, each equally likely."""
    groups = _tie_groups(instance.work.tolist(), tol)
    total = math.prod(math.factorial(len(g)) for g in groups)
    if total > MAX_TIE_ORDERS:
        raise TieGroupTooLarge(f"{total} tie orders exceed the limit of {MAX_TIE_ORDERS}")
    orders = []
    for choice in product(*(sorted(permutations(g)) for g in groups)):
        orders.append(SjfOrder(tuple(a for part in choice for a in part), 1.0 / total))
    return orders


def run_sjf(instance: Instance, order) -> Schedule:
    """Serial schedule: each agent in turn holds everything (share 1)."""
    if isinstance(order, SjfOrder):
        order = order.order
    order = tuple(order)
    if sorted(order) != list(range(instance.n)):
        raise ValueError(f"{order} is not a permutation of the agents")
    builder = _SegmentBuilder(instance)
    times = np.zeros(instance.n)
    now = 0.0
    for i in order:
        shares = np.zeros(instance.n)
        shares[i] = 1.0
        dur = float(instance.work[i])
        builder.add(shares, dur)
        now = now + dur
        times[i] = now
    return builder.build(times)


@dataclass(frozen=True, eq=False)
class LcpResult:
    optima: tuple
    log_cost_product: float
    explored: int
    budget_exceeded: bool = False

    @property
    def schedule(self) -> Schedule:
        return self.optima[0]

    def expected_costs(self) -> np.ndarray:
        return np.mean([s.completion_times for s in self.optima], axis=0)


class _OutOfBudget(Exception):
    pass


def _tie_slack(value: float, tol: Tolerances) -> float:
    if not math.isfinite(value):
        return 0.0
    return tol.tie * max(1.0, abs(value))


def run_lcp_x(
    instance: Instance, budget: int = DEFAULT_BUDGET, tol: Tolerances = DEFAULT_TOL
) -> LcpResult:
    """Least cost product over schedules whose every interval is a Pareto vertex.

    Depth-first branch and bound. At a state every unfinished agent still
    needs at least its remaining work in time (shares never exceed 1), which
    gives an admissible bound on the final log cost product.
    """
    n = instance.n
    k = instance.work
    slack_k = tol.work * k
    cache: dict = {}

    def candidates(mask: int) -> np.ndarray:
        cands = cache.get(mask)
        if cands is None:
            active = ActiveSet.of(instance, [i for i in range(n) if mask >> i & 1])
            verts = pareto_prune(enumerate_vertices(active, tol), tol)
            cands = np.array([v.shares for v in verts])
            cache[mask] = cands
        return cands

    best = math.inf
    found: list = []  # (value, steps, times)
    explored = 0

    def visit(mask, rem, now, partial, steps, times):
        nonlocal best, explored
        explored += 1
        if explored > budget:
            raise _OutOfBudget
        act = [i for i in range(n) if mask >> i & 1]
        cands = candidates(mask)
        r = rem[act]
        with np.errstate(divide="ignore", invalid="ignore"):
            need = np.where(cands > 0, r / cands, np.inf)
        dur = need.min(axis=1)
        left = r - cands * dur[:, None]
        done = left <= slack_k[act]
        end = now + dur
        log_end = np.log(end)
        bound = partial + np.where(done, log_end[:, None], np.log(end[:, None] + left)).sum(axis=1)
        for c in np.argsort(bound, kind="stable"):
            if bound[c] > best + _tie_slack(best, tol):
                break
            full = np.zeros(n)
            full[act] = cands[c]
            child_steps = steps + [(full, dur[c])]
            child_times = times.copy()
            child_rem = rem.copy()
            child_mask = mask
            child_partial = partial
            for pos, i in enumerate(act):
                if done[c, pos]:
                    child_rem[i] = 0.0
                    child_times[i] = end[c]
                    child_mask &= ~(1 << i)
                    child_partial += log_end[c]
                else:
                    child_rem[i] = left[c, pos]
            if child_mask == 0:
                explored += 1
                value = child_partial
                if value < best:
                    best = value
                found.append((value, child_steps, child_times))
            else:
                visit(child_mask, child_rem, end[c], child_partial, child_steps, child_times)

    exceeded = False
    try:
        visit((1 << n) - 1, k.astype(float).copy(), 0.0, 0.0, [], np.zeros(n))
    except _OutOfBudget:
        exceeded = True
    slack = _tie_slack(best, tol)
    optima = []
    for value, steps, times in found:
        if value <= best + slack:
            builder = _SegmentBuilder(instance)
            for shares, dur in steps:
                builder.add(shares, dur)
            optima.append(builder.build(times))
    return LcpResult(tuple(optima), float(best), explored, exceeded)


def closed_form_tie_costs(n: int, epsilon: float = 0.0) -> tuple:
    """Log cost products of the tie, extreme-1 and extreme-2 allocations.

    Two short agents with demand rows ``(1, 2/3, eps)`` and ``(eps, 1/2, 1)``
    and unit work go first; ``n - 2`` agents demanding everything with
    work 5 follow serially. At ``epsilon = 0`` this reduces to the
    completion times 7/6, 7/6 (tie), 1, 4/3 (extreme-1) and 5/4, 1
    (extreme-2).
    """
    if n < 3:
        raise ValueError("the tie example needs n >= 3")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    pairs = _tie_pairs(float(epsilon))
    return tuple(_total(pair, n) for pair in pairs)


def _tie_pairs(eps: float) -> tuple:
    """Completion times of the two short agents under tie, extreme-1, extreme-2."""
    # tie: equal shares, both finish together
    lam = 1.0 / max(1.0 + eps, 2.0 / 3.0 + 0.5)
    tie = (1.0 / lam, 1.0 / lam)
    # extreme-1: resources 1 and 2 saturated, agent 1 finishes first
    a1, a2 = np.linalg.solve([[1.0, eps], [2.0 / 3.0, 0.5]], [1.0, 1.0])
    t1 = 1.0 / a1
    ext1 = (t1, t1 + (1.0 - a2 * t1))
    # extreme-2: resources 2 and 3 saturated, agent 2 finishes first
    b1, b2 = np.linalg.solve([[2.0 / 3.0, 0.5], [eps, 1.0]], [1.0, 1.0])
    t2 = 1.0 / b2
    ext2 = (t2 + (1.0 - b1 * t2), t2)
    return tie, ext1, ext2


def _total(pair, n: int) -> float:
    head = max(pair)
    tail = [5.0 * (i - 2) + head for i in range(3, n + 1)]
    return log_cost_product(list(pair) + tail)

def tie_crossover(limit: int = 10_000, epsilon: float = 0.0) -> int | None:
    """Smallest n from which the tie allocation beats extreme-2 for good."""
    tie, _, ext2 = _tie_pairs(float(epsilon))
    # running log cost products; the long agents add one term per n
    acc_tie = math.log(tie[0]) + math.log(tie[1])
    acc_ext2 = math.log(ext2[0]) + math.log(ext2[1])
    last_bad = 2
    for n in range(3, limit + 1):
        acc_tie += math.log(5.0 * (n - 2) + max(tie))
        acc_ext2 += math.log(5.0 * (n - 2) + max(ext2))
        if acc_tie - acc_ext2 >= 0:
            last_bad = n
    return last_bad + 1 if last_bad < limit else None
