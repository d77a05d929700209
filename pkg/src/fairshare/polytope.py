"""Geometry of the per-interval allocation polytope.

For an active set of agents the feasible share vectors are
``{s >= 0 : s @ D <= 1}``. Its vertices are found by choosing which
agents sit at zero and which resources are saturated, then solving the
resulting square system.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .core import DEFAULT_TOL, Instance, Tolerances
from .errors import Singular, ValidationError

PIVOT_TOL = 1e-12
DEDUP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ActiveSet:
    agents: tuple
    demands: np.ndarray

    @classmethod
    def of(cls, instance: Instance, agents: Sequence[int] | None = None) -> "ActiveSet":
        if agents is None:
            agents = range(instance.n)
        agents = tuple(int(a) for a in agents)
        if not agents:
            raise ValidationError("active set must be non-empty")
        return cls(agents, instance.demands[list(agents)])

    @property
    def size(self) -> int:
        return len(self.agents)


@dataclass(frozen=True, eq=False)
class Vertex:
    """A vertex over an active set.

    ``zero_agents`` and ``saturated`` index into the active set and the
    resource axis respectively; together they are the tight constraints.
    """

    shares: np.ndarray
    zero_agents: tuple
    saturated: tuple

    def lift(self, active: ActiveSet, n: int) -> np.ndarray:
        full = np.zeros(n)
        full[list(active.agents)] = self.shares
        return full


def drf_share(active: ActiveSet) -> float:
    """Common dominant share that saturates the most loaded resource."""
    return 1.0 / float(active.demands.sum(axis=0).max())


def _solve_batch(a: np.ndarray, b: np.ndarray):
    """Gaussian elimination with partial pivoting over a stack of systems.

    Returns ``(x, ok)``; ``ok[j]`` is False when some pivot of system
    ``j`` fell below PIVOT_TOL, in which case ``x[j]`` is meaningless.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    batch, k, _ = a.shape
    rows = np.arange(batch)
    ok = np.ones(batch, dtype=bool)
    for col in range(k):
        piv = col + np.argmax(np.abs(a[:, col:, col]), axis=1)
        top = a[rows, col].copy()
        a[rows, col] = a[rows, piv]
        a[rows, piv] = top
        top_b = b[rows, col].copy()
        b[rows, col] = b[rows, piv]
        b[rows, piv] = top_b
        pivot = a[:, col, col]
        ok &= np.abs(pivot) >= PIVOT_TOL
        pivot = np.where(ok, pivot, 1.0)
        if col + 1 < k:
            factor = a[:, col + 1 :, col] / pivot[:, None]
            a[:, col + 1 :, :] -= factor[:, :, None] * a[:, None, col, :]
            b[:, col + 1 :] -= factor * b[:, col, None]
    x = np.zeros((batch, k))
    for col in range(k - 1, -1, -1):
        acc = b[:, col] - np.einsum("bj,bj->b", a[:, col, col + 1 :], x[:, col + 1 :])
        diag = np.where(ok, a[:, col, col], 1.0)
        x[:, col] = acc / diag
    return x, ok


def solve_square_system(rows, rhs=None) -> np.ndarray:
    """Solve ``rows @ x = rhs`` (rhs defaults to all ones)."""
    a = np.asarray(rows, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    b = np.ones(a.shape[0]) if rhs is None else np.asarray(rhs, dtype=float)
    x, ok = _solve_batch(a[None], b[None])
    if not ok[0]:
        raise Singular("pivot magnitude below 1e-12")
    return x[0]


def vertex_count_bound(s: int, m: int) -> int:
    from math import comb

    return sum(comb(s, z) * comb(m, s - z) for z in range(s + 1))


def enumerate_vertices(active: ActiveSet, tol: Tolerances = DEFAULT_TOL) -> list:
    """All nonzero vertices of the active set's allocation polytope."""
    d = active.demands
    s, m = d.shape
    live_resources = np.flatnonzero(d.sum(axis=0) > 0)
    found = []
    for p in range(1, s + 1):
        supports = list(combinations(range(s), p))
        saturations = list(combinations(live_resources.tolist(), p))
        if not saturations:
            break
        pairs = [(sup, sat) for sup in supports for sat in saturations]
        sup_idx = np.array([sup for sup, _ in pairs])
        sat_idx = np.array([sat for _, sat in pairs])
        # system row r: sum over supported agents i of d[i, r] * x_i = 1
        mats = d[sup_idx[:, None, :], sat_idx[:, :, None]]
        x, ok = _solve_batch(mats, np.ones((len(pairs), p)))
        ok &= np.all(x >= -tol.feas, axis=1)
        if not np.any(ok):
            continue
        x = np.where(x < 0, 0.0, x)
        full = np.zeros((len(pairs), s))
        np.put_along_axis(full, sup_idx, x, axis=1)
        load = full @ d
        ok &= np.all(load <= 1.0 + tol.feas, axis=1)
        ok &= full.max(axis=1) > 0
        for j in np.flatnonzero(ok):
            zeros = tuple(a for a in range(s) if a not in pairs[j][0])
            found.append(Vertex(full[j], zeros, pairs[j][1]))
    return _dedupe(found)


def _dedupe(vertices: list) -> list:
    kept = []
    kept_arr = []
    for v in vertices:
        if kept_arr and np.min(np.max(np.abs(np.array(kept_arr) - v.shares), axis=1)) <= DEDUP_TOL:
            continue
        kept.append(v)
        kept_arr.append(v.shares)
    return kept


def pareto_prune(vertices: list, tol: Tolerances = DEFAULT_TOL) -> list:
    """Drop vertices weakly dominated by another vertex with some strict gain."""
    if len(vertices) <= 1:
        return list(vertices)
    pts = np.array([v.shares for v in vertices])
    geq = np.all(pts[:, None, :] >= pts[None, :, :] - tol.feas, axis=2)
    gt = np.any(pts[:, None, :] > pts[None, :, :] + tol.feas, axis=2)
    # dominated[j]: some w with w >= v_j everywhere and w > v_j somewhere
    dominated = np.any(geq & gt, axis=0)
    return [v for v, dom in zip(vertices, dominated) if not dom]
