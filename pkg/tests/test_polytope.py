from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairshare.core import validate_instance
from fairshare.errors import Singular, ValidationError
from fairshare.instances import canned
from fairshare.polytope import (
    ActiveSet,
    Vertex,
    drf_share,
    enumerate_vertices,
    pareto_prune,
    solve_square_system,
    vertex_count_bound,
)

EX = validate_instance([[1.0, 0.5], [0.25, 1.0]], [1.0, 1.0])


def as_set(vertices):
    return sorted(tuple(np.round(v.shares, 9)) for v in vertices)


def oracle_vertices(d):
    """Textbook enumeration: pick s tight constraints out of all n + m, solve with LAPACK."""
    s, m = d.shape
    # constraint rows a @ x <= b; nonnegativity written as -x_i <= 0
    a = np.vstack([-np.eye(s), d.T])
    b = np.concatenate([np.zeros(s), np.ones(m)])
    out = []
    for tight in combinations(range(s + m), s):
        sub = a[list(tight)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        x = np.linalg.solve(sub, b[list(tight)])
        if np.all(a @ x <= b + 1e-9) and np.max(x) > 1e-12:
            x = np.maximum(x, 0.0)
            if not any(np.max(np.abs(x - y)) <= 1e-9 for y in out):
                out.append(x)
    return out


def test_active_set():
    act = ActiveSet.of(EX, [1])
    assert act.agents == (1,) and act.size == 1
    assert np.array_equal(act.demands, [[0.25, 1.0]])
    with pytest.raises(ValidationError):
        ActiveSet.of(EX, [])


@pytest.mark.parametrize(
    "demands, share",
    [([[1.0, 0.5], [0.25, 1.0]], 2 / 3), ([[1.0, 0.3]], 1.0), ([[1.0, 1.0], [1.0, 1.0]], 0.5)],
)
def test_drf_share(demands, share):
    inst = validate_instance(demands, [1.0] * len(demands))
    assert drf_share(ActiveSet.of(inst)) == pytest.approx(share, abs=1e-15)


def test_solve_square_system():
    x = solve_square_system([[1, 0.25], [0.5, 1]])
    assert np.allclose(x, [6 / 7, 4 / 7], atol=1e-15)
    assert np.array_equal(solve_square_system(np.eye(3)), [1, 1, 1])
    with pytest.raises(Singular):
        solve_square_system([[1, 1], [1, 1]])
    with pytest.raises(ValueError):
        solve_square_system([[1, 2, 3]])


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 5).flatmap(lambda k: st.lists(st.floats(-5, 5), min_size=k * k, max_size=k * k)))
def test_solve_matches_lapack(flat):
    k = int(round(len(flat) ** 0.5))
    a = np.array(flat).reshape(k, k)
    if np.linalg.cond(a) > 1e8:
        return
    try:
        x = solve_square_system(a)
    except Singular:
        return
    assert np.allclose(x, np.linalg.solve(a, np.ones(k)), rtol=1e-7, atol=1e-9)


def test_vertices_two_agent_example():
    got = as_set(enumerate_vertices(ActiveSet.of(EX)))
    assert got == sorted([(1.0, 0.0), (0.0, 1.0), tuple(np.round([6 / 7, 4 / 7], 9))])


def test_vertices_single_agent():
    inst = validate_instance([[0.2, 1.0, 0.7]], [1.0])
    verts = enumerate_vertices(ActiveSet.of(inst))
    assert len(verts) == 1 and np.allclose(verts[0].shares, [1.0])


def test_vertices_envy_pair_contains_joint_point():
    inst, _ = canned("envy")
    verts = enumerate_vertices(ActiveSet.of(inst, [1, 2]))
    target = np.full(2, 1 / 1.01)
    assert any(np.allclose(v.shares, target, atol=1e-12) for v in verts)


def test_vertex_lift():
    act = ActiveSet.of(EX, [1])
    v = Vertex(np.array([1.0]), (), (1,))
    assert v.lift(act, 2).tolist() == [0.0, 1.0]


def test_vertex_count_bound():
    assert vertex_count_bound(2, 2) == 6
    assert vertex_count_bound(1, 1) == 2


def _v(*x):
    return Vertex(np.array(x, dtype=float), (), ())


def test_pareto_prune_drops_dominated():
    verts = [_v(1, 0), _v(0, 1), _v(6 / 7, 4 / 7), _v(0.5, 0)]
    kept = as_set(pareto_prune(verts))
    assert (0.5, 0.0) not in kept and len(kept) == 3


def test_pareto_prune_keeps_frontier():
    verts = [_v(1, 0), _v(0, 1), _v(6 / 7, 4 / 7)]
    assert len(pareto_prune(verts)) == 3
    assert len(pareto_prune([_v(1)])) == 1


demand_matrices = st.integers(1, 4).flatmap(
    lambda s: st.integers(1, 4).flatmap(
        lambda m: st.lists(
            st.lists(st.floats(0.01, 1.0), min_size=m, max_size=m), min_size=s, max_size=s
        )
    )
)


@settings(max_examples=300, deadline=None)
@given(demand_matrices)
def test_vertices_match_oracle(rows):
    d = np.array(rows)
    d = d / d.max(axis=1, keepdims=True)
    inst = validate_instance(d, np.ones(len(rows)))
    got = enumerate_vertices(ActiveSet.of(inst))
    want = oracle_vertices(inst.demands)
    assert as_set(got) == sorted(tuple(np.round(x, 9)) for x in want)


@settings(max_examples=300, deadline=None)
@given(demand_matrices)
def test_pruned_vertices_are_feasible_and_maximal(rows):
    d = np.array(rows)
    d = d / d.max(axis=1, keepdims=True)
    inst = validate_instance(d, np.ones(len(rows)))
    verts = enumerate_vertices(ActiveSet.of(inst))
    front = pareto_prune(verts)
    assert front
    for v in verts:
        assert np.all(v.shares >= 0)
        assert np.all(v.shares @ inst.demands <= 1 + 1e-9)
    for v in front:
        # every frontier vertex saturates some resource each agent uses
        load = v.shares @ inst.demands
        for i in range(inst.n):
            used = inst.demands[i] > 0
            assert np.any(load[used] >= 1 - 1e-9)
    # every pruned vertex is dominated by something on the frontier
    kept = {tuple(v.shares) for v in front}
    for v in verts:
        if tuple(v.shares) in kept:
            continue
        assert any(np.all(w.shares >= v.shares - 1e-9) for w in front)
