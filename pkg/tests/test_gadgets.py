import math
from itertools import chain, combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fsdcert.fsd import (
    apply_global,
    converges_within,
    encoded_size_bits,
    is_fixed_point,
    orbit,
    random_configurations,
)
from fsdcert.gadgets import (
    ERROR,
    FALSE,
    all_error,
    build_thm2_graph,
    build_thm3_instance,
    check_thm2_reduction,
    check_thm3_reduction,
    max_convergence_time,
    mc_split,
    mc_state,
    parse_index_set,
    parse_pairs,
    thm2_layout,
    thm2_witness,
    thm3_layout,
    thm3_witness,
)

from oracles import naive_time, thm2_step, thm3_step_factory

DENSE4_A = [(1, 3), (1, 4), (3, 4)]
DENSE4_B = [(2, 3), (2, 4)]

# Structured rule sizes stay below C_SUCCINCT * d * log2(d + 2) bits; the
# measured maxima are about 94 (dense family) and 293 (decoder family).
C_SUCCINCT = 300


def subsets(items):
    items = list(items)
    return [list(c) for c in chain.from_iterable(combinations(items, r) for r in range(len(items) + 1))]


def pair_sets(n):
    return subsets(combinations(range(1, n + 1), 2))


# ---------------------------------------------------------------- parsing

def test_parse():
    assert parse_pairs("1,3;3,4") == {(1, 3), (3, 4)}
    assert parse_pairs("3,1") == {(1, 3)}
    assert parse_pairs("") == frozenset()
    assert parse_index_set("1, 3") == {1, 3}
    with pytest.raises(ValueError):
        parse_pairs("2,2")
    with pytest.raises(ValueError):
        build_thm2_graph(3, [(1, 4)], [])
    with pytest.raises(ValueError):
        build_thm2_graph(1, [], [])
    with pytest.raises(ValueError):
        build_thm3_instance(1, [3], [])
    with pytest.raises(ValueError):
        build_thm3_instance(0, [], [])


def test_mark_clock_packing():
    assert [mc_split(s) for s in range(4)] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert all(mc_state(*mc_split(s)) == s for s in range(4))


# ---------------------------------------------------------------- dense family

def test_thm2_four_node_instance():
    d = build_thm2_graph(4, DENSE4_A, DENSE4_B)
    L = thm2_layout(4)
    assert d.n == 16 == 2 * 4 + 4 * 2
    va = set(L.va)
    inner = {e for e in d.graph.edges() if set(e) <= va}
    assert inner == {(1, 3), (1, 4), (3, 4)}
    vb = set(L.vb)
    assert {e for e in d.graph.edges() if set(e) <= vb} == {(6, 7), (6, 8)}


def test_thm2_sizes():
    d = build_thm2_graph(2, [], [])
    assert d.n == 8
    dnodes = set(thm2_layout(2).da + thm2_layout(2).db)
    assert sum(1 for e in d.graph.edges() if set(e) <= dnodes) == 6
    for n in range(2, 9):
        assert build_thm2_graph(n, [], []).n == 2 * n + 4 * math.ceil(math.log2(n))


@pytest.mark.parametrize("n,pair", [(2, (1, 2)), (4, (1, 3))])
def test_thm2_witness_period_two(n, pair):
    d = build_thm2_graph(n, [pair], [pair])
    w = thm2_witness(n, [pair], [pair], pair)
    x1 = apply_global(d, w)
    x2 = apply_global(d, x1)
    x3 = apply_global(d, x2)
    assert x1 == x3 != x2
    assert orbit(d, w, 10).period == 2
    L = thm2_layout(n)
    moved = {i + 1 for i in range(d.n) if x1[i] != w[i]}
    assert moved == set(L.da + L.db)
    with pytest.raises(ValueError):
        thm2_witness(n, [pair], [], pair)


@pytest.mark.parametrize("A", [[], [(1, 2)]])
@pytest.mark.parametrize("B", [[], [(1, 2)]])
def test_thm2_exhaustive_n2(A, B):
    r = check_thm2_reduction(2, A, B, mode="exhaustive")
    assert r.checked == 4 ** 8
    assert r.agrees


@pytest.mark.parametrize("n,A,B", [(2, [(1, 2)], [(1, 2)]), (3, [(1, 2), (2, 3)], [(1, 3)]),
                                   (4, DENSE4_A, DENSE4_B), (4, [(1, 2)], [(3, 4)])])
def test_thm2_step_matches_oracle(n, A, B):
    d = build_thm2_graph(n, A, B)
    X = random_configurations(d.n, 4, 2000, np.random.default_rng(n))
    for x in X:
        x = tuple(int(s) for s in x)
        assert apply_global(d, x) == thm2_step(n, A, B, x)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5), st.data())
def test_thm2_mark_and_clock_invariants(n, data):
    pairs = list(combinations(range(1, n + 1), 2))
    A = data.draw(st.lists(st.sampled_from(pairs), unique=True))
    B = data.draw(st.lists(st.sampled_from(pairs), unique=True))
    d = build_thm2_graph(n, A, B)
    L = thm2_layout(n)
    X = random_configurations(d.n, 4, 200, np.random.default_rng(data.draw(st.integers(0, 999))))
    Y = d.step_batch(X)
    D = [v - 1 for v in L.da + L.db]
    V = [v - 1 for v in L.va + L.vb]
    assert np.array_equal(X[:, D] >> 1, Y[:, D] >> 1)
    assert np.array_equal(X[:, V] & 1, Y[:, V] & 1)


def test_thm2_desynchronisation():
    # flip admissibility on one side only: afterwards no bit node is admissible
    n = 4
    d = build_thm2_graph(n, DENSE4_A, DENSE4_B)
    L = thm2_layout(n)
    rng = np.random.default_rng(5)
    checked = 0
    for x in random_configurations(d.n, 4, 20000, rng):
        x = tuple(int(s) for s in x)
        y = apply_global(d, x)
        moved = [v for v in L.da + L.db if y[v - 1] != x[v - 1]]
        if 0 < len(moved) < 2 * L.ell:
            z = apply_global(d, y)
            assert all(z[v - 1] == y[v - 1] for v in L.da + L.db)
            checked += 1
    assert checked > 0


def test_thm2_one_step_freeze_fails_for_literal_rules():
    # v1 and v2 both marked and adjacent, the bit fields both encode 1: v2 drops at
    # step 1, and v1 loses its only marked neighbour, dropping at step 2
    A = B = [(1, 2)]
    d = build_thm2_graph(2, A, B)
    m = mc_state(1, 0)
    x = (m, m, 0, 0, 0, 0, 0, 0)
    x1 = thm2_step(2, A, B, x)
    x2 = thm2_step(2, A, B, x1)
    assert apply_global(d, x) == x1 and apply_global(d, x1) == x2
    assert x1[:4] != x2[:4]
    assert (mc_split(x1[0])[0], mc_split(x2[0])[0]) == (1, 0)


@pytest.mark.parametrize("n,A,B,x", [
    (3, [(1, 2), (2, 3)], [(1, 3)], (3, 3, 3, 3, 3, 3, 1, 1, 1, 3, 1, 1, 1, 3)),
    (4, DENSE4_A, DENSE4_B, (1, 2, 3, 3, 2, 3, 2, 3, 0, 2, 2, 2, 0, 2, 2, 2)),
])
def test_thm2_disjoint_but_slow(n, A, B, x):
    # disjoint inputs whose orbit needs three steps under the literal rules
    d = build_thm2_graph(n, A, B)
    step = lambda y: thm2_step(n, A, B, y)  # noqa: E731
    assert naive_time(step, x, 10) == 3
    assert orbit(d, x, 10).transient == 3


def test_thm2_sampled_reduction_intersecting():
    r = check_thm2_reduction(4, [(1, 3)], [(1, 3)], mode="sampled", samples=10)
    assert not r.converges and r.counterexample == thm2_witness(4, [(1, 3)], [(1, 3)], (1, 3))


@pytest.mark.parametrize("n", [2, 4, 8, 16])
def test_thm2_rules_succinct(n):
    d = build_thm2_graph(n, [(1, 2)], [(1, 2)])
    for v in d.graph.nodes:
        deg = d.graph.degree(v)
        assert encoded_size_bits(d.functions[v], 4) <= C_SUCCINCT * deg * math.log2(deg + 2)


# ---------------------------------------------------------------- bounded-degree family

def test_thm3_node_counts():
    # 2 * 3 decoder gates + 1 selector + 1 root with the compact base
    assert build_thm3_instance(1, [], []).n == 8
    assert build_thm3_instance(1, [], [], decoder_base="standard").n == 10
    L = thm3_layout(2)
    assert build_thm3_instance(2, [], []).n == 2 * 22 + 2 + 1 == L.collector[-1]


@pytest.mark.parametrize("t", [1, 2, 3, 4])
def test_thm3_max_degree(t):
    assert build_thm3_instance(t, [1], [2]).graph.max_degree() == 3


@pytest.mark.parametrize("t", [1, 2, 3])
def test_thm3_roles_partition(t):
    d = build_thm3_instance(t, [1], [2])
    groups = {r.split(":")[0] for r in d.roles.values()}
    assert set(d.roles) == set(d.graph.nodes)
    assert groups == {"DA", "DB", "S", "C"}
    assert sum(1 for r in d.roles.values() if r == "C:root") == 1


@pytest.mark.parametrize("t,i", [(1, 1), (2, 3)])
def test_thm3_witness(t, i):
    d = build_thm3_instance(t, [i], [i])
    w = thm3_witness(t, [i], [i], i)
    assert ERROR not in w
    o = orbit(d, w, 10)
    assert o.kind == "cycle" and o.period == 2 and o.transient == 0
    assert all(ERROR not in x for x in o.configurations)
    with pytest.raises(ValueError):
        thm3_witness(t, [i], [], i)


def test_thm3_all_error_fixed():
    for t in (1, 2, 3):
        for A, B in (([1], [1]), ([1], [2])):
            d = build_thm3_instance(t, A, B)
            assert is_fixed_point(d, all_error(d))


@pytest.mark.parametrize("t,A,B", [(1, [1], [2]), (1, [1, 2], [1]), (2, [1, 3], [2]),
                                   (2, [4], [4])])
def test_thm3_step_matches_oracle(t, A, B):
    d = build_thm3_instance(t, A, B)
    step = thm3_step_factory(d)
    rng = np.random.default_rng(t)
    X = random_configurations(d.n, 3, 1500, rng)
    X[:750] %= 2  # error-free half
    for x in X:
        x = tuple(int(s) for s in x)
        assert apply_global(d, x) == step(x)


@pytest.mark.parametrize("A", subsets([1, 2]))
@pytest.mark.parametrize("B", subsets([1, 2]))
def test_thm3_exhaustive_t1(A, B):
    r = check_thm3_reduction(1, A, B, mode="exhaustive")
    assert r.checked == 3 ** 8
    assert r.agrees
    if r.disjoint:
        assert 0 <= r.max_time <= 6


def test_thm3_standard_base_exceeds_six_steps():
    # with the 4-gate base an Error needs seven steps to reach the far side
    d = build_thm3_instance(1, [1], [2], decoder_base="standard")
    assert not converges_within(d, 6)
    assert converges_within(d, 7)
    assert max_convergence_time(d, 7) == 7


def test_thm3_sampled_t2():
    assert check_thm3_reduction(2, [1, 3], [2], samples=2000).converges
    r = check_thm3_reduction(2, [1], [1], samples=10)
    assert not r.converges and r.counterexample == thm3_witness(2, [1], [1], 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10**6))
def test_thm3_error_monotone(t, seed):
    d = build_thm3_instance(t, [1], [2 ** t])
    X = random_configurations(d.n, 3, 64, np.random.default_rng(seed))
    E = X == ERROR
    for _ in range(2 * d.graph.diameter() + 1):
        X = d.step_batch(X)
        E2 = X == ERROR
        assert not (E & ~E2).any()
        E = E2
    assert E.all()


@pytest.mark.parametrize("t", [1, 2, 3])
def test_thm3_rules_succinct(t):
    d = build_thm3_instance(t, [1], [2])
    for v in d.graph.nodes:
        deg = d.graph.degree(v)
        assert encoded_size_bits(d.functions[v], 3) <= C_SUCCINCT * deg * math.log2(deg + 2)


def test_thm3_consistent_configuration_is_fixed():
    # a consistent Error-free configuration is fixed except at the root
    d = build_thm3_instance(2, [1], [2])
    w = list(thm3_witness(2, [1, 2], [2, 3], 2))
    y = apply_global(d, w)
    L = thm3_layout(2)
    diff = [i + 1 for i in range(d.n) if y[i] != w[i]]
    assert diff and L.root in diff
    assert FALSE in w
