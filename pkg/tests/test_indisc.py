import itertools

import pytest

import treedisc as td
from treedisc.indisc import (
    ParameterMap,
    check_based_on,
    check_indiscernible,
    check_indiscernible_wrt,
    em_satisfies,
    em_table,
)
from treedisc.similarity import ArrayBounds, Lang
from treedisc.trees import NodeTuple, TreeDomain, TreeNode

from .helpers import level_map, random_map, random_structure, standard_delta

D32 = TreeDomain(3, 2)
D33 = TreeDomain(3, 3)


def constant_map(M, domain):
    e = M.universe("u")[0]
    return ParameterMap(domain, {nd: (e,) for nd in domain.nodes()}, ("u",))


def test_constant_map_is_indiscernible_everywhere():
    M = random_structure(0)
    P = constant_map(M, D33)
    delta = standard_delta()
    for lang in (Lang.LEVELS, Lang.LEVEL_ORDER):
        assert check_indiscernible(M, P, lang, delta, 2).verdict


def test_sibling_distinguishing_map_fails_with_counterexample():
    M = random_structure(0)
    elems = M.universe("u")
    # find two elements with different unary types
    u_true = next(e for e in elems if M.holds("U", (e,)))
    u_false = next(e for e in elems if not M.holds("U", (e,)))
    assign = {nd: (u_true,) for nd in D32.nodes()}
    assign[TreeNode.of(0)] = (u_false,)
    P = ParameterMap(D32, assign, ("u",))
    rep = check_indiscernible(M, P, Lang.LEVELS, standard_delta(), 1)
    assert not rep.verdict
    assert rep.counterexample is not None
    # the counterexample re-checks: equal codes, different delta types
    first = tuple(TreeNode(tuple(s)) for s in rep.counterexample["first"])
    second = tuple(TreeNode(tuple(s)) for s in rep.counterexample["second"])
    from treedisc.indisc import code_of, param_dtype

    assert code_of(P.index, first, Lang.LEVELS) == code_of(
        P.index, second, Lang.LEVELS
    )
    assert param_dtype(M, P, first, standard_delta()) != param_dtype(
        M, P, second, standard_delta()
    )


def test_level_order_indisc_implies_levels_indisc_on_random_maps():
    delta = standard_delta()
    for seed in range(12):
        M = random_structure(seed)
        P = random_map(seed + 100, M, D32)
        strong = check_indiscernible(M, P, Lang.LEVEL_ORDER, delta, 2).verdict
        weak = check_indiscernible(M, P, Lang.LEVELS, delta, 2).verdict
        if strong:
            assert weak
    # and level-keyed maps witness that the converse fails: all single
    # nodes share one level-order code, so distinct per-level elements are
    # levels-indiscernible but not level-order-indiscernible
    M = random_structure(3)
    P = level_map(M, D32)
    elems = M.universe("u")
    u_true = next(e for e in elems if M.holds("U", (e,)))
    u_false = next(e for e in elems if not M.holds("U", (e,)))
    witness = td.ParameterMap(
        D32,
        {nd: ((u_true, u_false)[nd.level % 2],) for nd in D32.nodes()},
        ("u",),
    )
    assert check_indiscernible(M, P, Lang.LEVELS, standard_delta(), 2).verdict
    assert check_indiscernible(
        M, witness, Lang.LEVELS, standard_delta(), 2
    ).verdict
    assert not check_indiscernible(
        M, witness, Lang.LEVEL_ORDER, standard_delta(), 1
    ).verdict


def test_check_wrt_anchors():
    M = random_structure(1)
    P = constant_map(M, D32)
    delta = standard_delta()
    anchors = [NodeTuple.of(D32, (), (0,)), NodeTuple.of(D32, (0,), (1,))]
    rep = check_indiscernible_wrt(M, P, Lang.LEVELS, anchors, delta)
    assert rep.verdict
    # single anchor with one violating translate
    elems = M.universe("u")
    u_true = next(e for e in elems if M.holds("U", (e,)))
    u_false = next(e for e in elems if not M.holds("U", (e,)))
    assign = {nd: (u_true,) for nd in D32.nodes()}
    assign[TreeNode.of(1, 1)] = (u_false,)
    P2 = ParameterMap(D32, assign, ("u",))
    rep2 = check_indiscernible_wrt(
        M, P2, Lang.LEVELS, [NodeTuple.of(D32, (0, 0),)], delta
    )
    assert not rep2.verdict
    assert rep2.counterexample["violator"] == [[1, 1]]


def test_wrt_with_code_representatives_matches_full_check():
    delta = standard_delta()
    for seed in range(8):
        M = random_structure(seed)
        P = random_map(seed, M, D32)
        # anchors: one representative per code at arities 1 and 2
        reps = {}
        for arity in (1, 2):
            for tup in itertools.product(D32.nodes(), repeat=arity):
                code = td.similarity_code(NodeTuple(D32, tup), Lang.LEVELS)
                reps.setdefault(code, NodeTuple(D32, tup))
        full = check_indiscernible(M, P, Lang.LEVELS, delta, 2).verdict
        wrt = check_indiscernible_wrt(
            M, P, Lang.LEVELS, list(reps.values()), delta
        ).verdict
        assert full == wrt


def test_em_table_constant_and_unstable():
    M = random_structure(2)
    delta = standard_delta()
    P = constant_map(M, D32)
    table = em_table(M, P, Lang.LEVELS, delta, 2)
    assert not table.unstable
    # every code maps to the constant tuple's types
    dts = set(table.entries.values())
    assert len({dt for code, dt in table.entries.items() if code.arity == 1}) == 1
    P2 = random_map(42, M, D32)
    if check_indiscernible(M, P2, Lang.LEVELS, delta, 2).verdict:
        assert not em_table(M, P2, Lang.LEVELS, delta, 2).unstable
    else:
        assert em_table(M, P2, Lang.LEVELS, delta, 2).unstable


def test_based_on_reflexive_and_em_equivalence():
    delta = standard_delta()
    M = random_structure(4)
    for seed in (0, 1, 2):
        P = random_map(seed, M, D32)
        assert check_based_on(M, P, P, Lang.LEVELS, delta, 2).verdict
    # when the base map has no unstable codes, table satisfaction and
    # basedness agree
    A = level_map(M, D32)
    table = em_table(M, A, Lang.LEVELS, delta, 2)
    assert not table.unstable
    for seed in range(6):
        B = random_map(seed, M, D32)
        lhs = em_satisfies(M, B, table, Lang.LEVELS, delta, 2)
        rhs = check_based_on(M, B, A, Lang.LEVELS, delta, 2).verdict
        assert lhs == rhs


def test_based_on_code_preserving_reindexing():
    M = random_structure(8)
    delta = standard_delta()
    A = random_map(5, M, D33)
    # restrict to the subtree spanned by children {0, 2}: a code-preserving
    # re-indexing into a smaller domain
    small = TreeDomain(3, 2)
    sel = {0: 0, 1: 2}

    def embed(nd):
        return TreeNode(tuple(sel[i] for i in nd.seq))

    B = ParameterMap(
        small, {nd: A.tuple_at(embed(nd)) for nd in small.nodes()}, ("u",)
    )
    rep = check_based_on(M, B, A, Lang.LEVELS, delta, 2)
    assert rep.verdict
    # transitivity spot-check: C based on B based on A implies C based on A
    tiny = TreeDomain(2, 2)
    C = ParameterMap(
        tiny, {nd: B.tuple_at(nd) for nd in tiny.nodes()}, ("u",)
    )
    assert check_based_on(M, C, B, Lang.LEVELS, delta, 2).verdict
    assert check_based_on(M, C, A, Lang.LEVELS, delta, 2).verdict


def test_based_on_failure_produces_recheckable_counterexample():
    M = random_structure(6)
    delta = standard_delta()
    elems = M.universe("u")
    u_true = next(e for e in elems if M.holds("U", (e,)))
    u_false = next(e for e in elems if not M.holds("U", (e,)))
    A = ParameterMap(D32, {nd: (u_true,) for nd in D32.nodes()}, ("u",))
    B = ParameterMap(D32, {nd: (u_false,) for nd in D32.nodes()}, ("u",))
    rep = check_based_on(M, B, A, Lang.LEVELS, delta, 1)
    assert not rep.verdict
    assert rep.counterexample["elems"] == [u_false]


def test_array_map_and_grid_checks():
    M = random_structure(10)
    bounds = ArrayBounds(3, 3)
    e = M.universe("u")[0]
    P = ParameterMap(bounds, {c: (e,) for c in bounds.cells()}, ("u",))
    assert check_indiscernible(M, P, Lang.GRID, standard_delta(), 2).verdict
    with pytest.raises(ValueError):
        check_indiscernible(M, P, Lang.LEVELS, standard_delta(), 2)


def test_parameter_map_validation_and_json():
    M = random_structure(1)
    P = random_map(3, M, D32)
    again = ParameterMap.from_json(P.to_json())
    assert again.assign == P.assign
    assert again.sorts == P.sorts
    with pytest.raises(ValueError):
        ParameterMap(D32, {}, ("u",))
    bad = dict(P.assign)
    bad[TreeNode.of(0)] = ("e0", "e1")
    with pytest.raises(ValueError):
        ParameterMap(D32, bad, ("u",))
