import itertools

import pytest
from hypothesis import given, strategies as st

from treedisc.trees import (
    EQ,
    GT,
    LT,
    Kinship,
    NodeTuple,
    TreeDomain,
    TreeNode,
    colex_subsets,
    enumerate_nodes,
    kinship,
    lex_cmp,
    meet,
    meet_closure,
    restrict_tuple,
)

D43 = TreeDomain(4, 3)

nodes_43 = st.builds(
    TreeNode,
    st.lists(st.integers(0, 2), max_size=3).map(tuple),
)


def test_meet_examples():
    assert meet(TreeNode.of(0, 1), TreeNode.of(0, 2)) == TreeNode.of(0)
    assert meet(TreeNode.of(1), TreeNode.of(1)) == TreeNode.of(1)
    assert meet(TreeNode.of(0, 0), TreeNode.of(1, 0)) == TreeNode()


def test_meet_laws_exhaustive_on_small_domain():
    nodes = D43.nodes()
    for a, b in itertools.product(nodes, repeat=2):
        assert meet(a, b) == meet(b, a)
        assert meet(a, a) == a
        assert meet(a, b).is_prefix_of(a)
    for a, b, c in itertools.product(nodes, repeat=3):
        assert meet(meet(a, b), c) == meet(a, meet(b, c))


def test_lex_examples():
    assert lex_cmp(TreeNode.of(0), TreeNode.of(0, 5)) == LT
    assert lex_cmp(TreeNode.of(0, 3), TreeNode.of(1)) == LT
    assert lex_cmp(TreeNode.of(2), TreeNode.of(2)) == EQ
    assert lex_cmp(TreeNode.of(0, 5), TreeNode.of(0)) == GT


def test_lex_total_order_extends_prefix_order():
    nodes = D43.nodes()
    for a, b in itertools.combinations(nodes, 2):
        assert lex_cmp(a, b) == -lex_cmp(b, a) != EQ
        if a.is_prefix_of(b):
            assert lex_cmp(a, b) == LT
    for a, b, c in itertools.product(nodes[:13], repeat=3):
        if lex_cmp(a, b) == LT and lex_cmp(b, c) == LT:
            assert lex_cmp(a, c) == LT


def test_meet_closure_examples():
    t = meet_closure(NodeTuple.of(D43, (0, 0), (0, 1)))
    assert [n.seq for n in t.nodes] == [(0, 0), (0, 1), (0,)]
    t = meet_closure(NodeTuple.of(D43, (0,), (0, 1)))
    assert [n.seq for n in t.nodes] == [(0,), (0, 1)]


def test_meet_closure_of_three_distant_nodes_adds_only_root():
    t = NodeTuple.of(D43, (0, 0), (1, 0), (2, 0))
    # oracle: enumerate all pairwise meets
    oracle = {meet(a, b) for a, b in itertools.combinations(t.nodes, 2)}
    assert oracle == {TreeNode()}
    closed = meet_closure(t)
    assert closed.nodes == t.nodes + (TreeNode(),)


def test_meet_closure_idempotent_and_bounded():
    nodes = D43.nodes()
    for tup in itertools.product(nodes, repeat=3):
        t = NodeTuple(D43, tup)
        closed = meet_closure(t)
        assert meet_closure(closed).nodes == closed.nodes
        assert len(closed) <= 2 * len(t) - 1


def test_kinship_examples():
    assert kinship(NodeTuple.of(D43, (0, 0), (0, 1))) is Kinship.SIBLINGS
    assert (
        kinship(NodeTuple.of(D43, (0, 0, 0), (1, 1)))
        is Kinship.DISTANT_SIBLINGS
    )
    assert (
        kinship(NodeTuple.of(D43, (0, 0), (1, 1)))
        is Kinship.SAME_LEVEL_DISTANT_SIBLINGS
    )
    assert kinship(NodeTuple.of(D43, (0,), (0, 1))) is Kinship.NONE
    assert kinship(NodeTuple.of(D43, (0,), (0,))) is Kinship.NONE
    with pytest.raises(ValueError):
        kinship(NodeTuple.of(D43, (0,)))


def test_kinship_matches_first_principles():
    nodes = D43.nodes()
    for tup in itertools.combinations(nodes, 2):
        t = NodeTuple(D43, tup)
        k = kinship(t)
        a, b = tup
        incomparable = not a.is_prefix_of(b) and not b.is_prefix_of(a)
        siblings = a.level >= 1 and b.level >= 1 and a.seq[:-1] == b.seq[:-1]
        if siblings:
            assert k is Kinship.SIBLINGS
        elif incomparable and a.level == b.level:
            assert k is Kinship.SAME_LEVEL_DISTANT_SIBLINGS
        elif incomparable:
            assert k is Kinship.DISTANT_SIBLINGS
        else:
            assert k is Kinship.NONE


def test_restrict_examples():
    t = restrict_tuple(NodeTuple.of(D43, (0, 1, 2), (0,)), 1)
    assert [n.seq for n in t.nodes] == [(0,), (0,)]
    t2 = NodeTuple.of(D43, (1, 1), (1, 2))
    assert restrict_tuple(t2, D43.max_level).nodes == t2.nodes
    assert [n.seq for n in restrict_tuple(t2, 1).nodes] == [(1,), (1,)]


@given(
    st.lists(nodes_43, min_size=1, max_size=4),
    st.integers(0, 4),
    st.integers(0, 4),
)
def test_restrict_composition(seqs, n, m):
    t = NodeTuple(D43, tuple(seqs))
    assert restrict_tuple(restrict_tuple(t, n), m).nodes == restrict_tuple(
        t, min(n, m)
    ).nodes


def test_enumerate_nodes():
    assert [n.seq for n in enumerate_nodes(TreeDomain(2, 2))] == [
        (),
        (0,),
        (1,),
    ]
    assert [n.seq for n in enumerate_nodes(TreeDomain(1, 2, closed_top=True))] == [
        (),
        (0,),
        (1,),
    ]
    assert TreeDomain(3, 2).node_count() == 7
    assert len(enumerate_nodes(TreeDomain(3, 2))) == 7


def test_domain_membership():
    d = TreeDomain(3, 2)
    assert d.contains(TreeNode.of(1, 1))
    assert not d.contains(TreeNode.of(1, 1, 1))
    assert not d.contains(TreeNode.of(2))
    with pytest.raises(ValueError):
        NodeTuple.of(d, (2,))


def test_domain_json_roundtrip():
    d = TreeDomain(3, 2, closed_top=True)
    assert TreeDomain.from_json(d.to_json()) == d


def test_colex_subsets_order():
    assert list(colex_subsets(4, 2)) == [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)]
    assert list(colex_subsets(["a", "b", "c"], 2)) == [
        ("a", "b"),
        ("a", "c"),
        ("b", "c"),
    ]
    assert list(colex_subsets(3, 0)) == [()]
