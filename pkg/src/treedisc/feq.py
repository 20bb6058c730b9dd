"""Finite models of independent parameterized equivalence relations.

The model family is the full function space: sort Q holds ``q`` parameter
elements, sort P holds all functions from Q into ``classes`` many classes,
and the ternary relation ``E(x, y, z)`` holds when the functions x and y
agree at coordinate z.  Independence is then exact, not approximate: any
finitely many constraints on distinct coordinates are jointly realizable.

On top of the model, :func:`build_counterexample` lays out parameters on a
tree so that sibling instances are pairwise contradictory while paths (and
in fact all sibling-free families) are consistent, and :func:`subtree_h`
re-indexes along the doubling map that spreads a tree into every other
level, after which no family of bounded size is inconsistent at all.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import CapExceededError
from .indisc import ParameterMap
from .structures import (
    Atom,
    RelDecl,
    RelStructure,
    Signature,
    SplitFormula,
    Var,
    consistent,
)
from .treeprops import (
    MAX_STORED_FAILURES,
    TPFailure,
    TPReport,
)
from .trees import TreeDomain, TreeNode

P_SORT = "P"
Q_SORT = "Q"
E_REL = "E"


@dataclass(frozen=True)
class FeqConfig:
    """``q`` parameter elements, ``classes`` classes per relation; sort P is
    the full function space of size classes**q (capped)."""

    q: int
    classes: int
    cap: int = 512

    def __post_init__(self) -> None:
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if self.classes < 2:
            raise ValueError("classes must be >= 2")
        if self.classes**self.q > self.cap:
            raise CapExceededError(
                f"|P| = {self.classes ** self.q} exceeds the cap {self.cap}"
            )


def q_element(i: int) -> str:
    return f"q{i}"


def p_element(values: tuple[int, ...]) -> str:
    return "p" + "".join(str(v) for v in values)


def build_feq_model(cfg: FeqConfig) -> RelStructure:
    """Two-sorted structure with E(x, y, z) iff x(z) = y(z)."""
    q_elems = [q_element(i) for i in range(cfg.q)]
    functions = list(itertools.product(range(cfg.classes), repeat=cfg.q))
    p_elems = [p_element(v) for v in functions]
    table = [
        (p_element(f), p_element(g), q_element(i))
        for f in functions
        for g in functions
        for i in range(cfg.q)
        if f[i] == g[i]
    ]
    sig = Signature(
        sorts=(P_SORT, Q_SORT),
        relations=(RelDecl(E_REL, (P_SORT, P_SORT, Q_SORT)),),
    )
    return RelStructure(
        sig,
        {P_SORT: p_elems, Q_SORT: q_elems},
        {E_REL: table},
        max_universe=max(cfg.cap, cfg.q),
    )


def agreement_formula() -> SplitFormula:
    """phi(x; y, z) = E(x, y, z)."""
    x, y, z = Var("x", P_SORT), Var("y", P_SORT), Var("z", Q_SORT)
    return SplitFormula((x,), (y, z), Atom(E_REL, (x, y, z)))


def build_counterexample(
    cfg: FeqConfig, depth: int, branching: int
) -> tuple[SplitFormula, ParameterMap]:
    """Tree parameters making siblings pairwise contradictory and paths
    consistent.

    Each internal node gets its own coordinate; the children of a node are
    functions that disagree exactly at the parent's coordinate.  Needs
    ``q >= number of internal nodes + 1`` (one extra coordinate for the
    root's own parameter) and ``classes >= branching``.
    """
    domain = TreeDomain(height=depth + 1, branching=branching)
    internal = domain.internal_nodes()
    if cfg.q < len(internal) + 1:
        raise ValueError(
            f"q = {cfg.q} too small: need one coordinate per internal node "
            f"plus one ({len(internal) + 1})"
        )
    if cfg.classes < branching:
        raise ValueError("classes must be at least the branching")
    coord: dict[TreeNode, int] = {nd: i for i, nd in enumerate(internal)}
    root_coord = len(internal)
    base = (0,) * cfg.q

    def child_function(parent: TreeNode, i: int) -> tuple[int, ...]:
        vals = list(base)
        vals[coord[parent]] = i
        return tuple(vals)

    assign: dict[TreeNode, tuple] = {
        TreeNode(): (p_element(base), q_element(root_coord))
    }
    for parent in internal:
        for i in range(branching):
            assign[parent.child(i)] = (
                p_element(child_function(parent, i)),
                q_element(coord[parent]),
            )
    params = ParameterMap(domain, assign, (P_SORT, Q_SORT))
    return agreement_formula(), params


def h_map(node: TreeNode) -> TreeNode:
    """The doubling re-indexing: the root is fixed and each step down is
    followed by a zero step, so a level-l node lands at level 2l."""
    seq: list[int] = []
    for i in node.seq:
        seq.extend((i, 0))
    return TreeNode(tuple(seq))


def subtree_h(P: ParameterMap, target_depth: int | None = None) -> ParameterMap:
    """Pull the map back along :func:`h_map` onto a half-depth tree."""
    if not isinstance(P.index, TreeDomain):
        raise ValueError("subtree_h needs a tree-indexed map")
    source: TreeDomain = P.index
    depth = source.max_level // 2 if target_depth is None else target_depth
    if 2 * depth > source.max_level:
        raise ValueError(
            f"source depth {source.max_level} cannot host target depth {depth}"
        )
    domain = TreeDomain(height=depth + 1, branching=source.branching)
    assign = {nd: P.tuple_at(h_map(nd)) for nd in domain.nodes()}
    return ParameterMap(domain, assign, P.sorts)


def check_strong_phi_consistency(
    M: RelStructure,
    sf: SplitFormula,
    P: ParameterMap,
    K: int,
) -> TPReport:
    """True iff every set of at most K instances is consistent."""
    if K < 2:
        raise ValueError("K must be >= 2")
    points = P.points()
    failures: list[TPFailure] = []
    n_fail = 0
    checked = 0
    for size in range(1, min(K, len(points)) + 1):
        for family in itertools.combinations(points, size):
            checked += 1
            if not consistent(M, sf, [P.tuple_at(p) for p in family]):
                n_fail += 1
                if len(failures) < MAX_STORED_FAILURES:
                    failures.append(TPFailure(family, "family-inconsistent"))
    return TPReport(
        property_name=f"strong-phi-consistency-{K}",
        verdict=n_fail == 0,
        failures=failures,
        failure_count=n_fail,
        stats={"K": K, "families_checked": checked, "formula": sf.describe()},
    )
