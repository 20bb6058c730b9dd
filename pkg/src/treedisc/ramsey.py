"""Finite partition extractors over leveled chains and bounded trees.

``polarized_extract`` finds, inside a disjoint union of finite chains,
per-chain subsets on which every coloring of n-tuples depends only on the
chain-membership-and-order pattern of the tuple.  ``tree_homogeneous_extract``
finds, inside a bounded tree, a substructure occupying all levels with
prescribed branching on which colorings of m-tuples depend only on the
levels-similarity code.  Proof-mirroring strategies (level-function
refinement for single nodes, recursion through one-level extensions plus a
polarized step for tuples) are attempted first; exhaustive colex-first
search is the correctness backstop, and every certificate records which
path succeeded and re-verifies by independent scan.

The infinite-cardinal bookkeeping of the underlying arguments survives
only as ``bound_k`` (an exact integer recurrence) and as capped tower
estimates attached to failure reports.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Any, Callable, Iterator, Sequence

from .errors import CapExceededError, InsufficientSourceError
from .similarity import Lang, similarity_code
from .trees import NodeTuple, TreeDomain, TreeNode, colex_subsets, meet

ESTIMATE_CAP = 10**9
DEFAULT_SEARCH_CAP = 500_000


def capped_tower(base: int, height: int) -> int:
    """Iterated exponential 2^2^...^base, capped for reporting."""
    value = max(base, 2)
    for _ in range(height):
        if value >= 30:
            return ESTIMATE_CAP
        value = 2**value
    return min(value, ESTIMATE_CAP)


# ---------------------------------------------------------------------------
# leveled chains and the membership/order pattern
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LeveledChains:
    """A disjoint union of finite linearly ordered sets (list order)."""

    chains: tuple[tuple[Any, ...], ...]

    def __post_init__(self) -> None:
        seen: set = set()
        for chain in self.chains:
            for x in chain:
                if x in seen:
                    raise ValueError(f"element {x!r} appears in two chains")
                seen.add(x)

    @cached_property
    def _where(self) -> dict[Any, tuple[int, int]]:
        return {
            x: (i, pos)
            for i, chain in enumerate(self.chains)
            for pos, x in enumerate(chain)
        }

    def locate(self, x: Any) -> tuple[int, int]:
        if x not in self._where:
            raise ValueError(f"element {x!r} not in any chain")
        return self._where[x]

    def level(self, x: Any) -> int:
        return self.locate(x)[0]

    def ground(self) -> list[Any]:
        return [x for chain in self.chains for x in chain]


@dataclass(frozen=True)
class PerpCode:
    """Pattern of a tuple across chains: which chain each coordinate lies
    in, plus the within-chain order/equality signs."""

    membership: tuple[int, ...]
    order: tuple[tuple[int, int, int], ...]

    def to_json(self) -> dict:
        return {"membership": list(self.membership), "order": [list(t) for t in self.order]}


def perp_code(t: Sequence[Any], chains: LeveledChains) -> PerpCode:
    locs = [chains.locate(x) for x in t]
    order = []
    for i in range(len(t)):
        for j in range(i + 1, len(t)):
            if locs[i][0] == locs[j][0]:
                a, b = locs[i][1], locs[j][1]
                order.append((i, j, (a > b) - (a < b)))
    return PerpCode(tuple(loc[0] for loc in locs), tuple(order))


def perp_equivalent(t1: Sequence[Any], t2: Sequence[Any], chains: LeveledChains) -> bool:
    if len(t1) != len(t2):
        return False
    return perp_code(t1, chains) == perp_code(t2, chains)


def levels_of(t: Sequence[Any], chains: LeveledChains) -> set[int]:
    return {chains.level(x) for x in t}


def n_at_least(t: Sequence[Any], beta: int, chains: LeveledChains) -> int:
    """Number of occupied levels >= beta."""
    return sum(1 for lv in levels_of(t, chains) if lv >= beta)


def approx_alpha(
    t1: Sequence[Any], t2: Sequence[Any], alpha: int, chains: LeveledChains
) -> bool:
    """Pattern-equivalent, alpha occupied, and equal off level alpha."""
    if not perp_equivalent(t1, t2, chains):
        return False
    if alpha not in levels_of(t1, chains):
        return False
    return all(
        x == y
        for x, y in zip(t1, t2)
        if chains.level(x) != alpha
    )


def approx_alpha_k(
    t1: Sequence[Any], t2: Sequence[Any], alpha: int, k: int, chains: LeveledChains
) -> bool:
    """Pattern-equivalent, alpha occupied, equal below level alpha, and at
    most k occupied levels >= alpha."""
    if not perp_equivalent(t1, t2, chains):
        return False
    if alpha not in levels_of(t1, chains):
        return False
    if n_at_least(t1, alpha, chains) > k:
        return False
    return all(
        x == y
        for x, y in zip(t1, t2)
        if chains.level(x) < alpha
    )


# ---------------------------------------------------------------------------
# colorings and certificates
# ---------------------------------------------------------------------------


class Coloring:
    """A total map from n-tuples of the ground set to color values."""

    def __init__(self, arity: int, func: Callable[[tuple], Any]):
        if arity < 1:
            raise ValueError("arity must be >= 1")
        self.arity = arity
        self._func = func

    def of(self, t: Sequence[Any]) -> Any:
        t = tuple(t)
        if len(t) != self.arity:
            raise ValueError(f"expected a {self.arity}-tuple")
        return self._func(t)

    @staticmethod
    def from_table(arity: int, table: dict[tuple, Any]) -> "Coloring":
        def func(t: tuple) -> Any:
            if t not in table:
                raise ValueError(f"coloring table missing {t!r}")
            return table[t]

        return Coloring(arity, func)


@dataclass
class HomogeneousCertificate:
    """A verified homogeneous selection plus the transcript of how it was
    found.  ``selection`` is a per-chain tuple of subsets for the polarized
    extractor and a node tuple for the tree extractor."""

    kind: str
    arity: int
    selection: tuple
    strategy: str
    stats: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        if self.kind == "polarized":
            sel = [[repr(x) for x in chain] for chain in self.selection]
        else:
            sel = [nd.to_json() for nd in self.selection]
        return {
            "kind": self.kind,
            "arity": self.arity,
            "selection": sel,
            "strategy": self.strategy,
            "stats": self.stats,
        }


def verify_perp_homogeneous(
    chains: LeveledChains,
    selection: Sequence[Sequence[Any]],
    coloring: Coloring,
) -> bool:
    """Independent exhaustive re-check: equal patterns get equal colors on
    the selection."""
    picked = [x for sub in selection for x in sub]
    seen: dict[PerpCode, Any] = {}
    for t in itertools.product(picked, repeat=coloring.arity):
        code = perp_code(t, chains)
        col = coloring.of(t)
        if code in seen:
            if seen[code] != col:
                return False
        else:
            seen[code] = col
    return True


def k_homogeneous(
    chains: LeveledChains,
    selection: Sequence[Sequence[Any]],
    coloring: Coloring,
    k: int,
) -> bool:
    """The intermediate refinement invariant: for every chain index, any
    two tuples on the selection that are equal below that chain, share a
    pattern, occupy the chain, and touch at most ``k`` chains at or above
    it get the same color.  At ``k`` equal to the arity this coincides
    with full pattern-homogeneity."""
    picked = [x for sub in selection for x in sub]
    tuples = list(itertools.product(picked, repeat=coloring.arity))
    for alpha in range(len(chains.chains)):
        for t1, t2 in itertools.combinations(tuples, 2):
            if approx_alpha_k(t1, t2, alpha, k, chains):
                if coloring.of(t1) != coloring.of(t2):
                    return False
    return True


def polarized_extract(
    chains: LeveledChains,
    coloring: Coloring,
    n: int,
    target_size: int,
    cap: int = DEFAULT_SEARCH_CAP,
) -> HomogeneousCertificate:
    """Per-chain subsets of the target size on which pattern-equivalent
    n-tuples are monochromatic.

    If the full union is already homogeneous the leftmost selection is
    returned; otherwise all per-chain subset combinations are searched in
    colex order.  The candidate count is capped.
    """
    if coloring.arity != n:
        raise ValueError("coloring arity mismatch")
    if any(len(chain) < target_size for chain in chains.chains):
        raise InsufficientSourceError(
            "some chain is smaller than the target size",
            required_estimate=target_size,
        )
    if verify_perp_homogeneous(chains, [c[:target_size] for c in chains.chains], coloring) and \
            verify_perp_homogeneous(chains, chains.chains, coloring):
        return HomogeneousCertificate(
            kind="polarized",
            arity=n,
            selection=tuple(tuple(c[:target_size]) for c in chains.chains),
            strategy="already-homogeneous",
            stats={"target_size": target_size},
        )
    count = math.prod(
        math.comb(len(chain), target_size) for chain in chains.chains
    )
    if count > cap:
        raise CapExceededError(f"{count} selections exceed the cap {cap}")
    spaces = [list(colex_subsets(chain, target_size)) for chain in chains.chains]
    tried = 0
    for combo in itertools.product(*spaces):
        tried += 1
        if verify_perp_homogeneous(chains, combo, coloring):
            return HomogeneousCertificate(
                kind="polarized",
                arity=n,
                selection=tuple(tuple(sub) for sub in combo),
                strategy="exhaustive-colex",
                stats={"target_size": target_size, "candidates_tried": tried},
            )
    palette = len(
        {coloring.of(t) for t in itertools.product(chains.ground(), repeat=n)}
    )
    raise InsufficientSourceError(
        "no pattern-homogeneous selection at these chain sizes",
        required_estimate=capped_tower(palette, n * (n + 1)),
    )


# ---------------------------------------------------------------------------
# tree homogenization
# ---------------------------------------------------------------------------


def plus_B(
    t: NodeTuple,
    betas: Sequence[int],
    B: Sequence[int],
    top: int | None = None,
) -> NodeTuple:
    """Extend the coordinates in B sitting at the top working level by one
    step with the given branch indices; everything else is unchanged.

    ``top`` defaults to one below the domain's maximum level, so that the
    extension stays inside the domain.
    """
    if len(betas) != len(t.nodes):
        raise ValueError("betas must match the tuple arity")
    level = t.domain.max_level - 1 if top is None else top
    chosen = set(B)
    out = []
    for i, nd in enumerate(t.nodes):
        if i in chosen and nd.level == level:
            out.append(nd.child(betas[i]))
        else:
            out.append(nd)
    return NodeTuple(t.domain, tuple(out))


def bound_k(n: int, m: int) -> int:
    """Exact recurrence for the tower height of the tree homogenization:
    zero when either argument vanishes or m = 1, m - 1 at n = 1, and each
    additional level adds m^2 + m + 4."""
    if n < 0 or m < 0:
        raise ValueError("bound_k needs nonnegative arguments")
    if n == 0 or m == 0 or m == 1:
        return 0
    if n == 1:
        return m - 1
    return bound_k(n - 1, m) + m * m + m + 4


def _node_color_buckets(
    domain: TreeDomain, nodes: Sequence[TreeNode], coloring: Coloring
) -> bool:
    """Equal levels-similarity codes imply equal colors on the node set."""
    seen: dict = {}
    for t in itertools.product(nodes, repeat=coloring.arity):
        code = similarity_code(NodeTuple(domain, t), Lang.LEVELS)
        col = coloring.of(t)
        if code in seen:
            if seen[code] != col:
                return False
        else:
            seen[code] = col
    return True


def structure_ok(
    domain: TreeDomain, nodes: Sequence[TreeNode], target_branching: int
) -> bool:
    """The node set is a substructure occupying all levels with the
    requested branching: contains the root, is meet-closed, and every
    member below the top level has at least ``target_branching`` children
    in the set."""
    node_set = set(nodes)
    if TreeNode() not in node_set:
        return False
    top = domain.max_level
    levels = {nd.level for nd in node_set}
    if levels != set(range(top + 1)):
        return False
    for a, b in itertools.combinations(node_set, 2):
        if meet(a, b) not in node_set:
            return False
    for nd in node_set:
        if nd.level < top:
            kids = sum(
                1 for other in node_set
                if other.level == nd.level + 1 and nd.is_prefix_of(other)
            )
            if kids < target_branching:
                return False
    return True


def verify_tree_homogeneous(
    domain: TreeDomain,
    nodes: Sequence[TreeNode],
    coloring: Coloring,
    target_branching: int,
) -> bool:
    """Independent re-check of a tree certificate: structure plus
    code-homogeneity."""
    return structure_ok(domain, nodes, target_branching) and _node_color_buckets(
        domain, nodes, coloring
    )


def _refinement_single(
    domain: TreeDomain, coloring: Coloring, target_branching: int
) -> tuple[TreeNode, ...] | None:
    """Level-function refinement for colorings of single nodes.

    Working down from the top level, the children of every node one level
    below are grouped by the color profile of the levels above them, the
    largest group is kept, and the set is closed under comparability.
    Fails (returns None) when some group is smaller than the target.
    """
    n = domain.max_level
    K: set[TreeNode] = set(domain.nodes())

    def level_profile(c: TreeNode) -> tuple:
        # colors seen along the levels above c, read off lex-first
        # descendants inside K
        prof = []
        for alpha in range(c.level, n + 1):
            desc = min(
                (nd for nd in K if nd.level == alpha and c.is_prefix_of(nd)),
                key=lambda nd: nd.seq,
            )
            prof.append(coloring.of((desc,)))
        return tuple(prof)

    for j in range(n, 0, -1):
        B: set[TreeNode] = set()
        for p in sorted((nd for nd in K if nd.level == j - 1), key=lambda nd: nd.seq):
            groups: dict[tuple, list[TreeNode]] = {}
            for c in sorted(
                (nd for nd in K if nd.level == j and p.is_prefix_of(nd)),
                key=lambda nd: nd.seq,
            ):
                groups.setdefault(level_profile(c), []).append(c)
            best = max(
                groups.values(), key=lambda g: (len(g), tuple(-i for i in g[0].seq))
            )
            if len(best) < target_branching:
                return None
            B.update(best)
        K = {
            nd
            for nd in K
            if any(b.is_prefix_of(nd) or nd.is_prefix_of(b) for b in B)
        }
    return tuple(sorted(K, key=lambda nd: (nd.level, nd.seq)))


def _recursive_multi(
    domain: TreeDomain,
    coloring: Coloring,
    m: int,
    target_branching: int,
    cap: int,
) -> tuple[TreeNode, ...] | None:
    """Mirror for m-tuples on trees with at least two proper levels:
    recursively homogenize the tree below the top for the coloring of all
    one-level extensions, then run a polarized step on the top-level child
    chains, and verify the assembly."""
    n = domain.max_level
    if n <= 1:
        return None
    lam = domain.branching
    sub_domain = TreeDomain(height=n - 1, branching=lam, closed_top=True)
    subsets = list(
        itertools.chain.from_iterable(
            itertools.combinations(range(m), r) for r in range(m + 1)
        )
    )
    beta_space = list(itertools.product(range(lam), repeat=m))

    @lru_cache(maxsize=None)
    def g_func(t: tuple) -> tuple:
        base = NodeTuple(domain, t)
        return tuple(
            coloring.of(plus_B(base, betas, B, top=n - 1).nodes)
            for B in subsets
            for betas in beta_space
        )

    try:
        inner = tree_homogeneous_extract(
            sub_domain, Coloring(m, g_func), target_branching, cap
        )
    except (InsufficientSourceError, CapExceededError):
        return None
    inner_nodes = tuple(inner.selection)
    tops = sorted(
        (nd for nd in inner_nodes if nd.level == n - 1), key=lambda nd: nd.seq
    )
    chains = LeveledChains(
        tuple(tuple(nd.child(a) for a in range(lam)) for nd in tops)
    )
    eta_space = list(itertools.product(inner_nodes, repeat=m))

    @lru_cache(maxsize=None)
    def h_func(t: tuple) -> tuple:
        betas = tuple(nd.seq[-1] for nd in t)
        out = []
        for B in subsets:
            for etas in eta_space:
                out.append(
                    coloring.of(
                        plus_B(NodeTuple(domain, etas), betas, B, top=n - 1).nodes
                    )
                )
        return tuple(out)

    try:
        pol = polarized_extract(
            chains, Coloring(m, h_func), m, target_branching, cap
        )
    except (InsufficientSourceError, CapExceededError):
        return None
    picked = inner_nodes + tuple(
        nd for sub in pol.selection for nd in sub
    )
    picked = tuple(sorted(set(picked), key=lambda nd: (nd.level, nd.seq)))
    if verify_tree_homogeneous(domain, picked, coloring, target_branching):
        return picked
    return None


def _strong_substructures(
    domain: TreeDomain, target_branching: int
) -> Iterator[tuple[TreeNode, ...]]:
    """All substructures with exactly the target branching at every
    internal node, occupying all levels, in colex order of child choices."""
    n = domain.max_level

    def rec(node: TreeNode) -> list[tuple[TreeNode, ...]]:
        if node.level == n:
            return [(node,)]
        out = []
        for sel in colex_subsets(domain.children(node), target_branching):
            for combo in itertools.product(*(rec(c) for c in sel)):
                out.append((node,) + tuple(itertools.chain(*combo)))
        return out

    yield from rec(TreeNode())


def _substructure_count(domain: TreeDomain, target_branching: int) -> int:
    per_node = math.comb(domain.branching, target_branching)
    internal = sum(target_branching**i for i in range(domain.max_level))
    return per_node**internal if per_node > 0 else 0


def tree_homogeneous_extract(
    domain: TreeDomain,
    coloring: Coloring,
    target_branching: int,
    cap: int = DEFAULT_SEARCH_CAP,
) -> HomogeneousCertificate:
    """A substructure of the tree, occupying all levels with at least the
    target branching, on which colors of m-tuples depend only on the
    levels-similarity code.

    Strategy: for single-node colorings the level-function refinement; for
    tuple colorings on trees of depth at least two the recursive
    one-level-extension mirror; exhaustive colex-first search over
    exact-branching substructures as the backstop.
    """
    if target_branching < 1 or target_branching > domain.branching:
        raise ValueError("target branching out of range")
    m = coloring.arity

    if m == 1:
        nodes = _refinement_single(domain, coloring, target_branching)
        if nodes is not None and verify_tree_homogeneous(
            domain, nodes, coloring, target_branching
        ):
            return HomogeneousCertificate(
                kind="tree",
                arity=m,
                selection=nodes,
                strategy="level-refinement",
                stats={"target_branching": target_branching},
            )
    else:
        nodes = _recursive_multi(domain, coloring, m, target_branching, cap)
        if nodes is not None:
            return HomogeneousCertificate(
                kind="tree",
                arity=m,
                selection=nodes,
                strategy="recursive+polarized",
                stats={"target_branching": target_branching},
            )

    count = _substructure_count(domain, target_branching)
    if count > cap:
        raise CapExceededError(f"{count} substructures exceed the cap {cap}")
    tried = 0
    for nodes in _strong_substructures(domain, target_branching):
        tried += 1
        if _node_color_buckets(domain, nodes, coloring):
            return HomogeneousCertificate(
                kind="tree",
                arity=m,
                selection=nodes,
                strategy="exhaustive-colex",
                stats={
                    "target_branching": target_branching,
                    "candidates_tried": tried,
                },
            )
    palette = len(
        {
            coloring.of(t)
            for t in itertools.product(domain.nodes(), repeat=m)
        }
    )
    raise InsufficientSourceError(
        "no code-homogeneous substructure at this branching",
        required_estimate=capped_tower(palette, bound_k(domain.max_level, m)),
    )
