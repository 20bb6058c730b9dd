"""Finite index trees of bounded height and branching.

A node is a finite sequence of branch indices.  A domain fixes the height
``h`` and the branching bound ``b``; with ``closed_top=False`` it contains
all sequences of length strictly below ``h`` (levels ``0..h-1``), with
``closed_top=True`` also those of length exactly ``h``.  Everything here is
immutable and side-effect free.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

LT, EQ, GT = -1, 0, 1


@dataclass(frozen=True)
class TreeNode:
    """A tree node, stored as its explicit index sequence from the root."""

    seq: tuple[int, ...] = ()

    @staticmethod
    def of(*indices: int) -> "TreeNode":
        return TreeNode(tuple(indices))

    @property
    def level(self) -> int:
        return len(self.seq)

    def __len__(self) -> int:
        return len(self.seq)

    def __getitem__(self, i: int) -> int:
        return self.seq[i]

    def is_prefix_of(self, other: "TreeNode") -> bool:
        """Non-strict initial-segment order (the tree partial order)."""
        return self.seq == other.seq[: len(self.seq)]

    def prefix(self, n: int) -> "TreeNode":
        return TreeNode(self.seq[:n])

    def child(self, i: int) -> "TreeNode":
        return TreeNode(self.seq + (i,))

    def parent(self) -> "TreeNode":
        if not self.seq:
            raise ValueError("the root has no parent")
        return TreeNode(self.seq[:-1])

    def to_json(self) -> list[int]:
        return list(self.seq)

    def __str__(self) -> str:
        return "<" + ",".join(str(i) for i in self.seq) + ">"


ROOT = TreeNode()


def meet(a: TreeNode, b: TreeNode) -> TreeNode:
    """Longest common initial segment of two nodes."""
    out = []
    for x, y in zip(a.seq, b.seq):
        if x != y:
            break
        out.append(x)
    return TreeNode(tuple(out))


def lex_cmp(a: TreeNode, b: TreeNode) -> int:
    """Total lexicographic order: proper initial segments come first,
    otherwise the first differing coordinate decides.  Returns -1/0/1."""
    if a.seq == b.seq:
        return EQ
    for x, y in zip(a.seq, b.seq):
        if x != y:
            return LT if x < y else GT
    return LT if len(a.seq) < len(b.seq) else GT


@dataclass(frozen=True)
class TreeDomain:
    """The finite tree of all index sequences below the height bound.

    ``closed_top=False`` gives levels ``0..height-1``; ``closed_top=True``
    gives levels ``0..height``.
    """

    height: int
    branching: int
    closed_top: bool = False

    def __post_init__(self) -> None:
        if self.branching < 1:
            raise ValueError("branching must be >= 1")
        if self.height < (0 if self.closed_top else 1):
            raise ValueError("height too small for the requested domain")

    @property
    def max_level(self) -> int:
        return self.height if self.closed_top else self.height - 1

    def contains(self, node: TreeNode) -> bool:
        return node.level <= self.max_level and all(
            0 <= i < self.branching for i in node.seq
        )

    def level_nodes(self, level: int) -> list[TreeNode]:
        if not 0 <= level <= self.max_level:
            return []
        return [
            TreeNode(seq)
            for seq in itertools.product(range(self.branching), repeat=level)
        ]

    def nodes(self) -> list[TreeNode]:
        """All nodes, sorted by (level, lex)."""
        out: list[TreeNode] = []
        for level in range(self.max_level + 1):
            out.extend(self.level_nodes(level))
        return out

    def node_count(self) -> int:
        return sum(self.branching**i for i in range(self.max_level + 1))

    def children(self, node: TreeNode) -> list[TreeNode]:
        if node.level >= self.max_level:
            return []
        return [node.child(i) for i in range(self.branching)]

    def internal_nodes(self) -> list[TreeNode]:
        """Nodes that have children inside the domain."""
        out: list[TreeNode] = []
        for level in range(self.max_level):
            out.extend(self.level_nodes(level))
        return out

    def to_json(self) -> dict:
        return {
            "height": self.height,
            "branching": self.branching,
            "closed_top": self.closed_top,
        }

    @staticmethod
    def from_json(data: dict) -> "TreeDomain":
        return TreeDomain(
            int(data["height"]), int(data["branching"]), bool(data.get("closed_top", False))
        )


def enumerate_nodes(domain: TreeDomain) -> list[TreeNode]:
    """All nodes of the domain, sorted by (level, lex)."""
    return domain.nodes()


@dataclass(frozen=True)
class NodeTuple:
    """An ordered finite tuple of nodes, all from one domain.

    Repeated entries are allowed; equality atoms take care of them.
    """

    domain: TreeDomain
    nodes: tuple[TreeNode, ...]

    def __post_init__(self) -> None:
        for nd in self.nodes:
            if not self.domain.contains(nd):
                raise ValueError(f"node {nd} outside domain {self.domain}")

    @staticmethod
    def of(domain: TreeDomain, *seqs: Sequence[int]) -> "NodeTuple":
        return NodeTuple(domain, tuple(TreeNode(tuple(s)) for s in seqs))

    @property
    def arity(self) -> int:
        return len(self.nodes)

    def __len__(self) -> int:
        return len(self.nodes)

    def to_json(self) -> list[list[int]]:
        return [nd.to_json() for nd in self.nodes]


def meet_closure(t: NodeTuple) -> NodeTuple:
    """Minimal supertuple closed under pairwise meets.

    The original nodes come first in their original order; newly created
    meets are appended in lexicographic order.  This fixed enumeration is
    what makes downstream similarity codes canonical.
    """
    if not t.nodes:
        raise ValueError("meet_closure of an empty tuple")
    present = set(t.nodes)
    extra = set()
    for a, b in itertools.combinations(t.nodes, 2):
        m = meet(a, b)
        if m not in present:
            extra.add(m)
    appended = tuple(sorted(extra, key=lambda nd: nd.seq))
    return NodeTuple(t.domain, t.nodes + appended)


class Kinship(Enum):
    SIBLINGS = "siblings"
    DISTANT_SIBLINGS = "distant-siblings"
    SAME_LEVEL_DISTANT_SIBLINGS = "same-level-distant-siblings"
    NONE = "none"


def kinship(t: NodeTuple) -> Kinship:
    """Strongest family label that applies to the tuple.

    Siblings share an immediate predecessor; distant siblings extend
    distinct children of a common node; same-level distant siblings are
    distant siblings occupying one level.  Siblings are also (same-level)
    distant siblings, so they are checked first.
    """
    nodes = t.nodes
    if len(nodes) < 2:
        raise ValueError("kinship needs at least 2 nodes")
    if len(set(nodes)) != len(nodes):
        return Kinship.NONE
    if all(nd.level >= 1 for nd in nodes):
        parents = {nd.parent() for nd in nodes}
        if len(parents) == 1:
            return Kinship.SIBLINGS
    # Distant siblings: all pairwise meets coincide in a single node that
    # every member properly extends (so the next coordinates are distinct).
    meets = {meet(a, b) for a, b in itertools.combinations(nodes, 2)}
    if len(meets) == 1:
        stem = next(iter(meets))
        if all(nd.level > stem.level for nd in nodes):
            if len({nd.level for nd in nodes}) == 1:
                return Kinship.SAME_LEVEL_DISTANT_SIBLINGS
            return Kinship.DISTANT_SIBLINGS
    return Kinship.NONE


def restrict_tuple(t: NodeTuple, n: int) -> NodeTuple:
    """Truncate every node of level above ``n`` to its length-``n`` prefix."""
    return NodeTuple(
        t.domain,
        tuple(nd if nd.level <= n else nd.prefix(n) for nd in t.nodes),
    )


def colex_subsets(items: Sequence | int, k: int) -> Iterator[tuple]:
    """Size-``k`` subsets in colexicographic order (sorted by the largest
    member first).  This is the canonical search order used by every
    exhaustive extractor in the package, so that first-success results are
    reproducible."""
    if isinstance(items, int):
        seq: Sequence = range(items)
    else:
        seq = items
    n = len(seq)

    def gen(size: int, top: int) -> Iterator[tuple[int, ...]]:
        if size == 0:
            yield ()
            return
        for t in range(size - 1, top):
            for rest in gen(size - 1, t):
                yield rest + (t,)

    for positions in gen(k, n):
        yield tuple(seq[i] for i in positions)


def increasing_injections(k: int, n: int) -> Iterator[tuple[int, ...]]:
    """Strictly increasing maps ``{0..k-1} -> {0..n-1}``, in colex order."""
    return colex_subsets(n, k)
