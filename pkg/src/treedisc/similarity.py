"""Similarity codes: canonical invariants of quantifier-free tuple types.

Three index languages are supported:

* ``Lang.LEVELS``       -- tree language with prefix order, meet, lex order,
                           and one membership predicate per absolute level;
* ``Lang.LEVEL_ORDER``  -- tree language with prefix order, meet, lex order,
                           and only the relative level comparison;
* ``Lang.GRID``         -- cells of a two-dimensional array with the row
                           comparison and the same-row column comparison.

Codes are computed on the meet-closure of the tuple with the fixed
enumeration from :func:`treedisc.trees.meet_closure` (originals first, new
meets appended in lex order).  Because for meet-closed tuples equality of
quantifier-free types is exactly position-wise isomorphism, two tuples get
equal codes if and only if they satisfy the same atomic formulas of the
language position-wise.  Equal codes serialize identically, so codes can be
used directly as map keys.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Mapping, Sequence, Union

from .trees import NodeTuple, TreeDomain, TreeNode, lex_cmp, meet, meet_closure


class Lang(str, Enum):
    LEVELS = "levels"
    LEVEL_ORDER = "level-order"
    GRID = "grid"
    # Reduct with only the prefix order and meets; accepted by
    # check_embedding but not a similarity-code language.
    SUBTREE = "subtree"


TREE_LANGS = (Lang.LEVELS, Lang.LEVEL_ORDER)


@dataclass(frozen=True)
class ArrayCell:
    row: int
    col: int

    def to_json(self) -> list[int]:
        return [self.row, self.col]


@dataclass(frozen=True)
class ArrayBounds:
    rows: int
    cols: int

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("array bounds must be positive")

    def contains(self, cell: ArrayCell) -> bool:
        return 0 <= cell.row < self.rows and 0 <= cell.col < self.cols

    def cells(self) -> list[ArrayCell]:
        return [
            ArrayCell(i, j)
            for i in range(self.rows)
            for j in range(self.cols)
        ]

    def to_json(self) -> dict:
        return {"rows": self.rows, "cols": self.cols}

    @staticmethod
    def from_json(data: dict) -> "ArrayBounds":
        return ArrayBounds(int(data["rows"]), int(data["cols"]))


@dataclass(frozen=True)
class SimilarityCode:
    """Canonical invariant of a tuple's quantifier-free type.

    ``atoms`` is the sorted tuple of satisfied atomic relations over the
    meet-closed tuple, each as (relation name, argument positions).
    ``levels`` carries the absolute level of each closure element
    (``Lang.LEVELS`` only); ``level_cmp`` the matrix of pairwise level
    comparison signs (``Lang.LEVEL_ORDER`` only).
    """

    lang: str
    arity: int
    closure_size: int
    atoms: tuple[tuple, ...]
    levels: tuple[int, ...] | None = None
    level_cmp: tuple[tuple[int, ...], ...] | None = None

    def to_json(self) -> dict:
        out: dict = {
            "lang": self.lang,
            "arity": self.arity,
            "closure_size": self.closure_size,
            "atoms": [[name, list(args)] for name, args in self.atoms],
        }
        if self.levels is not None:
            out["levels"] = list(self.levels)
        if self.level_cmp is not None:
            out["level_cmp"] = [list(row) for row in self.level_cmp]
        return out


def _sign(a: int, b: int) -> int:
    return (a > b) - (a < b)


def _tree_atoms(nodes: tuple[TreeNode, ...]) -> tuple[tuple, ...]:
    n = len(nodes)
    atoms: list[tuple] = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            a, b = nodes[i], nodes[j]
            if a != b and a.is_prefix_of(b):
                atoms.append(("le", (i, j)))
            if lex_cmp(a, b) < 0:
                atoms.append(("lex", (i, j)))
    for i in range(n):
        for j in range(i + 1, n):
            if nodes[i] == nodes[j]:
                atoms.append(("eq", (i, j)))
            # the meet of any two closure elements is again a closure
            # element; record its first position
            atoms.append(("meet", (i, j, nodes.index(meet(nodes[i], nodes[j])))))
    return tuple(sorted(atoms))


@lru_cache(maxsize=None)
def _tree_code(domain: TreeDomain, nodes: tuple[TreeNode, ...], lang: Lang) -> SimilarityCode:
    closed = meet_closure(NodeTuple(domain, nodes))
    cl = closed.nodes
    atoms = _tree_atoms(cl)
    if lang is Lang.LEVELS:
        return SimilarityCode(
            lang=lang.value,
            arity=len(nodes),
            closure_size=len(cl),
            atoms=atoms,
            levels=tuple(nd.level for nd in cl),
        )
    return SimilarityCode(
        lang=lang.value,
        arity=len(nodes),
        closure_size=len(cl),
        atoms=atoms,
        level_cmp=tuple(
            tuple(_sign(a.level, b.level) for b in cl) for a in cl
        ),
    )


@lru_cache(maxsize=None)
def _grid_code(cells: tuple[ArrayCell, ...]) -> SimilarityCode:
    n = len(cells)
    atoms: list[tuple] = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            a, b = cells[i], cells[j]
            if a.row < b.row:
                atoms.append(("row_lt", (i, j)))
            if a.row == b.row and a.col < b.col:
                atoms.append(("col_lt", (i, j)))
    for i in range(n):
        for j in range(i + 1, n):
            if cells[i] == cells[j]:
                atoms.append(("eq", (i, j)))
    return SimilarityCode(
        lang=Lang.GRID.value,
        arity=n,
        closure_size=n,
        atoms=tuple(sorted(atoms)),
    )


IndexTuple = Union[NodeTuple, Sequence[ArrayCell]]


def similarity_code(t: IndexTuple, lang: Lang) -> SimilarityCode:
    """Canonical code of the tuple in the given language.

    Codes of two tuples are equal exactly when the tuples satisfy the same
    atomic formulas of the language position-wise.
    """
    if lang in TREE_LANGS:
        if not isinstance(t, NodeTuple):
            raise ValueError("tree languages need a NodeTuple")
        if not t.nodes:
            raise ValueError("similarity_code of an empty tuple")
        return _tree_code(t.domain, t.nodes, lang)
    if lang is Lang.GRID:
        cells = tuple(t.nodes) if isinstance(t, NodeTuple) else tuple(t)
        if not cells:
            raise ValueError("similarity_code of an empty tuple")
        if not all(isinstance(c, ArrayCell) for c in cells):
            raise ValueError("the grid language needs a tuple of cells")
        return _grid_code(cells)
    raise ValueError(f"no similarity codes for language {lang}")


def similar(t1: IndexTuple, t2: IndexTuple, lang: Lang) -> bool:
    """True iff the tuples have equal similarity codes."""
    return similarity_code(t1, lang) == similarity_code(t2, lang)


def restriction_preserves_similarity(t1: NodeTuple, t2: NodeTuple, n: int) -> bool:
    """Check that truncating two level-similar tuples at level ``n`` keeps
    them similar in ``Lang.LEVELS``.  The contract is that this always
    returns True; the precondition (the inputs are similar) is enforced."""
    from .trees import restrict_tuple

    if not similar(t1, t2, Lang.LEVELS):
        raise ValueError("inputs must be similar in Lang.LEVELS")
    return similar(restrict_tuple(t1, n), restrict_tuple(t2, n), Lang.LEVELS)


def check_embedding(
    mapping: Mapping[TreeNode, TreeNode | ArrayCell], lang: Lang
) -> bool:
    """True iff the map preserves and reflects all atomic relations of the
    language on its (finite) domain.

    For the tree languages and the subtree reduct the domain must be
    meet-closed, since meets are function symbols.  For ``Lang.GRID`` the
    source tree is read as a grid: the level plays the row, and the lex
    order within a level plays the column order.
    """
    keys = sorted(mapping.keys(), key=lambda nd: (nd.level, nd.seq))
    values = [mapping[k] for k in keys]
    if len(set(values)) != len(values) or len(set(keys)) != len(keys):
        return False

    if lang is Lang.GRID:
        for a, b in itertools.permutations(keys, 2):
            fa, fb = mapping[a], mapping[b]
            if not isinstance(fa, ArrayCell) or not isinstance(fb, ArrayCell):
                raise ValueError("grid embeddings map nodes to cells")
            if (a.level < b.level) != (fa.row < fb.row):
                return False
            if ((a.level == b.level) and lex_cmp(a, b) < 0) != (
                (fa.row == fb.row) and fa.col < fb.col
            ):
                return False
        return True

    if lang not in (Lang.LEVELS, Lang.LEVEL_ORDER, Lang.SUBTREE):
        raise ValueError(f"unsupported language {lang}")
    key_set = set(keys)
    for a, b in itertools.combinations(keys, 2):
        if meet(a, b) not in key_set:
            raise ValueError("embedding domain must be meet-closed")
    for a, b in itertools.permutations(keys, 2):
        fa, fb = mapping[a], mapping[b]
        if not isinstance(fa, TreeNode) or not isinstance(fb, TreeNode):
            raise ValueError("tree embeddings map nodes to nodes")
        if a.is_prefix_of(b) != fa.is_prefix_of(fb):
            return False
        if lang is not Lang.SUBTREE and (lex_cmp(a, b) < 0) != (lex_cmp(fa, fb) < 0):
            return False
        if lang is Lang.LEVELS and fa.level != a.level:
            return False
        if lang is Lang.LEVEL_ORDER and _sign(a.level, b.level) != _sign(
            fa.level, fb.level
        ):
            return False
    for a, b in itertools.combinations(keys, 2):
        if mapping[meet(a, b)] != meet(mapping[a], mapping[b]):  # type: ignore[arg-type]
            return False
    return True


def classify_tuples(
    domain: TreeDomain, arity: int, lang: Lang, distinct: bool = False
) -> dict[SimilarityCode, list[tuple[TreeNode, ...]]]:
    """Bucket all ordered node tuples of the given arity by similarity code.

    With ``distinct=True`` only tuples of pairwise distinct nodes are
    classified.
    """
    buckets: dict[SimilarityCode, list[tuple[TreeNode, ...]]] = {}
    for tup in itertools.product(domain.nodes(), repeat=arity):
        if distinct and len(set(tup)) != len(tup):
            continue
        code = similarity_code(NodeTuple(domain, tup), lang)
        buckets.setdefault(code, []).append(tup)
    return buckets
