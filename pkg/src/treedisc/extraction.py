"""Finite extraction engines.

Each extractor searches a canonical (colex-first) space of index
re-selections for one whose pulled-back parameters are indiscernible at
the stated fragment, and certifies both indiscernibility and basedness of
the result through the checkers in :mod:`treedisc.indisc`.  Nothing
infinitary is claimed: a result is exactly its two certificates.  When the
search space is exhausted an :class:`InsufficientSourceError` is raised
carrying a crude tower-style size estimate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Sequence

from .errors import InsufficientSourceError, NotIndiscernibleError
from .indisc import (
    IndiscReport,
    ParameterMap,
    check_based_on,
    check_indiscernible,
    check_indiscernible_wrt,
)
from .similarity import ArrayBounds, ArrayCell, Lang, similarity_code
from .structures import Formula, RelStructure, delta_type, formula_str
from .trees import (
    NodeTuple,
    TreeDomain,
    TreeNode,
    colex_subsets,
    increasing_injections,
    meet_closure,
)

ESTIMATE_CAP = 10**9


def ramsey_upper_estimate(target: int, colors: int, arity: int) -> int:
    """Crude upper-bound estimate for the source size that guarantees a
    monochromatic target by the standard partition argument.  Iterated
    exponential, capped; used only in error reports."""
    if target <= 1:
        return 1
    if colors <= 1:
        return target
    if arity <= 1:
        return min(colors * (target - 1) + 1, ESTIMATE_CAP)
    prev = ramsey_upper_estimate(target, colors, arity - 1)
    if prev >= 64:
        return ESTIMATE_CAP
    est = colors ** math.comb(prev, arity - 1) + arity - 1
    return min(est, ESTIMATE_CAP)


def _order_pattern(idx: tuple[int, ...]) -> tuple:
    return tuple(
        tuple((a > b) - (a < b) for b in idx) for a in idx
    )


@dataclass
class OrderExtraction:
    indices: tuple[int, ...]
    max_arity: int
    delta: tuple[str, ...]
    indisc_ok: bool
    based_ok: bool

    def to_json(self) -> dict:
        return {
            "indices": list(self.indices),
            "max_arity": self.max_arity,
            "delta": list(self.delta),
            "indisc_ok": self.indisc_ok,
            "based_ok": self.based_ok,
        }


def order_extract(
    M: RelStructure,
    seq: Sequence[tuple],
    sorts: Sequence[str],
    delta: Sequence[Formula],
    target_len: int,
    max_arity: int = 2,
) -> OrderExtraction:
    """Pick ``target_len`` positions whose subsequence is order-pattern
    uniform: index tuples with the same order/equality pattern (arity up to
    ``max_arity``) carry Delta-equivalent element tuples.

    Positions are searched in colex order; the first hit is returned.  The
    result is automatically based on the source (its tuples are source
    tuples), which is certified anyway.
    """
    sorts = tuple(sorts)
    n = len(seq)
    if target_len > n:
        raise InsufficientSourceError(
            f"need {target_len} entries, have {n}",
            required_estimate=target_len,
        )

    def dtype_at(idx: tuple[int, ...]):
        elems: list = []
        for i in idx:
            elems.extend(seq[i])
        return delta_type(M, tuple(elems), sorts * len(idx), delta)

    def uniform(positions: tuple[int, ...]) -> bool:
        for arity in range(1, max_arity + 1):
            seen: dict[tuple, Any] = {}
            for idx in itertools.product(positions, repeat=arity):
                pat = _order_pattern(idx)
                dt = dtype_at(idx)
                if pat in seen:
                    if seen[pat] != dt:
                        return False
                else:
                    seen[pat] = dt
        return True

    for positions in colex_subsets(n, target_len):
        if uniform(positions):
            # basedness of the subsequence against the full sequence
            based = True
            for arity in range(1, max_arity + 1):
                have = {
                    (_order_pattern(idx), dtype_at(idx))
                    for idx in itertools.product(range(n), repeat=arity)
                }
                for idx in itertools.product(positions, repeat=arity):
                    if (_order_pattern(idx), dtype_at(idx)) not in have:
                        based = False
            return OrderExtraction(
                indices=positions,
                max_arity=max_arity,
                delta=_delta_desc(delta),
                indisc_ok=True,
                based_ok=based,
            )
    palette = len({dtype_at(idx) for idx in itertools.product(range(n), repeat=max_arity)})
    raise InsufficientSourceError(
        f"no order-uniform subsequence of length {target_len} in {n} entries",
        required_estimate=ramsey_upper_estimate(target_len, max(palette, 2), max_arity),
    )


@dataclass
class ExtractionRequest:
    """A batched extraction job: source map, fragment, target, and mode.

    Modes: ``order`` is handled by :func:`order_extract` directly (it takes
    a sequence, not a map); ``s`` targets a tree domain in ``Lang.LEVELS``;
    ``str`` additionally needs ``anchors`` and homogenizes levels; ``array``
    targets ``(rows, cols)`` bounds.
    """

    source: "ParameterMap"
    delta: tuple[Formula, ...]
    max_arity: int
    mode: str
    target_tree: TreeDomain | None = None
    target_bounds: tuple[int, int] | None = None
    anchors: tuple[NodeTuple, ...] = ()

    def run(self, M: RelStructure) -> "ExtractionResult":
        if self.mode == "s":
            if self.target_tree is None:
                raise ValueError("mode 's' needs target_tree")
            return s_extract(M, self.source, self.delta, self.max_arity, self.target_tree)
        if self.mode == "str":
            if self.target_tree is None:
                raise ValueError("mode 'str' needs target_tree")
            if not self.anchors:
                raise ValueError("mode 'str' needs anchors")
            return str_extract_from_s(
                M, self.source, list(self.anchors), self.delta, self.target_tree
            )
        if self.mode == "array":
            if self.target_bounds is None:
                raise ValueError("mode 'array' needs target_bounds")
            rows, cols = self.target_bounds
            return array_extract(M, self.source, self.delta, self.max_arity, rows, cols)
        raise ValueError(f"unknown extraction mode {self.mode!r}")


@dataclass
class ExtractionResult:
    """A certified finite extraction.

    ``embedding`` records the index re-selection that produced the output;
    both certificates hold, or the operation raised instead of returning.
    """

    mode: str
    output: ParameterMap
    embedding: dict
    indisc_report: IndiscReport
    based_report: IndiscReport
    max_arity: int
    delta: tuple[str, ...]
    notes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "output": self.output.to_json(),
            "embedding": {str(k): str(v) for k, v in self.embedding.items()},
            "indisc_report": self.indisc_report.to_json(),
            "based_report": self.based_report.to_json(),
            "max_arity": self.max_arity,
            "delta": list(self.delta),
            "notes": self.notes,
        }


def _delta_desc(delta: Sequence[Formula]) -> tuple[str, ...]:
    return tuple(formula_str(f) for f in delta)


# ---------------------------------------------------------------------------
# tree-to-tree extraction with absolute levels
# ---------------------------------------------------------------------------


def _subtree_nodes(domain: TreeDomain, root: TreeNode) -> list[TreeNode]:
    out = [root]
    frontier = [root]
    while frontier:
        nxt: list[TreeNode] = []
        for nd in frontier:
            nxt.extend(domain.children(nd))
        out.extend(nxt)
        frontier = nxt
    return out


def s_extract(
    M: RelStructure,
    source: ParameterMap,
    delta: Sequence[Formula],
    max_arity: int,
    target: TreeDomain,
) -> ExtractionResult:
    """Extract a level-preserving subtree selection of the source whose
    pullback is indiscernible in ``Lang.LEVELS`` at the stated fragment.

    The search assembles the selection top-down, one child block at a
    time, and checks every partial assembly, so blocks that already
    disagree never expand; injections are enumerated colex-first, making
    the result deterministic.  Basedness of the output is automatic for a
    code-preserving selection but certified afresh.
    """
    if not isinstance(source.index, TreeDomain):
        raise ValueError("s_extract needs a tree-indexed source")
    src: TreeDomain = source.index
    if target.max_level > src.max_level or target.branching > src.branching:
        raise ValueError("target domain exceeds the source domain")

    dtype_of: dict[tuple, Any] = {}

    def dt(pts: Sequence[TreeNode]):
        elems = source.elems_at(pts)
        got = dtype_of.get(elems)
        if got is None:
            got = delta_type(M, elems, source.sorts * len(pts), delta)
            dtype_of[elems] = got
        return got

    # target-side tuples and codes are fixed across all candidates
    def tuples_with_codes(nodes: list[TreeNode]) -> list[tuple[tuple, Any]]:
        out = []
        for arity in range(1, max_arity + 1):
            for tup in itertools.product(nodes, repeat=arity):
                out.append(
                    (tup, similarity_code(NodeTuple(target, tup), Lang.LEVELS))
                )
        return out

    def pullback_uniform(pairs: list[tuple[tuple, Any]], g: dict) -> bool:
        seen: dict = {}
        for tup, code in pairs:
            d = dt([g[nd] for nd in tup])
            if code in seen:
                if seen[code] != d:
                    return False
            else:
                seen[code] = d
        return True

    # the candidate search is a depth-first assembly: the children of each
    # internal target node are mapped in one block (an increasing injection
    # into the source children of the parent's image, colex order), and
    # after every block the fresh tuples are checked against the running
    # code buckets, so partial assemblies that already disagree are pruned
    # immediately.  The first complete assembly in this order wins.
    parents = [
        nd
        for level in range(target.max_level)
        for nd in target.level_nodes(level)
    ]
    blocks = [target.children(p) for p in parents]
    step_tuples: list[list] = []
    prefix: list[TreeNode] = [TreeNode()]
    for block in blocks:
        grown = prefix + block
        fresh = set(block)
        step_tuples.append(
            [
                (tup, code)
                for tup, code in tuples_with_codes(grown)
                if any(nd in fresh for nd in tup)
            ]
        )
        prefix = grown

    def search() -> dict | None:
        g: dict = {TreeNode(): TreeNode()}
        seen: dict = {}
        for tup, code in tuples_with_codes([TreeNode()]):
            d = dt([g[nd] for nd in tup])
            if seen.setdefault(code, d) != d:
                return None

        def walk(bi: int) -> dict | None:
            if bi == len(blocks):
                return dict(g)
            parent = parents[bi]
            s_children = src.children(g[parent])
            block = blocks[bi]
            for inj in increasing_injections(len(block), len(s_children)):
                for j, t_child in enumerate(block):
                    g[t_child] = s_children[inj[j]]
                added: list = []
                fits = True
                for tup, code in step_tuples[bi]:
                    d = dt([g[nd] for nd in tup])
                    if code in seen:
                        if seen[code] != d:
                            fits = False
                            break
                    else:
                        seen[code] = d
                        added.append(code)
                if fits:
                    found = walk(bi + 1)
                    if found is not None:
                        return found
                for code in added:
                    del seen[code]
                for t_child in block:
                    del g[t_child]
            return None

        return walk(0)

    candidate = search()
    if candidate is None:
        palette = len(
            {
                dt(tup)
                for tup in itertools.product(src.nodes(), repeat=min(max_arity, 2))
            }
        )
        raise InsufficientSourceError(
            "no level-preserving selection is indiscernible at this fragment",
            required_estimate=ramsey_upper_estimate(
                target.branching * max(target.node_count(), 2),
                max(palette, 2),
                max_arity,
            ),
        )
    g = candidate
    output = ParameterMap(
        target, {t: source.tuple_at(s) for t, s in g.items()}, source.sorts
    )
    indisc_report = check_indiscernible(M, output, Lang.LEVELS, delta, max_arity)
    based_report = check_based_on(M, output, source, Lang.LEVELS, delta, max_arity)
    if not (indisc_report.verdict and based_report.verdict):
        raise InsufficientSourceError("selected candidate failed certification")
    return ExtractionResult(
        mode="tree-levels",
        output=output,
        embedding=dict(g),
        indisc_report=indisc_report,
        based_report=based_report,
        max_arity=max_arity,
        delta=_delta_desc(delta),
    )


# ---------------------------------------------------------------------------
# level-homogenization: from a levels-indiscernible map to a level-order
# uniform one
# ---------------------------------------------------------------------------


def _zeros(level: int) -> TreeNode:
    return TreeNode((0,) * level)


def _translate_to_levels(
    anchor: NodeTuple, level_map: dict[int, int], branching: int, max_level: int
) -> tuple[TreeNode, ...] | None:
    """Rebuild a meet-closed tuple with its level set moved to the image of
    ``level_map`` while keeping its level-order similarity code."""
    nodes = anchor.nodes
    order = sorted(set(nodes), key=lambda nd: (nd.level, nd.seq))
    stem = order[0]
    if any(not stem.is_prefix_of(nd) for nd in order):
        return None
    image: dict[TreeNode, TreeNode] = {}
    new_level = level_map[stem.level]
    if new_level > max_level:
        return None
    image[stem] = _zeros(new_level)
    for nd in order[1:]:
        ancestors = [
            p for p in order if p != nd and p.is_prefix_of(nd) and p in image
        ]
        p = max(ancestors, key=lambda q: q.level)
        # distinct members branching at p get distinct, order-preserving
        # first coordinates
        branch_coords = sorted(
            {
                q.seq[p.level]
                for q in order
                if p.is_prefix_of(q)
                and q != p
                and max(
                    (r.level for r in order if r != q and r.is_prefix_of(q) and r in image),
                    default=-1,
                )
                == p.level
            }
        )
        rank = branch_coords.index(nd.seq[p.level])
        if rank >= branching:
            return None
        lvl = level_map[nd.level]
        if lvl > max_level or lvl <= image[p].level:
            return None
        seq = image[p].seq + (rank,) + (0,) * (lvl - image[p].level - 1)
        image[nd] = TreeNode(seq)
    return tuple(image[nd] for nd in nodes)


def str_extract_from_s(
    M: RelStructure,
    source: ParameterMap,
    anchors: Sequence[NodeTuple],
    delta: Sequence[Formula],
    target: TreeDomain,
) -> ExtractionResult:
    """From a levels-indiscernible source, pull back a level selection that
    is uniform with respect to the anchors in ``Lang.LEVEL_ORDER``.

    Each size-k set of source levels (k = the number of levels an anchor
    occupies) is colored by the Delta-types of the anchors' translates at
    those levels; a homogeneous set of levels of the target height is
    located by colex-first search, and the target is embedded with its
    levels inside that set.
    """
    if not isinstance(source.index, TreeDomain):
        raise ValueError("str_extract_from_s needs a tree-indexed source")
    src: TreeDomain = source.index
    if not anchors:
        raise ValueError("anchors must be nonempty")
    for a in anchors:
        if a.domain != target:
            raise ValueError("anchors must be tuples over the target domain")
        if len(meet_closure(a)) != len(a):
            raise ValueError("anchors must be meet-closed")
    if target.branching > src.branching:
        raise ValueError("target branching exceeds the source branching")
    level_counts = {len({nd.level for nd in a.nodes}) for a in anchors}
    if len(level_counts) != 1:
        raise ValueError("all anchors must occupy the same number of levels")
    k = level_counts.pop()
    cert_arity = max(len(a) for a in anchors)

    pre = check_indiscernible(M, source, Lang.LEVELS, delta, cert_arity)
    if not pre.verdict:
        raise NotIndiscernibleError(
            f"source is not levels-indiscernible at arity {cert_arity}: "
            f"{pre.counterexample}"
        )

    src_levels = list(range(src.max_level + 1))
    height = target.max_level + 1
    if height > len(src_levels):
        raise InsufficientSourceError(
            "target has more levels than the source",
            required_estimate=height,
        )

    def color_of(level_set: tuple[int, ...]):
        comps = []
        for a in anchors:
            anchor_levels = sorted({nd.level for nd in a.nodes})
            level_map = dict(zip(anchor_levels, level_set))
            img = _translate_to_levels(
                NodeTuple(a.domain, a.nodes), level_map, src.branching, src.max_level
            )
            if img is None:
                return None
            comps.append(
                delta_type(M, source.elems_at(img), source.sorts * len(img), delta)
            )
        return tuple(comps)

    colors = {
        ls: color_of(ls) for ls in itertools.combinations(src_levels, k)
    }

    last_error = "no homogeneous level set found"
    for H in colex_subsets(src_levels, height):
        subset_colors = [colors[ls] for ls in itertools.combinations(sorted(H), k)]
        if any(c is None for c in subset_colors):
            continue
        if len(set(subset_colors)) > 1:
            continue
        picked = sorted(H)
        embedding: dict[TreeNode, TreeNode] = {TreeNode(): _zeros(picked[0])}
        for t_node in target.nodes():
            if t_node.level == 0:
                continue
            base = embedding[t_node.parent()]
            lvl = picked[t_node.level]
            embedding[t_node] = TreeNode(
                base.seq + (t_node.seq[-1],) + (0,) * (lvl - base.level - 1)
            )
        output = ParameterMap(
            target,
            {t: source.tuple_at(s) for t, s in embedding.items()},
            source.sorts,
        )
        wrt_report = check_indiscernible_wrt(
            M, output, Lang.LEVEL_ORDER, anchors, delta
        )
        based_report = check_based_on(
            M, output, source, Lang.LEVEL_ORDER, delta, cert_arity
        )
        if wrt_report.verdict and based_report.verdict:
            return ExtractionResult(
                mode="tree-level-order",
                output=output,
                embedding=embedding,
                indisc_report=wrt_report,
                based_report=based_report,
                max_arity=cert_arity,
                delta=_delta_desc(delta),
                notes={"levels": picked},
            )
        last_error = "a homogeneous level set failed certification"
    palette = len({c for c in colors.values() if c is not None})
    raise InsufficientSourceError(
        last_error,
        required_estimate=ramsey_upper_estimate(height, max(palette, 2), k),
    )


# ---------------------------------------------------------------------------
# array extraction
# ---------------------------------------------------------------------------


def array_extract(
    M: RelStructure,
    source: ParameterMap,
    delta: Sequence[Formula],
    max_arity: int,
    target_rows: int,
    target_cols: int,
) -> ExtractionResult:
    """Extract a grid-indiscernible sub-array.

    Row selections follow the spaced read-off scheme: target row ``i`` sits
    at the image of tree level ``2i+1`` of a zero-spine scaffold
    (``spine_i = the all-zero node of length 2i`` with its children carrying
    the row's cells), so spine rows are interleaved between the selected
    rows.  Column selections are per-row increasing maps.  The first
    colex-ordered selection whose pullback is grid-indiscernible at the
    stated fragment wins; basedness is certified against the source.
    """
    if not isinstance(source.index, ArrayBounds):
        raise ValueError("array_extract needs an array-indexed source")
    bounds: ArrayBounds = source.index
    if bounds.rows < 2 * target_rows or bounds.cols < target_cols:
        raise InsufficientSourceError(
            "source bounds too small for the spaced scaffold",
            required_estimate=max(2 * target_rows, target_cols),
        )

    target_bounds = ArrayBounds(target_rows, target_cols)
    target_cells = target_bounds.cells()
    target_pairs = [
        (tup, similarity_code(tup, Lang.GRID))
        for arity in range(1, max_arity + 1)
        for tup in itertools.product(target_cells, repeat=arity)
    ]

    dtype_of: dict[tuple, Any] = {}

    def dt(cells: Sequence[ArrayCell]):
        elems = source.elems_at(cells)
        got = dtype_of.get(elems)
        if got is None:
            got = delta_type(M, elems, source.sorts * len(cells), delta)
            dtype_of[elems] = got
        return got

    def row_choices() -> Iterator[tuple[int, ...]]:
        # images of the odd scaffold levels: strictly increasing with gaps
        # of at least 2, leaving room for the interleaved spine rows
        for rows in colex_subsets(range(1, bounds.rows), target_rows):
            if all(rows[i + 1] - rows[i] >= 2 for i in range(len(rows) - 1)):
                yield rows

    for rows in row_choices():
        col_spaces = [list(colex_subsets(bounds.cols, target_cols))] * target_rows
        for cols in itertools.product(*col_spaces):
            sel = {
                ArrayCell(i, j): ArrayCell(rows[i], cols[i][j])
                for i in range(target_rows)
                for j in range(target_cols)
            }
            seen: dict = {}
            ok = True
            for tup, code in target_pairs:
                d = dt([sel[c] for c in tup])
                if code in seen:
                    if seen[code] != d:
                        ok = False
                        break
                else:
                    seen[code] = d
            if not ok:
                continue
            output = ParameterMap(
                target_bounds,
                {c: source.tuple_at(sel[c]) for c in target_cells},
                source.sorts,
            )
            indisc_report = check_indiscernible(
                M, output, Lang.GRID, delta, max_arity
            )
            based_report = check_based_on(
                M, output, source, Lang.GRID, delta, max_arity
            )
            if not (indisc_report.verdict and based_report.verdict):
                continue
            # scaffold trace: zero-spine nodes at even levels, row cells at
            # odd levels
            trace: dict[TreeNode, ArrayCell] = {}
            spine_rows = [0] + [rows[i - 1] + 1 for i in range(1, target_rows)]
            for i in range(target_rows):
                trace[_zeros(2 * i)] = ArrayCell(spine_rows[i], 0)
                for j in range(target_cols):
                    trace[TreeNode((0,) * (2 * i) + (j + 1,))] = ArrayCell(
                        rows[i], cols[i][j]
                    )
            return ExtractionResult(
                mode="array",
                output=output,
                embedding=trace,
                indisc_report=indisc_report,
                based_report=based_report,
                max_arity=max_arity,
                delta=_delta_desc(delta),
                notes={"rows": list(rows), "cols": [list(c) for c in cols]},
            )
    palette = len(
        {dt(tup) for tup in itertools.product(bounds.cells(), repeat=1)}
    )
    raise InsufficientSourceError(
        "no grid-indiscernible sub-array at this fragment",
        required_estimate=ramsey_upper_estimate(
            target_rows * target_cols, max(palette, 2), max_arity
        ),
    )
