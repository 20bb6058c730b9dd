"""Indiscernibility, uniform-type tables, and basedness checks.

All checks are honest finite fragments: they quantify over index tuples up
to a stated arity and over a stated finite formula set, and both are
stamped into every report.  Counterexamples always carry the raw data
(index tuples plus element tuples) needed to re-check them independently.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

from .similarity import ArrayBounds, ArrayCell, Lang, SimilarityCode, similarity_code
from .structures import DeltaType, Formula, RelStructure, delta_type, formula_str
from .trees import NodeTuple, TreeDomain, TreeNode

IndexDomain = Union[TreeDomain, ArrayBounds]
IndexPoint = Union[TreeNode, ArrayCell]


def index_points(index: IndexDomain) -> list[IndexPoint]:
    if isinstance(index, TreeDomain):
        return list(index.nodes())
    return list(index.cells())


def default_lang(index: IndexDomain) -> Lang:
    return Lang.GRID if isinstance(index, ArrayBounds) else Lang.LEVELS


def _check_lang(index: IndexDomain, lang: Lang) -> None:
    if isinstance(index, ArrayBounds) and lang is not Lang.GRID:
        raise ValueError("array-indexed maps use Lang.GRID")
    if isinstance(index, TreeDomain) and lang is Lang.GRID:
        raise ValueError("tree-indexed maps use a tree language")


class ParameterMap:
    """A total assignment of same-length element tuples to index points."""

    def __init__(
        self,
        index: IndexDomain,
        assign: dict[IndexPoint, tuple],
        sorts: Sequence[str],
    ) -> None:
        self.index = index
        self.sorts = tuple(sorts)
        pts = index_points(index)
        missing = [p for p in pts if p not in assign]
        if missing:
            raise ValueError(f"assignment misses {len(missing)} index points")
        self.assign: dict[IndexPoint, tuple] = {}
        for p in pts:
            tup = tuple(assign[p])
            if len(tup) != len(self.sorts):
                raise ValueError(f"tuple at {p} has wrong length")
            self.assign[p] = tup

    def points(self) -> list[IndexPoint]:
        return index_points(self.index)

    def tuple_at(self, point: IndexPoint) -> tuple:
        return self.assign[point]

    def elems_at(self, pts: Sequence[IndexPoint]) -> tuple:
        out: list = []
        for p in pts:
            out.extend(self.assign[p])
        return tuple(out)

    def to_json(self) -> dict:
        if isinstance(self.index, TreeDomain):
            idx = {"kind": "tree", **self.index.to_json()}
            rows = [[p.to_json(), list(self.assign[p])] for p in self.points()]
        else:
            idx = {"kind": "array", **self.index.to_json()}
            rows = [[p.to_json(), list(self.assign[p])] for p in self.points()]
        return {"index": idx, "sorts": list(self.sorts), "assign": rows}

    @staticmethod
    def from_json(data: dict) -> "ParameterMap":
        idx = data["index"]
        if idx.get("kind", "tree") == "tree":
            index: IndexDomain = TreeDomain.from_json(idx)
            assign = {
                TreeNode(tuple(point)): tuple(tup) for point, tup in data["assign"]
            }
        else:
            index = ArrayBounds.from_json(idx)
            assign = {
                ArrayCell(point[0], point[1]): tuple(tup)
                for point, tup in data["assign"]
            }
        return ParameterMap(index, assign, tuple(data["sorts"]))


def code_of(
    index: IndexDomain, pts: Sequence[IndexPoint], lang: Lang
) -> SimilarityCode:
    if isinstance(index, TreeDomain):
        return similarity_code(NodeTuple(index, tuple(pts)), lang)
    return similarity_code(tuple(pts), lang)


def param_dtype(
    M: RelStructure,
    P: ParameterMap,
    pts: Sequence[IndexPoint],
    delta: Sequence[Formula],
) -> DeltaType:
    return delta_type(M, P.elems_at(pts), P.sorts * len(pts), delta)


def _point_json(p: IndexPoint) -> list:
    return p.to_json()


@dataclass
class IndiscReport:
    """Outcome of an indiscernibility-style check.

    ``counterexample`` is None when the verdict is True; otherwise it holds
    re-checkable raw data.  The finite fragment (language, formula set,
    arity bound) is stamped on the report.
    """

    verdict: bool
    kind: str
    lang: str
    max_arity: int
    delta: tuple[str, ...]
    counterexample: dict | None = None
    stats: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "kind": self.kind,
            "lang": self.lang,
            "max_arity": self.max_arity,
            "delta": list(self.delta),
            "counterexample": self.counterexample,
            "stats": self.stats,
        }


def _delta_desc(delta: Sequence[Formula]) -> tuple[str, ...]:
    return tuple(formula_str(f) for f in delta)


def _tuples_of(points: Sequence[IndexPoint], arity: int) -> Iterator[tuple]:
    return itertools.product(points, repeat=arity)


def check_indiscernible(
    M: RelStructure,
    P: ParameterMap,
    lang: Lang,
    delta: Sequence[Formula],
    max_arity: int,
) -> IndiscReport:
    """Verdict True iff any two index tuples (arity <= ``max_arity``) with
    equal similarity codes carry Delta-equivalent parameter tuples."""
    if max_arity < 1:
        raise ValueError("max_arity must be >= 1")
    _check_lang(P.index, lang)
    points = P.points()
    checked = 0
    for arity in range(1, max_arity + 1):
        seen: dict[SimilarityCode, tuple] = {}
        for tup in _tuples_of(points, arity):
            code = code_of(P.index, tup, lang)
            dt = param_dtype(M, P, tup, delta)
            checked += 1
            if code in seen:
                first, first_dt = seen[code]
                if first_dt != dt:
                    return IndiscReport(
                        verdict=False,
                        kind="indiscernible",
                        lang=lang.value,
                        max_arity=max_arity,
                        delta=_delta_desc(delta),
                        counterexample={
                            "first": [_point_json(p) for p in first],
                            "second": [_point_json(p) for p in tup],
                            "code": code.to_json(),
                            "first_elems": list(P.elems_at(first)),
                            "second_elems": list(P.elems_at(tup)),
                        },
                        stats={"tuples_checked": checked},
                    )
            else:
                seen[code] = (tup, dt)
    return IndiscReport(
        verdict=True,
        kind="indiscernible",
        lang=lang.value,
        max_arity=max_arity,
        delta=_delta_desc(delta),
        stats={"tuples_checked": checked},
    )


def check_indiscernible_wrt(
    M: RelStructure,
    P: ParameterMap,
    lang: Lang,
    anchors: Sequence[NodeTuple | Sequence[ArrayCell]],
    delta: Sequence[Formula],
) -> IndiscReport:
    """Verdict True iff every index tuple similar to one of the anchors has
    a parameter tuple Delta-equivalent to the anchor's."""
    if not anchors:
        raise ValueError("anchors must be nonempty")
    _check_lang(P.index, lang)
    points = P.points()
    checked = 0
    max_arity = 0
    for anchor in anchors:
        pts = tuple(anchor.nodes) if isinstance(anchor, NodeTuple) else tuple(anchor)
        if any(p not in P.assign for p in pts):
            raise ValueError("anchor points must lie inside the map's index")
        max_arity = max(max_arity, len(pts))
        anchor_code = code_of(P.index, pts, lang)
        anchor_dt = param_dtype(M, P, pts, delta)
        for tup in _tuples_of(points, len(pts)):
            if code_of(P.index, tup, lang) != anchor_code:
                continue
            checked += 1
            if param_dtype(M, P, tup, delta) != anchor_dt:
                return IndiscReport(
                    verdict=False,
                    kind="indiscernible-wrt",
                    lang=lang.value,
                    max_arity=max_arity,
                    delta=_delta_desc(delta),
                    counterexample={
                        "anchor": [_point_json(p) for p in pts],
                        "violator": [_point_json(p) for p in tup],
                        "code": anchor_code.to_json(),
                        "anchor_elems": list(P.elems_at(pts)),
                        "violator_elems": list(P.elems_at(tup)),
                    },
                    stats={"tuples_checked": checked},
                )
    return IndiscReport(
        verdict=True,
        kind="indiscernible-wrt",
        lang=lang.value,
        max_arity=max_arity,
        delta=_delta_desc(delta),
        stats={"tuples_checked": checked},
    )


@dataclass
class EMTable:
    """Per-similarity-class uniform Delta-types of a parameter map.

    ``entries`` maps each code whose tuples all share one Delta-type to
    that type; codes with conflicting types go to ``unstable`` together
    with one witnessing pair.  The map is indiscernible (at this fragment)
    iff ``unstable`` is empty.
    """

    entries: dict[SimilarityCode, DeltaType]
    witness: dict[SimilarityCode, tuple]
    unstable: dict[SimilarityCode, tuple]
    lang: str
    max_arity: int
    delta: tuple[str, ...]


def em_table(
    M: RelStructure,
    A: ParameterMap,
    lang: Lang,
    delta: Sequence[Formula],
    max_arity: int,
) -> EMTable:
    _check_lang(A.index, lang)
    entries: dict[SimilarityCode, DeltaType] = {}
    witness: dict[SimilarityCode, tuple] = {}
    unstable: dict[SimilarityCode, tuple] = {}
    points = A.points()
    for arity in range(1, max_arity + 1):
        for tup in _tuples_of(points, arity):
            code = code_of(A.index, tup, lang)
            if code in unstable:
                continue
            dt = param_dtype(M, A, tup, delta)
            if code not in entries:
                entries[code] = dt
                witness[code] = tup
            elif entries[code] != dt:
                unstable[code] = (witness[code], tup)
                del entries[code]
                del witness[code]
    return EMTable(
        entries=entries,
        witness=witness,
        unstable=unstable,
        lang=lang.value,
        max_arity=max_arity,
        delta=_delta_desc(delta),
    )


def em_satisfies(
    M: RelStructure,
    B: ParameterMap,
    table: EMTable,
    lang: Lang,
    delta: Sequence[Formula],
    max_arity: int,
) -> bool:
    """True iff every B-tuple whose code has a stable table entry carries
    exactly that Delta-type."""
    _check_lang(B.index, lang)
    points = B.points()
    for arity in range(1, max_arity + 1):
        for tup in _tuples_of(points, arity):
            code = code_of(B.index, tup, lang)
            want = table.entries.get(code)
            if want is not None and param_dtype(M, B, tup, delta) != want:
                return False
    return True


def check_based_on(
    M: RelStructure,
    B: ParameterMap,
    A: ParameterMap,
    lang: Lang,
    delta: Sequence[Formula],
    max_arity: int,
) -> IndiscReport:
    """Verdict True iff every B-indexed tuple (arity <= ``max_arity``) has
    an A-indexed tuple with the same similarity code whose parameters are
    Delta-equivalent to it.

    The two maps must be indexed by the same kind of domain (tree or
    array); the domains themselves may have different sizes, which is how
    extraction outputs are checked against their larger sources.
    """
    _check_lang(B.index, lang)
    _check_lang(A.index, lang)
    if isinstance(B.index, TreeDomain) != isinstance(A.index, TreeDomain):
        raise ValueError("based-on needs index domains of the same kind")
    if B.sorts != A.sorts:
        raise ValueError("based-on needs equal tuple sort profiles")
    a_points = A.points()
    b_points = B.points()
    checked = 0
    for arity in range(1, max_arity + 1):
        available: dict[tuple[SimilarityCode, DeltaType], tuple] = {}
        for tup in _tuples_of(a_points, arity):
            key = (
                code_of(A.index, tup, lang),
                param_dtype(M, A, tup, delta),
            )
            if key not in available:
                available[key] = tup
        for tup in _tuples_of(b_points, arity):
            code = code_of(B.index, tup, lang)
            dt = param_dtype(M, B, tup, delta)
            checked += 1
            if (code, dt) not in available:
                return IndiscReport(
                    verdict=False,
                    kind="based-on",
                    lang=lang.value,
                    max_arity=max_arity,
                    delta=_delta_desc(delta),
                    counterexample={
                        "tuple": [_point_json(p) for p in tup],
                        "code": code.to_json(),
                        "elems": list(B.elems_at(tup)),
                    },
                    stats={"tuples_checked": checked},
                )
    return IndiscReport(
        verdict=True,
        kind="based-on",
        lang=lang.value,
        max_arity=max_arity,
        delta=_delta_desc(delta),
        stats={"tuples_checked": checked},
    )
