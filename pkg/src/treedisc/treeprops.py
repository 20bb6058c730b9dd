"""Witness checkers for tree and array consistency/inconsistency patterns.

A tree-pattern witness requires every root-to-horizon path of instances to
be consistent while every inconsistency family of the requested size is
inconsistent; the flavors differ only in which families they demand:

* plain:        sibling families;
* weak chains:  distant-sibling families;
* chains:       pairwise prefix-incomparable families;
* strong:       sibling families plus all same-level distant-sibling
                families.

The array pattern requires every row to be k-inconsistent while every
column selection is consistent.  All checks are exhaustive at an explicit
finite horizon stamped into the report.  A tree whose branching cannot
host a single family of the required size cannot exhibit the pattern; that
is reported as a failure with reason ``no-families`` rather than passed
vacuously.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

from .errors import CapExceededError, InsufficientSourceError
from .indisc import ParameterMap, check_indiscernible
from .similarity import ArrayBounds, ArrayCell, Lang
from .structures import (
    Formula,
    RelStructure,
    SplitFormula,
    conjoin_params,
    consistent,
)
from .trees import Kinship, NodeTuple, TreeDomain, TreeNode, kinship

PATH_INCONSISTENT = "path-inconsistent"
FAMILY_CONSISTENT = "family-consistent"
SELECTION_INCONSISTENT = "selection-inconsistent"
NO_FAMILIES = "no-families"

MAX_STORED_FAILURES = 25
DEFAULT_SELECTION_CAP = 4096


@dataclass
class WitnessSpec:
    """A candidate witness: a split formula, a parameter map, the family
    size ``k``, and the finite check horizon (tree level bound)."""

    formula: SplitFormula
    params: ParameterMap
    k: int
    horizon: int

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.formula.param_sorts != self.params.sorts:
            raise ValueError("formula parameter slot does not match the map")


@dataclass
class TPFailure:
    family: tuple
    reason: str

    def to_json(self) -> dict:
        return {
            "family": [p.to_json() for p in self.family],
            "reason": self.reason,
        }


@dataclass
class TPReport:
    property_name: str
    verdict: bool
    failures: list[TPFailure]
    failure_count: int
    stats: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "property": self.property_name,
            "verdict": self.verdict,
            "failures": [f.to_json() for f in self.failures],
            "failure_count": self.failure_count,
            "stats": self.stats,
        }


def _tree_of(spec: WitnessSpec) -> TreeDomain:
    if not isinstance(spec.params.index, TreeDomain):
        raise ValueError("this check needs a tree-indexed parameter map")
    return spec.params.index


def _paths(tree: TreeDomain, horizon: int) -> Iterator[tuple[TreeNode, ...]]:
    top = min(horizon, tree.max_level)
    for leaf in tree.level_nodes(top):
        yield tuple(leaf.prefix(i) for i in range(top + 1))


def _pairwise_incomparable(nodes: Sequence[TreeNode]) -> bool:
    return all(
        not a.is_prefix_of(b) and not b.is_prefix_of(a)
        for a, b in itertools.combinations(nodes, 2)
    )


def _families(
    tree: TreeDomain, horizon: int, size: int, kind: str
) -> Iterator[tuple[TreeNode, ...]]:
    top = min(horizon, tree.max_level)
    if kind == "siblings":
        for level in range(top):
            for parent in tree.level_nodes(level):
                yield from itertools.combinations(tree.children(parent), size)
        return
    pool = [nd for level in range(1, top + 1) for nd in tree.level_nodes(level)]
    for combo in itertools.combinations(pool, size):
        if kind == "incomparable":
            if _pairwise_incomparable(combo):
                yield combo
        else:
            kin = kinship(NodeTuple(tree, combo))
            if kind == "distant" and kin is not Kinship.NONE:
                yield combo
            elif kind == "same-level-distant" and kin in (
                Kinship.SIBLINGS,
                Kinship.SAME_LEVEL_DISTANT_SIBLINGS,
            ):
                yield combo


def _check_tree_pattern(
    M: RelStructure,
    spec: WitnessSpec,
    family_kind: str,
    name: str,
    check_paths: bool = True,
) -> TPReport:
    tree = _tree_of(spec)
    sf, P = spec.formula, spec.params
    failures: list[TPFailure] = []
    n_fail = 0

    def add(family: tuple, reason: str) -> None:
        nonlocal n_fail
        n_fail += 1
        if len(failures) < MAX_STORED_FAILURES:
            failures.append(TPFailure(family, reason))

    paths = 0
    if check_paths:
        for chain in _paths(tree, spec.horizon):
            paths += 1
            if not consistent(M, sf, [P.tuple_at(nd) for nd in chain]):
                add(chain, PATH_INCONSISTENT)

    n_families = 0
    for family in _families(tree, spec.horizon, spec.k, family_kind):
        n_families += 1
        if consistent(M, sf, [P.tuple_at(nd) for nd in family]):
            add(family, FAMILY_CONSISTENT)
    if n_families == 0:
        add((), NO_FAMILIES)

    return TPReport(
        property_name=name,
        verdict=n_fail == 0,
        failures=failures,
        failure_count=n_fail,
        stats={
            "k": spec.k,
            "horizon": spec.horizon,
            "paths_checked": paths,
            "families_checked": n_families,
            "family_kind": family_kind,
            "formula": sf.describe(),
        },
    )


def check_ktp(M: RelStructure, spec: WitnessSpec) -> TPReport:
    """Paths consistent, every size-k sibling family inconsistent."""
    return _check_tree_pattern(M, spec, "siblings", f"{spec.k}-tp")


def check_ktp1(M: RelStructure, spec: WitnessSpec) -> TPReport:
    """Paths consistent, every size-k pairwise-incomparable family
    inconsistent."""
    return _check_tree_pattern(M, spec, "incomparable", f"{spec.k}-tp1")


def check_weak_ktp1(M: RelStructure, spec: WitnessSpec) -> TPReport:
    """Paths consistent, every size-k distant-sibling family inconsistent."""
    return _check_tree_pattern(M, spec, "distant", f"weak-{spec.k}-tp1")


def check_strong_ntp(M: RelStructure, spec: WitnessSpec, N: int) -> TPReport:
    """The sibling pattern at size N plus N-inconsistency of every
    same-level distant-sibling family."""
    base_spec = replace(spec, k=N)
    base = check_ktp(M, base_spec)
    extra = _check_tree_pattern(
        M,
        base_spec,
        "same-level-distant",
        f"strong-{N}-tp/extra",
        check_paths=False,
    )
    return TPReport(
        property_name=f"strong-{N}-tp",
        verdict=base.verdict and extra.verdict,
        failures=(base.failures + extra.failures)[:MAX_STORED_FAILURES],
        failure_count=base.failure_count + extra.failure_count,
        stats={
            "N": N,
            "horizon": spec.horizon,
            "base": base.stats,
            "same_level_families_checked": extra.stats["families_checked"],
            "formula": spec.formula.describe(),
        },
    )


def check_ktp2(
    M: RelStructure,
    spec: WitnessSpec,
    selection_cap: int = DEFAULT_SELECTION_CAP,
) -> TPReport:
    """Every row k-inconsistent, every column selection consistent."""
    if not isinstance(spec.params.index, ArrayBounds):
        raise ValueError("check_ktp2 needs an array-indexed parameter map")
    bounds: ArrayBounds = spec.params.index
    sf, P, k = spec.formula, spec.params, spec.k
    failures: list[TPFailure] = []
    n_fail = 0

    def add(family: tuple, reason: str) -> None:
        nonlocal n_fail
        n_fail += 1
        if len(failures) < MAX_STORED_FAILURES:
            failures.append(TPFailure(family, reason))

    if bounds.cols < k:
        add((), NO_FAMILIES)
    rows_checked = 0
    for i in range(bounds.rows):
        row = [ArrayCell(i, j) for j in range(bounds.cols)]
        rows_checked += 1
        for sub in itertools.combinations(row, k):
            if consistent(M, sf, [P.tuple_at(c) for c in sub]):
                add(sub, FAMILY_CONSISTENT)

    n_selections = bounds.cols**bounds.rows
    if n_selections > selection_cap:
        raise CapExceededError(
            f"{n_selections} column selections exceed the cap {selection_cap}"
        )
    for choice in itertools.product(range(bounds.cols), repeat=bounds.rows):
        cells = tuple(ArrayCell(i, j) for i, j in enumerate(choice))
        if not consistent(M, sf, [P.tuple_at(c) for c in cells]):
            add(cells, SELECTION_INCONSISTENT)

    return TPReport(
        property_name=f"{k}-tp2",
        verdict=n_fail == 0,
        failures=failures,
        failure_count=n_fail,
        stats={
            "k": k,
            "rows": bounds.rows,
            "cols": bounds.cols,
            "rows_checked": rows_checked,
            "selections_checked": n_selections,
            "formula": sf.describe(),
        },
    )


def compute_N_bound(
    M: RelStructure,
    sf: SplitFormula,
    m: int,
    rows: int,
    cols: int,
    candidates: Sequence[Sequence[Sequence[tuple]]],
) -> int | None:
    """Least N <= rows such that every candidate array with m-inconsistent
    rows admits an inconsistent selection of length N; None when no such N
    exists at these bounds, or when no candidate qualifies (nothing can be
    established from an empty family).

    Candidates are explicit arrays of parameter tuples (rows x cols); see
    :func:`subtree_candidate_arrays` for the default family.
    """
    relevant = []
    for arr in candidates:
        if len(arr) < rows or any(len(row) < cols for row in arr):
            continue
        trimmed = [list(row[:cols]) for row in arr[:rows]]
        if all(
            not consistent(M, sf, list(sub))
            for row in trimmed
            for sub in itertools.combinations(row, m)
        ):
            relevant.append(trimmed)
    if not relevant:
        return None
    for N in range(1, rows + 1):
        def admits(arr: list[list[tuple]]) -> bool:
            for choice in itertools.product(range(cols), repeat=N):
                picked = [arr[i][j] for i, j in enumerate(choice)]
                if not consistent(M, sf, picked):
                    return True
            return False

        if all(admits(arr) for arr in relevant):
            return N
    return None


def subtree_candidate_arrays(
    P: ParameterMap, rows: int, cols: int
) -> list[list[list[tuple]]]:
    """Arrays read off the tree: row i is the child family of the i-th of
    ``rows`` distinct same-level internal nodes, listed lex-first."""
    if not isinstance(P.index, TreeDomain):
        raise ValueError("candidate arrays are derived from tree-indexed maps")
    tree: TreeDomain = P.index
    if cols > tree.branching:
        return []
    out: list[list[list[tuple]]] = []
    for level in range(tree.max_level):
        nodes = tree.level_nodes(level)
        if len(nodes) < rows:
            continue
        for combo in itertools.combinations(nodes, rows):
            out.append(
                [
                    [P.tuple_at(nd.child(j)) for j in range(cols)]
                    for nd in combo
                ]
            )
    return out


@dataclass
class AdlerReduction:
    formula: SplitFormula
    params: ParameterMap
    k: int
    steps: list[str]
    final_report: TPReport

    def to_json(self) -> dict:
        return {
            "formula": self.formula.describe(),
            "params": self.params.to_json(),
            "k": self.k,
            "steps": self.steps,
            "final_report": self.final_report.to_json(),
        }


def adler_reduce(
    M: RelStructure,
    spec: WitnessSpec,
    delta: Sequence[Formula],
    max_arity: int = 2,
    selection_cap: int = DEFAULT_SELECTION_CAP,
) -> AdlerReduction:
    """Reduce an array witness with family size k > 2 to one with family
    size 2 by conjunction steps.

    When the first two columns are jointly satisfiable across all rows,
    columns are paired (halving k); otherwise the least row count n with an
    unsatisfiable two-column prefix is found and n consecutive rows are
    merged per column, which lands at size 2 directly.  The input must pass
    the array check and be grid-indiscernible at the stated fragment; the
    output is re-checked at size 2 before it is returned.
    """
    if not isinstance(spec.params.index, ArrayBounds):
        raise ValueError("adler_reduce needs an array-indexed witness")
    base = check_ktp2(M, spec, selection_cap)
    if not base.verdict:
        raise ValueError(f"input is not a {spec.k}-array witness: {base.to_json()}")
    indisc = check_indiscernible(M, spec.params, Lang.GRID, delta, max_arity)
    if not indisc.verdict:
        raise ValueError("input array is not grid-indiscernible at this fragment")

    bounds: ArrayBounds = spec.params.index
    grid: list[list[tuple]] = [
        [spec.params.tuple_at(ArrayCell(i, j)) for j in range(bounds.cols)]
        for i in range(bounds.rows)
    ]
    sf = spec.formula
    k = spec.k
    steps: list[str] = []

    while k > 2:
        pair_sf = conjoin_params(sf, 2)
        pair_instances = [tuple(row[0]) + tuple(row[1]) for row in grid]
        if consistent(M, pair_sf, pair_instances):
            new_cols = len(grid[0]) // 2
            if new_cols < 2:
                raise InsufficientSourceError(
                    "not enough columns left to pair", required_estimate=4
                )
            grid = [
                [tuple(row[2 * j]) + tuple(row[2 * j + 1]) for j in range(new_cols)]
                for row in grid
            ]
            sf = pair_sf
            k = -(-k // 2)
            steps.append(f"paired columns; k -> {k}")
        else:
            n = next(
                n
                for n in range(1, len(grid) + 1)
                if not consistent(M, pair_sf, pair_instances[:n])
            )
            new_rows = len(grid) // n
            if new_rows < 2:
                raise InsufficientSourceError(
                    "not enough rows left to merge", required_estimate=2 * n
                )
            merged_sf = conjoin_params(sf, n)
            grid = [
                [
                    tuple(itertools.chain(*(grid[n * i + l][j] for l in range(n))))
                    for j in range(len(grid[0]))
                ]
                for i in range(new_rows)
            ]
            sf = merged_sf
            k = 2
            steps.append(f"merged {n} consecutive rows per column; k -> 2")

    new_bounds = ArrayBounds(len(grid), len(grid[0]))
    params = ParameterMap(
        new_bounds,
        {
            ArrayCell(i, j): grid[i][j]
            for i in range(new_bounds.rows)
            for j in range(new_bounds.cols)
        },
        sf.param_sorts,
    )
    final_spec = WitnessSpec(sf, params, 2, spec.horizon)
    final = check_ktp2(M, final_spec, selection_cap)
    if not final.verdict:
        raise InsufficientSourceError(
            f"reduced witness failed the size-2 array check: {final.to_json()}"
        )
    return AdlerReduction(
        formula=sf, params=params, k=2, steps=steps, final_report=final
    )


def assemble_tp_dichotomy(
    M: RelStructure,
    spec: WitnessSpec,
    delta: Sequence[Formula] | None = None,
    rows: int | None = None,
    cols: int | None = None,
    selection_cap: int = DEFAULT_SELECTION_CAP,
) -> dict:
    """Best-effort finite pipeline separating the two escalation routes of
    a tree witness.

    If no selection bound exists over the subtree-derived candidate arrays
    (the array route), the blocking array is checked as a size-k array
    witness; otherwise the strong sibling pattern is checked at the found
    bound N (the chain route).  Everything is reported; ``route`` is one of
    ``tp2``, ``tp1``, ``undetermined``.
    """
    tree = _tree_of(spec)
    base = check_ktp(M, spec)
    if not base.verdict:
        raise ValueError("the base tree pattern does not hold at this horizon")
    rows = rows if rows is not None else min(3, len(tree.level_nodes(1)))
    cols = cols if cols is not None else tree.branching
    cands = subtree_candidate_arrays(spec.params, rows, cols)
    n_bound = compute_N_bound(M, spec.formula, spec.k, rows, cols, cands)
    report: dict = {
        "base": base.to_json(),
        "n_bound": n_bound,
        "rows": rows,
        "cols": cols,
        "route": "undetermined",
    }
    if n_bound is None:
        # find the first candidate with k-inconsistent rows and fully
        # consistent selections, and check it as an array witness
        for arr in cands:
            row_ok = all(
                not consistent(M, spec.formula, list(sub))
                for row in arr
                for sub in itertools.combinations(row, spec.k)
            )
            if not row_ok:
                continue
            bounds = ArrayBounds(len(arr), len(arr[0]))
            params = ParameterMap(
                bounds,
                {
                    ArrayCell(i, j): arr[i][j]
                    for i in range(bounds.rows)
                    for j in range(bounds.cols)
                },
                spec.formula.param_sorts,
            )
            arr_spec = WitnessSpec(spec.formula, params, spec.k, spec.horizon)
            tp2 = check_ktp2(M, arr_spec, selection_cap)
            report["tp2_report"] = tp2.to_json()
            if tp2.verdict:
                report["route"] = "tp2"
                if delta is not None and spec.k > 2:
                    try:
                        red = adler_reduce(M, arr_spec, delta)
                        report["reduction"] = {
                            "k": red.k,
                            "steps": red.steps,
                            "verdict": red.final_report.verdict,
                        }
                    except (ValueError, InsufficientSourceError) as exc:
                        report["reduction"] = {"error": str(exc)}
            break
        return report
    strong = check_strong_ntp(M, spec, n_bound)
    report["strong_report"] = strong.to_json()
    if strong.verdict:
        report["route"] = "tp1"
    return report
