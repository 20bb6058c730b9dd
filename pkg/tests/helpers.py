"""Shared builders for the test suite."""

from __future__ import annotations

import itertools
import random

import treedisc as td
from treedisc.structures import And, Atom, Exists, RelDecl, Signature, Var


def random_structure(seed: int, size: int = 8, density: float = 0.5) -> td.RelStructure:
    """Single-sort structure with a binary R and a unary U, seeded."""
    rng = random.Random(seed)
    elems = [f"e{i}" for i in range(size)]
    sig = Signature(("u",), (RelDecl("R", ("u", "u")), RelDecl("U", ("u",))))
    table_r = [(a, b) for a in elems for b in elems if rng.random() < density]
    table_u = [(a,) for a in elems if rng.random() < density]
    return td.RelStructure(sig, {"u": elems}, {"R": table_r, "U": table_u})


def standard_delta() -> tuple:
    return (
        Atom("R", (Var("v0", "u"), Var("v1", "u"))),
        Atom("U", (Var("v0", "u"),)),
    )


def random_map(seed: int, M: td.RelStructure, domain: td.TreeDomain) -> td.ParameterMap:
    rng = random.Random(seed)
    elems = M.universe("u")
    return td.ParameterMap(
        domain, {nd: (rng.choice(elems),) for nd in domain.nodes()}, ("u",)
    )


def level_map(M: td.RelStructure, domain: td.TreeDomain) -> td.ParameterMap:
    """Assignment depending only on the node's level: always indiscernible."""
    elems = M.universe("u")
    return td.ParameterMap(
        domain, {nd: (elems[nd.level % len(elems)],) for nd in domain.nodes()}, ("u",)
    )


def mixed_map(seed: int, M: td.RelStructure, domain: td.TreeDomain) -> td.ParameterMap:
    """Seeded mixture: constant, level-keyed, first-branch-keyed, or random."""
    rng = random.Random(seed)
    elems = M.universe("u")
    style = rng.randrange(4)
    if style == 0:
        e = rng.choice(elems)
        assign = {nd: (e,) for nd in domain.nodes()}
    elif style == 1:
        keys = [rng.choice(elems) for _ in range(domain.max_level + 1)]
        assign = {nd: (keys[nd.level],) for nd in domain.nodes()}
    elif style == 2:
        keys = [rng.choice(elems) for _ in range(domain.branching + 1)]
        assign = {
            nd: (keys[nd.seq[0] % 2 if nd.seq else domain.branching],)
            for nd in domain.nodes()
        }
    else:
        assign = {nd: (rng.choice(elems),) for nd in domain.nodes()}
    return td.ParameterMap(domain, assign, ("u",))


def cell_name(i: int, j: int) -> str:
    return f"c{i}_{j}"


def selector_witness(rows: int, cols: int, spread: int, cap: int) -> tuple:
    """Array witness in a product structure: the subject sort holds
    ``spread`` independent choice functions plus, for spread == 1, one
    extra covered cell.

    ``spread=2`` with one extra cell gives 3-inconsistent rows whose
    two-column prefixes are inconsistent from two rows on (reduction goes
    through row merging); ``spread=3`` gives 4-inconsistent rows with the
    two leading columns jointly satisfiable (reduction pairs columns).
    """
    cells = [cell_name(i, j) for i in range(rows) for j in range(cols)]
    xs: list[str] = []
    sat: list[tuple] = []
    if spread == 2:
        for f in itertools.product(range(cols), repeat=rows):
            for i0 in range(rows):
                for j0 in range(cols):
                    x = "x" + "".join(map(str, f)) + f"_{i0}{j0}"
                    xs.append(x)
                    hit = {(i, f[i]) for i in range(rows)} | {(i0, j0)}
                    sat.extend((x, cell_name(i, j)) for i, j in hit)
    elif spread == 3:
        for fgh in itertools.product(range(cols), repeat=3 * rows):
            f, g, h = fgh[:rows], fgh[rows : 2 * rows], fgh[2 * rows :]
            x = "x" + "".join(map(str, fgh))
            xs.append(x)
            hit = set()
            for i in range(rows):
                hit |= {(i, f[i]), (i, g[i]), (i, h[i])}
            sat.extend((x, cell_name(i, j)) for i, j in hit)
    else:
        raise ValueError("spread must be 2 or 3")
    sig = Signature(("X", "C"), (RelDecl("Sat", ("X", "C")),))
    M = td.RelStructure(sig, {"X": xs, "C": cells}, {"Sat": sat}, max_universe=cap)
    x, y = Var("x", "X"), Var("y", "C")
    sf = td.SplitFormula((x,), (y,), Atom("Sat", (x, y)))
    bounds = td.ArrayBounds(rows, cols)
    params = td.ParameterMap(
        bounds, {c: (cell_name(c.row, c.col),) for c in bounds.cells()}, ("C",)
    )
    return M, sf, params


def pair_delta_for_cells() -> tuple:
    """One arity-2 formula over the cell sort: joint satisfiability."""
    xv, y1, y2 = Var("x", "X"), Var("y1", "C"), Var("y2", "C")
    return (Exists(xv, And((Atom("Sat", (xv, y1)), Atom("Sat", (xv, y2))))),)


def path_structure(tree: td.TreeDomain) -> tuple:
    """Leaves-on-paths structure: On(x, y) iff node y lies on path x.
    The agreement formula then makes incomparable pairs contradictory and
    paths consistent, a genuine chain-style witness."""
    leaves = tree.level_nodes(tree.max_level)
    path_elems = ["L" + "".join(map(str, l.seq)) for l in leaves]
    node_elems = ["n" + "".join(map(str, nd.seq)) for nd in tree.nodes()]
    sig = Signature(("A", "B"), (RelDecl("On", ("A", "B")),))
    on = [
        ("L" + "".join(map(str, l.seq)), "n" + "".join(map(str, nd.seq)))
        for l in leaves
        for nd in tree.nodes()
        if nd.is_prefix_of(l)
    ]
    M = td.RelStructure(sig, {"A": path_elems, "B": node_elems}, {"On": on})
    x, y = Var("x", "A"), Var("y", "B")
    sf = td.SplitFormula((x,), (y,), Atom("On", (x, y)))
    params = td.ParameterMap(
        tree, {nd: ("n" + "".join(map(str, nd.seq)),) for nd in tree.nodes()}, ("B",)
    )
    return M, sf, params
