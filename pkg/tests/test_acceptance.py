"""Acceptance suite: every criterion runs at its stated tolerance and
prints one pass/fail line.  Run with ``pytest -s tests/test_acceptance.py``
to see the lines as they complete."""

import itertools
import random
import time
from functools import lru_cache

import treedisc as td
from treedisc.errors import InsufficientSourceError
from treedisc.indisc import (
    ParameterMap,
    check_based_on,
    check_indiscernible,
    check_indiscernible_wrt,
)
from treedisc.similarity import Lang, similarity_code
from treedisc.structures import Var
from treedisc.trees import NodeTuple, TreeDomain, TreeNode, meet_closure, restrict_tuple
from treedisc.treeprops import (
    WitnessSpec,
    adler_reduce,
    check_ktp,
    check_ktp1,
    check_ktp2,
    check_strong_ntp,
    check_weak_ktp1,
)

from .helpers import (
    mixed_map,
    pair_delta_for_cells,
    path_structure,
    random_map,
    random_structure,
    selector_witness,
    standard_delta,
)


def report(n: int, elapsed: float, detail: str) -> None:
    print(f"[criterion {n}] PASS ({elapsed:.1f} s) {detail}")


def test_criterion_1_similarity_laws():
    start = time.monotonic()
    domain = TreeDomain(3, 3)
    nodes = domain.nodes()
    tuples = [
        NodeTuple(domain, tup)
        for arity in (1, 2, 3)
        for tup in itertools.product(nodes, repeat=arity)
    ]
    # (a) levels-similarity implies level-order-similarity
    order_code_of_levels_code = {}
    for t in tuples:
        lv = similarity_code(t, Lang.LEVELS)
        lo = similarity_code(t, Lang.LEVEL_ORDER)
        assert order_code_of_levels_code.setdefault(lv, lo) == lo
    # (b) similarity invariant under matched meet-closure, both directions
    # (within each arity: matched enumerations need equal-length tuples)
    forward, backward = {}, {}
    for t in tuples:
        raw = similarity_code(t, Lang.LEVELS)
        closed = similarity_code(meet_closure(t), Lang.LEVELS)
        assert forward.setdefault(raw, closed) == closed
        assert backward.setdefault((t.arity, closed), raw) == raw
    # (c) restriction keeps similar tuples similar, for every cut level
    restricted = {}
    for t in tuples:
        raw = similarity_code(t, Lang.LEVELS)
        for n in range(domain.max_level + 1):
            cut = similarity_code(restrict_tuple(t, n), Lang.LEVELS)
            assert restricted.setdefault((raw, n), cut) == cut
    elapsed = time.monotonic() - start
    assert elapsed < 60
    report(1, elapsed, f"checked {len(tuples)} tuples exhaustively")


@lru_cache(maxsize=1)
def _extraction_runs():
    """Criterion 2 workload, shared with criterion 3."""
    delta = standard_delta()
    source_domain = TreeDomain(3, 6)
    target = TreeDomain(3, 2)
    successes = []
    insufficiencies = 0
    cert_failures = 0
    start = time.monotonic()
    for seed in range(50):
        M = random_structure(seed)
        A = mixed_map(seed, M, source_domain)
        try:
            res = td.s_extract(M, A, delta, 2, target)
        except InsufficientSourceError:
            insufficiencies += 1
            continue
        # independent re-verification of both certificates
        ind = check_indiscernible(M, res.output, Lang.LEVELS, delta, 2)
        based = check_based_on(M, res.output, A, Lang.LEVELS, delta, 2)
        if not (ind.verdict and based.verdict):
            cert_failures += 1
        successes.append((M, A, res))
    elapsed = time.monotonic() - start
    return successes, insufficiencies, cert_failures, elapsed


def test_criterion_2_extraction_closed_loop():
    successes, insufficiencies, cert_failures, elapsed = _extraction_runs()
    assert len(successes) + insufficiencies == 50
    assert cert_failures == 0
    assert len(successes) >= 1
    assert elapsed < 600
    report(
        2,
        elapsed,
        f"{len(successes)} successes, {insufficiencies} insufficient, "
        f"0 certificate failures",
    )


def test_criterion_3_level_homogenization_pipeline():
    successes, _, _, _ = _extraction_runs()
    delta = standard_delta()
    target = TreeDomain(2, 2)
    anchor = NodeTuple.of(target, (), (0,))
    assert len(meet_closure(anchor)) == len(anchor)
    start = time.monotonic()
    failures = 0
    for M, A, res in successes:
        out = td.str_extract_from_s(M, res.output, [anchor], delta, target)
        wrt = check_indiscernible_wrt(
            M, out.output, Lang.LEVEL_ORDER, [anchor], delta
        )
        based_mid = check_based_on(
            M, out.output, res.output, Lang.LEVEL_ORDER, delta, 2
        )
        based_orig = check_based_on(M, out.output, A, Lang.LEVEL_ORDER, delta, 2)
        if not (wrt.verdict and based_mid.verdict and based_orig.verdict):
            failures += 1
    # a source with six levels, as an explicit tall case
    M = random_structure(123)
    tall = TreeDomain(6, 2)
    elems = M.universe("u")
    C = ParameterMap(
        tall, {nd: (elems[nd.level % 3],) for nd in tall.nodes()}, ("u",)
    )
    out = td.str_extract_from_s(M, C, [anchor], delta, target)
    if not (
        out.indisc_report.verdict
        and check_based_on(M, out.output, C, Lang.LEVEL_ORDER, delta, 2).verdict
    ):
        failures += 1
    elapsed = time.monotonic() - start
    assert failures == 0
    report(3, elapsed, f"{len(successes)} pipeline runs + tall source, 0 failures")


def _planted_array(seed: int):
    from .test_extraction import planted_array

    return planted_array(seed)


def test_criterion_4_array_modeling():
    delta = standard_delta()
    times = []
    for seed in range(5):
        M, P = _planted_array(seed)
        start = time.monotonic()
        res = td.array_extract(M, P, delta, 2, 2, 2)
        assert res.indisc_report.verdict and res.based_report.verdict
        assert check_indiscernible(M, res.output, Lang.GRID, delta, 2).verdict
        assert check_based_on(M, res.output, P, Lang.GRID, delta, 2).verdict
        times.append(time.monotonic() - start)
        assert times[-1] < 60
    report(4, sum(times), f"5/5 planted arrays certified, max {max(times):.1f} s")


def test_criterion_5_feq_counterexample():
    start = time.monotonic()
    cfg = td.FeqConfig(q=4, classes=2)
    M = td.build_feq_model(cfg)
    sf, P = td.build_counterexample(cfg, depth=2, branching=2)
    assert check_ktp(M, WitnessSpec(sf, P, 2, 2)).verdict
    sub = td.subtree_h(P)
    delta = (sf.body,)
    assert check_based_on(M, sub, P, Lang.LEVEL_ORDER, delta, 2).verdict
    assert td.check_strong_phi_consistency(M, sf, sub, 4).verdict
    for k in (2, 3, 4):
        assert not check_ktp(M, WitnessSpec(sf, sub, k, 1)).verdict
    elapsed = time.monotonic() - start
    assert elapsed < 60
    report(5, elapsed, "pattern holds, vanishes on the re-indexed subtree")


def test_criterion_6_adler_reduction():
    start = time.monotonic()
    delta = pair_delta_for_cells()
    M3, sf3, P3 = selector_witness(rows=4, cols=3, spread=2, cap=1024)
    red3 = adler_reduce(M3, WitnessSpec(sf3, P3, 3, 4), delta)
    assert red3.k == 2
    assert check_ktp2(M3, WitnessSpec(red3.formula, red3.params, 2, 4)).verdict
    M4, sf4, P4 = selector_witness(rows=2, cols=4, spread=3, cap=4096)
    red4 = adler_reduce(M4, WitnessSpec(sf4, P4, 4, 4), delta)
    assert red4.k == 2
    assert check_ktp2(M4, WitnessSpec(red4.formula, red4.params, 2, 4)).verdict
    elapsed = time.monotonic() - start
    assert elapsed < 120
    report(6, elapsed, "size-3 and size-4 witnesses both land at 2")


def test_criterion_7_appendix_extractors():
    start = time.monotonic()
    # (a) polarized against the all-selections oracle, 20 seeded colorings
    agreements = 0
    for seed in range(20):
        rng = random.Random(seed)
        chains = td.LeveledChains(
            (
                tuple(f"a{i}" for i in range(6)),
                tuple(f"b{i}" for i in range(6)),
            )
        )
        table = {
            t: rng.randint(0, 1)
            for t in itertools.product(chains.ground(), repeat=2)
        }
        coloring = td.Coloring.from_table(2, table)
        oracle = {
            combo
            for combo in itertools.product(
                itertools.combinations(chains.chains[0], 2),
                itertools.combinations(chains.chains[1], 2),
            )
            if td.verify_perp_homogeneous(chains, combo, coloring)
        }
        try:
            cert = td.polarized_extract(chains, coloring, 2, 2)
            assert tuple(map(tuple, cert.selection)) in oracle
            assert td.verify_perp_homogeneous(chains, cert.selection, coloring)
        except InsufficientSourceError:
            assert not oracle
        agreements += 1
    # (b) tree homogenization against the all-substructures oracle
    domain = TreeDomain(1, 6, closed_top=True)
    tree_agreements = 0
    for seed in range(20):
        rng = random.Random(1000 + seed)
        table = {
            t: rng.randint(0, 1)
            for t in itertools.product(domain.nodes(), repeat=2)
        }
        coloring = td.Coloring.from_table(2, table)
        oracle = set()
        for combo in itertools.combinations(domain.level_nodes(1), 2):
            picked = (TreeNode(),) + combo
            if td.verify_tree_homogeneous(domain, picked, coloring, 2):
                oracle.add(combo)
        try:
            cert = td.tree_homogeneous_extract(domain, coloring, 2)
            leaves = tuple(nd for nd in cert.selection if nd.level == 1)
            assert leaves in oracle
            assert td.verify_tree_homogeneous(domain, cert.selection, coloring, 2)
        except InsufficientSourceError:
            assert not oracle
        tree_agreements += 1
    # (c) the exact recurrence values
    for m in range(2, 6):
        assert td.bound_k(1, m) == m - 1
    for n in range(6):
        assert td.bound_k(n, 1) == 0
    for n in range(1, 5):
        for m in range(2, 6):
            assert td.bound_k(n + 1, m) == td.bound_k(n, m) + m * m + m + 4
    elapsed = time.monotonic() - start
    assert elapsed < 300
    report(
        7,
        elapsed,
        f"{agreements}+{tree_agreements} oracle agreements, recurrence exact",
    )


def test_criterion_8_hierarchy_sanity():
    from treedisc.structures import Atom, Eq, SplitFormula

    start = time.monotonic()
    x, y = Var("x", "u"), Var("y", "u")
    pool = [
        SplitFormula((x,), (y,), Atom("R", (x, y))),
        SplitFormula((x,), (y,), Atom("R", (y, x))),
        SplitFormula((x,), (y,), Eq(x, y)),
    ]
    violations = 0
    checked = 0
    for seed in range(30):
        if seed % 5 == 0:
            tree = TreeDomain(4, 2)
            M, sf, P = path_structure(tree)
            spec = WitnessSpec(sf, P, 2, 3)
        else:
            tree = TreeDomain(3, 3)
            M = random_structure(seed, size=6)
            P = random_map(seed, M, tree)
            spec = WitnessSpec(pool[seed % 3], P, 2, 2)
        tp1 = check_ktp1(M, spec).verdict
        wtp1 = check_weak_ktp1(M, spec).verdict
        tp = check_ktp(M, spec).verdict
        strong = check_strong_ntp(M, spec, spec.k).verdict
        if tp1 and not wtp1:
            violations += 1
        if wtp1 and not tp:
            violations += 1
        if strong and not tp:
            violations += 1
        checked += 1
    elapsed = time.monotonic() - start
    assert violations == 0
    assert checked == 30
    report(8, elapsed, "30 seeded specs, 0 hierarchy violations")
