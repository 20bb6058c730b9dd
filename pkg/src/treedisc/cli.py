"""Command-line entry point.

Exit codes: 0 for success / verdict true, 1 for a checked-and-false
verdict, 2 for usage or validation errors, 3 when an extractor exhausted
its source.  Every run emits one well-formed JSON report on stdout (or to
--output); identical invocations produce byte-identical reports.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from typing import Any, Sequence

from . import __version__
from .errors import CapExceededError, InsufficientSourceError, NotIndiscernibleError
from .extraction import ExtractionRequest, order_extract
from .feq import (
    FeqConfig,
    build_counterexample,
    build_feq_model,
    check_strong_phi_consistency,
    subtree_h,
)
from .indisc import (
    ParameterMap,
    check_based_on,
    check_indiscernible,
    check_indiscernible_wrt,
)
from .similarity import Lang, classify_tuples
from .structures import (
    Formula,
    RelDecl,
    RelStructure,
    Signature,
    SplitFormula,
    formula_from_json,
)
from .trees import NodeTuple, TreeDomain, TreeNode
from .treeprops import (
    WitnessSpec,
    check_ktp,
    check_ktp1,
    check_ktp2,
    check_strong_ntp,
    check_weak_ktp1,
)
from .ramsey import (
    Coloring,
    LeveledChains,
    polarized_extract,
    tree_homogeneous_extract,
    verify_perp_homogeneous,
    verify_tree_homogeneous,
)

EXIT_OK = 0
EXIT_FALSE = 1
EXIT_USAGE = 2
EXIT_INSUFFICIENT = 3


def _load(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _parse_domain(text: str, closed_top: bool = False) -> TreeDomain:
    h, b = (int(x) for x in text.split(","))
    return TreeDomain(height=h, branching=b, closed_top=closed_top)


LANG_ALIASES = {"s": Lang.LEVELS, "str": Lang.LEVEL_ORDER, "ar": Lang.GRID}


def _parse_lang(text: str) -> Lang:
    if text in LANG_ALIASES:
        return LANG_ALIASES[text]
    try:
        return Lang(text)
    except ValueError:
        raise ValueError(
            f"unknown language {text!r}; use levels, level-order, or grid "
            "(shorthands: s, str, ar)"
        )


def _load_delta(path: str) -> tuple[Formula, ...]:
    data = _load(path)
    return tuple(formula_from_json(f) for f in data["formulas"])


def _load_anchors(path: str, domain: TreeDomain) -> list[NodeTuple]:
    data = _load(path)
    return [
        NodeTuple(domain, tuple(TreeNode(tuple(seq)) for seq in tup))
        for tup in data["anchors"]
    ]


def _cmd_classify(args: argparse.Namespace) -> tuple[int, dict]:
    domain = _parse_domain(args.domain, args.closed_top)
    lang = _parse_lang(args.lang)
    buckets = classify_tuples(domain, args.arity, lang, distinct=args.distinct)
    classes = sorted(
        (
            {
                "code": code.to_json(),
                "size": len(tuples),
                "representative": [nd.to_json() for nd in tuples[0]],
            }
            for code, tuples in buckets.items()
        ),
        key=lambda c: json.dumps(c["code"], sort_keys=True),
    )
    return EXIT_OK, {
        "domain": domain.to_json(),
        "lang": lang.value,
        "arity": args.arity,
        "distinct": args.distinct,
        "class_count": len(classes),
        "classes": classes,
    }


def _cmd_check_indisc(args: argparse.Namespace) -> tuple[int, dict]:
    M = RelStructure.from_json(_load(args.structure))
    P = ParameterMap.from_json(_load(args.map))
    lang = _parse_lang(args.lang)
    delta = _load_delta(args.delta)
    if args.based_on:
        A = ParameterMap.from_json(_load(args.based_on))
        report = check_based_on(M, P, A, lang, delta, args.arity)
    elif args.anchors:
        if not isinstance(P.index, TreeDomain):
            raise ValueError("anchors require a tree-indexed map")
        anchors = _load_anchors(args.anchors, P.index)
        report = check_indiscernible_wrt(M, P, lang, anchors, delta)
    else:
        report = check_indiscernible(M, P, lang, delta, args.arity)
    return (EXIT_OK if report.verdict else EXIT_FALSE), report.to_json()


def _cmd_extract(args: argparse.Namespace) -> tuple[int, dict]:
    M = RelStructure.from_json(_load(args.structure))
    delta = _load_delta(args.delta)
    if args.mode == "order":
        src = _load(args.source)
        seq = [tuple(t) for t in src["seq"]]
        res = order_extract(
            M, seq, tuple(src["sorts"]), delta, args.target_len, args.arity
        )
        return EXIT_OK, res.to_json()
    source = ParameterMap.from_json(_load(args.source))
    if args.mode == "s":
        request = ExtractionRequest(
            source, delta, args.arity, "s", target_tree=_parse_domain(args.target)
        )
    elif args.mode == "str":
        target = _parse_domain(args.target)
        if not args.anchors:
            raise ValueError("--anchors is required for --mode str")
        request = ExtractionRequest(
            source,
            delta,
            args.arity,
            "str",
            target_tree=target,
            anchors=tuple(_load_anchors(args.anchors, target)),
        )
    elif args.mode == "array":
        r, c = (int(x) for x in args.target.split(","))
        request = ExtractionRequest(
            source, delta, args.arity, "array", target_bounds=(r, c)
        )
    else:
        raise ValueError(f"unknown mode {args.mode!r}")
    return EXIT_OK, request.run(M).to_json()


def _cmd_tp_check(args: argparse.Namespace) -> tuple[int, dict]:
    data = _load(args.spec)
    M = RelStructure.from_json(data["structure"])
    sf = SplitFormula.from_json(data["formula"])
    P = ParameterMap.from_json(data["params"])
    spec = WitnessSpec(sf, P, args.k, args.horizon)
    if args.property == "tp":
        report = check_ktp(M, spec)
    elif args.property == "tp1":
        report = check_ktp1(M, spec)
    elif args.property == "wtp1":
        report = check_weak_ktp1(M, spec)
    elif args.property == "tp2":
        report = check_ktp2(M, spec, selection_cap=args.selection_cap)
    elif args.property == "strongtp":
        report = check_strong_ntp(M, spec, args.n if args.n else args.k)
    else:
        raise ValueError(f"unknown property {args.property!r}")
    return (EXIT_OK if report.verdict else EXIT_FALSE), report.to_json()


def _cmd_feq_demo(args: argparse.Namespace) -> tuple[int, dict]:
    cfg = FeqConfig(q=args.q, classes=args.classes, cap=args.cap)
    M = build_feq_model(cfg)
    sf, params = build_counterexample(cfg, args.depth, args.branching)
    spec = WitnessSpec(sf, params, 2, args.depth)
    tp = check_ktp(M, spec)
    sub = subtree_h(params)
    delta = (sf.body,)
    based = check_based_on(M, sub, params, Lang.LEVEL_ORDER, delta, 2)
    strong_phi = check_strong_phi_consistency(M, sf, sub, args.strong_k)
    sub_tp = {
        k: check_ktp(
            M, WitnessSpec(sf, sub, k, sub.index.max_level)
        ).verdict
        for k in range(2, args.strong_k + 1)
    }
    expected = (
        tp.verdict
        and based.verdict
        and strong_phi.verdict
        and not any(sub_tp.values())
    )
    report = {
        "config": {"q": args.q, "classes": args.classes, "depth": args.depth,
                   "branching": args.branching},
        "model": M.to_json(),
        "map": params.to_json(),
        "subtree_map": sub.to_json(),
        "formula": sf.to_json(),
        "tp_report": tp.to_json(),
        "subtree_based_report": based.to_json(),
        "strong_phi_report": strong_phi.to_json(),
        "subtree_tp_verdicts": {str(k): v for k, v in sub_tp.items()},
        "all_as_expected": expected,
    }
    return (EXIT_OK if expected else EXIT_FALSE), report


def _cmd_ramsey(args: argparse.Namespace) -> tuple[int, dict]:
    data = _load(args.coloring)
    colors = {
        tuple(_freeze(k) for k in key): value
        for key, value in (tuple(entry) for entry in data["colors"])
    }
    if args.mode == "polarized":
        chains = LeveledChains(tuple(tuple(c) for c in data["chains"]))
        arity = int(data["arity"])
        coloring = Coloring.from_table(arity, colors)
        target = args.target if args.target is not None else int(data["target"])
        cert = polarized_extract(chains, coloring, arity, target)
        verified = verify_perp_homogeneous(chains, cert.selection, coloring)
    else:
        domain = TreeDomain.from_json(data["domain"])
        arity = int(data["arity"])
        table = {
            tuple(TreeNode(tuple(seq)) for seq in key): value
            for key, value in (tuple(entry) for entry in data["colors"])
        }
        coloring = Coloring.from_table(arity, table)
        target = (
            args.target
            if args.target is not None
            else int(data["target_branching"])
        )
        cert = tree_homogeneous_extract(domain, coloring, target)
        verified = verify_tree_homogeneous(domain, cert.selection, coloring, target)
    out = cert.to_json()
    out["verified"] = verified
    return (EXIT_OK if verified else EXIT_FALSE), out


def _freeze(x: Any) -> Any:
    return tuple(_freeze(v) for v in x) if isinstance(x, list) else x


def _cmd_gen(args: argparse.Namespace) -> tuple[int, dict]:
    rng = random.Random(args.seed)
    if args.kind == "structure":
        size = args.size
        elems = [f"e{i}" for i in range(size)]
        sig = Signature(
            sorts=("u",),
            relations=(RelDecl("R", ("u", "u")), RelDecl("U", ("u",))),
        )
        table_r = [
            (a, b) for a in elems for b in elems if rng.random() < args.density
        ]
        table_u = [(a,) for a in elems if rng.random() < args.density]
        M = RelStructure(sig, {"u": elems}, {"R": table_r, "U": table_u})
        out = M.to_json()
        out["seed"] = args.seed
        return EXIT_OK, out
    if args.kind == "map":
        M = RelStructure.from_json(_load(args.structure))
        domain = _parse_domain(args.domain, args.closed_top)
        sorts = tuple(args.sorts.split(",")) if args.sorts else ("u",)
        assign = {
            nd: tuple(rng.choice(M.universe(s)) for s in sorts)
            for nd in domain.nodes()
        }
        P = ParameterMap(domain, assign, sorts)
        out = P.to_json()
        out["seed"] = args.seed
        return EXIT_OK, out
    raise ValueError(f"unknown kind {args.kind!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treedisc",
        description="finite tree-indexed indiscernibility toolkit",
    )
    parser.add_argument("--output", help="write the JSON report here instead of stdout")
    parser.add_argument("--format", default="json", choices=["json"],
                        help="report format (v1: json only)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="bucket node tuples by similarity code")
    p.add_argument("--domain", required=True, help="height,branching")
    p.add_argument("--closed-top", action="store_true")
    p.add_argument("--lang", default="levels")
    p.add_argument("--arity", type=int, default=2)
    p.add_argument("--distinct", action="store_true")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("check-indisc", help="indiscernibility / basedness checks")
    p.add_argument("--structure", required=True)
    p.add_argument("--map", required=True)
    p.add_argument("--lang", default="levels")
    p.add_argument("--delta", required=True)
    p.add_argument("--arity", type=int, default=2)
    p.add_argument("--based-on")
    p.add_argument("--anchors")
    p.set_defaults(func=_cmd_check_indisc)

    p = sub.add_parser("extract", help="certified finite extraction")
    p.add_argument("--mode", required=True, choices=["order", "s", "str", "array"])
    p.add_argument("--structure", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--delta", required=True)
    p.add_argument("--arity", type=int, default=2)
    p.add_argument("--target", help="tree: height,branching; array: rows,cols")
    p.add_argument("--target-len", type=int, default=2, help="order mode")
    p.add_argument("--anchors", help="str mode: anchors file")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("tp-check", help="tree/array witness pattern checks")
    p.add_argument("--property", required=True,
                   choices=["tp", "tp1", "wtp1", "tp2", "strongtp"])
    p.add_argument("--spec", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--depth", "--horizon", dest="horizon", type=int, required=True,
                   help="finite check horizon (tree level bound)")
    p.add_argument("--n", type=int, help="strongtp: the strong bound N")
    p.add_argument("--selection-cap", type=int, default=4096)
    p.set_defaults(func=_cmd_tp_check)

    p = sub.add_parser("feq-demo", help="parameterized-equivalence demo pipeline")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--branching", type=int, required=True)
    p.add_argument("--strong-k", type=int, default=4)
    p.add_argument("--cap", type=int, default=512)
    p.set_defaults(func=_cmd_feq_demo)

    p = sub.add_parser("ramsey", help="homogeneous selection extractors")
    p.add_argument("--mode", required=True, choices=["polarized", "tree"])
    p.add_argument("--coloring", "--input", dest="coloring", required=True,
                   help="coloring file (explicit table)")
    p.add_argument("--target", type=int,
                   help="override: per-chain size / target branching")
    p.set_defaults(func=_cmd_ramsey)

    p = sub.add_parser("gen", help="seeded random test data")
    p.add_argument("--kind", required=True, choices=["structure", "map"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=8)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--structure", help="map kind: structure file")
    p.add_argument("--domain", help="map kind: height,branching")
    p.add_argument("--closed-top", action="store_true")
    p.add_argument("--sorts", help="map kind: comma-separated tuple sorts")
    p.set_defaults(func=_cmd_gen)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    envelope: dict = {"version": __version__, "command": args.command}
    try:
        code, result = args.func(args)
        envelope["result"] = result
    except InsufficientSourceError as exc:
        code = EXIT_INSUFFICIENT
        envelope["error"] = {
            "type": "insufficient-source",
            "message": str(exc),
            "required_estimate": exc.required_estimate,
        }
    except NotIndiscernibleError as exc:
        code = EXIT_FALSE
        envelope["error"] = {"type": "not-indiscernible", "message": str(exc)}
    except (ValueError, KeyError, OSError, CapExceededError, json.JSONDecodeError) as exc:
        code = EXIT_USAGE
        envelope["error"] = {"type": type(exc).__name__, "message": str(exc)}
    envelope["exit_code"] = code
    text = json.dumps(envelope, sort_keys=True, indent=2, default=str)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
