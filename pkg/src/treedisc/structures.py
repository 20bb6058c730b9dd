"""Finite multi-sorted relational structures and formula evaluation.

Structures are explicit: per-sort element lists and relation tables as
tuple sets.  Formulas are a small AST over atomic relation applications,
equality, the boolean connectives, and sorted quantifiers; evaluation is
plain Tarskian truth with quantifiers enumerating the (capped) universes.

Consistency here means satisfiability inside the given finite structure;
there is no compactness.  Every report downstream stamps the finite
fragment it was computed in.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence, Union

from .errors import CapExceededError

DEFAULT_UNIVERSE_CAP = 512


@dataclass(frozen=True)
class Var:
    name: str
    sort: str

    def to_json(self) -> list[str]:
        return [self.name, self.sort]


@dataclass(frozen=True)
class Atom:
    rel: str
    args: tuple[Var, ...]


@dataclass(frozen=True)
class Eq:
    left: Var
    right: Var


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    var: Var
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: Var
    body: "Formula"


Formula = Union[Atom, Eq, Not, And, Or, Implies, Exists, Forall]


def free_vars(f: Formula) -> tuple[Var, ...]:
    """Free variables in first-occurrence order."""
    out: list[Var] = []

    def walk(g: Formula, bound: frozenset[str]) -> None:
        if isinstance(g, Atom):
            for v in g.args:
                if v.name not in bound and v not in out:
                    out.append(v)
        elif isinstance(g, Eq):
            for v in (g.left, g.right):
                if v.name not in bound and v not in out:
                    out.append(v)
        elif isinstance(g, Not):
            walk(g.body, bound)
        elif isinstance(g, (And, Or)):
            for p in g.parts:
                walk(p, bound)
        elif isinstance(g, Implies):
            walk(g.left, bound)
            walk(g.right, bound)
        elif isinstance(g, (Exists, Forall)):
            walk(g.body, bound | {g.var.name})
        else:
            raise TypeError(f"not a formula: {g!r}")

    walk(f, frozenset())
    return tuple(out)


def rename_free(f: Formula, mapping: Mapping[str, str]) -> Formula:
    """Rename free variables; binders shadow as usual."""

    def sub(v: Var, bound: frozenset[str]) -> Var:
        if v.name in bound or v.name not in mapping:
            return v
        return Var(mapping[v.name], v.sort)

    def walk(g: Formula, bound: frozenset[str]) -> Formula:
        if isinstance(g, Atom):
            return Atom(g.rel, tuple(sub(v, bound) for v in g.args))
        if isinstance(g, Eq):
            return Eq(sub(g.left, bound), sub(g.right, bound))
        if isinstance(g, Not):
            return Not(walk(g.body, bound))
        if isinstance(g, And):
            return And(tuple(walk(p, bound) for p in g.parts))
        if isinstance(g, Or):
            return Or(tuple(walk(p, bound) for p in g.parts))
        if isinstance(g, Implies):
            return Implies(walk(g.left, bound), walk(g.right, bound))
        if isinstance(g, Exists):
            return Exists(g.var, walk(g.body, bound | {g.var.name}))
        if isinstance(g, Forall):
            return Forall(g.var, walk(g.body, bound | {g.var.name}))
        raise TypeError(f"not a formula: {g!r}")

    return walk(f, frozenset())


def formula_str(f: Formula) -> str:
    if isinstance(f, Atom):
        return f"{f.rel}({', '.join(v.name for v in f.args)})"
    if isinstance(f, Eq):
        return f"{f.left.name} = {f.right.name}"
    if isinstance(f, Not):
        return f"not {formula_str(f.body)}"
    if isinstance(f, And):
        return "(" + " and ".join(formula_str(p) for p in f.parts) + ")"
    if isinstance(f, Or):
        return "(" + " or ".join(formula_str(p) for p in f.parts) + ")"
    if isinstance(f, Implies):
        return f"({formula_str(f.left)} -> {formula_str(f.right)})"
    if isinstance(f, Exists):
        return f"exists {f.var.name}:{f.var.sort}. {formula_str(f.body)}"
    if isinstance(f, Forall):
        return f"forall {f.var.name}:{f.var.sort}. {formula_str(f.body)}"
    raise TypeError(f"not a formula: {f!r}")


@dataclass(frozen=True)
class RelDecl:
    name: str
    profile: tuple[str, ...]


@dataclass(frozen=True)
class Signature:
    sorts: tuple[str, ...]
    relations: tuple[RelDecl, ...]

    def __post_init__(self) -> None:
        if len(set(self.sorts)) != len(self.sorts):
            raise ValueError("duplicate sort names")
        names = [r.name for r in self.relations]
        if len(set(names)) != len(names):
            raise ValueError("duplicate relation names")
        for r in self.relations:
            for s in r.profile:
                if s not in self.sorts:
                    raise ValueError(f"relation {r.name} uses unknown sort {s}")

    def profile(self, rel: str) -> tuple[str, ...]:
        for r in self.relations:
            if r.name == rel:
                return r.profile
        raise KeyError(rel)

    def to_json(self) -> dict:
        return {
            "sorts": list(self.sorts),
            "relations": [
                {"name": r.name, "profile": list(r.profile)} for r in self.relations
            ],
        }

    @staticmethod
    def from_json(data: dict) -> "Signature":
        return Signature(
            tuple(data["sorts"]),
            tuple(
                RelDecl(r["name"], tuple(r["profile"])) for r in data["relations"]
            ),
        )


class RelStructure:
    """A finite structure: explicit universes and relation tables.

    Element values must be hashable and globally unique across sorts, so
    that an element determines its sort.  Structures are treated as
    immutable once built.
    """

    def __init__(
        self,
        signature: Signature,
        universes: Mapping[str, Sequence[Any]],
        tables: Mapping[str, Iterable[tuple]],
        max_universe: int = DEFAULT_UNIVERSE_CAP,
    ) -> None:
        self.signature = signature
        self.max_universe = max_universe
        self.universes: dict[str, tuple] = {}
        self.sort_of: dict[Any, str] = {}
        for sort in signature.sorts:
            elems = tuple(universes.get(sort, ()))
            if not elems:
                raise ValueError(f"universe of sort {sort} is empty")
            if len(elems) > max_universe:
                raise CapExceededError(
                    f"universe of sort {sort} has {len(elems)} elements, "
                    f"cap is {max_universe}"
                )
            if len(set(elems)) != len(elems):
                raise ValueError(f"duplicate elements in sort {sort}")
            for e in elems:
                if e in self.sort_of:
                    raise ValueError(f"element {e!r} appears in two sorts")
                self.sort_of[e] = sort
            self.universes[sort] = elems
        self.tables: dict[str, frozenset] = {}
        for decl in signature.relations:
            rows = frozenset(tuple(row) for row in tables.get(decl.name, ()))
            for row in rows:
                if len(row) != len(decl.profile):
                    raise ValueError(f"bad arity in table {decl.name}: {row}")
                for e, s in zip(row, decl.profile):
                    if self.sort_of.get(e) != s:
                        raise ValueError(
                            f"element {e!r} not of sort {s} in table {decl.name}"
                        )
            self.tables[decl.name] = rows
        self._dtype_cache: dict = {}
        self._sat_cache: dict = {}

    def universe(self, sort: str) -> tuple:
        return self.universes[sort]

    def holds(self, rel: str, args: tuple) -> bool:
        return args in self.tables[rel]

    def to_json(self) -> dict:
        return {
            "signature": self.signature.to_json(),
            "universes": {s: list(u) for s, u in self.universes.items()},
            "tables": {
                name: sorted([list(row) for row in rows])
                for name, rows in self.tables.items()
            },
            "max_universe": self.max_universe,
        }

    @staticmethod
    def from_json(data: dict) -> "RelStructure":
        return RelStructure(
            Signature.from_json(data["signature"]),
            {s: list(u) for s, u in data["universes"].items()},
            {name: [tuple(row) for row in rows] for name, rows in data["tables"].items()},
            max_universe=int(data.get("max_universe", DEFAULT_UNIVERSE_CAP)),
        )


def eval_formula(M: RelStructure, f: Formula, asg: Mapping[str, Any]) -> bool:
    """Standard truth evaluation; quantifiers enumerate the sort's universe."""

    def get(v: Var, env: Mapping[str, Any]) -> Any:
        if v.name not in env:
            raise ValueError(f"unassigned variable {v.name}")
        e = env[v.name]
        if M.sort_of.get(e) != v.sort:
            raise ValueError(
                f"element {e!r} assigned to {v.name} is not of sort {v.sort}"
            )
        return e

    def ev(g: Formula, env: dict[str, Any]) -> bool:
        if isinstance(g, Atom):
            return M.holds(g.rel, tuple(get(v, env) for v in g.args))
        if isinstance(g, Eq):
            return get(g.left, env) == get(g.right, env)
        if isinstance(g, Not):
            return not ev(g.body, env)
        if isinstance(g, And):
            return all(ev(p, env) for p in g.parts)
        if isinstance(g, Or):
            return any(ev(p, env) for p in g.parts)
        if isinstance(g, Implies):
            return (not ev(g.left, env)) or ev(g.right, env)
        if isinstance(g, (Exists, Forall)):
            shadowed = g.var.name in env
            saved = env.get(g.var.name)
            hits = []
            for e in M.universe(g.var.sort):
                env[g.var.name] = e
                hits.append(ev(g.body, env))
                if isinstance(g, Exists) and hits[-1]:
                    break
                if isinstance(g, Forall) and not hits[-1]:
                    break
            if shadowed:
                env[g.var.name] = saved
            else:
                env.pop(g.var.name, None)
            return any(hits) if isinstance(g, Exists) else all(hits)
        raise TypeError(f"not a formula: {g!r}")

    return ev(f, dict(asg))


DeltaType = tuple  # nested tuple: per formula, per argument arrangement


def delta_type(
    M: RelStructure,
    elems: Sequence[Any],
    sorts: Sequence[str],
    delta: Sequence[Formula],
) -> DeltaType:
    """Truth vector of the tuple against every formula of ``delta`` under
    every argument arrangement (positions map into the tuple).

    Arrangements whose sorts do not match evaluate to None.  Equality of
    the resulting vectors defines Delta-equivalence of tuples.
    """
    elems = tuple(elems)
    sorts = tuple(sorts)
    if len(elems) != len(sorts):
        raise ValueError("element/sort length mismatch")
    key = (tuple(delta), elems, sorts)
    cached = M._dtype_cache.get(key)
    if cached is not None:
        return cached
    rows = []
    n = len(elems)
    for f in delta:
        fv = free_vars(f)
        row = []
        for arrangement in itertools.product(range(n), repeat=len(fv)):
            if all(sorts[p] == v.sort for p, v in zip(arrangement, fv)):
                asg = {v.name: elems[p] for p, v in zip(arrangement, fv)}
                row.append(eval_formula(M, f, asg))
            else:
                row.append(None)
        rows.append(tuple(row))
    out = tuple(rows)
    M._dtype_cache[key] = out
    return out


@dataclass(frozen=True)
class SplitFormula:
    """A formula with the usual subject/parameter split phi(x; y).

    ``subject`` lists the x-variables that a witness must fill,
    ``params`` the y-slots that parameter tuples plug into.
    """

    subject: tuple[Var, ...]
    params: tuple[Var, ...]
    body: Formula

    def __post_init__(self) -> None:
        names = [v.name for v in self.subject + self.params]
        if len(set(names)) != len(names):
            raise ValueError("subject/parameter variable names must be distinct")
        declared = set(names)
        for v in free_vars(self.body):
            if v.name not in declared:
                raise ValueError(f"free variable {v.name} is not declared")

    @property
    def param_sorts(self) -> tuple[str, ...]:
        return tuple(v.sort for v in self.params)

    def describe(self) -> str:
        xs = ",".join(v.name for v in self.subject)
        ys = ",".join(v.name for v in self.params)
        return f"phi({xs}; {ys}) = {formula_str(self.body)}"

    def to_json(self) -> dict:
        return {
            "subject": [v.to_json() for v in self.subject],
            "params": [v.to_json() for v in self.params],
            "body": formula_to_json(self.body),
        }

    @staticmethod
    def from_json(data: dict) -> "SplitFormula":
        return SplitFormula(
            tuple(Var(n, s) for n, s in data["subject"]),
            tuple(Var(n, s) for n, s in data["params"]),
            formula_from_json(data["body"]),
        )


def satisfier_set(
    M: RelStructure, sf: SplitFormula, param_tuple: tuple
) -> frozenset:
    """All subject assignments (as tuples) satisfying one instance."""
    key = (sf, tuple(param_tuple))
    cached = M._sat_cache.get(key)
    if cached is not None:
        return cached
    if len(param_tuple) != len(sf.params):
        raise ValueError("parameter tuple arity mismatch")
    base = {v.name: e for v, e in zip(sf.params, param_tuple)}
    hits = []
    for subject in itertools.product(*(M.universe(v.sort) for v in sf.subject)):
        asg = dict(base)
        asg.update({v.name: e for v, e in zip(sf.subject, subject)})
        if eval_formula(M, sf.body, asg):
            hits.append(subject)
    out = frozenset(hits)
    M._sat_cache[key] = out
    return out


def consistent(
    M: RelStructure, sf: SplitFormula, param_tuples: Sequence[tuple]
) -> bool:
    """True iff some subject satisfies every listed instance simultaneously.

    An empty instance list is consistent (witnessed by any element).
    """
    if not param_tuples:
        return True
    acc: frozenset | None = None
    for p in param_tuples:
        s = satisfier_set(M, sf, tuple(p))
        acc = s if acc is None else (acc & s)
        if not acc:
            return False
    return bool(acc)


def k_inconsistent(
    M: RelStructure, sf: SplitFormula, param_tuples: Sequence[tuple], k: int
) -> bool:
    """True iff every size-``k`` subset of the instances is inconsistent.

    Vacuously true when fewer than ``k`` instances are given; callers that
    need the family to exist must check that separately.
    """
    return all(
        not consistent(M, sf, combo)
        for combo in itertools.combinations([tuple(p) for p in param_tuples], k)
    )


def conjoin_params(sf: SplitFormula, copies: int) -> SplitFormula:
    """Conjunction of ``copies`` instances of the formula over disjoint
    parameter slots: psi(x; y0..y_{copies-1}) = AND_i phi(x; y_i)."""
    if copies < 1:
        raise ValueError("copies must be >= 1")
    parts = []
    new_params: list[Var] = []
    for c in range(copies):
        ren = {v.name: f"{v.name}__{c}" for v in sf.params}
        parts.append(rename_free(sf.body, ren))
        new_params.extend(Var(f"{v.name}__{c}", v.sort) for v in sf.params)
    return SplitFormula(sf.subject, tuple(new_params), And(tuple(parts)))


def formula_to_json(f: Formula) -> dict:
    if isinstance(f, Atom):
        return {"op": "atom", "rel": f.rel, "args": [v.to_json() for v in f.args]}
    if isinstance(f, Eq):
        return {"op": "eq", "left": f.left.to_json(), "right": f.right.to_json()}
    if isinstance(f, Not):
        return {"op": "not", "body": formula_to_json(f.body)}
    if isinstance(f, And):
        return {"op": "and", "parts": [formula_to_json(p) for p in f.parts]}
    if isinstance(f, Or):
        return {"op": "or", "parts": [formula_to_json(p) for p in f.parts]}
    if isinstance(f, Implies):
        return {
            "op": "implies",
            "left": formula_to_json(f.left),
            "right": formula_to_json(f.right),
        }
    if isinstance(f, Exists):
        return {"op": "exists", "var": f.var.to_json(), "body": formula_to_json(f.body)}
    if isinstance(f, Forall):
        return {"op": "forall", "var": f.var.to_json(), "body": formula_to_json(f.body)}
    raise TypeError(f"not a formula: {f!r}")


def formula_from_json(data: dict) -> Formula:
    op = data["op"]
    if op == "atom":
        return Atom(data["rel"], tuple(Var(n, s) for n, s in data["args"]))
    if op == "eq":
        return Eq(Var(*data["left"]), Var(*data["right"]))
    if op == "not":
        return Not(formula_from_json(data["body"]))
    if op == "and":
        return And(tuple(formula_from_json(p) for p in data["parts"]))
    if op == "or":
        return Or(tuple(formula_from_json(p) for p in data["parts"]))
    if op == "implies":
        return Implies(formula_from_json(data["left"]), formula_from_json(data["right"]))
    if op == "exists":
        return Exists(Var(*data["var"]), formula_from_json(data["body"]))
    if op == "forall":
        return Forall(Var(*data["var"]), formula_from_json(data["body"]))
    raise ValueError(f"unknown formula op {op!r}")
