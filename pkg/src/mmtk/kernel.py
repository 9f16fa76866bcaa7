"""Objects, theory graphs, contexts and substitutions.

Objects are immutable trees in the OpenMath style::

    Sym(theory, name)         a fully qualified symbol reference
    Var(name)                 a variable
    App(head, args)           application, args nonempty
    Bind(binder, ctx, body)   binding of a nonempty context
    Hid()                     the filter constant

A context is a tuple of ``(name, type_or_None)`` pairs, a substitution a tuple
of ``(name, value)`` pairs.  Both are plain tuples so they hash and compare.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence, Union

from .errors import UnknownTheory, UnknownView

DEFAULT_FUEL = 100_000


# --------------------------------------------------------------------------
# objects


@dataclass(frozen=True, eq=True)
class Sym:
    theory: str
    name: str
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("sym", self.theory, self.name)))

    def __hash__(self):
        return self._hash

    @property
    def qname(self) -> tuple[str, str]:
        return (self.theory, self.name)


@dataclass(frozen=True, eq=True)
class Var:
    name: str
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("var", self.name)))

    def __hash__(self):
        return self._hash


@dataclass(frozen=True, eq=True)
class App:
    head: "Object"
    args: tuple["Object", ...]
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ValueError("App needs at least one argument")
        object.__setattr__(self, "_hash", hash(("app", self.head, self.args)))

    def __hash__(self):
        return self._hash


@dataclass(frozen=True, eq=True)
class Bind:
    binder: "Object"
    context: tuple[tuple[str, Optional["Object"]], ...]
    body: "Object"
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ctx = tuple((n, t) for n, t in self.context)
        if not ctx:
            raise ValueError("Bind needs a nonempty context")
        names = [n for n, _ in ctx]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate bound variables in {names}")
        object.__setattr__(self, "context", ctx)
        object.__setattr__(self, "_hash", hash(("bind", self.binder, ctx, self.body)))

    def __hash__(self):
        return self._hash

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.context)


@dataclass(frozen=True, eq=True)
class Hid:
    def __hash__(self):
        return 0x48494400


HID = Hid()

Object = Union[Sym, Var, App, Bind, Hid]
Context = tuple[tuple[str, Optional[Object]], ...]
Substitution = tuple[tuple[str, Object], ...]
QName = tuple[str, str]


def app(head: Object, *args: Object) -> App:
    return App(head, tuple(args))


def contains_hid(o: Object) -> bool:
    match o:
        case Hid():
            return True
        case App(head, args):
            return contains_hid(head) or any(contains_hid(a) for a in args)
        case Bind(binder, ctx, body):
            return (
                contains_hid(binder)
                or any(t is not None and contains_hid(t) for _, t in ctx)
                or contains_hid(body)
            )
    return False


def symbols_of(o: Object) -> Iterator[Sym]:
    """Yield every symbol occurrence in ``o``, left to right."""
    match o:
        case Sym():
            yield o
        case App(head, args):
            yield from symbols_of(head)
            for a in args:
                yield from symbols_of(a)
        case Bind(binder, ctx, body):
            yield from symbols_of(binder)
            for _, t in ctx:
                if t is not None:
                    yield from symbols_of(t)
            yield from symbols_of(body)


def subobjects(o: Object) -> Iterator[Object]:
    yield o
    match o:
        case App(head, args):
            yield from subobjects(head)
            for a in args:
                yield from subobjects(a)
        case Bind(binder, ctx, body):
            yield from subobjects(binder)
            for _, t in ctx:
                if t is not None:
                    yield from subobjects(t)
            yield from subobjects(body)


def size(o: Object) -> int:
    return sum(1 for _ in subobjects(o))


_FV_CACHE: dict[Object, frozenset[str]] = {}


def free_vars(o: Object) -> frozenset[str]:
    match o:
        case Var(name):
            return frozenset((name,))
        case Sym() | Hid():
            return frozenset()
    cached = _FV_CACHE.get(o)
    if cached is not None:
        return cached
    match o:
        case App(head, args):
            out = free_vars(head).union(*(free_vars(a) for a in args))
        case Bind(binder, ctx, body):
            out = set(free_vars(binder))
            bound: set[str] = set()
            for n, t in ctx:
                if t is not None:
                    out |= free_vars(t) - bound
                bound.add(n)
            out |= free_vars(body) - bound
            out = frozenset(out)
    if len(_FV_CACHE) > 200_000:
        _FV_CACHE.clear()
    _FV_CACHE[o] = out
    return out


# --------------------------------------------------------------------------
# substitution and alpha-equivalence


def fresh_name(base: str, avoid: Iterable[str]) -> str:
    """``base`` followed by the smallest positive integer that is not in ``avoid``."""
    avoid = set(avoid)
    k = 1
    while f"{base}{k}" in avoid:
        k += 1
    return f"{base}{k}"


def subst_apply(o: Object, s: Substitution | dict[str, Object]) -> Object:
    """Capture-avoiding simultaneous substitution ``o[s]``."""
    sub = dict(s)
    if not sub:
        return o
    return _subst(o, sub)


def _subst(o: Object, sub: dict[str, Object]) -> Object:
    match o:
        case Var(name):
            return sub.get(name, o)
        case Sym() | Hid():
            return o
    fv = free_vars(o)
    relevant = {k: v for k, v in sub.items() if k in fv}
    if not relevant:
        return o
    match o:
        case App(head, args):
            return App(_subst(head, relevant), tuple(_subst(a, relevant) for a in args))
        case Bind():
            return _subst_bind(o, relevant)
    raise TypeError(f"not an object: {o!r}")


def _subst_bind(o: Bind, sub: dict[str, Object]) -> Object:
    binder = _subst(o.binder, sub)
    range_fv: set[str] = set()
    for v in sub.values():
        range_fv |= free_vars(v)
    current = dict(sub)
    new_ctx = []
    used = set(o.names)
    for i, (n, t) in enumerate(o.context):
        t2 = None if t is None else (_subst(t, current) if current else t)
        current.pop(n, None)
        name = n
        if current and n in range_fv:
            rest_fv = set(free_vars(o.body))
            for _, t_later in o.context[i + 1 :]:
                if t_later is not None:
                    rest_fv |= free_vars(t_later)
            if not any(k in rest_fv for k in current):
                new_ctx.append((name, t2))
                continue
            name = fresh_name(n, range_fv | rest_fv | used | set(current))
            used.add(name)
            current[n] = Var(name)
        new_ctx.append((name, t2))
    body = _subst(o.body, current) if current else o.body
    return Bind(binder, tuple(new_ctx), body)


def rename_bound(o: Bind, names: Sequence[str]) -> Bind:
    """Rename the variables bound by ``o`` to ``names`` (which must be fresh for its body)."""
    sub: dict[str, Object] = {}
    ctx = []
    for (n, t), m in zip(o.context, names):
        ctx.append((m, None if t is None else subst_apply(t, sub)))
        if n != m:
            sub[n] = Var(m)
    return Bind(o.binder, tuple(ctx), subst_apply(o.body, sub))


def alpha_eq(o1: Object, o2: Object) -> bool:
    """Identity up to consistent renaming of bound variables."""
    if o1 is o2:
        return True
    return _alpha(o1, o2, {}, {}, 0)


def _alpha(a: Object, b: Object, ea: dict[str, int], eb: dict[str, int], depth: int) -> bool:
    match a, b:
        case Var(x), Var(y):
            ix, iy = ea.get(x), eb.get(y)
            if ix is None and iy is None:
                return x == y
            return ix == iy
        case Sym(), Sym():
            return a == b
        case Hid(), Hid():
            return True
        case App(h1, as1), App(h2, as2):
            if len(as1) != len(as2):
                return False
            if not ea and not eb and a == b:
                return True
            return _alpha(h1, h2, ea, eb, depth) and all(
                _alpha(x, y, ea, eb, depth) for x, y in zip(as1, as2)
            )
        case Bind(bd1, c1, body1), Bind(bd2, c2, body2):
            if len(c1) != len(c2) or not _alpha(bd1, bd2, ea, eb, depth):
                return False
            ea, eb = dict(ea), dict(eb)
            for (n1, t1), (n2, t2) in zip(c1, c2):
                if (t1 is None) != (t2 is None):
                    return False
                if t1 is not None and not _alpha(t1, t2, ea, eb, depth):
                    return False
                ea[n1] = depth
                eb[n2] = depth
                depth += 1
            return _alpha(body1, body2, ea, eb, depth)
    return False


# --------------------------------------------------------------------------
# declarations


@dataclass(frozen=True)
class SymbolDecl:
    name: str
    type: Optional[Object] = None
    definiens: Optional[Object] = None


@dataclass(frozen=True)
class Theory:
    name: str
    meta: Optional[str] = None
    body: tuple[SymbolDecl, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))

    def decl(self, name: str) -> Optional[SymbolDecl]:
        for d in self.body:
            if d.name == name:
                return d
        return None

    @property
    def symbol_names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.body)


@dataclass(frozen=True)
class Named:
    view: str


@dataclass(frozen=True)
class Ident:
    theory: str


@dataclass(frozen=True)
class Comp:
    """Diagram-order composition: apply ``first``, then ``then``."""

    first: "MorphismExpr"
    then: "MorphismExpr"


MorphismExpr = Union[Named, Ident, Comp]


def compose(*ms: MorphismExpr) -> MorphismExpr:
    out = ms[0]
    for m in ms[1:]:
        out = Comp(out, m)
    return out


@dataclass(frozen=True)
class Assignment:
    symbol: str
    image: Object


@dataclass(frozen=True)
class View:
    name: str
    source: str
    target: str
    meta_morph: Optional[MorphismExpr] = None
    body: tuple[Assignment, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))

    def image(self, symbol: str) -> Optional[Object]:
        for a in self.body:
            if a.symbol == symbol:
                return a.image
        return None


Decl = Union[Theory, View]


@dataclass(frozen=True)
class TheoryGraph:
    decls: tuple[Decl, ...] = ()
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "decls", tuple(self.decls))
        theories: dict[str, Theory] = {}
        views: dict[str, View] = {}
        for d in self.decls:
            if isinstance(d, Theory):
                theories.setdefault(d.name, d)
            else:
                views.setdefault(d.name, d)
        object.__setattr__(self, "_index", {"theories": theories, "views": views, "acc": {}, "decl": {}})

    @property
    def theories(self) -> dict[str, Theory]:
        return self._index["theories"]

    @property
    def views(self) -> dict[str, View]:
        return self._index["views"]

    def theory(self, name: str) -> Theory:
        try:
            return self.theories[name]
        except KeyError:
            raise UnknownTheory(f"unknown theory {name!r}") from None

    def view(self, name: str) -> View:
        try:
            return self.views[name]
        except KeyError:
            raise UnknownView(f"unknown view {name!r}") from None

    def meta_chain(self, t: str) -> list[str]:
        """Theory names from the root of the meta-chain down to ``t``."""
        chain = []
        seen = set()
        cur: Optional[str] = t
        while cur is not None:
            if cur in seen:
                break
            seen.add(cur)
            chain.append(cur)
            cur = self.theory(cur).meta
            if cur is not None and cur not in self.theories:
                break
        return chain[::-1]

    def lookup(self, theory: str, name: str) -> Optional[SymbolDecl]:
        key = (theory, name)
        cache = self._index["decl"]
        if key not in cache:
            th = self.theories.get(theory)
            cache[key] = None if th is None else th.decl(name)
        return cache[key]

    def accessible(self, t: str) -> frozenset[QName]:
        cache = self._index["acc"]
        if t not in cache:
            cache[t] = frozenset(accessible_symbols(self, t))
        return cache[t]

    def extend(self, *decls: Decl) -> "TheoryGraph":
        return TheoryGraph(self.decls + tuple(decls))

    def replace(self, decl: Decl) -> "TheoryGraph":
        """Swap the declaration of the same kind and name for ``decl``."""
        out = []
        for d in self.decls:
            if type(d) is type(decl) and d.name == decl.name:
                out.append(decl)
            else:
                out.append(d)
        return TheoryGraph(tuple(out))


def accessible_symbols(graph: TheoryGraph, t: str) -> list[QName]:
    out = []
    for th in graph.meta_chain(t):
        out.extend((th, n) for n in graph.theory(th).symbol_names)
    return out


def is_object_over(graph: TheoryGraph, t: str, o: Object, ctx: Context = ()) -> bool:
    acc = graph.accessible(t)
    if any(s.qname not in acc for s in symbols_of(o)):
        return False
    bound = {n for n, _ in ctx}
    if not free_vars(o) <= bound:
        return False
    # context types are themselves objects over the preceding context
    seen: set[str] = set()
    for n, ty in ctx:
        if ty is not None and not free_vars(ty) <= seen:
            return False
        seen.add(n)
    return True


# --------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    location: str = ""


@dataclass
class CheckReport:
    violations: list[Violation] = field(default_factory=list)
    fuel_exhausted: bool = False

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, message: str, location: str = "") -> None:
        self.violations.append(Violation(code, message, location))

    def merge(self, other: "CheckReport") -> None:
        self.violations.extend(other.violations)
        self.fuel_exhausted = self.fuel_exhausted or other.fuel_exhausted

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]


def _morph_refs(m: MorphismExpr) -> Iterator[Union[Named, Ident]]:
    match m:
        case Comp(f, g):
            yield from _morph_refs(f)
            yield from _morph_refs(g)
        case _:
            yield m


def check_structure(graph: TheoryGraph) -> CheckReport:
    """Name uniqueness, reference resolution and declaration order."""
    report = CheckReport()
    theories: dict[str, Theory] = {}
    views: set[str] = set()
    for d in graph.decls:
        if isinstance(d, Theory):
            loc = f"theory {d.name}"
            if d.name in theories:
                report.add("duplicate-theory", f"theory {d.name} declared twice", loc)
            if d.meta is not None and d.meta not in theories:
                report.add("unknown-meta", f"meta-theory {d.meta} is not declared earlier", loc)
            names = [s.name for s in d.body]
            seen: set[str] = set()
            for s in d.body:
                sloc = f"{loc}, symbol {s.name}"
                if s.name in seen:
                    report.add("duplicate-symbol", f"symbol {s.name} declared twice", sloc)
                seen.add(s.name)
                for part, o in (("type", s.type), ("definiens", s.definiens)):
                    if o is None:
                        continue
                    if contains_hid(o):
                        report.add("hid-in-declaration", f"{part} of {s.name} contains ?hid", sloc)
                    for sym in symbols_of(o):
                        if sym.theory == d.name:
                            if sym.name not in names:
                                report.add("unknown-symbol", f"{d.name}/{sym.name} is not declared", sloc)
                        elif sym.theory not in theories:
                            report.add("unknown-theory", f"theory {sym.theory} is not declared earlier", sloc)
                        elif theories[sym.theory].decl(sym.name) is None:
                            report.add("unknown-symbol", f"{sym.theory}/{sym.name} is not declared", sloc)
            theories.setdefault(d.name, d)
        else:
            loc = f"view {d.name}"
            if d.name in views:
                report.add("duplicate-view", f"view {d.name} declared twice", loc)
            ok = True
            for end in (d.source, d.target):
                if end not in theories:
                    report.add("unknown-theory", f"theory {end} is not declared earlier", loc)
                    ok = False
            if d.meta_morph is not None:
                for r in _morph_refs(d.meta_morph):
                    if isinstance(r, Named) and r.view not in views:
                        report.add("unknown-view", f"view {r.view} is not declared earlier", loc)
                    if isinstance(r, Ident) and r.theory not in theories:
                        report.add("unknown-theory", f"theory {r.theory} is not declared earlier", loc)
            if ok:
                src = theories[d.source]
                declared = [s.name for s in src.body]
                assigned = [a.symbol for a in d.body]
                for a in d.body:
                    if a.symbol not in declared:
                        report.add(
                            "unknown-domain-symbol",
                            f"unknown domain symbol {a.symbol} (not declared in {d.source})",
                            f"{loc}, assignment {a.symbol}",
                        )
                    for sym in symbols_of(a.image):
                        if sym.theory not in theories or theories[sym.theory].decl(sym.name) is None:
                            report.add(
                                "unknown-symbol",
                                f"{sym.theory}/{sym.name} is not declared",
                                f"{loc}, assignment {a.symbol}",
                            )
                for c in declared:
                    if c not in assigned:
                        report.add("missing-assignment", f"no assignment for {d.source}/{c}", loc)
                if len(set(assigned)) != len(assigned):
                    report.add("duplicate-assignment", "a symbol is assigned twice", loc)
                elif [c for c in declared if c in assigned] != [c for c in assigned if c in declared]:
                    report.add("assignment-order", "assignments are not in declaration order", loc)
            views.add(d.name)
    return report


def well_formed_graph(
    graph: TheoryGraph, *, fuel: int = DEFAULT_FUEL, strict: bool = False
) -> CheckReport:
    """Structural checks, then objects-over, declaration typing and view checks."""
    from .foundation import check_decl, detect_def_cycles
    from .morphisms import check_view

    report = check_structure(graph)
    if not report.ok:
        return report
    for th in (d for d in graph.decls if isinstance(d, Theory)):
        for s in th.body:
            for part, o in (("type", s.type), ("definiens", s.definiens)):
                if o is not None and not is_object_over(graph, th.name, o):
                    report.add(
                        "not-object-over",
                        f"{part} of {s.name} is not an object over {th.name}",
                        f"theory {th.name}, symbol {s.name}",
                    )
    if not report.ok:
        return report
    cycles = detect_def_cycles(graph)
    cyclic = {q for cyc in cycles for q in cyc}
    for cyc in cycles:
        report.add(
            "definition-cycle",
            "definitions form a cycle: " + " -> ".join(f"{t}/{n}" for t, n in cyc),
            f"theory {cyc[0][0]}",
        )
    for th in (d for d in graph.decls if isinstance(d, Theory)):
        for s in th.body:
            if (th.name, s.name) in cyclic or (s.type is None and s.definiens is None):
                continue
            res = check_decl(graph, th.name, s, fuel=fuel)
            if res.fuel_exhausted:
                report.fuel_exhausted = True
                report.add("fuel-exhausted", f"fuel ran out checking {s.name}", f"theory {th.name}, symbol {s.name}")
            elif not res.holds:
                report.add(
                    "decl-ill-typed",
                    res.message or f"declaration {s.name} does not check",
                    f"theory {th.name}, symbol {s.name}",
                )
    for v in (d for d in graph.decls if isinstance(d, View)):
        report.merge(check_view(graph, v, fuel=fuel, strict=strict))
    return report
