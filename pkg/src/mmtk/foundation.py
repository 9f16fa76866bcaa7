"""Typing and equality judgments with dependency-cut tracking.

Two foundations are built in.  ``LF_LITE`` governs every theory whose
meta-chain is rooted in the theory named ``LF``; it is a small dependent type
theory (sorts ``type : kind``, dependent products, abstraction, application,
beta/delta conversion).  Every other theory is governed by ``STRUCTURAL``,
which only knows declaration lookup, the context rule and conversion by
delta-congruence.

Every use of a declared type (TOtype) and of a definiens (TOdef, i.e. one
delta step) is recorded.  The union of those uses along the derivation that
was found is returned as the judgment's dependency cut.  Passing a cut back in
restricts TOtype/TOdef to the symbols in it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Literal, Optional

from .errors import FilteredObject, FuelExhausted, NotAnObjectOver
from .kernel import (
    DEFAULT_FUEL,
    App,
    Bind,
    Context,
    Hid,
    Object,
    QName,
    Sym,
    SymbolDecl,
    TheoryGraph,
    Var,
    alpha_eq,
    contains_hid,
    fresh_name,
    free_vars,
    is_object_over,
    subst_apply,
    symbols_of,
)

LF = "LF"
LF_SYMBOLS = ("type", "kind", "Pi", "lambda", "arrow")


class FoundationId(enum.Enum):
    LF_LITE = "LF_LITE"
    STRUCTURAL = "STRUCTURAL"


@dataclass(frozen=True)
class FoundationHandle:
    id: FoundationId
    root: str


def foundation_for(graph: TheoryGraph, t: str) -> FoundationHandle:
    root = graph.meta_chain(t)[0]
    fid = FoundationId.LF_LITE if root == LF else FoundationId.STRUCTURAL
    return FoundationHandle(fid, root)


@dataclass(frozen=True)
class DependencyCut:
    d_type: frozenset[QName] = frozenset()
    d_def: frozenset[QName] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "d_type", frozenset(self.d_type))
        object.__setattr__(self, "d_def", frozenset(self.d_def))

    def __or__(self, other: "DependencyCut") -> "DependencyCut":
        return DependencyCut(self.d_type | other.d_type, self.d_def | other.d_def)

    def __le__(self, other: "DependencyCut") -> bool:
        return self.d_type <= other.d_type and self.d_def <= other.d_def


EMPTY_CUT = DependencyCut()


@dataclass
class JudgmentResult:
    holds: bool
    cut: DependencyCut = EMPTY_CUT
    trace: Optional[list[str]] = None
    fuel_exhausted: bool = False
    message: str = ""

    @property
    def status(self) -> str:
        if self.fuel_exhausted:
            return "fuel-exhausted"
        return "holds" if self.holds else "fails"


class _Fail(Exception):
    pass


def lf_sym(name: str) -> Sym:
    return Sym(LF, name)


def elaborate_arrow(args: Iterable[Object], root: str = LF) -> Object:
    """``arrow(A1, ..., An, B)`` as a product binding unused variables."""
    args = tuple(args)
    if len(args) < 2:
        raise ValueError("arrow needs at least a domain and a codomain")
    avoid: set[str] = set()
    for a in args:
        avoid |= free_vars(a)
    names: list[str] = []
    for _ in args[:-1]:
        name = "_" if "_" not in avoid and "_" not in names else fresh_name("_", avoid | set(names))
        names.append(name)
    return Bind(Sym(root, "Pi"), tuple(zip(names, args[:-1])), args[-1])


class Checker:
    """One judgment run: governed theory, restrictions, fuel and the recorded cut."""

    def __init__(
        self,
        graph: TheoryGraph,
        theory: str,
        *,
        fuel: int = DEFAULT_FUEL,
        allow_type: Optional[frozenset[QName]] = None,
        allow_def: Optional[frozenset[QName]] = None,
    ):
        self.graph = graph
        self.theory = theory
        self.handle = foundation_for(graph, theory)
        self.lf = self.handle.id is FoundationId.LF_LITE
        self.root = self.handle.root
        self.fuel = fuel
        self.allow_type = allow_type
        self.allow_def = allow_def
        self.used_type: set[QName] = set()
        self.used_def: set[QName] = set()
        if self.lf:
            self.TYPE, self.KIND = Sym(LF, "type"), Sym(LF, "kind")
            self.PI, self.LAMBDA, self.ARROW = Sym(LF, "Pi"), Sym(LF, "lambda"), Sym(LF, "arrow")
            self._builtins = {self.TYPE, self.KIND, self.PI, self.LAMBDA, self.ARROW}
        else:
            self._builtins = set()

    # -- bookkeeping ------------------------------------------------------

    @property
    def cut(self) -> DependencyCut:
        return DependencyCut(frozenset(self.used_type), frozenset(self.used_def))

    def _tick(self) -> None:
        self.fuel -= 1
        if self.fuel < 0:
            raise FuelExhausted("step budget exhausted")

    def _snapshot(self):
        return (set(self.used_type), set(self.used_def))

    def _restore(self, snap) -> None:
        self.used_type, self.used_def = set(snap[0]), set(snap[1])

    def declared_type(self, s: Sym) -> Optional[Object]:
        if self.allow_type is not None and s.qname not in self.allow_type:
            return None
        d = self.graph.lookup(s.theory, s.name)
        if d is None or d.type is None:
            return None
        self.used_type.add(s.qname)
        return d.type

    def definiens(self, s: Sym) -> Optional[Object]:
        if self.allow_def is not None and s.qname not in self.allow_def:
            return None
        d = self.graph.lookup(s.theory, s.name)
        if d is None or d.definiens is None:
            return None
        self.used_def.add(s.qname)
        return d.definiens

    def _has_definiens(self, s: Sym) -> bool:
        if self.allow_def is not None and s.qname not in self.allow_def:
            return False
        d = self.graph.lookup(s.theory, s.name)
        return d is not None and d.definiens is not None

    # -- reduction --------------------------------------------------------

    def _is_curried(self, binder: Object) -> bool:
        return self.lf and (binder == self.PI or binder == self.LAMBDA)

    @staticmethod
    def peel(b: Bind) -> tuple[str, Optional[Object], Object]:
        """Split off the first binding of a curried binder."""
        (x, ty), rest = b.context[0], b.context[1:]
        body = Bind(b.binder, rest, b.body) if rest else b.body
        return x, ty, body

    def whnf(self, o: Object, *, delta: bool) -> Object:
        while True:
            match o:
                case App(App(h, a1), a2) if self.lf:
                    o = App(h, a1 + a2)
                    continue
                case App(h, args) if self.lf and h == self.ARROW:
                    # elaboration is not a reduction step
                    o = elaborate_arrow(args)
                    continue
                case App(Bind(b, _, _) as lam, args) if self.lf and b == self.LAMBDA:
                    self._tick()
                    x, _, body = self.peel(lam)
                    reduced = subst_apply(body, {x: args[0]})
                    o = App(reduced, args[1:]) if len(args) > 1 else reduced
                    continue
                case App(Sym() as h, args) if delta and self._has_definiens(h):
                    self._tick()
                    o = App(self.definiens(h), args)
                    continue
                case Sym() if delta and self._has_definiens(o):
                    self._tick()
                    o = self.definiens(o)
                    continue
            return o

    def _unfold_head(self, o: Object) -> Optional[Object]:
        match o:
            case Sym() if self._has_definiens(o):
                self._tick()
                return self.definiens(o)
            case App(Sym() as h, args) if self._has_definiens(h):
                self._tick()
                return App(self.definiens(h), args)
        return None

    def normalize(self, o: Object, strategy: str = "outermost") -> Object:
        if strategy == "outermost":
            return self._nf_outer(o)
        if strategy == "innermost":
            return self._nf_inner(o)
        raise ValueError(f"unknown strategy {strategy!r}")

    def _nf_outer(self, o: Object) -> Object:
        o = self.whnf(o, delta=True)
        match o:
            case App(h, args):
                return App(self._nf_outer(h), tuple(self._nf_outer(a) for a in args))
            case Bind(b, ctx, body):
                return Bind(
                    self._nf_outer(b),
                    tuple((n, None if t is None else self._nf_outer(t)) for n, t in ctx),
                    self._nf_outer(body),
                )
        return o

    def _nf_inner(self, o: Object) -> Object:
        match o:
            case App(h, args):
                new_args = tuple(reversed([self._nf_inner(a) for a in reversed(args)]))
                o = App(self._nf_inner(h), new_args)
            case Bind(b, ctx, body):
                new_body = self._nf_inner(body)
                new_ctx = tuple(
                    reversed([(n, None if t is None else self._nf_inner(t)) for n, t in reversed(ctx)])
                )
                o = Bind(self._nf_inner(b), new_ctx, new_body)
        step = self._contract_root(o)
        if step is None:
            return o
        return self._nf_inner(step)

    def _contract_root(self, o: Object) -> Optional[Object]:
        match o:
            case App(App(h, a1), a2) if self.lf:
                return App(h, a1 + a2)
            case App(h, args) if self.lf and h == self.ARROW:
                return elaborate_arrow(args)
            case App(Bind(b, _, _) as lam, args) if self.lf and b == self.LAMBDA:
                self._tick()
                x, _, body = self.peel(lam)
                reduced = subst_apply(body, {x: args[0]})
                return App(reduced, args[1:]) if len(args) > 1 else reduced
            case App(Sym(), _) | Sym():
                return self._unfold_head(o)
        return None

    # -- equality ---------------------------------------------------------

    def eq(self, a: Object, b: Object) -> bool:
        if alpha_eq(a, b):
            return True
        a = self.whnf(a, delta=False)
        b = self.whnf(b, delta=False)
        if alpha_eq(a, b):
            return True
        snap = self._snapshot()
        if self._congruent(a, b):
            return True
        self._restore(snap)
        a2 = self._unfold_head(a)
        if a2 is not None:
            return self.eq(a2, b)
        b2 = self._unfold_head(b)
        if b2 is not None:
            return self.eq(a, b2)
        return False

    def _congruent(self, a: Object, b: Object) -> bool:
        match a, b:
            case App(h1, as1), App(h2, as2):
                if len(as1) != len(as2):
                    return False
                return self.eq(h1, h2) and all(self.eq(x, y) for x, y in zip(as1, as2))
            case Bind(b1, c1, _), Bind(b2, c2, _):
                if self._is_curried(b1) and b1 == b2:
                    x, t1, r1 = self.peel(a)
                    y, t2, r2 = self.peel(b)
                    if (t1 is None) != (t2 is None):
                        return False
                    if t1 is not None and not self.eq(t1, t2):
                        return False
                    z = fresh_name("v", free_vars(a) | free_vars(b) | {x, y})
                    return self.eq(subst_apply(r1, {x: Var(z)}), subst_apply(r2, {y: Var(z)}))
                if len(c1) != len(c2) or not self.eq(b1, b2):
                    return False
                avoid = set(free_vars(a) | free_vars(b)) | set(a.names) | set(b.names)
                s1: dict[str, Object] = {}
                s2: dict[str, Object] = {}
                for (n1, t1), (n2, t2) in zip(c1, c2):
                    if (t1 is None) != (t2 is None):
                        return False
                    if t1 is not None and not self.eq(subst_apply(t1, s1), subst_apply(t2, s2)):
                        return False
                    z = fresh_name("v", avoid)
                    avoid.add(z)
                    s1[n1], s2[n2] = Var(z), Var(z)
                return self.eq(subst_apply(a.body, s1), subst_apply(b.body, s2))
        return False

    # -- typing -----------------------------------------------------------

    def infer(self, ctx: list[tuple[str, Optional[Object]]], o: Object) -> Object:
        match o:
            case Hid():
                raise _Fail("?hid has no type")
            case Var(x):
                for n, t in reversed(ctx):
                    if n == x:
                        if t is None:
                            raise _Fail(f"variable ${x} is untyped")
                        return t
                raise _Fail(f"unbound variable ${x}")
            case Sym():
                if o in self._builtins:
                    if o == self.TYPE:
                        return self.KIND
                    raise _Fail(f"{o.theory}/{o.name} has no type")
                ty = self.declared_type(o)
                if ty is None:
                    raise _Fail(f"no type available for {o.theory}/{o.name}")
                return ty
        if not self.lf:
            raise _Fail("the structural foundation has no rule for compound objects")
        match o:
            case App(h, args) if h == self.ARROW:
                return self.infer(ctx, elaborate_arrow(args))
            case App(h, args):
                ft = self.infer(ctx, h)
                for a in args:
                    p = self.whnf(ft, delta=True)
                    if not (isinstance(p, Bind) and p.binder == self.PI):
                        raise _Fail("applying a non-function (its type does not reduce to a product)")
                    x, dom, rest = self.peel(p)
                    at = self.infer(ctx, a)
                    if dom is not None and not self.eq(at, dom):
                        raise _Fail("argument type mismatch")
                    ft = subst_apply(rest, {x: a})
                return ft
            case Bind(b, bctx, body) if b == self.LAMBDA or b == self.PI:
                o = self._freshen(ctx, o)
                inner = list(ctx)
                for n, t in o.context:
                    if t is None:
                        raise _Fail("untyped binder")
                    self._sort_of(inner, t)
                    inner.append((n, t))
                if b == self.PI:
                    return self._sort_of(inner, o.body)
                bt = self.infer(inner, o.body)
                if alpha_eq(self.whnf(bt, delta=True), self.KIND):
                    raise _Fail("cannot abstract over a kind")
                return Bind(self.PI, o.context, bt)
            case Bind(b, bctx, body):
                # any other binder is read as b applied to an abstraction
                return self.infer(ctx, App(b, (Bind(self.LAMBDA, bctx, body),)))
        raise _Fail(f"no typing rule for {o!r}")

    def _freshen(self, ctx, o: Bind) -> Bind:
        taken = {n for n, _ in ctx}
        if not taken & set(o.names):
            return o
        from .kernel import rename_bound

        avoid = taken | set(free_vars(o)) | set(o.names)
        names = []
        for n in o.names:
            if n in taken:
                m = fresh_name(n, avoid)
                avoid.add(m)
                names.append(m)
            else:
                names.append(n)
        return rename_bound(o, names)

    def _sort_of(self, ctx, t: Object) -> Object:
        s = self.whnf(self.infer(ctx, t), delta=True)
        if s != self.TYPE and s != self.KIND:
            raise _Fail("expected a type or a kind")
        return s

    def check_type(self, ctx, o: Object, ty: Object) -> bool:
        inferred = self.infer(ctx, o)
        return self.eq(inferred, ty)


# --------------------------------------------------------------------------
# public judgments


def _precheck(graph: TheoryGraph, t: str, ctx: Context, objs: Iterable[Object]) -> None:
    graph.theory(t)
    for o in objs:
        if contains_hid(o):
            raise FilteredObject("judgments are not defined on filtered objects")
        if not is_object_over(graph, t, o, ctx):
            raise NotAnObjectOver(f"not an object over {t}: {o!r}")
    for _, ty in ctx:
        if ty is not None and contains_hid(ty):
            raise FilteredObject("context contains ?hid")


def _run(checker: Checker, fn) -> JudgmentResult:
    try:
        holds = fn()
    except FuelExhausted:
        return JudgmentResult(False, EMPTY_CUT, None, True, "fuel exhausted")
    except _Fail as e:
        return JudgmentResult(False, EMPTY_CUT, None, False, str(e))
    if not holds:
        return JudgmentResult(False, EMPTY_CUT, None, False, "conversion failed")
    cut = checker.cut
    trace = [f"TOtype {t}/{n}" for t, n in sorted(cut.d_type)]
    trace += [f"TOdef {t}/{n}" for t, n in sorted(cut.d_def)]
    return JudgmentResult(True, cut, trace, False)


def check_type(
    graph: TheoryGraph,
    t: str,
    ctx: Context,
    o: Object,
    ty: Object,
    *,
    fuel: int = DEFAULT_FUEL,
    cut: Optional[DependencyCut] = None,
) -> JudgmentResult:
    """Decide ``ctx |-_t o : ty``."""
    ctx = tuple(ctx)
    _precheck(graph, t, ctx, (o, ty))
    ch = _checker(graph, t, fuel, cut)
    return _run(ch, lambda: ch.check_type(list(ctx), o, ty))


def check_eq(
    graph: TheoryGraph,
    t: str,
    ctx: Context,
    o1: Object,
    o2: Object,
    *,
    fuel: int = DEFAULT_FUEL,
    cut: Optional[DependencyCut] = None,
) -> JudgmentResult:
    """Decide ``ctx |-_t o1 = o2`` by lazy unfolding and congruence."""
    ctx = tuple(ctx)
    _precheck(graph, t, ctx, (o1, o2))
    ch = _checker(graph, t, fuel, cut)
    return _run(ch, lambda: ch.eq(o1, o2))


def _checker(graph, t, fuel, cut: Optional[DependencyCut]) -> Checker:
    if cut is None:
        return Checker(graph, t, fuel=fuel)
    return Checker(graph, t, fuel=fuel, allow_type=cut.d_type, allow_def=cut.d_def)


Judgment = tuple[Literal["type", "eq"], Context, Object, Object]


def check_with_cut(
    graph: TheoryGraph, t: str, judgment: Judgment, cut: DependencyCut, *, fuel: int = DEFAULT_FUEL
) -> bool:
    """True iff the judgment has a derivation using TOtype/TOdef only inside ``cut``."""
    kind, ctx, o1, o2 = judgment
    fn = check_type if kind == "type" else check_eq
    res = fn(graph, t, ctx, o1, o2, fuel=fuel, cut=cut)
    if res.fuel_exhausted:
        raise FuelExhausted("step budget exhausted")
    return res.holds


def judge(graph: TheoryGraph, t: str, judgment: Judgment, *, fuel: int = DEFAULT_FUEL) -> JudgmentResult:
    kind, ctx, o1, o2 = judgment
    fn = check_type if kind == "type" else check_eq
    return fn(graph, t, ctx, o1, o2, fuel=fuel)


def check_decl(graph: TheoryGraph, t: str, decl: SymbolDecl, *, fuel: int = DEFAULT_FUEL) -> JudgmentResult:
    """Well-formedness of one declaration of theory ``t``."""
    for o in (decl.type, decl.definiens):
        if o is not None and not is_object_over(graph, t, o):
            return JudgmentResult(False, message=f"{decl.name}: not an object over {t}")
        if o is not None and contains_hid(o):
            return JudgmentResult(False, message=f"{decl.name}: declaration contains ?hid")
    ch = Checker(graph, t, fuel=fuel)
    if not ch.lf:
        return JudgmentResult(True, EMPTY_CUT, [], False)

    def go() -> bool:
        if decl.type is not None and decl.type != ch.KIND:
            ch._sort_of([], decl.type)
        if decl.definiens is not None:
            if decl.type is None:
                ch.infer([], decl.definiens)
            elif not ch.check_type([], decl.definiens, decl.type):
                raise _Fail(f"definiens of {decl.name} does not have its declared type")
        return True

    res = _run(ch, go)
    if not res.holds and res.message and not res.message.startswith(decl.name):
        res.message = f"{decl.name}: {res.message}"
    return res


def normalize(
    graph: TheoryGraph, t: str, o: Object, *, strategy: str = "outermost", fuel: int = DEFAULT_FUEL
) -> Object:
    """Full beta/delta normal form (delta only for the structural foundation)."""
    ch = Checker(graph, t, fuel=fuel)
    return ch.normalize(o, strategy)


def detect_def_cycles(graph: TheoryGraph) -> list[list[QName]]:
    """Cycles of the relation "the definiens of a mentions b" (Tarjan's SCC)."""
    edges: dict[QName, list[QName]] = {}
    nodes: list[QName] = []
    for th in graph.theories.values():
        for d in th.body:
            q = (th.name, d.name)
            nodes.append(q)
            targets = []
            if d.definiens is not None:
                for s in symbols_of(d.definiens):
                    if s.qname not in targets:
                        targets.append(s.qname)
            edges[q] = targets

    index: dict[QName, int] = {}
    low: dict[QName, int] = {}
    on_stack: set[QName] = set()
    stack: list[QName] = []
    out: list[list[QName]] = []
    counter = [0]

    def strong(v: QName) -> None:
        # iterative Tarjan to stay clear of the recursion limit
        work = [(v, 0)]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, i = work[-1]
            succ = edges.get(node, [])
            if i < len(succ):
                work[-1] = (node, i + 1)
                w = succ[i]
                if w not in edges:
                    continue
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, 0))
                elif w in on_stack:
                    low[node] = min(low[node], index[w])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                comp.reverse()
                if len(comp) > 1 or node in edges.get(node, []):
                    out.append(comp)

    for v in nodes:
        if v not in index:
            strong(v)
    return out
