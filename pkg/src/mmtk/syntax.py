"""Surface syntax for theory graphs, bundle manifests, queries and JSON export.

Grammar (whitespace-insensitive, ``#`` starts a line comment)::

    file      ::= decl*
    decl      ::= theory | view
    theory    ::= "theory" NAME (":" NAME)? "{" symdecl* "}"
    symdecl   ::= NAME (":" obj)? ("=" obj)? ";"
    view      ::= "view" NAME ":" NAME "->" NAME ("meta" morph)? "{" assign* "}"
    assign    ::= NAME ":=" obj ";"
    morph     ::= NAME | "id(" NAME ")" | morph ";" morph | "(" morph ")"
    obj       ::= NAME "/" NAME | NAME | "$" NAME
                | "@(" obj ("," obj)+ ")"
                | "bind(" obj "," ctx "," obj ")"
                | "?hid"
    ctx       ::= "[" binding ("," binding)* "]"
    binding   ::= "$" NAME (":" obj)?

Unqualified names resolve against the accessible symbols, innermost theory
first.  ``@(LF/arrow, A, B)`` is elaborated to a product on parse.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Optional, Union

from .errors import ParseError, UnknownReference
from .foundation import LF, elaborate_arrow
from .kernel import (
    App,
    Assignment,
    Bind,
    CheckReport,
    Comp,
    Context,
    Hid,
    HID,
    Ident,
    MorphismExpr,
    Named,
    Object,
    Sym,
    SymbolDecl,
    Theory,
    TheoryGraph,
    Var,
    View,
)

PRELUDE_SOURCE = """\
# The logical framework: sorts, products, abstraction and arrow sugar.
theory LF {
  type;
  kind;
  Pi;
  lambda;
  arrow;
}
"""

NAME_RE = re.compile(r"[A-Za-z0-9_](?:[A-Za-z0-9_']|-(?!>))*")
_PUNCT = [":=", "->", "?hid", "/", "$", "@", "(", ")", "{", "}", "[", "]", ",", ";", ":", "="]


@dataclass(frozen=True)
class Token:
    kind: str  # "name", "punct", "eof"
    value: str
    line: int
    col: int
    end_line: int
    end_col: int
    quoted: bool = False


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c.isspace():
            i, col = i + 1, col + 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == '"':
            j = i + 1
            buf = []
            while j < n and text[j] != '"':
                if text[j] == "\n":
                    raise ParseError("unterminated quoted name", line, col)
                if text[j] == "\\" and j + 1 < n:
                    buf.append(text[j + 1])
                    j += 2
                    continue
                buf.append(text[j])
                j += 1
            if j >= n:
                raise ParseError("unterminated quoted name", line, col)
            if not buf:
                raise ParseError("empty quoted name", line, col)
            width = j + 1 - i
            toks.append(Token("name", "".join(buf), line, col, line, col + width, True))
            i, col = j + 1, col + width
            continue
        m = NAME_RE.match(text, i)
        if m:
            w = m.end() - i
            toks.append(Token("name", m.group(), line, col, line, col + w))
            i, col = m.end(), col + w
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append(Token("punct", p, line, col, line, col + len(p)))
                i, col = i + len(p), col + len(p)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(Token("eof", "", line, col, line, col))
    return toks


# raw placeholders produced before name resolution


@dataclass(frozen=True)
class _Name:
    name: str
    qualifier: Optional[str]
    line: int
    col: int


Span = tuple[int, int, int, int]


@dataclass
class SourceFile:
    path: Optional[str]
    text: str
    parsed: TheoryGraph
    spans: dict[tuple, Span] = field(default_factory=dict)


class Scope:
    """Resolution scope: theories searched innermost first, plus all known names."""

    def __init__(self, chain: list[str], names: dict[str, set[str]]):
        self.chain = chain  # innermost first
        self.names = names

    @classmethod
    def of(cls, graph: TheoryGraph, theory: str, pending: Optional[dict[str, set[str]]] = None) -> "Scope":
        names = {t: set(th.symbol_names) for t, th in graph.theories.items()}
        if pending:
            names.update(pending)
        chain = []
        cur: Optional[str] = theory
        seen = set()
        while cur is not None and cur not in seen:
            seen.add(cur)
            chain.append(cur)
            cur = graph.theories[cur].meta if cur in graph.theories else None
        return cls(chain, names)

    def with_pending(self, theory: str, meta: Optional[str], graph: TheoryGraph, body: set[str]) -> "Scope":
        names = dict(self.names)
        names[theory] = body
        chain = [theory] + (Scope.of(graph, meta).chain if meta else [])
        return Scope(chain, names)


class Parser:
    def __init__(self, text: str, graph: Optional[TheoryGraph] = None):
        self.text = text
        self.toks = tokenize(text)
        self.pos = 0
        self.graph = graph if graph is not None else TheoryGraph()
        self.spans: dict[tuple, Span] = {}
        self._path: list = []

    # -- token helpers ----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, value: str) -> bool:
        t = self.tok
        return t.kind == "punct" and t.value == value

    def at_word(self, value: str) -> bool:
        t = self.tok
        return t.kind == "name" and not t.quoted and t.value == value

    def expect(self, value: str) -> Token:
        t = self.tok
        if t.kind != "punct" or t.value != value:
            raise ParseError(f"expected {value!r}, found {t.value or 'end of input'!r}", t.line, t.col)
        self.pos += 1
        return t

    def expect_word(self, value: str) -> Token:
        if not self.at_word(value):
            t = self.tok
            raise ParseError(f"expected {value!r}, found {t.value or 'end of input'!r}", t.line, t.col)
        t = self.tok
        self.pos += 1
        return t

    def name(self) -> Token:
        t = self.tok
        if t.kind != "name":
            raise ParseError(f"expected a name, found {t.value or 'end of input'!r}", t.line, t.col)
        self.pos += 1
        return t

    def _span_from(self, start: Token) -> Span:
        end = self.toks[self.pos - 1]
        return (start.line, start.col, end.end_line, end.end_col)

    # -- objects ----------------------------------------------------------

    def raw_obj(self, path: tuple = ()) -> Any:
        start = self.tok
        out = self._raw_obj(path)
        self.spans[tuple(self._path) + (path,)] = self._span_from(start)
        return out

    def _raw_obj(self, path: tuple) -> Any:
        t = self.tok
        if self.at("?hid"):
            self.pos += 1
            return HID
        if self.at("$"):
            self.pos += 1
            return Var(self.name().value)
        if self.at("@"):
            self.pos += 1
            self.expect("(")
            head = self.raw_obj(path + (0,))
            args = []
            while self.at(","):
                self.pos += 1
                args.append(self.raw_obj(path + (len(args) + 1,)))
            self.expect(")")
            if not args:
                raise ParseError("application needs at least one argument", t.line, t.col)
            return ("app", head, args, t)
        if t.kind == "name" and not t.quoted and t.value == "bind" and self.peek().value == "(" and self.peek().kind == "punct":
            self.pos += 2
            binder = self.raw_obj(path + (0,))
            self.expect(",")
            ctx = self.raw_ctx(path + (1,))
            self.expect(",")
            body = self.raw_obj(path + (2,))
            self.expect(")")
            return ("bind", binder, ctx, body, t)
        if t.kind == "name":
            self.pos += 1
            if self.at("/"):
                self.pos += 1
                n = self.name()
                return _Name(n.value, t.value, t.line, t.col)
            return _Name(t.value, None, t.line, t.col)
        raise ParseError(f"expected an object, found {t.value or 'end of input'!r}", t.line, t.col)

    def raw_ctx(self, path: tuple = ()) -> list:
        start = self.expect("[")
        out = []
        while True:
            self.expect("$")
            n = self.name()
            ty = None
            if self.at(":"):
                self.pos += 1
                ty = self.raw_obj(path + (len(out),))
            out.append((n.value, ty, n))
            if self.at(","):
                self.pos += 1
                continue
            break
        self.expect("]")
        names = [n for n, _, _ in out]
        if len(set(names)) != len(names):
            raise ParseError("duplicate variable in context", start.line, start.col)
        return out

    def resolve(self, raw: Any, scope: Scope) -> Object:
        match raw:
            case _Name(name, None, line, col):
                for th in scope.chain:
                    if name in scope.names.get(th, ()):
                        return Sym(th, name)
                raise UnknownReference(f"unknown symbol {name}", line, col)
            case _Name(name, q, line, col):
                if q not in scope.names:
                    raise UnknownReference(f"unknown theory {q}", line, col)
                if name not in scope.names[q]:
                    raise UnknownReference(f"unknown symbol {q}/{name}", line, col)
                return Sym(q, name)
            case ("app", head, args, tok):
                h = self.resolve(head, scope)
                rs = tuple(self.resolve(a, scope) for a in args)
                if h == Sym(LF, "arrow"):
                    if len(rs) < 2:
                        raise ParseError("arrow needs a domain and a codomain", tok.line, tok.col)
                    return elaborate_arrow(rs)
                return App(h, rs)
            case ("bind", binder, ctx, body, tok):
                return Bind(self.resolve(binder, scope), self.resolve_ctx(ctx, scope), self.resolve(body, scope))
        return raw

    def resolve_ctx(self, ctx: list, scope: Scope) -> Context:
        return tuple((n, None if t is None else self.resolve(t, scope)) for n, t, _ in ctx)

    # -- morphisms --------------------------------------------------------

    def morph(self) -> MorphismExpr:
        m = self._morph_atom()
        while self.at(";") and self._morph_continues():
            self.pos += 1
            m = Comp(m, self._morph_atom())
        return m

    def _morph_continues(self) -> bool:
        # ";" also ends clauses in manifests: compose only when a morphism follows
        nxt = self.peek()
        if nxt.kind == "punct":
            return nxt.value == "("
        if nxt.kind != "name":
            return False
        if not nxt.quoted and nxt.value == "id":
            after = self.peek(2)
            return after.kind == "punct" and after.value == "("
        return nxt.value in self.graph.views

    def _morph_atom(self) -> MorphismExpr:
        if self.at("("):
            self.pos += 1
            m = self.morph()
            self.expect(")")
            return m
        n = self.name()
        if not n.quoted and n.value == "id" and self.at("("):
            self.pos += 1
            th = self.name()
            self.expect(")")
            if th.value not in self.graph.theories:
                raise UnknownReference(f"unknown theory {th.value}", th.line, th.col)
            return Ident(th.value)
        if n.value not in self.graph.views:
            raise UnknownReference(f"unknown view {n.value}", n.line, n.col)
        return Named(n.value)

    # -- declarations -----------------------------------------------------

    def parse_file(self) -> TheoryGraph:
        while self.tok.kind != "eof":
            if self.at_word("theory"):
                self.graph = self.graph.extend(self.theory())
            elif self.at_word("view"):
                self.graph = self.graph.extend(self.view())
            else:
                t = self.tok
                raise ParseError(f"expected 'theory' or 'view', found {t.value!r}", t.line, t.col)
        return self.graph

    def _known_theory(self, tok: Token) -> None:
        if tok.value not in self.graph.theories:
            raise UnknownReference(f"unknown theory {tok.value}", tok.line, tok.col)

    def symdecls(self, owner: tuple) -> list:
        raws = []
        while not self.at("}"):
            start = self.tok
            n = self.name()
            self._path = [owner + (n.value,)]
            ty = df = None
            if self.at(":"):
                self.pos += 1
                self._path = [owner + (n.value, "type")]
                ty = self.raw_obj()
            if self.at("="):
                self.pos += 1
                self._path = [owner + (n.value, "definiens")]
                df = self.raw_obj()
            self.expect(";")
            self.spans[owner + (n.value,)] = self._span_from(start)
            raws.append((n, ty, df))
        self._path = []
        return raws

    def theory(self) -> Theory:
        start = self.expect_word("theory")
        name = self.name()
        meta = None
        if self.at(":"):
            self.pos += 1
            mt = self.name()
            self._known_theory(mt)
            meta = mt.value
        self.expect("{")
        raws = self.symdecls(("theory", name.value))
        self.expect("}")
        self.spans[("theory", name.value)] = self._span_from(start)
        body_names = {n.value for n, _, _ in raws}
        scope = Scope.of(self.graph, meta) if meta else Scope([], {t: set(th.symbol_names) for t, th in self.graph.theories.items()})
        scope = scope.with_pending(name.value, meta, self.graph, body_names)
        body = []
        for n, ty, df in raws:
            body.append(
                SymbolDecl(
                    n.value,
                    None if ty is None else self.resolve(ty, scope),
                    None if df is None else self.resolve(df, scope),
                )
            )
        return Theory(name.value, meta, tuple(body))

    def assigns(self, owner: tuple, scope: Scope) -> list[Assignment]:
        out = []
        while not self.at("}"):
            start = self.tok
            n = self.name()
            self.expect(":=")
            self._path = [owner + (n.value,)]
            raw = self.raw_obj()
            self.expect(";")
            self.spans[owner + (n.value,)] = self._span_from(start)
            out.append(Assignment(n.value, self.resolve(raw, scope)))
        self._path = []
        return out

    def view(self) -> View:
        start = self.expect_word("view")
        name = self.name()
        self.expect(":")
        src = self.name()
        self._known_theory(src)
        self.expect("->")
        tgt = self.name()
        self._known_theory(tgt)
        meta = None
        if self.at_word("meta"):
            self.pos += 1
            meta = self.morph()
        self.expect("{")
        body = self.assigns(("view", name.value), Scope.of(self.graph, tgt.value))
        self.expect("}")
        self.spans[("view", name.value)] = self._span_from(start)
        return View(name.value, src.value, tgt.value, meta, tuple(body))


# --------------------------------------------------------------------------
# entry points


def parse_source(text: str, *, base: Optional[TheoryGraph] = None, path: Optional[str] = None) -> SourceFile:
    p = Parser(text, base)
    g = p.parse_file()
    return SourceFile(path, text, g, p.spans)


def parse_graph(text: str, *, base: Optional[TheoryGraph] = None, prelude: bool = False) -> TheoryGraph:
    """Parse ``text``; declarations extend ``base`` (or the LF prelude when asked)."""
    if base is None and prelude:
        base = prelude_graph()
    return parse_source(text, base=base).parsed


_PRELUDE: Optional[TheoryGraph] = None


def prelude_graph() -> TheoryGraph:
    global _PRELUDE
    if _PRELUDE is None:
        _PRELUDE = parse_source(PRELUDE_SOURCE).parsed
    return _PRELUDE


def load_graph(path: Union[str, Path], *, prelude: bool = True, base: Optional[TheoryGraph] = None) -> TheoryGraph:
    text = Path(path).read_text(encoding="utf-8")
    if base is None and prelude:
        base = prelude_graph()
    return parse_source(text, base=base, path=str(path)).parsed


def load_source(path: Union[str, Path], *, prelude: bool = True) -> SourceFile:
    text = Path(path).read_text(encoding="utf-8")
    return parse_source(text, base=prelude_graph() if prelude else None, path=str(path))


def _finish(p: Parser) -> None:
    if p.tok.kind != "eof":
        t = p.tok
        raise ParseError(f"unexpected trailing input {t.value!r}", t.line, t.col)


def parse_object(text: str, graph: TheoryGraph, theory: str) -> Object:
    """One object, resolved in the scope of ``theory``."""
    graph.theory(theory)
    p = Parser(text, graph)
    raw = p.raw_obj()
    _finish(p)
    return p.resolve(raw, Scope.of(graph, theory))


def parse_context(text: str, graph: TheoryGraph, theory: str) -> Context:
    if not text.strip() or text.strip() == "[]":
        return ()
    p = Parser(text, graph)
    raw = p.raw_ctx()
    _finish(p)
    return p.resolve_ctx(raw, Scope.of(graph, theory))


def parse_morphism(text: str, graph: TheoryGraph) -> MorphismExpr:
    p = Parser(text, graph)
    m = p.morph()
    _finish(p)
    return m


# -- bundle manifests ------------------------------------------------------


@dataclass(frozen=True)
class BundleManifest:
    name: str
    spec: str
    sys1: str
    mu1: MorphismExpr
    eta1: Optional[MorphismExpr]
    sys2: str
    mu2: MorphismExpr
    eta2: Optional[MorphismExpr]


def parse_bundle(text: str, graph: TheoryGraph) -> BundleManifest:
    """``bundle NAME { spec NAME; sys1 NAME via MORPH [inv MORPH]; sys2 ...; }``"""
    p = Parser(text, graph)
    p.expect_word("bundle")
    name = p.name().value
    p.expect("{")
    p.expect_word("spec")
    spec = p.name()
    p._known_theory(spec)
    p.expect(";")
    systems = []
    for key in ("sys1", "sys2"):
        p.expect_word(key)
        sys = p.name()
        p._known_theory(sys)
        p.expect_word("via")
        mu = p.morph()
        eta = None
        if p.at_word("inv"):
            p.pos += 1
            eta = p.morph()
        p.expect(";")
        systems.append((sys.value, mu, eta))
    p.expect("}")
    _finish(p)
    (s1, mu1, eta1), (s2, mu2, eta2) = systems
    return BundleManifest(name, spec.value, s1, mu1, eta1, s2, mu2, eta2)


def print_bundle(b: BundleManifest) -> str:
    def line(key, sys, mu, eta):
        s = f"  {key} {_q(sys)} via {print_morphism(mu)}"
        if eta is not None:
            s += f" inv {print_morphism(eta)}"
        return s + ";"

    return "\n".join(
        [
            f"bundle {_q(b.name)} {{",
            f"  spec {_q(b.spec)};",
            line("sys1", b.sys1, b.mu1, b.eta1),
            line("sys2", b.sys2, b.mu2, b.eta2),
            "}",
            "",
        ]
    )


# -- queries and solutions -------------------------------------------------


@dataclass(frozen=True)
class QueryEntry:
    name: str
    context: Context
    goal: Object


@dataclass(frozen=True)
class SolutionEntry:
    name: str
    subst: tuple[tuple[str, Object], ...]
    proof: Object


def parse_queries(text: str, graph: TheoryGraph, query_theory: str, solution_theory: str):
    """``query NAME { [context CTX;] goal OBJ; }`` and ``solution NAME { [subst [$x := OBJ, ...];] proof OBJ; }``.

    Queries resolve in ``query_theory``, solutions in ``solution_theory``.
    Returns ``(queries, solutions)`` as dicts keyed by name, in file order.
    """
    p = Parser(text, graph)
    qscope = Scope.of(graph, query_theory)
    sscope = Scope.of(graph, solution_theory)
    queries: dict[str, QueryEntry] = {}
    solutions: dict[str, SolutionEntry] = {}
    while p.tok.kind != "eof":
        if p.at_word("query"):
            p.pos += 1
            name = p.name().value
            p.expect("{")
            ctx: Context = ()
            if p.at_word("context"):
                p.pos += 1
                if p.at("[") and p.peek().value == "]":
                    p.pos += 2
                else:
                    ctx = p.resolve_ctx(p.raw_ctx(), qscope)
                p.expect(";")
            p.expect_word("goal")
            goal = p.resolve(p.raw_obj(), qscope)
            p.expect(";")
            p.expect("}")
            queries[name] = QueryEntry(name, ctx, goal)
        elif p.at_word("solution"):
            p.pos += 1
            name = p.name().value
            p.expect("{")
            subst = []
            if p.at_word("subst"):
                p.pos += 1
                p.expect("[")
                while not p.at("]"):
                    p.expect("$")
                    x = p.name().value
                    p.expect(":=")
                    subst.append((x, p.resolve(p.raw_obj(), sscope)))
                    if p.at(","):
                        p.pos += 1
                p.expect("]")
                p.expect(";")
            p.expect_word("proof")
            proof = p.resolve(p.raw_obj(), sscope)
            p.expect(";")
            p.expect("}")
            solutions[name] = SolutionEntry(name, tuple(subst), proof)
        else:
            t = p.tok
            raise ParseError(f"expected 'query' or 'solution', found {t.value!r}", t.line, t.col)
    return queries, solutions


# -- widening extensions ---------------------------------------------------


def parse_extension(
    text: str,
    graph: TheoryGraph,
    spec: str,
    spec_prime: str,
    codomains: Callable[[set[str]], Mapping[str, str]],
):
    """``extend { spec { symdecl* } view NAME { assign* } ... }``

    New specification declarations resolve as members of ``spec_prime`` (which
    copies ``spec``).  Assignments of a view resolve in the codomain the view
    will have after widening: ``codomains`` receives the names of the extended
    views and returns the new codomain of each.
    """
    p = Parser(text, graph)
    p.expect_word("extend")
    p.expect("{")
    spec_th = graph.theory(spec)
    decls: list[SymbolDecl] = []
    view_exts: dict[str, list[Assignment]] = {}
    pending_names = set(spec_th.symbol_names)
    spec_raw = []
    while not p.at("}"):
        if p.at_word("spec"):
            p.pos += 1
            p.expect("{")
            spec_raw.extend(p.symdecls(("extend", spec_prime)))
            p.expect("}")
        elif p.at_word("view"):
            p.pos += 1
            vn = p.name()
            if vn.value not in graph.views:
                raise UnknownReference(f"unknown view {vn.value}", vn.line, vn.col)
            p.expect("{")
            raws = []
            while not p.at("}"):
                n = p.name()
                p.expect(":=")
                raws.append((n.value, p.raw_obj()))
                p.expect(";")
            p.expect("}")
            view_exts.setdefault(vn.value, []).extend([(a, r) for a, r in raws])  # resolved below
        else:
            t = p.tok
            raise ParseError(f"expected 'spec' or 'view', found {t.value!r}", t.line, t.col)
    p.expect("}")
    _finish(p)
    pending_names |= {n.value for n, _, _ in spec_raw}
    base = Scope.of(graph, spec_th.meta) if spec_th.meta else Scope([], {t: set(th.symbol_names) for t, th in graph.theories.items()})
    sp_scope = base.with_pending(spec_prime, spec_th.meta, graph, pending_names)
    for n, ty, df in spec_raw:
        decls.append(
            SymbolDecl(n.value, None if ty is None else p.resolve(ty, sp_scope), None if df is None else p.resolve(df, sp_scope))
        )
    resolved: dict[str, list[Assignment]] = {}
    cods = codomains({vn for vn, raws in view_exts.items() if raws})
    for vn, raws in view_exts.items():
        cod = cods.get(vn, graph.view(vn).target)
        if cod == spec_prime:
            scope = sp_scope
        else:
            scope = Scope.of(graph, cod)
            scope.names[spec_prime] = pending_names
        resolved[vn] = [Assignment(a, p.resolve(r, scope)) for a, r in raws]
    return decls, resolved


# --------------------------------------------------------------------------
# printing


def _q(name: str) -> str:
    if NAME_RE.fullmatch(name):
        return name
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def print_object(o: Object) -> str:
    match o:
        case Sym(th, n):
            return f"{_q(th)}/{_q(n)}"
        case Var(n):
            return f"${_q(n)}"
        case Hid():
            return "?hid"
        case App(h, args):
            return "@(" + ", ".join(print_object(x) for x in (h, *args)) + ")"
        case Bind(b, ctx, body):
            return f"bind({print_object(b)}, {print_context(ctx)}, {print_object(body)})"
    raise TypeError(f"not an object: {o!r}")


def print_context(ctx: Context) -> str:
    parts = []
    for n, t in ctx:
        parts.append(f"${_q(n)}" if t is None else f"${_q(n)}: {print_object(t)}")
    return "[" + ", ".join(parts) + "]"


def print_morphism(m: MorphismExpr) -> str:
    match m:
        case Named(v):
            return _q(v)
        case Ident(t):
            return f"id({_q(t)})"
        case Comp(f, g):
            right = print_morphism(g)
            if isinstance(g, Comp):
                right = f"({right})"
            return f"{print_morphism(f)} ; {right}"
    raise TypeError(f"not a morphism: {m!r}")


def print_decl(d: Union[Theory, View]) -> str:
    if isinstance(d, Theory):
        head = f"theory {_q(d.name)}" + (f" : {_q(d.meta)}" if d.meta else "") + " {"
        lines = [head]
        for s in d.body:
            line = "  " + _q(s.name)
            if s.type is not None:
                line += " : " + print_object(s.type)
            if s.definiens is not None:
                line += " = " + print_object(s.definiens)
            lines.append(line + ";")
    else:
        head = f"view {_q(d.name)} : {_q(d.source)} -> {_q(d.target)}"
        if d.meta_morph is not None:
            head += " meta " + print_morphism(d.meta_morph)
        lines = [head + " {"]
        for a in d.body:
            lines.append(f"  {_q(a.symbol)} := {print_object(a.image)};")
    lines.append("}")
    return "\n".join(lines)


def print_graph(g: TheoryGraph, *, exclude: Iterable[str] = ()) -> str:
    """Canonical text: 2-space indentation, fully qualified symbols, blank line between declarations."""
    skip = set(exclude)
    blocks = [print_decl(d) for d in g.decls if not (isinstance(d, Theory) and d.name in skip)]
    return "\n\n".join(blocks) + ("\n" if blocks else "")


# --------------------------------------------------------------------------
# JSON


def object_to_json(o: Object) -> dict:
    match o:
        case Sym(th, n):
            return {"kind": "sym", "theory": th, "name": n}
        case Var(n):
            return {"kind": "var", "name": n}
        case Hid():
            return {"kind": "hid"}
        case App(h, args):
            return {"kind": "app", "head": object_to_json(h), "args": [object_to_json(a) for a in args]}
        case Bind(b, ctx, body):
            return {
                "kind": "bind",
                "binder": object_to_json(b),
                "context": context_to_json(ctx),
                "body": object_to_json(body),
            }
    raise TypeError(f"not an object: {o!r}")


def context_to_json(ctx: Context) -> list:
    return [{"name": n, "type": None if t is None else object_to_json(t)} for n, t in ctx]


def object_from_json(d: dict) -> Object:
    kind = d["kind"]
    if kind == "sym":
        return Sym(d["theory"], d["name"])
    if kind == "var":
        return Var(d["name"])
    if kind == "hid":
        return HID
    if kind == "app":
        return App(object_from_json(d["head"]), tuple(object_from_json(a) for a in d["args"]))
    if kind == "bind":
        ctx = tuple((b["name"], None if b["type"] is None else object_from_json(b["type"])) for b in d["context"])
        return Bind(object_from_json(d["binder"]), ctx, object_from_json(d["body"]))
    raise ValueError(f"unknown object kind {kind!r}")


def morphism_to_json(m: Optional[MorphismExpr]) -> Optional[dict]:
    match m:
        case None:
            return None
        case Named(v):
            return {"kind": "view", "name": v}
        case Ident(t):
            return {"kind": "id", "theory": t}
        case Comp(f, g):
            return {"kind": "comp", "first": morphism_to_json(f), "then": morphism_to_json(g)}
    raise TypeError(f"not a morphism: {m!r}")


def _opt(o: Optional[Object]) -> Optional[dict]:
    return None if o is None else object_to_json(o)


def graph_to_json(g: TheoryGraph, *, exclude: Iterable[str] = ()) -> dict:
    skip = set(exclude)
    decls = []
    for d in g.decls:
        if isinstance(d, Theory):
            if d.name in skip:
                continue
            decls.append(
                {
                    "kind": "theory",
                    "name": d.name,
                    "meta": d.meta,
                    "body": [{"name": s.name, "type": _opt(s.type), "definiens": _opt(s.definiens)} for s in d.body],
                }
            )
        else:
            decls.append(
                {
                    "kind": "view",
                    "name": d.name,
                    "from": d.source,
                    "to": d.target,
                    "meta": morphism_to_json(d.meta_morph),
                    "body": [{"symbol": a.symbol, "image": object_to_json(a.image)} for a in d.body],
                }
            )
    return {"kind": "graph", "decls": decls}


def report_to_json(r: CheckReport) -> dict:
    return {
        "kind": "report",
        "ok": r.ok,
        "fuel_exhausted": r.fuel_exhausted,
        "violations": [{"code": v.code, "message": v.message, "location": v.location} for v in r.violations],
    }


def to_json(x: Any) -> Any:
    """JSON-ready value for any exported mmtk value."""
    from .foundation import DependencyCut, JudgmentResult
    from .integration import IntegrationBundle, ProofSketch, Solution

    match x:
        case Sym() | Var() | App() | Bind() | Hid():
            return object_to_json(x)
        case TheoryGraph():
            return graph_to_json(x)
        case CheckReport():
            return report_to_json(x)
        case Named() | Ident() | Comp():
            return morphism_to_json(x)
        case DependencyCut():
            return {
                "kind": "cut",
                "d_type": [f"{t}/{n}" for t, n in sorted(x.d_type)],
                "d_def": [f"{t}/{n}" for t, n in sorted(x.d_def)],
            }
        case JudgmentResult():
            return {
                "kind": "judgment",
                "holds": x.holds,
                "status": x.status,
                "fuel_exhausted": x.fuel_exhausted,
                "cut": to_json(x.cut),
                "trace": x.trace,
                "message": x.message,
            }
        case ProofSketch():
            return {"kind": "sketch", "steps": [object_to_json(s) for s in x.steps], "gaps": x.gaps}
        case IntegrationBundle():
            return x.to_json()
        case Solution():
            return x.to_json()
    raise TypeError(f"cannot export {type(x).__name__}")


def export_json(x: Any) -> str:
    return json.dumps(x if isinstance(x, (dict, list)) else to_json(x), sort_keys=True, indent=2) + "\n"
