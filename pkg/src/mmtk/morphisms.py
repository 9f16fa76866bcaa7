"""Morphism expressions, homomorphic extension, filtering and morphism equality."""

from __future__ import annotations

from .errors import (
    CompositionMismatch,
    FuelExhausted,
    MMTError,
    NotAnObjectOver,
    SignatureMismatch,
    UnknownSymbol,
)
from .foundation import check_eq, check_type
from .kernel import (
    DEFAULT_FUEL,
    App,
    Assignment,
    Bind,
    CheckReport,
    Comp,
    Context,
    Hid,
    Ident,
    MorphismExpr,
    Named,
    Object,
    QName,
    Substitution,
    Sym,
    TheoryGraph,
    Var,
    View,
    accessible_symbols,
    contains_hid,
    is_object_over,
    symbols_of,
)

__all__ = [
    "Assignment",
    "Comp",
    "Ident",
    "MorphismExpr",
    "Named",
    "View",
    "apply_morphism",
    "apply_to_context",
    "apply_to_subst",
    "check_view",
    "filtered_symbols",
    "filters",
    "is_partial_inverse",
    "morphism_diff",
    "morphism_eq",
    "morphism_leq",
    "morphism_signature",
]


def morphism_signature(graph: TheoryGraph, m: MorphismExpr) -> tuple[str, str]:
    match m:
        case Named(name):
            v = graph.view(name)
            return (v.source, v.target)
        case Ident(t):
            graph.theory(t)
            return (t, t)
        case Comp(f, g):
            s1, t1 = morphism_signature(graph, f)
            s2, t2 = morphism_signature(graph, g)
            if t1 != s2:
                raise CompositionMismatch(f"cannot compose {s1}->{t1} with {s2}->{t2}")
            return (s1, t2)
    raise TypeError(f"not a morphism expression: {m!r}")


def _sym_image(graph: TheoryGraph, m: MorphismExpr, s: Sym) -> Object:
    match m:
        case Ident(t):
            if s.qname not in graph.accessible(t):
                raise NotAnObjectOver(f"{s.theory}/{s.name} is not accessible to {t}")
            return s
        case Named(name):
            v = graph.view(name)
            if s.theory == v.source:
                img = v.image(s.name)
                if img is None:
                    raise UnknownSymbol(f"view {name} has no assignment for {s.theory}/{s.name}")
                return img
            meta = graph.theory(v.source).meta
            if meta is not None and v.meta_morph is not None and s.qname in graph.accessible(meta):
                return _sym_image(graph, v.meta_morph, s)
            raise NotAnObjectOver(f"{s.theory}/{s.name} is not accessible to {v.source}")
        case Comp(f, g):
            return _apply(graph, g, _sym_image(graph, f, s), {})
    raise TypeError(f"not a morphism expression: {m!r}")


def _apply(graph: TheoryGraph, m: MorphismExpr, o: Object, memo: dict) -> Object:
    match o:
        case Sym():
            key = o.qname
            if key not in memo:
                memo[key] = _sym_image(graph, m, o)
            return memo[key]
        case Var() | Hid():
            return o
        case App(head, args):
            return App(_apply(graph, m, head, memo), tuple(_apply(graph, m, a, memo) for a in args))
        case Bind(binder, ctx, body):
            return Bind(
                _apply(graph, m, binder, memo),
                tuple((n, None if t is None else _apply(graph, m, t, memo)) for n, t in ctx),
                _apply(graph, m, body, memo),
            )
    raise TypeError(f"not an object: {o!r}")


def apply_morphism(graph: TheoryGraph, m: MorphismExpr, o: Object) -> Object:
    """Homomorphic extension of ``m`` applied to ``o``; total, may yield ``?hid``."""
    source, _ = morphism_signature(graph, m)
    acc = graph.accessible(source)
    for s in symbols_of(o):
        if s.qname not in acc:
            raise NotAnObjectOver(f"{s.theory}/{s.name} is not accessible to {source}")
    return _apply(graph, m, o, {})


def apply_to_context(graph: TheoryGraph, m: MorphismExpr, ctx: Context) -> Context:
    return tuple((n, None if t is None else apply_morphism(graph, m, t)) for n, t in ctx)


def apply_to_subst(graph: TheoryGraph, m: MorphismExpr, s: Substitution) -> Substitution:
    return tuple((n, apply_morphism(graph, m, v)) for n, v in s)


def filters(graph: TheoryGraph, m: MorphismExpr, o: Object) -> bool:
    return contains_hid(apply_morphism(graph, m, o))


def filtered_symbols(graph: TheoryGraph, m: MorphismExpr) -> list[QName]:
    """Symbols accessible to the domain of ``m`` whose image contains ``?hid``."""
    source, _ = morphism_signature(graph, m)
    return [q for q in accessible_symbols(graph, source) if filters(graph, m, Sym(*q))]


def check_view(
    graph: TheoryGraph, v: View, *, fuel: int = DEFAULT_FUEL, strict: bool = False
) -> CheckReport:
    """The assignment rule for every declaration of the domain.

    With ``strict`` a filtered type or definiens forces the symbol itself to be
    filtered (the older, stricter rule).
    """
    report = CheckReport()
    loc = f"view {v.name}"
    if v.source not in graph.theories or v.target not in graph.theories:
        report.add("unknown-theory", "domain or codomain is not declared", loc)
        return report
    src = graph.theory(v.source)

    if (src.meta is None) != (v.meta_morph is None):
        code = "meta-morphism-missing" if v.meta_morph is None else "meta-morphism-unexpected"
        report.add(code, f"{v.source} {'has' if src.meta else 'has no'} meta-theory", loc)
    elif v.meta_morph is not None:
        try:
            ms, mt = morphism_signature(graph, v.meta_morph)
        except MMTError as e:
            report.add("meta-morphism-signature", str(e), loc)
        else:
            if ms != src.meta:
                report.add("meta-morphism-signature", f"meta-morphism starts at {ms}, expected {src.meta}", loc)
            if mt not in graph.meta_chain(v.target):
                report.add(
                    "meta-morphism-signature",
                    f"meta-morphism ends at {mt}, which is not in the meta-chain of {v.target}",
                    loc,
                )

    declared = set(src.symbol_names)
    for a in v.body:
        aloc = f"{loc}, assignment {a.symbol}"
        if a.symbol not in declared:
            report.add("unknown-domain-symbol", f"unknown domain symbol {a.symbol}", aloc)
        elif not is_object_over(graph, v.target, a.image):
            report.add("not-object-over", f"image of {a.symbol} is not an object over {v.target}", aloc)
    for c in src.symbol_names:
        if v.image(c) is None:
            report.add("missing-assignment", f"no assignment for {v.source}/{c}", loc)
    if not report.ok:
        return report

    m = Named(v.name)
    for d in src.body:
        o = v.image(d.name)
        aloc = f"{loc}, assignment {d.name}"
        if isinstance(o, Hid):
            continue
        try:
            vt = None if d.type is None else apply_morphism(graph, m, d.type)
            vd = None if d.definiens is None else apply_morphism(graph, m, d.definiens)
        except MMTError as e:
            report.add("apply-failed", str(e), aloc)
            continue
        type_filtered = vt is not None and contains_hid(vt)
        def_filtered = vd is not None and contains_hid(vd)
        if strict and (type_filtered or def_filtered):
            what = "type" if type_filtered else "definiens"
            report.add(
                "strict-filtering",
                f"{d.name} has a filtered {what} but is not filtered itself",
                aloc,
            )
            continue
        if contains_hid(o) and (vt is not None and not type_filtered or vd is not None and not def_filtered):
            report.add("filtered-image", f"image of {d.name} contains ?hid but must be checked", aloc)
            continue
        if vt is not None and not type_filtered:
            res = check_type(graph, v.target, (), o, vt, fuel=fuel)
            if res.fuel_exhausted:
                report.fuel_exhausted = True
                report.add("fuel-exhausted", f"fuel ran out checking the type of {d.name}", aloc)
            elif not res.holds:
                report.add(
                    "assignment-type",
                    f"image of {d.name} does not have the translated type ({res.message})",
                    aloc,
                )
        if vd is not None and not def_filtered:
            res = check_eq(graph, v.target, (), o, vd, fuel=fuel)
            if res.fuel_exhausted:
                report.fuel_exhausted = True
                report.add("fuel-exhausted", f"fuel ran out checking the definiens of {d.name}", aloc)
            elif not res.holds:
                report.add(
                    "assignment-definiens",
                    f"image of {d.name} is not equal to the translated definiens",
                    aloc,
                )
    return report


def morphism_diff(
    graph: TheoryGraph,
    m1: MorphismExpr,
    m2: MorphismExpr,
    *,
    weak: bool = False,
    fuel: int = DEFAULT_FUEL,
) -> list[tuple[QName, str]]:
    """Symbols at which ``m1`` and ``m2`` fail to agree, with a reason each.

    ``weak`` skips every symbol filtered by ``m1``.
    """
    sig1 = morphism_signature(graph, m1)
    sig2 = morphism_signature(graph, m2)
    if sig1 != sig2:
        raise SignatureMismatch(f"{sig1[0]}->{sig1[1]} vs {sig2[0]}->{sig2[1]}")
    source, target = sig1
    out = []
    for q in accessible_symbols(graph, source):
        s = Sym(*q)
        a = apply_morphism(graph, m1, s)
        if weak and contains_hid(a):
            continue
        b = apply_morphism(graph, m2, s)
        if contains_hid(a) or contains_hid(b):
            out.append((q, "filtered"))
            continue
        res = check_eq(graph, target, (), a, b, fuel=fuel)
        if res.fuel_exhausted:
            raise FuelExhausted(f"fuel ran out comparing images of {q[0]}/{q[1]}")
        if not res.holds:
            out.append((q, "images differ"))
    return out


def morphism_eq(graph: TheoryGraph, m1: MorphismExpr, m2: MorphismExpr, *, fuel: int = DEFAULT_FUEL) -> bool:
    return not morphism_diff(graph, m1, m2, fuel=fuel)


def morphism_leq(graph: TheoryGraph, m1: MorphismExpr, m2: MorphismExpr, *, fuel: int = DEFAULT_FUEL) -> bool:
    return not morphism_diff(graph, m1, m2, weak=True, fuel=fuel)


def is_partial_inverse(
    graph: TheoryGraph, eta: MorphismExpr, mu: MorphismExpr, *, fuel: int = DEFAULT_FUEL
) -> bool:
    """``mu;eta = id`` on the source of ``mu`` and ``eta;mu <= id`` on its target."""
    s, t = morphism_signature(graph, mu)
    es, et = morphism_signature(graph, eta)
    if (es, et) != (t, s):
        raise SignatureMismatch(f"eta must go {t}->{s}, got {es}->{et}")
    return morphism_eq(graph, Comp(mu, eta), Ident(s), fuel=fuel) and morphism_leq(
        graph, Comp(eta, mu), Ident(t), fuel=fuel
    )
