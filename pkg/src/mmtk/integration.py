"""Moving problems and results between two implementations of one specification.

Two systems ``Sys1``, ``Sys2`` implement ``Spec`` via ``mu_i : Spec -> Sys_i``
and come with partial inverses ``eta_i : Sys_i -> Spec``.  The input
translation is ``I = eta2;mu1 : Sys2 -> Sys1`` and the output translation is
``O = eta1;mu2 : Sys1 -> Sys2``.  A query ``C |- ? : F`` over Sys2 is sent
through ``I``, answered in Sys1 by a substitution and a proof, and the answer
is brought back through ``O``.  If ``O`` filters part of the proof, what comes
back is a proof sketch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .errors import (
    BadProof,
    BadSubstitution,
    FilteredObject,
    FilteredQuery,
    FuelExhausted,
    MissingEta,
    MMTError,
    NotAnObjectOver,
    SignatureMismatch,
)
from .foundation import Checker, check_decl, check_eq, check_type, normalize
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
    SymbolDecl,
    Theory,
    TheoryGraph,
    Var,
    View,
    accessible_symbols,
    alpha_eq,
    check_structure,
    contains_hid,
    free_vars,
    fresh_name,
    is_object_over,
    subst_apply,
    symbols_of,
)
from .morphisms import (
    apply_morphism,
    apply_to_context,
    apply_to_subst,
    check_view,
    filtered_symbols,
    is_partial_inverse,
    morphism_diff,
    morphism_signature,
)

__all__ = [
    "BundleLaws",
    "IntegrationBundle",
    "ProofSketch",
    "Query",
    "Solution",
    "SystemImpl",
    "WideningResult",
    "build_bundle",
    "bundle_from_manifest",
    "check_sketch_obligations",
    "extract_sketch",
    "translate_query",
    "unsafe_answer",
    "verify_solution",
    "parse_widening",
    "widen",
    "widened_spec_name",
    "widening_codomains",
]


@dataclass(frozen=True)
class SystemImpl:
    spec: str
    sys: str
    mu: MorphismExpr
    eta: Optional[MorphismExpr] = None


@dataclass(frozen=True)
class BundleLaws:
    """Outcome of each law; ``None`` where the law cannot be stated (no ``I``)."""

    io_id: Optional[bool]
    mu1_o_eq_mu2: bool
    mu2_i_eq_mu1: Optional[bool]
    eta1_inverse: bool
    eta2_inverse: Optional[bool]
    i_o_inverse: Optional[bool]

    def as_dict(self) -> dict[str, Optional[bool]]:
        return {
            "io_id": self.io_id,
            "mu1_o_eq_mu2": self.mu1_o_eq_mu2,
            "mu2_i_eq_mu1": self.mu2_i_eq_mu1,
            "eta1_inverse": self.eta1_inverse,
            "eta2_inverse": self.eta2_inverse,
            "i_o_inverse": self.i_o_inverse,
        }

    @property
    def ok(self) -> bool:
        """The three bundle laws and both partial-inverse conditions."""
        keys = ("io_id", "mu1_o_eq_mu2", "mu2_i_eq_mu1", "eta1_inverse", "eta2_inverse")
        return all(v is not False for k, v in self.as_dict().items() if k in keys)


@dataclass(frozen=True)
class IntegrationBundle:
    spec: str
    s1: SystemImpl
    s2: SystemImpl
    i: Optional[MorphismExpr]
    o: MorphismExpr
    laws: BundleLaws
    failures: Mapping[str, tuple[tuple[QName, str], ...]] = field(default_factory=dict)
    name: str = "bundle"

    @property
    def directed(self) -> bool:
        return self.i is None

    def to_json(self) -> dict:
        from .syntax import morphism_to_json

        def sys(s: SystemImpl) -> dict:
            return {"sys": s.sys, "mu": morphism_to_json(s.mu), "eta": morphism_to_json(s.eta)}

        return {
            "kind": "bundle",
            "name": self.name,
            "spec": self.spec,
            "sys1": sys(self.s1),
            "sys2": sys(self.s2),
            "i": morphism_to_json(self.i),
            "o": morphism_to_json(self.o),
            "laws": self.laws.as_dict(),
            "law_failures": {
                k: [{"symbol": f"{q[0]}/{q[1]}", "reason": r} for q, r in v] for k, v in self.failures.items()
            },
        }


@dataclass(frozen=True)
class Query:
    context: Context
    formula: Object
    name: str = ""


@dataclass(frozen=True)
class ProofSketch:
    steps: tuple[Object, ...]
    gaps: int


@dataclass(frozen=True)
class Solution:
    """An answer transported to ``theory``.

    ``status`` is ``"verified"`` (re-checked there), ``"sketch"`` (the proof
    came back filtered), ``"recheck-failed"`` (the image does not check, which
    only happens when the bundle laws are broken) or ``"unsafe"``.
    """

    theory: str
    subst: Substitution
    proof: Object
    status: str
    source_theory: str
    source_subst: Substitution
    source_proof: Object
    sketch: Optional[ProofSketch] = None
    obligations: tuple[tuple[int, bool], ...] = ()
    message: str = ""

    @property
    def verified(self) -> bool:
        return self.status == "verified"

    def to_json(self) -> dict:
        from .syntax import object_to_json

        out = {
            "kind": "solution",
            "theory": self.theory,
            "status": self.status,
            "subst": [{"name": n, "value": object_to_json(v)} for n, v in self.subst],
            "proof": object_to_json(self.proof),
            "source": {
                "theory": self.source_theory,
                "subst": [{"name": n, "value": object_to_json(v)} for n, v in self.source_subst],
                "proof": object_to_json(self.source_proof),
            },
            "message": self.message,
        }
        if self.sketch is not None:
            out["sketch"] = {
                "kind": "sketch",
                "steps": [object_to_json(s) for s in self.sketch.steps],
                "gaps": self.sketch.gaps,
            }
            out["obligations"] = [{"index": i, "closed": ok} for i, ok in self.obligations]
        return out


# --------------------------------------------------------------------------
# bundles


def _law(graph, m1, m2, weak, fuel) -> tuple[bool, tuple]:
    diff = morphism_diff(graph, m1, m2, weak=weak, fuel=fuel)
    return (not diff, tuple(diff))


def _inverse(graph, eta, mu, fuel) -> tuple[bool, tuple]:
    s, t = morphism_signature(graph, mu)
    ok1, d1 = _law(graph, Comp(mu, eta), Ident(s), False, fuel)
    ok2, d2 = _law(graph, Comp(eta, mu), Ident(t), True, fuel)
    return (ok1 and ok2, d1 + d2)


def build_bundle(
    graph: TheoryGraph,
    spec: str,
    s1: SystemImpl,
    s2: SystemImpl,
    *,
    fuel: int = DEFAULT_FUEL,
    name: str = "bundle",
) -> IntegrationBundle:
    """Derive ``I`` and ``O`` and evaluate the bundle laws.

    ``I;O <= id`` is checked in the weak order: every symbol that ``I``
    filters is exempt, since no translation through the specification can
    bring it back.  The two triangles are checked with strict equality.
    Without ``s2.eta`` the bundle is directed and ``I`` is absent.
    """
    graph.theory(spec)
    for s in (s1, s2):
        src, tgt = morphism_signature(graph, s.mu)
        if (src, tgt) != (spec, s.sys):
            raise SignatureMismatch(f"mu must go {spec}->{s.sys}, got {src}->{tgt}")
        if s.eta is not None:
            es, et = morphism_signature(graph, s.eta)
            if (es, et) != (s.sys, spec):
                raise SignatureMismatch(f"eta must go {s.sys}->{spec}, got {es}->{et}")
    if s1.eta is None:
        raise MissingEta(f"{s1.sys} needs a partial inverse of its implementation morphism")

    failures: dict[str, tuple] = {}
    o = Comp(s1.eta, s2.mu)
    i = None if s2.eta is None else Comp(s2.eta, s1.mu)

    def record(key, result):
        ok, diff = result
        if not ok:
            failures[key] = diff
        return ok

    eta1_inv = record("eta1_inverse", _inverse(graph, s1.eta, s1.mu, fuel))
    mu1_o = record("mu1_o_eq_mu2", _law(graph, Comp(s1.mu, o), s2.mu, False, fuel))
    if i is None:
        laws = BundleLaws(None, mu1_o, None, eta1_inv, None, None)
    else:
        eta2_inv = record("eta2_inverse", _inverse(graph, s2.eta, s2.mu, fuel))
        io = record("io_id", _law(graph, Comp(i, o), Ident(s2.sys), True, fuel))
        mu2_i = record("mu2_i_eq_mu1", _law(graph, Comp(s2.mu, i), s1.mu, False, fuel))
        i_o_inv = is_partial_inverse(graph, i, o, fuel=fuel)
        laws = BundleLaws(io, mu1_o, mu2_i, eta1_inv, eta2_inv, i_o_inv)
    return IntegrationBundle(spec, s1, s2, i, o, laws, failures, name)


# --------------------------------------------------------------------------
# queries and solutions


def _offending(graph: TheoryGraph, m: MorphismExpr, objs) -> list[QName]:
    out: list[QName] = []
    for o in objs:
        for s in symbols_of(o):
            if s.qname not in out and contains_hid(apply_morphism(graph, m, s)):
                out.append(s.qname)
    return out


def translate_query(graph: TheoryGraph, b: IntegrationBundle, q: Query) -> tuple[Context, Object]:
    """``(I(C), I(F))``; raises FilteredQuery if ``I`` filters any of it."""
    sys2 = b.s2.sys
    objs = [t for _, t in q.context if t is not None] + [q.formula]
    if b.i is not None and not is_object_over(graph, sys2, q.formula, q.context):
        raise NotAnObjectOver(f"query is not an object over {sys2}")
    if b.i is None:
        # directed: the query may only use the specification's language
        acc = graph.accessible(b.spec)
        bad = []
        for o in objs:
            for s in symbols_of(o):
                if s.qname not in acc and s.qname not in bad:
                    bad.append(s.qname)
        if not bad and not is_object_over(graph, b.spec, q.formula, q.context):
            raise NotAnObjectOver("query has free variables outside its context")
        if bad:
            raise FilteredQuery(
                "query uses symbols outside " + b.spec + ": " + ", ".join(f"{t}/{n}" for t, n in bad), bad
            )
        m = b.s1.mu
    else:
        bad = _offending(graph, b.i, objs)
        if bad:
            raise FilteredQuery("query uses filtered symbols: " + ", ".join(f"{t}/{n}" for t, n in bad), bad)
        m = b.i
    return apply_to_context(graph, m, q.context), apply_morphism(graph, m, q.formula)


def _check_subst(graph, t, ctx: Context, s: Substitution, fuel, err) -> dict[str, Object]:
    given = dict(s)
    if len(given) != len(s):
        raise err("substitution binds a variable twice")
    extra = set(given) - {n for n, _ in ctx}
    if extra:
        raise err("substitution binds variables not in the context: " + ", ".join(sorted(extra)))
    done: dict[str, Object] = {}
    for n, ty in ctx:
        if n not in given:
            raise err(f"substitution has no value for ${n}")
        val = given[n]
        if contains_hid(val):
            raise err(f"value for ${n} is filtered")
        if not is_object_over(graph, t, val):
            raise err(f"value for ${n} is not a closed object over {t}")
        if ty is not None:
            res = check_type(graph, t, (), val, subst_apply(ty, done), fuel=fuel)
            if res.fuel_exhausted:
                raise FuelExhausted(f"fuel ran out checking the value for ${n}")
            if not res.holds:
                raise err(f"value for ${n} does not have the required type")
        done[n] = val
    return done


def verify_solution(
    graph: TheoryGraph,
    b: IntegrationBundle,
    q: Query,
    s: Substitution,
    p: Object,
    *,
    fuel: int = DEFAULT_FUEL,
) -> Solution:
    """Check ``s : I(C)`` and ``p : I(F)[s]`` in Sys1 and carry both to Sys2 along ``O``."""
    sys1, sys2 = b.s1.sys, b.s2.sys
    ictx, iform = translate_query(graph, b, q)
    s = tuple(s)
    done = _check_subst(graph, sys1, ictx, s, fuel, BadSubstitution)
    goal = subst_apply(iform, done)
    try:
        res = check_type(graph, sys1, (), p, goal, fuel=fuel)
    except (FilteredObject, NotAnObjectOver) as e:
        raise BadProof(str(e)) from e
    if res.fuel_exhausted:
        raise FuelExhausted("fuel ran out checking the proof")
    if not res.holds:
        raise BadProof(f"proof does not have the translated type ({res.message})")

    os_ = apply_to_subst(graph, b.o, s)
    op = apply_morphism(graph, b.o, p)
    base = dict(theory=sys2, subst=os_, proof=op, source_theory=sys1, source_subst=s, source_proof=p)
    if any(contains_hid(v) for _, v in os_):
        sk = extract_sketch(op)
        return Solution(status="sketch", sketch=sk, message="the substitution is filtered by O", **base)
    if contains_hid(op):
        sk = extract_sketch(op)
        obl = check_sketch_obligations(graph, sys2, sk, fuel=fuel)
        return Solution(status="sketch", sketch=sk, obligations=tuple(obl), **base)
    target = subst_apply(q.formula, dict(os_))
    re = check_type(graph, sys2, (), op, target, fuel=fuel)
    if re.fuel_exhausted:
        raise FuelExhausted("fuel ran out re-checking the translated proof")
    if not re.holds:
        return Solution(status="recheck-failed", message=re.message, **base)
    return Solution(status="verified", **base)


def unsafe_answer(b: IntegrationBundle, s: Substitution, p: Object) -> Solution:
    """Pass an answer through untranslated and unchecked."""
    return Solution(
        theory=b.s1.sys,
        subst=tuple(s),
        proof=p,
        status="unsafe",
        source_theory=b.s1.sys,
        source_subst=tuple(s),
        source_proof=p,
        message="UNSAFE: not translated, not verified",
    )


# --------------------------------------------------------------------------
# sketches


def extract_sketch(o: Object) -> ProofSketch:
    """Maximal ``?hid``-free subobjects, left to right, and the number of ``?hid`` leaves."""
    steps: list[Object] = []
    gaps = 0
    stack = [o]
    while stack:
        cur = stack.pop()
        if isinstance(cur, Hid):
            gaps += 1
        elif not contains_hid(cur):
            steps.append(cur)
        elif isinstance(cur, App):
            stack.extend(reversed((cur.head, *cur.args)))
        elif isinstance(cur, Bind):
            kids = [cur.binder] + [t for _, t in cur.context if t is not None] + [cur.body]
            stack.extend(reversed(kids))
    return ProofSketch(tuple(steps), gaps)


def _pi_prefix(ch: Checker, ty: Object) -> tuple[list[tuple[str, Optional[Object]]], Object]:
    """Split a curried product into its bindings and conclusion."""
    binds: list[tuple[str, Optional[Object]]] = []
    if not ch.lf:
        return binds, ty
    cur = ty
    while True:
        cur = ch.whnf(cur, delta=False)
        if not (isinstance(cur, Bind) and cur.binder == ch.PI):
            unfolded = ch.whnf(cur, delta=True)
            if not (isinstance(unfolded, Bind) and unfolded.binder == ch.PI):
                return binds, cur
            cur = unfolded
        n, t, rest = ch.peel(cur)
        taken = {x for x, _ in binds}
        if n in taken:
            new = fresh_name(n, taken | free_vars(rest))
            rest = subst_apply(rest, {n: Var(new)})
            n = new
        binds.append((n, t))
        cur = rest


def _match(pat: Object, obj: Object, metas: set[str], sigma: dict[str, Object], env: dict[str, str]) -> bool:
    """First-order matching of ``pat`` against ``obj``; ``env`` maps bound pattern names."""
    match pat:
        case Var(n) if n in metas and n not in env:
            bound = set(env.values())
            if free_vars(obj) & bound:
                return False
            if n in sigma:
                return alpha_eq(sigma[n], obj)
            sigma[n] = obj
            return True
        case Var(n):
            return isinstance(obj, Var) and env.get(n, n) == obj.name
        case Sym() | Hid():
            return pat == obj
        case App(h, args):
            return (
                isinstance(obj, App)
                and len(args) == len(obj.args)
                and _match(h, obj.head, metas, sigma, env)
                and all(_match(a, b, metas, sigma, env) for a, b in zip(args, obj.args))
            )
        case Bind(b, ctx, body):
            if not isinstance(obj, Bind) or len(ctx) != len(obj.context):
                return False
            if not _match(b, obj.binder, metas, sigma, env):
                return False
            inner = dict(env)
            for (pn, pt), (on, ot) in zip(ctx, obj.context):
                if (pt is None) != (ot is None):
                    return False
                if pt is not None and not _match(pt, ot, metas, sigma, inner):
                    return False
                inner[pn] = on
            return _match(body, obj.body, metas, sigma, inner)
    return False


def _lookup_closes(graph: TheoryGraph, t: str, step: Object, earlier: Sequence[Object], fuel: int) -> bool:
    ch = Checker(graph, t, fuel=fuel)
    try:
        nf_step = normalize(graph, t, step, fuel=fuel)
    except FuelExhausted:
        return False
    for q in accessible_symbols(graph, t):
        decl = graph.lookup(*q)
        if decl is None or decl.type is None or contains_hid(decl.type):
            continue
        try:
            binds, concl = _pi_prefix(ch, decl.type)
        except MMTError:
            continue
        metas = {n for n, _ in binds}
        candidates = [concl]
        if isinstance(concl, App) and len(concl.args) == 1:
            candidates.append(concl.args[0])
        for cand in candidates:
            try:
                pat = normalize(graph, t, cand, fuel=fuel)
            except FuelExhausted:
                continue
            sigma: dict[str, Object] = {}
            if not _match(pat, nf_step, metas, sigma, {}):
                continue
            if _premises_hold(graph, t, binds, concl, sigma, earlier, fuel):
                return True
    return False


def _premises_hold(graph, t, binds, concl, sigma, earlier, fuel) -> bool:
    for idx, (n, ty) in enumerate(binds):
        later = [b for _, b in binds[idx + 1 :] if b is not None] + [concl]
        dependent = any(n in free_vars(x) for x in later)
        if dependent:
            if n not in sigma:
                return False
            continue
        if ty is None:
            return False
        prem = subst_apply(ty, sigma)
        if free_vars(prem) & {m for m, _ in binds}:
            return False
        forms = [prem]
        if isinstance(prem, App) and len(prem.args) == 1:
            forms.append(prem.args[0])
        if not any(_eq(graph, t, f, e, fuel) for f in forms for e in earlier):
            return False
    return True


def _eq(graph, t, a, b, fuel) -> bool:
    try:
        return check_eq(graph, t, (), a, b, fuel=fuel).holds
    except MMTError:
        return False


def check_sketch_obligations(
    graph: TheoryGraph, t: str, sk: ProofSketch, *, fuel: int = DEFAULT_FUEL
) -> list[tuple[int, bool]]:
    """For each step, whether it follows from the earlier ones by lookup or repetition.

    A step is closed if it equals an earlier step, or if it is an instance of
    the conclusion of a declared type ``Pi x1:A1 ... xn:An. B`` (or of the
    single argument of ``B``) whose non-dependent premises all appear earlier.
    """
    out = []
    for i, step in enumerate(sk.steps):
        earlier = sk.steps[:i]
        ok = False
        if is_object_over(graph, t, step):
            ok = any(_eq(graph, t, step, e, fuel) for e in earlier) or _lookup_closes(
                graph, t, step, earlier, fuel
            )
        out.append((i, ok))
    return out


# --------------------------------------------------------------------------
# widening


@dataclass(frozen=True)
class WideningResult:
    graph: TheoryGraph
    bundle: IntegrationBundle
    report: CheckReport
    filtered_before: tuple[QName, ...]
    filtered_after: tuple[QName, ...]
    renamed: Mapping[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.report.ok and self.bundle.laws.ok


def _fresh_theory_name(graph: TheoryGraph, base: str) -> str:
    name = base + "'"
    while name in graph.theories or name in graph.views:
        name += "'"
    return name


def _fresh_view_name(graph: TheoryGraph, base: str, taken: set[str]) -> str:
    name = base + "'"
    while name in graph.views or name in graph.theories or name in taken:
        name += "'"
    return name


def _rename_theory(o: Object, old: str, new: str) -> Object:
    match o:
        case Sym(th, n) if th == old:
            return Sym(new, n)
        case App(h, args):
            return App(_rename_theory(h, old, new), tuple(_rename_theory(a, old, new) for a in args))
        case Bind(b, ctx, body):
            return Bind(
                _rename_theory(b, old, new),
                tuple((n, None if t is None else _rename_theory(t, old, new)) for n, t in ctx),
                _rename_theory(body, old, new),
            )
    return o


def _eta_chain(graph: TheoryGraph, eta: MorphismExpr) -> list[View]:
    chain = []
    cur = eta
    while isinstance(cur, Named):
        v = graph.view(cur.view)
        chain.append(v)
        cur = v.meta_morph
    return chain


def _merge_body(order: Sequence[str], old: Sequence[Assignment], ext: Sequence[Assignment]) -> tuple:
    ext_map = {a.symbol: a for a in ext}
    old_map = {a.symbol: a for a in old}
    body = []
    for c in order:
        if c in ext_map:
            body.append(ext_map.pop(c))
        elif c in old_map:
            body.append(old_map[c])
    body.extend(a for a in ext if a.symbol in ext_map)
    return tuple(body)


def _retargeted(graph: TheoryGraph, b: IntegrationBundle, touched: set[str]) -> list[View]:
    """Views that widening points at the new specification, outermost first.

    Each ``eta_i`` always moves; a named meta-morphism below it moves when it,
    or something further down its chain, is extended.
    """
    out: list[View] = []
    for s in (b.s1, b.s2):
        if s.eta is None:
            continue
        chain = _eta_chain(graph, s.eta)
        depth = max((k for k, v in enumerate(chain) if v.name in touched), default=0)
        out.extend(v for v in chain[: depth + 1] if v not in out)
    return out


def widened_spec_name(graph: TheoryGraph, b: IntegrationBundle) -> str:
    return _fresh_theory_name(graph, b.spec)


def widening_codomains(graph: TheoryGraph, b: IntegrationBundle, touched: set[str]) -> dict[str, str]:
    """New codomain of every view that an extension of ``touched`` would change."""
    new_spec = widened_spec_name(graph, b)
    out = {v.name: new_spec for v in _retargeted(graph, b, touched)}
    for s in (b.s1, b.s2):
        if isinstance(s.mu, Named):
            out.setdefault(s.mu.view, s.sys)
    return out


def parse_widening(text: str, graph: TheoryGraph, b: IntegrationBundle):
    """Read an extension file for ``b``: ``(spec_ext, view_exts)`` ready for :func:`widen`."""
    from .syntax import parse_extension

    return parse_extension(
        text, graph, b.spec, widened_spec_name(graph, b), lambda touched: widening_codomains(graph, b, touched)
    )


def widen(
    graph: TheoryGraph,
    b: IntegrationBundle,
    spec_ext: Sequence[SymbolDecl],
    view_exts: Mapping[str, Sequence[Assignment]],
    *,
    fuel: int = DEFAULT_FUEL,
) -> WideningResult:
    """Strengthen the specification and extend the four morphisms accordingly.

    The new specification copies the old one under a primed name and appends
    ``spec_ext``.  Each ``mu_i`` is copied with assignments for the new
    symbols.  Each ``eta_i`` is retargeted to the new specification, together
    with as much of its chain of named meta-morphisms as ``view_exts`` touches.
    ``view_exts`` is keyed by the names of the original views; an extension
    assignment replaces an existing one for the same symbol.
    """
    before = tuple(filtered_symbols(graph, b.s1.eta))
    if not spec_ext and not any(view_exts.values()):
        return WideningResult(graph, b, CheckReport(), before, before)

    for s in (b.s1, b.s2):
        for m in (s.mu, s.eta):
            if m is not None and not isinstance(m, Named):
                raise ValueError("widening needs the implementation morphisms and inverses to be named views")

    report = CheckReport()
    old_spec = graph.theory(b.spec)
    new_spec = widened_spec_name(graph, b)
    clash = set(old_spec.symbol_names) & {d.name for d in spec_ext}
    for c in sorted(clash):
        report.add("widen-name-clash", f"{c} is already declared in {b.spec}", f"theory {new_spec}")
    body = tuple(
        SymbolDecl(
            d.name,
            None if d.type is None else _rename_theory(d.type, b.spec, new_spec),
            None if d.definiens is None else _rename_theory(d.definiens, b.spec, new_spec),
        )
        for d in old_spec.body
    ) + tuple(spec_ext)
    spec_th = Theory(new_spec, old_spec.meta, body)

    renamed: dict[str, str] = {}
    new_views: list[View] = []
    for s in (b.s1, b.s2):
        v = graph.view(s.mu.view)
        renamed[v.name] = _fresh_view_name(graph, v.name, set(renamed.values()))
        new_views.append(
            View(
                renamed[v.name],
                new_spec,
                v.target,
                v.meta_morph,
                _merge_body(spec_th.symbol_names, v.body, view_exts.get(v.name, ())),
            )
        )
    retarget = _retargeted(graph, b, {k for k, v in view_exts.items() if v})
    for v in retarget:
        renamed[v.name] = _fresh_view_name(graph, v.name, set(renamed.values()))
    for v in reversed(retarget):
        meta = v.meta_morph
        if isinstance(meta, Named) and meta.view in renamed:
            meta = Named(renamed[meta.view])
        order = graph.theory(v.source).symbol_names
        old = [Assignment(a.symbol, _rename_theory(a.image, b.spec, new_spec)) for a in v.body]
        new_views.append(
            View(renamed[v.name], v.source, new_spec, meta, _merge_body(order, old, view_exts.get(v.name, ())))
        )
    for vn in view_exts:
        if vn not in renamed and view_exts[vn]:
            report.add("widen-unused-extension", f"view {vn} is not touched by widening", f"view {vn}")

    # the views must appear in dependency order: the meta-morphisms first
    new_views.sort(key=lambda v: _depth(v, {x.name: x for x in new_views}))
    g2 = graph.extend(spec_th, *new_views)
    report.merge(check_structure(g2))
    if report.ok:
        for d in spec_ext:
            res = check_decl(g2, new_spec, d, fuel=fuel)
            if not res.holds:
                report.add("decl-ill-typed", res.message or f"{d.name} does not check", f"theory {new_spec}")
        for v in new_views:
            report.merge(check_view(g2, v, fuel=fuel))

    def impl(s: SystemImpl) -> SystemImpl:
        eta = None if s.eta is None else Named(renamed.get(s.eta.view, s.eta.view))
        return SystemImpl(new_spec, s.sys, Named(renamed[s.mu.view]), eta)

    nb = build_bundle(g2, new_spec, impl(b.s1), impl(b.s2), fuel=fuel, name=b.name + "'")
    for k, v in nb.laws.as_dict().items():
        if v is False and k != "i_o_inverse":
            report.add("law-failure", f"bundle law {k} fails after widening", f"bundle {nb.name}")
    after = tuple(filtered_symbols(g2, nb.s1.eta))
    return WideningResult(g2, nb, report, before, after, renamed)


def _depth(v: View, by_name: dict[str, View]) -> int:
    d = 0
    cur = v.meta_morph
    while isinstance(cur, Named) and cur.view in by_name:
        d += 1
        cur = by_name[cur.view].meta_morph
    return d


def bundle_from_manifest(graph: TheoryGraph, manifest, *, fuel: int = DEFAULT_FUEL) -> IntegrationBundle:
    """Build the bundle a parsed ``bundle { ... }`` manifest describes."""
    s1 = SystemImpl(manifest.spec, manifest.sys1, manifest.mu1, manifest.eta1)
    s2 = SystemImpl(manifest.spec, manifest.sys2, manifest.mu2, manifest.eta2)
    return build_bundle(graph, manifest.spec, s1, s2, fuel=fuel, name=manifest.name)
