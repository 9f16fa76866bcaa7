"""Random and exhaustive generators for objects, terms and theory graphs."""

import itertools
import random

from mmtk.kernel import (
    HID,
    App,
    Assignment,
    Bind,
    Comp,
    Ident,
    Named,
    Sym,
    SymbolDecl,
    Theory,
    TheoryGraph,
    Var,
    View,
)

C = Sym("T", "c")
F = Sym("T", "f")


# -- exhaustive small objects -----------------------------------------------


def objects_to_depth(depth, names=("x", "y")):
    """Every object of constructor depth at most ``depth`` over a tiny alphabet."""
    levels = [[Var(n) for n in names] + [C]]
    for _ in range(depth - 1):
        prev = list(itertools.chain.from_iterable(levels))
        new = []
        for h, a in itertools.product(prev, prev):
            new.append(App(h, (a,)))
        for n, body in itertools.product(names, prev):
            new.append(Bind(F, ((n, None),), body))
        for n, ty, body in itertools.product(names, prev, prev):
            new.append(Bind(F, ((n, ty),), body))
        new.extend(Bind(F, ((a, None), (b, None)), body) for a, b in itertools.permutations(names, 2) for body in prev)
        levels.append(new)
    return list(itertools.chain.from_iterable(levels))


# -- random untyped objects -------------------------------------------------

VAR_POOL = ("x", "y", "z", "x1", "y1")
SYM_POOL = (Sym("T", "a"), Sym("T", "b"), Sym("U", "c"), Sym("T", "f"))


def random_object(rng: random.Random, budget: int, *, hid=False, pool=VAR_POOL, syms=SYM_POOL):
    """An object with at most ``budget`` nodes."""
    if budget <= 1 or rng.random() < 0.25:
        r = rng.random()
        if hid and r < 0.08:
            return HID
        if r < 0.55:
            return Var(rng.choice(pool))
        return rng.choice(syms)
    budget -= 1
    if rng.random() < 0.5:
        n = rng.randint(1, min(3, budget))
        parts = _split(rng, budget, n + 1)
        head = random_object(rng, parts[0], hid=hid, pool=pool, syms=syms)
        return App(head, tuple(random_object(rng, p, hid=hid, pool=pool, syms=syms) for p in parts[1:]))
    k = rng.randint(1, min(2, max(1, budget // 2)))
    names = rng.sample(pool, k)
    typed = [rng.random() < 0.6 for _ in names]
    parts = _split(rng, budget, 1 + sum(typed) + 1)
    binder = random_object(rng, parts[0], pool=pool, syms=syms) if rng.random() < 0.3 else rng.choice(syms)
    it = iter(parts[1:-1])
    ctx = tuple((n, random_object(rng, next(it), hid=hid, pool=pool, syms=syms) if t else None) for n, t in zip(names, typed))
    return Bind(binder, ctx, random_object(rng, parts[-1], hid=hid, pool=pool, syms=syms))


def _split(rng, total, k):
    total = max(total, k)
    cuts = sorted(rng.sample(range(1, total), k - 1)) if k > 1 else []
    bounds = [0, *cuts, total]
    return [bounds[i + 1] - bounds[i] for i in range(k)]


def random_subst(rng: random.Random, budget=5):
    keys = rng.sample(VAR_POOL, rng.randint(1, 3))
    return {k: random_object(rng, rng.randint(1, budget)) for k in keys}


# -- simply typed LF terms ----------------------------------------------------

LF_PI = Sym("LF", "Pi")
LF_LAMBDA = Sym("LF", "lambda")

O = "o"


def arrow_ty(*tys):
    """A simple type as a tuple tree: ``"o"`` or ``("->", a, b)``."""
    out = tys[-1]
    for t in reversed(tys[:-1]):
        out = ("->", t, out)
    return out


def lf_type(ty, theory="S"):
    if ty == O:
        return Sym(theory, "o")
    return Bind(LF_PI, (("_", lf_type(ty[1], theory)),), lf_type(ty[2], theory))


STLC_SOURCE = """\
theory S : LF {
  o : type;
  c : o;
  e : o;
  f : @(arrow, o, o);
  g : @(arrow, o, o, o);
  h : @(arrow, @(arrow, o, o), o);
  twice : @(arrow, o, o) = bind(lambda, [$x: o], @(f, @(f, $x)));
  k : o = @(twice, c);
  ap : @(arrow, @(arrow, o, o), o, o) = bind(lambda, [$u: @(arrow, o, o), $x: o], @($u, $x));
}
"""

STLC_CONSTS = {
    "c": O,
    "e": O,
    "f": arrow_ty(O, O),
    "g": arrow_ty(O, O, O),
    "h": arrow_ty(arrow_ty(O, O), O),
    "twice": arrow_ty(O, O),
    "k": O,
    "ap": arrow_ty(arrow_ty(O, O), O, O),
}


def random_term(rng, ty, env, budget, consts=STLC_CONSTS, theory="S", redex=0.35):
    """A term of simple type ``ty`` under ``env`` (list of (name, type)), roughly ``budget`` nodes."""
    if budget > 3 and rng.random() < redex:
        # an explicit beta-redex (lambda x:A. body) arg
        a = rng.choice([O, arrow_ty(O, O)])
        x = _fresh(rng, env)
        body = random_term(rng, ty, env + [(x, a)], budget // 2, consts, theory, redex)
        arg = random_term(rng, a, env, budget // 2, consts, theory, redex)
        return App(Bind(LF_LAMBDA, ((x, lf_type(a, theory)),), body), (arg,))
    if ty != O and (budget > 2 and rng.random() < 0.5):
        x = _fresh(rng, env)
        body = random_term(rng, ty[2], env + [(x, ty[1])], budget - 1, consts, theory, redex)
        return Bind(LF_LAMBDA, ((x, lf_type(ty[1], theory)),), body)
    heads = [(Var(n), t) for n, t in env] + [(Sym(theory, c), t) for c, t in consts.items()]
    rng.shuffle(heads)
    for head, t in heads:
        args = []
        cur = t
        while cur != ty and cur != O:
            args.append(cur[1])
            cur = cur[2]
        if cur != ty:
            continue
        if budget <= 1 and args:
            continue
        vals = tuple(random_term(rng, a, env, max(1, (budget - 1) // max(1, len(args))), consts, theory, redex) for a in args)
        return App(head, vals) if vals else head
    # nothing fits the budget: eta-expand down to a base constant
    if ty == O:
        return Sym(theory, "c")
    x = _fresh(rng, env)
    return Bind(LF_LAMBDA, ((x, lf_type(ty[1], theory)),), random_term(rng, ty[2], env + [(x, ty[1])], 1, consts, theory, redex))


def _fresh(rng, env):
    used = {n for n, _ in env}
    for cand in rng.sample(["x", "y", "z", "w", "u", "v"], 6):
        if cand not in used or rng.random() < 0.3:
            return cand
    return f"x{len(env)}"


# -- random theory graphs for the printer/parser roundtrip ---------------------

THEORY_NAMES = ["A", "B", "Cat", "D1", "E_2", "fol", "Q'", "γ", "two words"]
SYMBOL_NAMES = ["a", "b", "c", "0", "1", "succ", "x-y", "p'", "→", "and or", "type", "bind", "view"]


def random_graph(rng: random.Random):
    """Theories with meta links and views between them; every reference resolves."""
    decls = []
    theories = []
    names = rng.sample(THEORY_NAMES, rng.randint(1, 5))
    for tn in names:
        meta = rng.choice(theories).name if theories and rng.random() < 0.5 else None
        syms = rng.sample(SYMBOL_NAMES, rng.randint(0, 5))
        available = [Sym(t.name, s) for t in theories for s in t.symbol_names] + [Sym(tn, s) for s in syms]
        body = []
        for s in syms:
            ty = _graph_obj(rng, available) if rng.random() < 0.7 else None
            df = _graph_obj(rng, available) if rng.random() < 0.3 else None
            body.append(SymbolDecl(s, ty, df))
        th = Theory(tn, meta, tuple(body))
        theories.append(th)
        decls.append(th)
    views = []
    for i in range(rng.randint(0, 3)):
        src, tgt = rng.choice(theories), rng.choice(theories)
        available = [Sym(t.name, s) for t in theories for s in t.symbol_names]
        body = tuple(
            Assignment(s, HID if rng.random() < 0.2 else _graph_obj(rng, available)) for s in src.symbol_names
        )
        meta = None
        if rng.random() < 0.5:
            choices = [Ident(rng.choice(theories).name)] + [Named(v.name) for v in views]
            meta = rng.choice(choices)
            if rng.random() < 0.4:
                meta = Comp(meta, rng.choice(choices))
            if rng.random() < 0.2:
                meta = Comp(rng.choice(choices), Comp(rng.choice(choices), rng.choice(choices)))
        v = View(rng.choice(["v", "w", "id", "mu", "η1", "meta"]) + str(i), src.name, tgt.name, meta, body)
        views.append(v)
        decls.append(v)
    return TheoryGraph(tuple(decls))


def _graph_obj(rng, available, budget=None):
    budget = budget or rng.randint(1, 12)
    if budget <= 1 or rng.random() < 0.3:
        if available and rng.random() < 0.6:
            return rng.choice(available)
        return Var(rng.choice(["x", "y", "x'", "n-1"]))
    budget -= 1
    if rng.random() < 0.55:
        n = rng.randint(1, 3)
        return App(
            _graph_obj(rng, available, max(1, budget // (n + 1))),
            tuple(_graph_obj(rng, available, max(1, budget // (n + 1))) for _ in range(n)),
        )
    names = rng.sample(["x", "y", "z", "a b"], rng.randint(1, 2))
    ctx = tuple((n, _graph_obj(rng, available, max(1, budget // 3)) if rng.random() < 0.6 else None) for n in names)
    return Bind(_graph_obj(rng, available, 1), ctx, _graph_obj(rng, available, max(1, budget // 2)))


# -- random signatures with a view into a copy --------------------------------
# Sig and Tgt are LF theories over a base type o and a predicate P : o -> type.
# Tgt repeats Sig and adds an alternative for every undefined constant; the
# view sends each symbol to its copy, its alternative or ?hid.

SIMPLE_TYPES = [O, arrow_ty(O, O), arrow_ty(O, O, O), arrow_ty(arrow_ty(O, O), O)]


def retheory(o, old, new):
    match o:
        case Sym(th, n):
            return Sym(new, n) if th == old else o
        case App(h, args):
            return App(retheory(h, old, new), tuple(retheory(a, old, new) for a in args))
        case Bind(b, ctx, body):
            ctx = tuple((n, None if t is None else retheory(t, old, new)) for n, t in ctx)
            return Bind(retheory(b, old, new), ctx, retheory(body, old, new))
    return o


class Signature:
    def __init__(self, rng):
        self.consts = {}  # name -> simple type, everything usable in terms
        self.decls = [
            SymbolDecl("o", Sym("LF", "type")),
            SymbolDecl("P", Bind(LF_PI, (("_", Sym("Sig", "o")),), Sym("LF", "type"))),
        ]
        self.undefined, self.defined, self.axioms = [], [], []
        for i in range(rng.randint(2, 5)):
            ty = O if i == 0 else rng.choice(SIMPLE_TYPES)
            self._add(f"c{i}", ty)
            self.undefined.append(f"c{i}")
        for i in range(rng.randint(0, 3)):
            ty = rng.choice(SIMPLE_TYPES)
            body = random_term(rng, ty, [], rng.randint(2, 6), self.consts, "Sig", redex=0.2)
            self._add(f"d{i}", ty, body)
            self.defined.append(f"d{i}")
        for i in range(rng.randint(1, 3)):
            t = random_term(rng, O, [], rng.randint(1, 5), self.consts, "Sig", redex=0.2)
            self.decls.append(SymbolDecl(f"ax{i}", App(Sym("Sig", "P"), (t,))))
            self.axioms.append(f"ax{i}")

    def _add(self, name, ty, definiens=None):
        self.decls.append(SymbolDecl(name, lf_type(ty, "Sig"), definiens))
        self.consts[name] = ty

    def graph(self, base):
        tgt = []
        for d in self.decls:
            ty = None if d.type is None else retheory(d.type, "Sig", "Tgt")
            df = None if d.definiens is None else retheory(d.definiens, "Sig", "Tgt")
            tgt.append(SymbolDecl(d.name, ty, df))
            if d.name in self.undefined or d.name in self.axioms:
                tgt.append(SymbolDecl("alt_" + d.name, ty))
        g = base.extend(Theory("Sig", "LF", tuple(self.decls)))
        return g.extend(Theory("Tgt", "LF", tuple(tgt)))


def random_view(rng, sig, graph):
    """A view Sig -> Tgt; assignments the checker rejects are replaced by ?hid until it accepts."""
    from mmtk.morphisms import apply_morphism, check_view

    images = {}
    for d in sig.decls:
        copy = Sym("Tgt", d.name)
        r = rng.random()
        if d.name in ("o", "P"):
            images[d.name] = HID if r < 0.08 else copy
        elif d.name in sig.defined and r < 0.3:
            images[d.name] = "definiens"
        elif d.name in sig.defined:
            images[d.name] = copy if r < 0.7 else HID
        else:
            images[d.name] = copy if r < 0.5 else (Sym("Tgt", "alt_" + d.name) if r < 0.8 else HID)

    def build(g):
        body = []
        for d in sig.decls:
            img = images[d.name]
            if img == "definiens":
                partial = View("v", "Sig", "Tgt", Ident("LF"), tuple(body) + tuple(
                    Assignment(e.name, HID) for e in sig.decls[len(body):]))
                img = apply_morphism(g.extend(partial), Named("v"), d.definiens)
            body.append(Assignment(d.name, img))
        return View("v", "Sig", "Tgt", Ident("LF"), tuple(body))

    for _ in range(len(sig.decls) + 1):
        v = build(graph)
        report = check_view(graph.extend(v), v)
        if report.ok:
            return graph.extend(v), v
        for viol in report.violations:
            name = viol.location.rsplit("assignment ", 1)[-1]
            images[name] = HID
    raise AssertionError("view repair did not converge")


def random_judgment(rng, sig, graph, max_nodes=12):
    """(kind, ctx, lhs, rhs) over Sig, every object at most ``max_nodes`` nodes."""
    from mmtk.foundation import normalize
    from mmtk.kernel import size

    while True:
        env = [(f"x{i}", rng.choice(SIMPLE_TYPES)) for i in range(rng.randint(0, 2))]
        ctx = tuple((n, lf_type(t, "Sig")) for n, t in env)
        r = rng.random()
        if r < 0.4:
            ty = rng.choice(SIMPLE_TYPES)
            t = random_term(rng, ty, env, rng.randint(1, 8), sig.consts, "Sig")
            claimed = ty if rng.random() < 0.8 else rng.choice(SIMPLE_TYPES)
            j = ("type", ctx, t, lf_type(claimed, "Sig"))
        elif r < 0.75:
            ty = rng.choice(SIMPLE_TYPES)
            a = random_term(rng, ty, env, rng.randint(1, 8), sig.consts, "Sig")
            b = normalize(graph, "Sig", a) if rng.random() < 0.6 else random_term(rng, ty, env, rng.randint(1, 6), sig.consts, "Sig")
            j = ("eq", ctx, a, b)
        else:
            ax = rng.choice(sig.axioms)
            stated = graph.lookup("Sig", ax).type.args[0]
            arg = stated if rng.random() < 0.3 else (
                normalize(graph, "Sig", stated) if rng.random() < 0.6 else random_term(rng, O, env, rng.randint(1, 5), sig.consts, "Sig")
            )
            j = ("type", ctx, Sym("Sig", ax), App(Sym("Sig", "P"), (arg,)))
        objs = [j[2], j[3]] + [t for _, t in ctx]
        if all(size(o) <= max_nodes for o in objs):
            return j


def cut_unfiltered(graph, view, cut):
    """No type of a d_type constant and no definiens of a d_def constant is filtered by ``view``."""
    from mmtk.morphisms import filters

    m = Named(view.name)
    for qs, field in ((cut.d_type, "type"), (cut.d_def, "definiens")):
        for th, n in qs:
            if th != view.source:
                continue  # meta-level constants go through id(LF)
            o = getattr(graph.lookup(th, n), field)
            if o is not None and filters(graph, m, o):
                return False
    return True
