"""Acceptance criteria, one marked group each; the run ends with a pass/fail line per criterion."""

import json
import random
import time

import pytest

from conftest import FIXTURES, fixture
from gen import Signature, cut_unfiltered, objects_to_depth, random_graph, random_judgment, random_object, random_subst, random_term, random_view
from gen import O, STLC_SOURCE, arrow_ty
from oracles import LFOracle, binary, nf_oracle, subst_oracle, to_debruijn

from mmtk.cli import main
from mmtk.foundation import check_type, check_with_cut, judge, normalize
from mmtk.integration import Query, parse_widening, verify_solution, widen
from mmtk.kernel import App, Bind, Named, Sym, SymbolDecl, Theory, accessible_symbols, alpha_eq, contains_hid, subst_apply
from mmtk.morphisms import apply_morphism, apply_to_context, check_view, filtered_symbols, is_partial_inverse
from mmtk.syntax import load_graph, parse_graph, parse_object, prelude_graph, print_graph

PEANO = str(FIXTURES / "peano.mmtx")
TG = str(FIXTURES / "tg_zfc.mmtx")


def cli(capsys, *argv):
    code = main(["--json", *argv])
    return code, json.loads(capsys.readouterr().out)


class Clock:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.limit, f"took {self.elapsed:.1f}s, limit {self.limit}s"


# -- 1 ---------------------------------------------------------------------------


@pytest.mark.criterion(1, "check accepts the Peano graph")
def test_peano_graph_checks(capsys):
    with Clock(5):
        code, data = cli(capsys, "check", PEANO)
        assert code == 0 and data["ok"] and data["violations"] == []
        g = load_graph(PEANO)
        assert {"SOL", "Nat", "ZF", "zfNat", "CIC", "cicNat", "LF"} <= set(g.theories)
        assert (g.view("mu1").source, g.view("mu1").target) == ("Nat", "zfNat")
        assert (g.view("mu2").source, g.view("mu2").target) == ("Nat", "cicNat")
        metas = {t: g.theory(t).meta for t in ("SOL", "Nat", "FOL", "ZF", "zfNat", "CIC", "cicNat")}
        assert metas == {"SOL": "LF", "Nat": "SOL", "FOL": "LF", "ZF": "FOL", "zfNat": "ZF", "CIC": "LF", "cicNat": "CIC"}


# -- 2 ---------------------------------------------------------------------------


@pytest.mark.criterion(2, "eta passes the weakened rule, fails the strict one, inverts mu1")
def test_eta_partial_inverse(capsys, peano):
    with Clock(5):
        eta = peano.view("eta1")
        assert eta.meta_morph == Named("l1")
        assert all(contains_hid(a.image) for a in peano.view("l1").body)
        assert check_view(peano, eta).ok
        assert not check_view(peano, eta, strict=True).ok
        assert is_partial_inverse(peano, Named("eta1"), Named("mu1"))
        code, data = cli(capsys, "vieweq", PEANO, "eta1", "mu1", "--mode", "inverse")
        assert code == 0 and data["holds"] is True
        code, data = cli(capsys, "check", PEANO, "--strict-filtering")
        assert code == 1
        assert any(v["location"].startswith("view eta1") for v in data["violations"])
        assert main(["check", PEANO]) == 0
        capsys.readouterr()


# -- 3 ---------------------------------------------------------------------------


@pytest.mark.criterion(3, "TG theorem cut and transport to ZFC")
def test_tg_cut_and_transport(capsys, tg_zfc):
    with Clock(5):
        code, data = cli(capsys, "judge", TG, "--theory", "TG", "--type", "--lhs", "@(inf_S, t_inf)", "--rhs", "@(ded, Big)")
        assert code == 0 and data["holds"]
        assert "TG/t_inf" in data["cut"]["d_type"]
        assert "TG/t_inf" not in data["cut"]["d_def"]
        assert "TG/tarski" not in data["cut"]["d_type"]
        p = parse_object("@(inf_S, t_inf)", tg_zfc, "TG")
        f = parse_object("@(ded, Big)", tg_zfc, "TG")
        v = Named("v")
        vp, vf = apply_morphism(tg_zfc, v, p), apply_morphism(tg_zfc, v, f)
        assert not contains_hid(vp) and not contains_hid(vf)
        assert ("TG", "tarski") in filtered_symbols(tg_zfc, v)
        assert check_type(tg_zfc, "ZFC", (), vp, vf).holds
        assert LFOracle(tg_zfc, "ZFC").holds(vp, vf)
        code, data = cli(capsys, "judge", TG, "--theory", "ZFC", "--type", "--lhs", "@(inf_S, a_inf)", "--rhs", "@(ded, Big)")
        assert code == 0


# -- 4 ---------------------------------------------------------------------------


@pytest.mark.criterion(4, "preservation over generated graphs, views and judgments")
def test_preservation_suite():
    with Clock(120):
        rng = random.Random(2024)
        stats = dict(triples=0, holding=0, checked=0, object_filtered=0, cut_filtered=0)
        counterexamples = []
        for _ in range(200):
            sig = Signature(rng)
            g, v = random_view(rng, sig, sig.graph(prelude_graph()))
            assert check_view(g, v).ok
            m = Named(v.name)
            for _ in range(5):
                kind, ctx, a, b = j = random_judgment(rng, sig, g, max_nodes=12)
                stats["triples"] += 1
                res = judge(g, "Sig", j)
                if not res.holds:
                    continue
                stats["holding"] += 1
                ctx2 = apply_to_context(g, m, ctx)
                a2, b2 = apply_morphism(g, m, a), apply_morphism(g, m, b)
                if contains_hid(a2) or contains_hid(b2) or any(t is not None and contains_hid(t) for _, t in ctx2):
                    stats["object_filtered"] += 1
                    continue
                if not cut_unfiltered(g, v, res.cut):
                    stats["cut_filtered"] += 1
                    continue
                stats["checked"] += 1
                if not judge(g, "Tgt", (kind, ctx2, a2, b2)).holds:
                    counterexamples.append((print_graph(g, exclude=["LF"]), j))
        print(stats)
        assert stats["triples"] >= 500 and stats["checked"] >= 300
        assert counterexamples == []


# -- 5 ---------------------------------------------------------------------------


def _replace_decl(g, q, *, type=..., definiens=..., extra=None):
    th = g.theory(q[0])
    body = [extra] if extra is not None else []
    for d in th.body:
        if d.name == q[1]:
            d = SymbolDecl(d.name, d.type if type is ... else type, d.definiens if definiens is ... else definiens)
        body.append(d)
    return g.replace(Theory(th.name, th.meta, tuple(body)))


def _mutations(g, q, cut):
    """Single-declaration changes outside ``cut``: retyping for d_type, redefining for d_def."""
    fresh = SymbolDecl("fresh'", Sym("LF", "type"))
    fresh_sym = Sym(q[0], "fresh'")
    if q not in cut.d_type:
        yield _replace_decl(g, q, type=None)
        yield _replace_decl(g, q, type=fresh_sym, extra=fresh)
    if q not in cut.d_def:
        yield _replace_decl(g, q, definiens=None)
        yield _replace_decl(g, q, definiens=fresh_sym, extra=fresh)


def _definitional(g, theories):
    for th in theories:
        for d in g.theory(th).body:
            if d.type is not None and d.definiens is not None:
                yield th, ("type", (), d.definiens, d.type)
                yield th, ("eq", (), Sym(th, d.name), d.definiens)


def _fixture_judgments(peano, peano_bundle, peano_queries, tg_zfc, rationals):
    out = [(peano, th, j) for th, j in _definitional(peano, ("zfNat", "cicNat", "ZF", "CIC"))]
    out += [(tg_zfc, th, j) for th, j in _definitional(tg_zfc, ("TG", "ZFC"))]
    out += [(rationals, th.name, j) for th in rationals.theories.values() if th.name != "LF" for _, j in _definitional(rationals, (th.name,))]
    out.append((tg_zfc, "TG", ("type", (), parse_object("@(inf_S, t_inf)", tg_zfc, "TG"), parse_object("@(ded, Big)", tg_zfc, "TG"))))
    out.append((peano, "zfNat", ("eq", (), parse_object("@(succ, 0)", peano, "zfNat"), Sym("zfNat", "1"))))
    out.append((peano, "zfNat", ("eq", (), Sym("zfNat", "0"), Sym("ZF", "empty"))))
    queries, solutions = peano_queries
    for name, s in solutions.items():
        q = queries[name]
        sol = verify_solution(peano, peano_bundle, Query(q.context, q.goal, name), s.subst, s.proof)
        if sol.verified:
            goal = subst_apply(q.goal, dict(sol.subst))
            out.append((peano, "cicNat", ("type", (), sol.proof, goal)))
    return out


@pytest.mark.criterion(5, "cuts are stable under outside mutations")
def test_cut_stability_suite(peano, peano_bundle, peano_queries, tg_zfc, rationals):
    with Clock(60):
        judgments = _fixture_judgments(peano, peano_bundle, peano_queries, tg_zfc, rationals)
        assert len(judgments) >= 40
        mutated = changed = 0
        for g, th, j in judgments:
            res = judge(g, th, j)
            assert res.holds, (th, j)
            for q in accessible_symbols(g, th):
                if q[0] == "LF":
                    continue  # the framework's primitives are built in, not declared
                for g2 in _mutations(g, q, res.cut):
                    mutated += 1
                    if not judge(g2, th, j).holds:
                        changed += 1
        print(f"{len(judgments)} judgments, {mutated} mutations outside their cuts")
        assert mutated > 1000 and changed == 0


@pytest.mark.criterion(5, "cuts are stable under outside mutations")
def test_cut_member_mutation_witness(peano):
    with Clock(60):
        j = ("eq", (), Sym("zfNat", "0"), Sym("ZF", "empty"))
        res = judge(peano, "zfNat", j)
        assert ("zfNat", "0") in res.cut.d_def
        fresh = SymbolDecl("fresh'", Sym("ZF", "set"))
        g2 = _replace_decl(peano, ("zfNat", "0"), definiens=Sym("zfNat", "fresh'"), extra=fresh)
        assert not judge(g2, "zfNat", j).holds
        assert not check_with_cut(g2, "zfNat", j, res.cut)


# -- 6 ---------------------------------------------------------------------------


@pytest.mark.criterion(6, "Peano bundle round trip")
def test_integration_round_trip(peano, peano_bundle, peano_queries):
    with Clock(30):
        queries, solutions = peano_queries
        oracle = LFOracle(peano, "cicNat")
        verified = []
        for name, s in solutions.items():
            q = queries[name]
            sol = verify_solution(peano, peano_bundle, Query(q.context, q.goal, name), s.subst, s.proof)
            if not sol.verified:
                continue
            goal = subst_apply(q.goal, dict(sol.subst))
            assert apply_morphism(peano, peano_bundle.o, s.proof) == sol.proof
            assert check_type(peano, "cicNat", (), sol.proof, goal).holds
            assert oracle.holds(sol.proof, goal)
            verified.append(name)
        assert len(verified) >= 20
        q, s = queries["zf_specific"], solutions["zf_specific"]
        sol = verify_solution(peano, peano_bundle, Query(q.context, q.goal, "zf_specific"), s.subst, s.proof)
        assert sol.status == "sketch" and not sol.verified
        assert sol.sketch.gaps >= 1
        assert [i for i, _ in sol.obligations] == list(range(len(sol.sketch.steps)))
        heads = _conclusion_heads(peano, "cicNat")
        for (i, closed), step in zip(sol.obligations, sol.sketch.steps):
            repeated = any(alpha_eq(step, e) for e in sol.sketch.steps[:i])
            if not repeated and _head(step) not in heads:
                assert not closed, step
        assert sol.obligations == ((0, False), (1, False))


def _head(o):
    while isinstance(o, App):
        o = o.head
    return o


def _conclusion_heads(graph, theory):
    # heads a lookup could possibly produce: of each declared conclusion and of its single argument
    out = set()
    for q in accessible_symbols(graph, theory):
        ty = graph.lookup(*q).type
        while isinstance(ty, Bind) and ty.binder == Sym("LF", "Pi"):
            ty = ty.body
        if ty is None:
            continue
        out.add(_head(ty))
        if isinstance(ty, App) and len(ty.args) == 1:
            out.add(_head(ty.args[0]))
    return out


# -- 7 ---------------------------------------------------------------------------


@pytest.mark.criterion(7, "widening by FOL rules")
def test_widening(peano, peano_bundle, peano_queries):
    with Clock(10):
        queries, solutions = peano_queries
        q, s = queries["fol_rules"], solutions["fol_rules"]
        query = Query(q.context, q.goal, "fol_rules")
        before = verify_solution(peano, peano_bundle, query, s.subst, s.proof)
        assert before.status == "sketch"
        spec_ext, view_exts = parse_widening(fixture("fol_rules.ext.mmtx").read_text(), peano, peano_bundle)
        w = widen(peano, peano_bundle, spec_ext, view_exts)
        assert w.ok and w.bundle.laws.ok
        assert set(w.filtered_after) < set(w.filtered_before)
        rules = {("FOL", r) for r in ("refl", "sym", "trans", "cong")}
        assert rules <= set(w.filtered_before) - set(w.filtered_after)
        after = verify_solution(w.graph, w.bundle, query, s.subst, s.proof)
        assert after.verified


# -- 8 ---------------------------------------------------------------------------

_ORACLE_TIME = {}


@pytest.mark.criterion(8, "oracle suites")
def test_alpha_exhaustive_depth_three():
    start = time.perf_counter()
    objs = objects_to_depth(3)
    # oracle classes: equal nameless forms
    classes = {}
    ids = [classes.setdefault(to_debruijn(o), len(classes)) for o in objs]
    bad = 0
    for i, a in enumerate(objs):
        ai = ids[i]
        for k in range(i, len(objs)):
            if alpha_eq(a, objs[k]) != (ai == ids[k]):
                bad += 1
    _ORACLE_TIME["alpha"] = time.perf_counter() - start
    n = len(objs)
    print(f"{n} objects, {n * (n + 1) // 2} pairs, {len(classes)} alpha classes")
    assert n > 5000 and bad == 0


@pytest.mark.criterion(8, "oracle suites")
def test_subst_against_locally_nameless():
    start = time.perf_counter()
    rng = random.Random(9)
    bad = 0
    for _ in range(1000):
        o = random_object(rng, rng.randint(1, 14), hid=rng.random() < 0.2)
        s = random_subst(rng)
        bad += to_debruijn(subst_apply(o, s)) != subst_oracle(o, s)
    _ORACLE_TIME["subst"] = time.perf_counter() - start
    assert bad == 0


@pytest.mark.criterion(8, "oracle suites")
def test_normalization_strategy_independence():
    start = time.perf_counter()
    g = parse_graph(STLC_SOURCE, prelude=True)
    defs = {("S", d.name): binary(d.definiens) for d in g.theory("S").body if d.definiens}
    rng = random.Random(10)
    bad = 0
    for _ in range(500):
        t = random_term(rng, rng.choice([O, arrow_ty(O, O)]), [], rng.randint(2, 14))
        outer = normalize(g, "S", t)
        inner = normalize(g, "S", t, strategy="innermost")
        bad += not (binary(outer) == binary(inner) == nf_oracle(binary(t), defs))
    _ORACLE_TIME["normalize"] = time.perf_counter() - start
    assert bad == 0


@pytest.mark.criterion(8, "oracle suites")
def test_parse_print_round_trip():
    start = time.perf_counter()
    rng = random.Random(12)
    bad = 0
    for _ in range(1000):
        g = random_graph(rng)
        bad += parse_graph(print_graph(g)) != g
    _ORACLE_TIME["roundtrip"] = time.perf_counter() - start
    assert bad == 0


@pytest.mark.criterion(8, "oracle suites")
def test_oracle_suites_total_runtime():
    assert set(_ORACLE_TIME) == {"alpha", "subst", "normalize", "roundtrip"}
    assert sum(_ORACLE_TIME.values()) < 180
