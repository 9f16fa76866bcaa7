"""``mmtk``: check theory graphs, apply and compare morphisms, move queries between systems.

Exit codes: 0 success, 1 a check failed, 2 usage or parse error, 3 fuel exhausted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import (
    BadProof,
    BadSubstitution,
    FilteredQuery,
    FuelExhausted,
    MMTError,
    ParseError,
)
from .foundation import DependencyCut, check_with_cut, judge
from .integration import (
    Query,
    bundle_from_manifest,
    check_sketch_obligations,
    extract_sketch,
    parse_widening,
    translate_query,
    unsafe_answer,
    verify_solution,
    widen,
)
from .kernel import DEFAULT_FUEL, Comp, Ident, Sym, TheoryGraph, accessible_symbols, well_formed_graph
from .morphisms import (
    apply_morphism,
    filtered_symbols,
    is_partial_inverse,
    morphism_diff,
    morphism_signature,
)
from .syntax import (
    BundleManifest,
    context_to_json,
    export_json,
    graph_to_json,
    object_to_json,
    parse_bundle,
    parse_context,
    parse_graph,
    parse_morphism,
    parse_object,
    parse_queries,
    prelude_graph,
    print_bundle,
    print_context,
    print_graph,
    print_morphism,
    print_object,
    report_to_json,
    to_json,
)

OK, FAILED, USAGE, FUEL = 0, 1, 2, 3


class _Exit(Exception):
    def __init__(self, code: int, payload: Optional[dict] = None, text: str = ""):
        self.code, self.payload, self.text = code, payload, text


def _default_fuel() -> int:
    raw = os.environ.get("MMTK_FUEL")
    if raw is None:
        return DEFAULT_FUEL
    try:
        return int(raw)
    except ValueError:
        raise _Exit(USAGE, text=f"MMTK_FUEL must be an integer, got {raw!r}")


# -- loading ---------------------------------------------------------------


def _load(paths: Sequence[str], args) -> TheoryGraph:
    g = TheoryGraph() if args.no_prelude else prelude_graph()
    for p in paths:
        text = Path(p).read_text(encoding="utf-8")
        try:
            g = parse_graph(text, base=g)
        except ParseError as e:
            raise ParseError(f"{p}: {e.bare_message}", e.line, e.column) from e
    return g


def _graph_for_bundle(path: str, override: Optional[str]) -> str:
    if override:
        return override
    p = Path(path)
    name = p.name
    if name.endswith(".bundle.mmtx"):
        return str(p.with_name(name[: -len(".bundle.mmtx")] + ".mmtx"))
    raise _Exit(USAGE, text=f"cannot tell which graph {path} belongs to; pass --graph")


def _load_bundle(args):
    gpath = _graph_for_bundle(args.bundle, getattr(args, "graph", None))
    g = _load([gpath], args)
    manifest = parse_bundle(Path(args.bundle).read_text(encoding="utf-8"), g)
    return g, gpath, manifest, bundle_from_manifest(g, manifest, fuel=args.fuel)


def _qname(q) -> str:
    return f"{q[0]}/{q[1]}"


# -- commands --------------------------------------------------------------


def cmd_check(args) -> tuple[int, dict, str]:
    g = _load(args.files, args)
    report = well_formed_graph(g, fuel=args.fuel, strict=args.strict_filtering)
    n_th = len([t for t in g.theories if args.no_prelude or t != "LF"])
    lines = [f"{v.code}: {v.location}: {v.message}" for v in report.violations]
    if report.ok:
        lines.append(f"ok: {n_th} theories, {len(g.views)} views")
    else:
        lines.append(f"{len(report.violations)} violation(s)")
    code = FUEL if report.fuel_exhausted else (OK if report.ok else FAILED)
    payload = report_to_json(report)
    payload["strict_filtering"] = args.strict_filtering
    return code, payload, "\n".join(lines)


def cmd_apply(args):
    g = _load([args.file], args)
    m = parse_morphism(args.morph, g)
    src, tgt = morphism_signature(g, m)
    o = parse_object(args.term, g, src)
    img = apply_morphism(g, m, o)
    payload = {
        "kind": "apply",
        "morphism": to_json(m),
        "from": src,
        "to": tgt,
        "input": object_to_json(o),
        "image": object_to_json(img),
    }
    lines = [print_object(img)]
    if args.show_filtered:
        fs = filtered_symbols(g, m)
        payload["filtered"] = [_qname(q) for q in fs]
        lines.append("filtered: " + (", ".join(_qname(q) for q in fs) or "(none)"))
    return OK, payload, "\n".join(lines)


def _read_cut(path: str) -> DependencyCut:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if "cut" in data:
        data = data["cut"]

    def names(key):
        out = []
        for q in data.get(key, []):
            th, _, n = q.partition("/")
            out.append((th, n))
        return out

    return DependencyCut(frozenset(names("d_type")), frozenset(names("d_def")))


def cmd_judge(args):
    g = _load([args.file], args)
    ctx = parse_context(args.ctx or "", g, args.theory)
    lhs = parse_object(args.lhs, g, args.theory)
    rhs = parse_object(args.rhs, g, args.theory)
    kind = "eq" if args.eq else "type"
    j = (kind, ctx, lhs, rhs)
    if args.cut:
        cut = _read_cut(args.cut)
        holds = check_with_cut(g, args.theory, j, cut, fuel=args.fuel)
        payload = {"kind": "judgment", "holds": holds, "within_cut": to_json(cut)}
        return (OK if holds else FAILED), payload, "holds within cut" if holds else "fails within cut"
    res = judge(g, args.theory, j, fuel=args.fuel)
    payload = to_json(res)
    lines = [res.status]
    if res.holds:
        lines.append("d_type: " + (", ".join(_qname(q) for q in sorted(res.cut.d_type)) or "(empty)"))
        lines.append("d_def: " + (", ".join(_qname(q) for q in sorted(res.cut.d_def)) or "(empty)"))
    elif res.message:
        lines.append(res.message)
    code = FUEL if res.fuel_exhausted else (OK if res.holds else FAILED)
    return code, payload, "\n".join(lines)


def cmd_compose(args):
    g = _load([args.file], args)
    m = parse_morphism(args.morph, g)
    src, tgt = morphism_signature(g, m)
    rows = []
    for q in accessible_symbols(g, src):
        if q[0] != src and not args.all:
            continue
        rows.append((q, apply_morphism(g, m, Sym(*q))))
    payload = {
        "kind": "composition",
        "morphism": to_json(m),
        "from": src,
        "to": tgt,
        "images": [{"symbol": _qname(q), "image": object_to_json(o)} for q, o in rows],
    }
    lines = [f"{print_morphism(m)} : {src} -> {tgt}"]
    lines += [f"  {_qname(q)} := {print_object(o)}" for q, o in rows]
    return OK, payload, "\n".join(lines)


def cmd_vieweq(args):
    g = _load([args.file], args)
    m1, m2 = parse_morphism(args.left, g), parse_morphism(args.right, g)
    if args.mode == "inverse":
        holds = is_partial_inverse(g, m1, m2, fuel=args.fuel)
        s, t = morphism_signature(g, m2)
        diff = morphism_diff(g, Comp(m2, m1), Ident(s), fuel=args.fuel) + morphism_diff(
            g, Comp(m1, m2), Ident(t), weak=True, fuel=args.fuel
        )
    else:
        diff = morphism_diff(g, m1, m2, weak=args.mode == "leq", fuel=args.fuel)
        holds = not diff
    payload = {
        "kind": "vieweq",
        "mode": args.mode,
        "left": to_json(m1),
        "right": to_json(m2),
        "holds": holds,
        "differences": [{"symbol": _qname(q), "reason": r} for q, r in diff],
    }
    lines = ["true" if holds else "false"] + [f"  {_qname(q)}: {r}" for q, r in diff]
    return (OK if holds else FAILED), payload, "\n".join(lines)


def _sketch_lines(sk, obligations) -> list[str]:
    lines = [f"sketch: {len(sk.steps)} step(s), {sk.gaps} gap(s)"]
    closed = dict(obligations)
    for i, s in enumerate(sk.steps):
        mark = "closed" if closed.get(i) else "open"
        lines.append(f"  [{i}] {mark:6} {print_object(s)}")
    return lines


def cmd_translate(args):
    g, _, manifest, b = _load_bundle(args)
    queries, _ = parse_queries(Path(args.query).read_text(encoding="utf-8"), g, b.s2.sys, b.s1.sys)
    solutions = {}
    if args.solution:
        _, solutions = parse_queries(Path(args.solution).read_text(encoding="utf-8"), g, b.s2.sys, b.s1.sys)
    if args.name:
        if args.name not in queries:
            raise _Exit(USAGE, text=f"no query named {args.name}")
        queries = {args.name: queries[args.name]}
    code = OK
    results, lines = [], []
    if args.unsafe:
        lines.append("*** UNSAFE: answers are passed through untranslated and unverified ***")
    for name, qe in queries.items():
        q = Query(qe.context, qe.goal, name)
        entry: dict = {"name": name}
        results.append(entry)
        if args.unsafe:
            sol = solutions.get(name)
            entry["status"] = "unsafe"
            if sol is not None:
                entry["solution"] = unsafe_answer(b, sol.subst, sol.proof).to_json()
                lines.append(f"{name}: UNSAFE {print_object(sol.proof)}")
            else:
                lines.append(f"{name}: UNSAFE (no answer)")
            continue
        try:
            ictx, iform = translate_query(g, b, q)
        except FilteredQuery as e:
            entry["status"] = "filtered"
            entry["filtered_symbols"] = [_qname(s) for s in e.symbols]
            lines.append(f"{name}: filtered query ({', '.join(_qname(s) for s in e.symbols)})")
            code = max(code, FAILED)
            continue
        entry["translated"] = {"context": context_to_json(ictx), "formula": object_to_json(iform)}
        head = f"{name}: {print_context(ictx) + ' |- ' if ictx else ''}? : {print_object(iform)}"
        sol = solutions.get(name)
        if sol is None:
            entry["status"] = "translated"
            lines.append(head)
            continue
        try:
            res = verify_solution(g, b, q, sol.subst, sol.proof, fuel=args.fuel)
        except (BadProof, BadSubstitution) as e:
            entry["status"] = "rejected"
            entry["error"] = f"{type(e).__name__}: {e}"
            lines.append(f"{name}: rejected ({type(e).__name__}: {e})")
            code = max(code, FAILED)
            continue
        entry["status"] = res.status
        entry["solution"] = res.to_json()
        if res.status == "verified":
            lines.append(f"{name}: verified in {res.theory}: {print_object(res.proof)}")
        elif res.status == "sketch":
            lines.append(f"{name}: sketch only")
            lines += ["  " + ln for ln in _sketch_lines(res.sketch, res.obligations)]
        else:
            lines.append(f"{name}: {res.status} ({res.message})")
            code = max(code, FAILED)
    payload = {"kind": "translate", "bundle": b.name, "unsafe": args.unsafe, "results": results}
    return code, payload, "\n".join(lines)


def cmd_sketch(args):
    g = _load([args.file], args)
    o = parse_object(args.term, g, args.theory)
    sk = extract_sketch(o)
    obl = check_sketch_obligations(g, args.theory, sk, fuel=args.fuel)
    payload = to_json(sk)
    payload["obligations"] = [{"index": i, "closed": ok} for i, ok in obl]
    return OK, payload, "\n".join(_sketch_lines(sk, obl))


def cmd_widen(args):
    g, gpath, manifest, b = _load_bundle(args)
    spec_ext, view_exts = parse_widening(Path(args.ext).read_text(encoding="utf-8"), g, b)
    w = widen(g, b, spec_ext, view_exts, fuel=args.fuel)
    out_dir = Path(args.out_dir) if args.out_dir else Path(args.bundle).parent
    stem = Path(gpath).name[: -len(".mmtx")] if gpath.endswith(".mmtx") else Path(gpath).name
    gout = out_dir / f"{stem}.widened.mmtx"
    bout = out_dir / f"{stem}.widened.bundle.mmtx"
    nb = w.bundle
    new_manifest = BundleManifest(
        nb.name, nb.spec, nb.s1.sys, nb.s1.mu, nb.s1.eta, nb.s2.sys, nb.s2.mu, nb.s2.eta
    )
    gout.write_text(print_graph(w.graph, exclude=() if args.no_prelude else ("LF",)), encoding="utf-8")
    bout.write_text(print_bundle(new_manifest), encoding="utf-8")
    removed = [q for q in w.filtered_before if q not in w.filtered_after]
    added = [q for q in w.filtered_after if q not in w.filtered_before]
    lines = [f"wrote {gout}", f"wrote {bout}"]
    lines += [f"law {k}: {v}" for k, v in nb.laws.as_dict().items()]
    lines.append(f"eta1 filters {len(w.filtered_before)} -> {len(w.filtered_after)} symbols")
    lines += [f"  - {_qname(q)}" for q in removed] + [f"  + {_qname(q)}" for q in added]
    lines += [f"{v.code}: {v.location}: {v.message}" for v in w.report.violations]
    payload = {
        "kind": "widening",
        "graph_file": str(gout),
        "bundle_file": str(bout),
        "bundle": nb.to_json(),
        "report": report_to_json(w.report),
        "filtered_before": [_qname(q) for q in w.filtered_before],
        "filtered_after": [_qname(q) for q in w.filtered_after],
        "unfiltered": [_qname(q) for q in removed],
    }
    return (OK if w.ok else FAILED), payload, "\n".join(lines)


def cmd_export(args):
    if args.file.endswith(".bundle.mmtx"):
        args.bundle = args.file
        _, _, _, b = _load_bundle(args)
        payload = b.to_json()
    else:
        g = _load([args.file], args)
        if args.report:
            payload = report_to_json(well_formed_graph(g, fuel=args.fuel, strict=args.strict_filtering))
        else:
            payload = graph_to_json(g, exclude=() if args.no_prelude or args.with_prelude else ("LF",))
    return OK, payload, export_json(payload).rstrip("\n")


# -- argument parsing --------------------------------------------------------


def _common(suppress: bool) -> argparse.ArgumentParser:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--json", action="store_true", default=d(False), help="machine-readable output")
    p.add_argument("--fuel", type=int, default=d(None), metavar="N", help="step budget (default $MMTK_FUEL or 100000)")
    p.add_argument(
        "--strict-filtering",
        action="store_true",
        default=d(False),
        help="a filtered type or definiens forces the symbol to be filtered",
    )
    p.add_argument("--no-prelude", action="store_true", default=d(False), help="do not load the LF prelude")
    return p


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mmtk", description=__doc__.splitlines()[0], parents=[_common(False)])
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = _common(True)

    def add(name, fn, help):
        p = sub.add_parser(name, help=help, parents=[common])
        p.set_defaults(fn=fn)
        return p

    p = add("check", cmd_check, "check that theory graphs are well-formed")
    p.add_argument("files", nargs="*")

    p = add("apply", cmd_apply, "apply a morphism to an object")
    p.add_argument("file")
    p.add_argument("--morph", required=True)
    p.add_argument("--term", required=True)
    p.add_argument("--show-filtered", action="store_true")

    p = add("judge", cmd_judge, "decide a typing or equality judgment and report its dependency cut")
    p.add_argument("file")
    p.add_argument("--theory", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--type", action="store_true", help="lhs : rhs")
    g.add_argument("--eq", action="store_true", help="lhs = rhs")
    p.add_argument("--lhs", required=True)
    p.add_argument("--rhs", required=True)
    p.add_argument("--ctx", help="context, e.g. '[$x: Nat/N]'")
    p.add_argument("--cut", metavar="FILE", help="re-check restricted to a cut (JSON from an earlier --json run)")

    p = add("compose", cmd_compose, "show the signature and symbol images of a morphism expression")
    p.add_argument("file")
    p.add_argument("--morph", required=True)
    p.add_argument("--all", action="store_true", help="include symbols of meta-theories")

    p = add("vieweq", cmd_vieweq, "compare two morphisms")
    p.add_argument("file")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--mode", choices=("eq", "leq", "inverse"), default="eq",
                   help="inverse: LEFT is a partial inverse of RIGHT")

    p = add("translate", cmd_translate, "translate queries along a bundle and verify answers")
    p.add_argument("bundle")
    p.add_argument("--graph", help="graph file (default: the bundle's sibling .mmtx)")
    p.add_argument("--query", required=True, metavar="FILE")
    p.add_argument("--solution", metavar="FILE")
    p.add_argument("--name", help="only this query")
    p.add_argument("--unsafe", action="store_true", help="pass answers through untranslated")

    p = add("sketch", cmd_sketch, "extract the proof sketch of a filtered object")
    p.add_argument("file")
    p.add_argument("--theory", required=True)
    p.add_argument("--term", required=True)

    p = add("widen", cmd_widen, "strengthen a bundle's specification by an extension file")
    p.add_argument("bundle")
    p.add_argument("--graph")
    p.add_argument("--ext", required=True, metavar="FILE")
    p.add_argument("--out-dir")

    p = add("export", cmd_export, "export a graph, check report or bundle as JSON")
    p.add_argument("file")
    p.add_argument("--graph")
    p.add_argument("--report", action="store_true")
    p.add_argument("--with-prelude", action="store_true")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code else OK
    as_json = args.json
    try:
        if args.fuel is None:
            args.fuel = _default_fuel()
        code, payload, text = args.fn(args)
    except _Exit as e:
        code, payload, text = e.code, e.payload, e.text
    except ParseError as e:
        code, text = USAGE, f"parse error: {e}"
        payload = {"kind": "error", "error": "parse", "message": e.bare_message, "line": e.line, "column": e.column}
    except OSError as e:
        code, text = USAGE, f"error: {e}"
        payload = {"kind": "error", "error": "io", "message": str(e)}
    except FuelExhausted as e:
        code, text = FUEL, f"fuel exhausted: {e}"
        payload = {"kind": "error", "error": "fuel", "message": str(e)}
    except MMTError as e:
        code, text = FAILED, f"{type(e).__name__}: {e}"
        payload = {"kind": "error", "error": type(e).__name__, "message": str(e)}
    if payload is None:
        payload = {"kind": "error", "error": "usage", "message": text}
    out = sys.stdout if code in (OK, FAILED) or as_json else sys.stderr
    if as_json:
        payload = dict(payload)
        payload["exit_code"] = code
        out.write(export_json(payload))
    elif text:
        out.write(text + "\n")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
