"""
Widening the specification
==========================

"""

from pathlib import Path

from mmtk import Query, load_graph, verify_solution, widen
from mmtk.integration import bundle_from_manifest, parse_widening
from mmtk.syntax import parse_bundle, parse_queries

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
g = load_graph(FIXTURES / "peano.mmtx")
b = bundle_from_manifest(g, parse_bundle((FIXTURES / "peano.bundle.mmtx").read_text(), g))
queries, solutions = parse_queries((FIXTURES / "peano.queries.mmtx").read_text(), g, "cicNat", "zfNat")
q, s = queries["fol_rules"], solutions["fol_rules"]

# the equality rules of FOL are hidden, so this proof has gaps
print(verify_solution(g, b, Query(q.context, q.goal), s.subst, s.proof).status)

# give Nat the same rules and extend the views to match
spec_ext, view_exts = parse_widening((FIXTURES / "fol_rules.ext.mmtx").read_text(), g, b)
w = widen(g, b, spec_ext, view_exts)
print(w.ok, w.renamed)

gone = sorted(set(w.filtered_before) - set(w.filtered_after))
print(len(w.filtered_before), "->", len(w.filtered_after), gone)

print(verify_solution(w.graph, w.bundle, Query(q.context, q.goal), s.subst, s.proof).status)
