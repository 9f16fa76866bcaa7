"""
Asking set theory for a proof
=============================

"""

from pathlib import Path

from mmtk import Query, load_graph, print_object, translate_query, verify_solution
from mmtk.integration import bundle_from_manifest
from mmtk.syntax import parse_bundle, parse_queries

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
g = load_graph(FIXTURES / "peano.mmtx")
b = bundle_from_manifest(g, parse_bundle((FIXTURES / "peano.bundle.mmtx").read_text(), g))
print(b.laws.as_dict())

queries, solutions = parse_queries((FIXTURES / "peano.queries.mmtx").read_text(), g, "cicNat", "zfNat")

# a question over cicNat, in the specification's words
q = queries["plusS_one"]
print(print_object(q.goal))
ctx, f = translate_query(g, b, Query(q.context, q.goal))
print(print_object(f))

# zfNat answers; the proof comes back checked in cicNat
s = solutions["plusS_one"]
sol = verify_solution(g, b, Query(q.context, q.goal), s.subst, s.proof)
print(sol.status, print_object(sol.proof))

# a proof that leans on sets only survives as a sketch
q, s = queries["zf_specific"], solutions["zf_specific"]
sol = verify_solution(g, b, Query(q.context, q.goal), s.subst, s.proof)
print(sol.status, sol.sketch.gaps, "gap(s)")
for i, closed in sol.obligations:
    print(i, print_object(sol.sketch.steps[i]), "closed" if closed else "open")
