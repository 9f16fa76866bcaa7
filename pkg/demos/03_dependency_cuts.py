"""
Moving a theorem from TG to ZFC
===============================

"""

from pathlib import Path

from mmtk import Named, apply_morphism, check_type, check_with_cut, load_graph, parse_object, print_object

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
g = load_graph(FIXTURES / "tg_zfc.mmtx")

p = parse_object("@(inf_S, t_inf)", g, "TG")
f = parse_object("@(ded, Big)", g, "TG")
res = check_type(g, "TG", (), p, f)
print(res.status)

# the proof needs the statement of t_inf, not how TG proves it
print(sorted(n for _, n in res.cut.d_type))
print(sorted(res.cut.d_def))

# so the judgment survives any change to tarski
print(check_with_cut(g, "TG", ("type", (), p, f), res.cut))

# the partial view hides tarski and sends t_inf to ZFC's axiom
vp = apply_morphism(g, Named("v"), p)
vf = apply_morphism(g, Named("v"), f)
print(print_object(vp), ":", print_object(vf))
print(check_type(g, "ZFC", (), vp, vf).holds)
