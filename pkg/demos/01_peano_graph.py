"""
Natural numbers in three theories
=================================

"""

from pathlib import Path

from mmtk import Named, Sym, apply_morphism, load_graph, parse_object, print_object, well_formed_graph

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# one specification and two implementations, all over LF
g = load_graph(FIXTURES / "peano.mmtx")
for name in ("Nat", "zfNat", "cicNat"):
    th = g.theory(name)
    print(f"{name} : {th.meta}  ({len(th.body)} symbols)")

print(well_formed_graph(g).ok)

# mu1 interprets the specification in set theory
plus = parse_object("@(plus, 0, @(succ, 0))", g, "Nat")
print(print_object(apply_morphism(g, Named("mu1"), plus)))

# over zfNat, 0 is the empty set
print(print_object(g.lookup("zfNat", "0").definiens))

# logical symbols follow the meta-morphism
print(print_object(apply_morphism(g, Named("mu1"), Sym("SOL", "forall"))))
