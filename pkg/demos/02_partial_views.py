"""
Going back with a partial view
==============================

"""

from pathlib import Path

from mmtk import Comp, Ident, Named, Sym, apply_morphism, check_view, filtered_symbols, load_graph, print_object
from mmtk import is_partial_inverse, morphism_eq, morphism_leq

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
g = load_graph(FIXTURES / "peano.mmtx")
eta = g.view("eta1")

# ZF has nothing Nat could express, so the meta-morphism hides it all
print(print_object(apply_morphism(g, Named("eta1"), Sym("ZF", "empty"))))
print(len(filtered_symbols(g, Named("eta1"))), "filtered symbols")

# zfNat/0 has a filtered definiens but a translatable type
print(check_view(g, eta).ok)

# the older rule would force 0 to be hidden as well
for v in check_view(g, eta, strict=True).violations[:3]:
    print(v.code, "|", v.location)

# mu1 ; eta1 is the identity, eta1 ; mu1 only below it
print(morphism_eq(g, Comp(Named("mu1"), Named("eta1")), Ident("Nat")))
print(morphism_leq(g, Comp(Named("eta1"), Named("mu1")), Ident("zfNat")))
print(is_partial_inverse(g, Named("eta1"), Named("mu1")))

# ?hid is not equal to itself
print(morphism_eq(g, Named("eta1"), Named("eta1")))
