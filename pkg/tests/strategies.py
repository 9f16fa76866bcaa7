"""Hypothesis strategies for objects and substitutions."""

from hypothesis import strategies as st

from mmtk.kernel import HID, App, Bind, Sym, Var

var_names = st.sampled_from(["x", "y", "z", "x1", "y1"])
symbols = st.sampled_from([Sym("T", "a"), Sym("T", "b"), Sym("U", "c"), Sym("T", "f")])


def _bind(children, binders):
    ctx = st.lists(st.tuples(var_names, st.none() | children), min_size=1, max_size=3, unique_by=lambda p: p[0])
    return st.builds(lambda b, c, body: Bind(b, tuple(c), body), binders, ctx, children)


def _app(children):
    return st.builds(lambda h, a: App(h, tuple(a)), children, st.lists(children, min_size=1, max_size=3))


def objects(hid=False, max_leaves=12, syms=None):
    pool = symbols if syms is None else st.sampled_from(list(syms))
    leaves = st.builds(Var, var_names) | pool
    if hid:
        leaves = leaves | st.just(HID)
    return st.recursive(leaves, lambda ch: _app(ch) | _bind(ch, pool), max_leaves=max_leaves)


def substitutions(values=None):
    values = values if values is not None else objects(max_leaves=5)
    return st.dictionaries(var_names, values, max_size=3)
