"""Theory graphs with partial morphisms, dependency-aware judgments and system integration.

The submodules are usable on their own:

``kernel``       objects, substitution, alpha-equality, theory graphs
``foundation``   typing and equality with dependency cuts (LF-style and structural)
``morphisms``    homomorphic extension, filtering, view checking, morphism comparison
``integration``  specification/system bundles, query translation, proof sketches, widening
``syntax``       the ``.mmtx`` surface syntax, printing and JSON export
"""

import sys as _sys

from .errors import *  # noqa: F401,F403
from .foundation import (
    DependencyCut,
    JudgmentResult,
    check_eq,
    check_type,
    check_with_cut,
    judge,
    normalize,
)
from .integration import (
    IntegrationBundle,
    ProofSketch,
    Query,
    Solution,
    SystemImpl,
    build_bundle,
    check_sketch_obligations,
    extract_sketch,
    translate_query,
    verify_solution,
    widen,
)
from .kernel import (
    HID,
    App,
    Assignment,
    Bind,
    CheckReport,
    Comp,
    Hid,
    Ident,
    Named,
    Sym,
    SymbolDecl,
    Theory,
    TheoryGraph,
    Var,
    View,
    alpha_eq,
    free_vars,
    subst_apply,
    well_formed_graph,
)
from .morphisms import (
    apply_morphism,
    check_view,
    filtered_symbols,
    filters,
    is_partial_inverse,
    morphism_eq,
    morphism_leq,
)
from .syntax import (
    export_json,
    load_graph,
    parse_graph,
    parse_object,
    print_graph,
    print_object,
)

# deeply nested objects are walked recursively
if _sys.getrecursionlimit() < 10_000:
    _sys.setrecursionlimit(10_000)

__version__ = "0.1.0"
