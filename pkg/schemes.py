"""
Layer 5: Built-in Schemes
Colouring, harmonious colouring, clique cover, disjoint-union partial
algebras and poset omega-filters, together with the graph, poset and
partial-algebra builders the tests and the CLI use
"""

import itertools
import logging
import re
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx

from errors import SchemeError, SignatureError
from logic import (
    FALSUM,
    VERUM,
    And,
    Eq,
    Exists,
    FiniteStructure,
    Formula,
    Implies,
    Mon,
    Not,
    Or,
    Rel,
    Signature,
    Var,
    conjunction,
    disjunction,
    forall,
)
from separation import ClosureConjunct, ClosureRule, MonadicRule, SeparationScheme

logger = logging.getLogger(__name__)

OMEGA = "omega"
Bound = Union[int, str]

GRAPH_SIGNATURE = Signature((("E", 2),))
DUPA_SIGNATURE = Signature((("d", 3),))
POSET_SIGNATURE = Signature((("le", 2),))


def _v(*names: str) -> Tuple[Var, ...]:
    return tuple(Var(n) for n in names)


def _c(k: int, name: str) -> Formula:
    return Mon(k, Var(name))


def _edge(a: str, b: str) -> Formula:
    return Rel("E", _v(a, b))


# ============================================================================
# Graph colouring family
# ============================================================================

def _graph_superclass() -> Tuple[Formula, ...]:
    irreflexive = forall(("x",), Not(_edge("x", "x")))
    symmetric = forall(("x", "y"), Implies(_edge("x", "y"), _edge("y", "x")))
    return (irreflexive, symmetric)


def _colour_conjuncts(N: int, adjacency: Formula) -> List[ClosureConjunct]:
    colours = range(1, N + 1)
    some_colour = ClosureConjunct(("y",), VERUM, disjunction(_c(n, "y") for n in colours))
    one_colour = ClosureConjunct(("y",), VERUM, conjunction(
        Not(And((_c(m, "y"), _c(n, "y")))) for m, n in itertools.combinations(colours, 2)
    ))
    proper = ClosureConjunct(("y1", "y2"), adjacency, conjunction(
        Not(And((_c(n, "y1"), _c(n, "y2")))) for n in colours
    ))
    return [some_colour, one_colour, proper]


def _check_colours(N: int) -> None:
    if N < 1:
        raise SchemeError(f"number of colours must be >= 1, got {N}")


def _colouring_family(N: int, name: str, adjacency: Formula, extra: Sequence[ClosureConjunct] = ()) -> SeparationScheme:
    _check_colours(N)
    tau = ClosureRule.explicit(_colour_conjuncts(N, adjacency) + list(extra))
    rule = MonadicRule(N, ("x",), VERUM, VERUM, tau, name="sigma")
    return SeparationScheme(GRAPH_SIGNATURE, _graph_superclass(), (rule,), name=f"{name}-{N}")


def colouring_scheme(N: int) -> SeparationScheme:
    """Graphs admitting a proper N-colouring"""
    return _colouring_family(N, "colouring", _edge("y1", "y2"))


def harmonious_scheme(N: int) -> SeparationScheme:
    """Proper N-colourings in which distinct edges never carry the same colour pair"""
    _check_colours(N)
    distinct_edges = And((
        Not(And((Eq(*_v("y1", "y3")), Eq(*_v("y2", "y4"))))),
        _edge("y1", "y2"),
        _edge("y3", "y4"),
    ))
    pattern = conjunction(
        Not(And((_c(m, "y1"), _c(n, "y2"), _c(m, "y3"), _c(n, "y4"))))
        for m in range(1, N + 1)
        for n in range(1, N + 1)
    )
    repeats = ClosureConjunct(("y1", "y2", "y3", "y4"), distinct_edges, pattern)
    return _colouring_family(N, "harmonious", _edge("y1", "y2"), [repeats])


def clique_cover_scheme(N: int) -> SeparationScheme:
    """Vertex partitions into N cliques: a colouring of the complement edges"""
    non_edge = And((Not(_edge("y1", "y2")), Not(Eq(*_v("y1", "y2")))))
    return _colouring_family(N, "clique-cover", non_edge)


# ============================================================================
# Disjoint-union partial algebras
# ============================================================================

def _d(a: str, b: str, c: str) -> Formula:
    return Rel("d", _v(a, b, c))


def _basic_set_conjuncts() -> ClosureRule:
    ys = ("y1", "y2", "y3")
    c1, c2, c3 = (_c(1, y) for y in ys)
    return ClosureRule.explicit([
        ClosureConjunct(ys, _d(*ys), Implies(c3, Or((c1, c2)))),
        ClosureConjunct(ys, _d(*ys), Implies(Or((c1, c2)), c3)),
        ClosureConjunct(ys, _d(*ys), Or((Not(c1), Not(c2)))),
    ])


def dupa_scheme() -> SeparationScheme:
    """Partial algebras representable by disjoint union of sets"""
    functional = forall(("x1", "x2", "y", "z"), Implies(
        And((_d("x1", "x2", "y"), _d("x1", "x2", "z"))), Eq(*_v("y", "z"))
    ))
    tau = _basic_set_conjuncts()
    c1, c2 = _c(1, "x1"), _c(1, "x2")
    separate = MonadicRule(
        1, ("x1", "x2"), Not(Eq(*_v("x1", "x2"))),
        Or((And((c1, Not(c2))), And((c2, Not(c1))))), tau, name="sigma1",
    )
    undefined = MonadicRule(
        1, ("x1", "x2"), Not(Exists(("x3",), _d("x1", "x2", "x3"))),
        And((c1, c2)), tau, name="sigma2",
    )
    return SeparationScheme(DUPA_SIGNATURE, (functional,), (separate, undefined), name="dupa")


def dupa_structure(n: int, triples: Iterable[Tuple[int, int, int]] = ()) -> FiniteStructure:
    return FiniteStructure(n, {"d": frozenset(tuple(t) for t in triples)})


def basic_sets(A: FiniteStructure) -> List[FrozenSet[int]]:
    """Subsets closed under the three basic-set conditions, by plain enumeration"""
    result = []
    for mask in range(1 << A.size):
        gamma = frozenset(e for e in A.universe if mask >> e & 1)
        if all(
            (c in gamma) == (a in gamma or b in gamma) and not (a in gamma and b in gamma)
            for a, b, c in A.relation("d")
        ):
            result.append(gamma)
    return result


def dupa_representable(A: FiniteStructure) -> bool:
    """Distinct points are split by a basic set and undefined pairs share one"""
    basics = basic_sets(A)
    defined = {(a, b) for a, b, _ in A.relation("d")}
    for a, b in itertools.product(A.universe, repeat=2):
        if a != b and not any((a in g) != (b in g) for g in basics):
            return False
        if (a, b) not in defined and not any(a in g and b in g for g in basics):
            return False
    return True


# ============================================================================
# Posets
# ============================================================================

def _le(a: str, b: str) -> Formula:
    return Rel("le", _v(a, b))


def _bound_names(M: int) -> Tuple[str, ...]:
    return tuple(f"y{m}" for m in range(1, M + 1))


def meet_formula(M: int) -> Formula:
    """z is the greatest lower bound of y1..yM"""
    ys = _bound_names(M)
    lower = conjunction(_le("z", y) for y in ys)
    greatest = forall(("w",), Implies(conjunction(_le("w", y) for y in ys), _le("w", "z")))
    return And((lower, greatest))


def join_formula(M: int) -> Formula:
    """z is the least upper bound of y1..yM"""
    ys = _bound_names(M)
    upper = conjunction(_le(y, "z") for y in ys)
    least = forall(("w",), Implies(conjunction(_le(y, "w") for y in ys), _le("z", "w")))
    return And((upper, least))


def _upward() -> ClosureConjunct:
    return ClosureConjunct(("y", "z"), _le("y", "z"), Implies(_c(1, "y"), _c(1, "z")))


def _meet_closure(M: int) -> ClosureConjunct:
    ys = _bound_names(M)
    return ClosureConjunct(ys + ("z",), meet_formula(M), Implies(conjunction(_c(1, y) for y in ys), _c(1, "z")))


def _join_prime(M: int) -> ClosureConjunct:
    ys = _bound_names(M)
    return ClosureConjunct(ys + ("z",), join_formula(M), Implies(_c(1, "z"), disjunction(_c(1, y) for y in ys)))


_VACUOUS = ClosureConjunct((), FALSUM, VERUM)


def _below(M: int, bound: Bound) -> bool:
    return bound == OMEGA or M < bound


def _filter_conjunct(alpha: Bound, beta: Bound, i: int) -> Optional[ClosureConjunct]:
    """Conjunct at index i: 0 upward closure, 2M meets of size M, 2M-1 joins of size M"""
    if i == 0:
        return _upward()
    if i % 2:
        M = (i + 1) // 2
        return _join_prime(M) if _below(M, beta) else None
    M = i // 2
    return _meet_closure(M) if _below(M, alpha) else None


def _check_bound(bound: Bound, what: str) -> Bound:
    if bound == OMEGA:
        return OMEGA
    if not isinstance(bound, int) or bound < 2:
        raise SchemeError(f"{what} must be an integer >= 2 or '{OMEGA}', got {bound!r}")
    return bound


def poset_filter_rule(alpha: Bound, beta: Bound) -> ClosureRule:
    alpha, beta = _check_bound(alpha, "alpha"), _check_bound(beta, "beta")
    if alpha != OMEGA and beta != OMEGA:
        last = max(2 * (alpha - 1), 2 * (beta - 1) - 1)
        conjuncts = [_filter_conjunct(alpha, beta, i) or _VACUOUS for i in range(last + 1)]
        return ClosureRule.explicit(conjuncts)
    if alpha == OMEGA and beta == OMEGA:
        name = "poset-omega-filter"
    else:
        name = f"poset-filter-{alpha}-{beta}"
    return ClosureRule.generated(name, lambda i: _filter_conjunct(alpha, beta, i) or _VACUOUS)


def poset_scheme(alpha: Bound, beta: Bound) -> SeparationScheme:
    """Posets embeddable in a powerset keeping meets of size < alpha and joins of size < beta"""
    tau = poset_filter_rule(alpha, beta)
    reflexive = forall(("x",), _le("x", "x"))
    antisymmetric = forall(("x", "y"), Implies(And((_le("x", "y"), _le("y", "x"))), Eq(*_v("x", "y"))))
    transitive = forall(("x", "y", "z"), Implies(And((_le("x", "y"), _le("y", "z"))), _le("x", "z")))
    rule = MonadicRule(1, ("p", "q"), Not(_le("p", "q")), And((_c(1, "p"), Not(_c(1, "q")))), tau, name="sigma")
    return SeparationScheme(POSET_SIGNATURE, (reflexive, antisymmetric, transitive), (rule,),
                            name=f"poset-{alpha}-{beta}")


def poset_structure(n: int, covers: Iterable[Tuple[int, int]] = ()) -> FiniteStructure:
    """Reflexive transitive closure of the cover pairs (a below b)"""
    G = nx.DiGraph()
    G.add_nodes_from(range(n))
    G.add_edges_from(covers)
    closure = nx.transitive_closure(G, reflexive=True)
    return FiniteStructure(n, {"le": frozenset(closure.edges())})


def chain_poset(n: int) -> FiniteStructure:
    return poset_structure(n, [(k, k + 1) for k in range(n - 1)])


def antichain_poset(n: int) -> FiniteStructure:
    return poset_structure(n)


def diamond_poset() -> FiniteStructure:
    return poset_structure(4, [(0, 1), (0, 2), (1, 3), (2, 3)])


def m3_poset() -> FiniteStructure:
    return poset_structure(5, [(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)])


def _extremum(P: FiniteStructure, points: Sequence[int], upper: bool) -> Optional[int]:
    le = P.relation("le")
    bounds = [z for z in P.universe if all(((y, z) if upper else (z, y)) in le for y in points)]
    for z in bounds:
        if all(((z, w) if upper else (w, z)) in le for w in bounds):
            return z
    return None


def omega_filters(P: FiniteStructure, alpha: Bound, beta: Bound) -> List[FrozenSet[int]]:
    """Up-sets closed under existing meets (size < alpha) and prime for existing joins (size < beta)"""
    le = P.relation("le")
    result = []
    for mask in range(1 << P.size):
        F = frozenset(e for e in P.universe if mask >> e & 1)
        if any(a in F and b not in F for a, b in le):
            continue
        ok = True
        for M in range(1, P.size + 1):
            for points in itertools.product(P.universe, repeat=M):
                if _below(M, alpha):
                    meet = _extremum(P, points, upper=False)
                    if meet is not None and all(p in F for p in points) and meet not in F:
                        ok = False
                if _below(M, beta):
                    join = _extremum(P, points, upper=True)
                    if join is not None and join in F and not any(p in F for p in points):
                        ok = False
            if not ok:
                break
        if ok:
            result.append(F)
    return result


def poset_representable(P: FiniteStructure, alpha: Bound, beta: Bound) -> bool:
    le = P.relation("le")
    filters = omega_filters(P, alpha, beta)
    return all(
        any(p in F and q not in F for F in filters)
        for p, q in itertools.product(P.universe, repeat=2)
        if (p, q) not in le
    )


# ============================================================================
# Graphs
# ============================================================================

def graph_structure(n: int, edges: Iterable[Tuple[int, int]] = ()) -> FiniteStructure:
    """Simple undirected graph; each edge is stored in both directions"""
    pairs = set()
    for a, b in edges:
        if a == b:
            raise SignatureError(f"loop at vertex {a} in a simple graph")
        pairs.update({(a, b), (b, a)})
    return FiniteStructure(n, {"E": frozenset(pairs)})


def from_networkx(G: nx.Graph) -> FiniteStructure:
    H = nx.convert_node_labels_to_integers(G, ordering="sorted")
    return graph_structure(H.number_of_nodes(), H.edges())


def to_networkx(A: FiniteStructure) -> nx.Graph:
    if set(A.relations) - {"E"}:
        raise SignatureError("graph structures interpret only E")
    G = nx.Graph()
    G.add_nodes_from(A.universe)
    G.add_edges_from(A.relation("E"))
    return G


def cycle_graph(n: int) -> FiniteStructure:
    return from_networkx(nx.cycle_graph(n))


def complete_graph(n: int) -> FiniteStructure:
    return from_networkx(nx.complete_graph(n))


def path_graph(n: int) -> FiniteStructure:
    return from_networkx(nx.path_graph(n))


def edgeless_graph(n: int) -> FiniteStructure:
    return from_networkx(nx.empty_graph(n))


def all_graphs(max_vertices: int) -> List[FiniteStructure]:
    """One graph per isomorphism class on 1..max_vertices vertices"""
    if max_vertices > 7:
        raise ValueError("the graph atlas covers at most 7 vertices")
    return [from_networkx(G) for G in nx.graph_atlas_g() if 1 <= G.number_of_nodes() <= max_vertices]


def complement_graph(A: FiniteStructure) -> FiniteStructure:
    """All ordered pairs of distinct vertices that are not edges"""
    return from_networkx(nx.complement(to_networkx(A)))


def tensor_product(A: FiniteStructure, B: FiniteStructure) -> FiniteStructure:
    return from_networkx(nx.tensor_product(to_networkx(A), to_networkx(B)))


def odd_cycle_join_clique(n: int, N: int) -> FiniteStructure:
    """C_(2n+1) joined to K_(N-2): N+1-chromatic, with every proper subgraph N-colourable"""
    if n < 1 or N < 2:
        raise ValueError("need n >= 1 and N >= 2")
    G = nx.full_join(nx.cycle_graph(2 * n + 1), nx.complete_graph(N - 2), rename=("c", "k"))
    return from_networkx(G)


# ============================================================================
# Registries
# ============================================================================

def _parse_bound(text: str) -> Bound:
    return OMEGA if text in (OMEGA, "w") else int(text)


_BUILTINS: Dict[str, Tuple[Callable[..., SeparationScheme], Callable[[str], object], int]] = {
    "colouring": (colouring_scheme, int, 1),
    "harmonious": (harmonious_scheme, int, 1),
    "clique-cover": (clique_cover_scheme, int, 1),
    "dupa": (dupa_scheme, int, 0),
    "poset": (poset_scheme, _parse_bound, 2),
}


def builtin_names() -> List[str]:
    return sorted(_BUILTINS)


def builtin_scheme(name: str, params: Sequence[str] = ()) -> SeparationScheme:
    """Build a named scheme from string parameters, e.g. ('poset', ['3', 'omega'])"""
    try:
        builder, convert, arity = _BUILTINS[name]
    except KeyError:
        raise SchemeError(f"unknown built-in scheme '{name}' (have {', '.join(builtin_names())})") from None
    if len(params) != arity:
        raise SchemeError(f"scheme '{name}' takes {arity} parameter(s), got {len(params)}")
    try:
        values = [convert(p) for p in params]
    except ValueError:
        raise SchemeError(f"bad parameter(s) {list(params)} for scheme '{name}'") from None
    return builder(*values)


_GENERATED_NAME = re.compile(r"poset-filter-(\d+|omega)-(\d+|omega)")


def resolve_generated(name: str) -> ClosureRule:
    """Generated closure rule referenced by name from a scheme file"""
    if name == "poset-omega-filter":
        return poset_filter_rule(OMEGA, OMEGA)
    match = _GENERATED_NAME.fullmatch(name)
    if match:
        alpha, beta = (_parse_bound(g) for g in match.groups())
        rule = poset_filter_rule(alpha, beta)
        if not rule.is_finite:
            return rule
    raise SchemeError(f"unknown generated closure rule '{name}'")
