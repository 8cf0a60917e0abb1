import hypothesis
import hypothesis.strategies as st
import pytest

from logic import (
    FALSUM,
    VERUM,
    And,
    Eq,
    Exists,
    FiniteStructure,
    Forall,
    Implies,
    Mon,
    Not,
    Or,
    Rel,
    Signature,
    Var,
)
import schemes

hypothesis.settings.register_profile("fast", max_examples=20)
hypothesis.settings.register_profile("acceptance", max_examples=500, deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False)

VARIABLES = ("x", "y", "z")
TEST_SIGNATURE = Signature((("E", 2), ("P", 1)))

terms = st.sampled_from(VARIABLES).map(Var)

pure_atoms = st.one_of(
    st.just(VERUM),
    st.just(FALSUM),
    st.builds(lambda a, b: Rel("E", (a, b)), terms, terms),
    st.builds(lambda a: Rel("P", (a,)), terms),
    st.builds(Eq, terms, terms),
)


def monadic_atoms(order: int):
    return st.builds(Mon, st.integers(1, order), terms)


def _connectives(children):
    return st.one_of(
        children.map(Not),
        st.lists(children, max_size=3).map(lambda ps: And(tuple(ps))),
        st.lists(children, max_size=3).map(lambda ps: Or(tuple(ps))),
        st.builds(Implies, children, children),
    )


def _with_quantifiers(children):
    return st.one_of(
        _connectives(children),
        st.builds(lambda v, b: Forall((v,), b), st.sampled_from(VARIABLES), children),
        st.builds(lambda v, b: Exists((v,), b), st.sampled_from(VARIABLES), children),
    )


pure_formulas = st.recursive(pure_atoms, _with_quantifiers, max_leaves=10)


def quantifier_free_formulas(order: int = 2):
    return st.recursive(st.one_of(pure_atoms, monadic_atoms(order)), _connectives, max_leaves=10)


@st.composite
def structures(draw, max_size: int = 3):
    n = draw(st.integers(1, max_size))
    element = st.integers(0, n - 1)
    edges = draw(st.frozensets(st.tuples(element, element), max_size=n * n))
    marked = draw(st.frozensets(element.map(lambda e: (e,))))
    return FiniteStructure(n, {"E": edges, "P": marked})


@st.composite
def assignments(draw, A: FiniteStructure):
    return {v: draw(st.integers(0, A.size - 1)) for v in VARIABLES}


@pytest.fixture
def colouring2():
    return schemes.colouring_scheme(2)


@pytest.fixture
def colouring3():
    return schemes.colouring_scheme(3)


@pytest.fixture
def small_graphs():
    """The seven isomorphism classes of graphs on 1 to 3 vertices"""
    return schemes.all_graphs(3)


@pytest.fixture
def graphs_up_to_four():
    return schemes.all_graphs(4)
