"""
Tests for the core logic layer: evaluation, the closure compiler,
renaming, prenex normal form and the simplifier
"""

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import TEST_SIGNATURE, VARIABLES, assignments, pure_formulas, quantifier_free_formulas, structures
from errors import ArityError, EvaluationError, MonadicAtomError, SignatureError
from logic import (
    FALSUM,
    VERUM,
    And,
    App,
    Const,
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
    all_variables,
    check_formula,
    compile_formula,
    conjunction,
    disjunction,
    eval_formula,
    free_variables,
    is_pure,
    is_quantifier_free,
    is_universal,
    monadic_indices,
    node_count,
    prenex_normal_form,
    quantifier_prefix,
    rename_variables,
    simplify,
    standardize_apart,
)

x, y, z = Var("x"), Var("y"), Var("z")


def E(a, b):
    return Rel("E", (a, b))


@pytest.fixture
def triangle():
    pairs = {(a, b) for a in range(3) for b in range(3) if a != b}
    return FiniteStructure(3, {"E": pairs})


# ---------------------------------------------------------------- signatures

def test_signature_rejects_repeated_symbols():
    with pytest.raises(SignatureError):
        Signature((("E", 2),), ("E",))


def test_signature_extend_appends_relations():
    sig = Signature((("E", 2),)).extend([("R", 3)])
    assert sig.relation_arity("R") == 3
    assert sig.relation_arity("E") == 2


def test_check_formula_reports_arity_mismatch():
    with pytest.raises(ArityError):
        check_formula(Rel("E", (x,)), TEST_SIGNATURE)
    with pytest.raises(SignatureError):
        check_formula(Rel("Q", (x,)), TEST_SIGNATURE)


def test_function_application_needs_arguments():
    with pytest.raises(ArityError):
        App("f", ())


# ---------------------------------------------------------------- structures

def test_structure_rejects_out_of_range_tuples():
    with pytest.raises(SignatureError):
        FiniteStructure(2, {"E": {(0, 2)}})


def test_structure_requires_nonempty_universe():
    with pytest.raises(SignatureError):
        FiniteStructure(0)


def test_partial_function_table_is_rejected():
    with pytest.raises(SignatureError):
        FiniteStructure(2, functions={"f": {(0,): 1}})


def test_conforms_to_checks_constants():
    A = FiniteStructure(2, constants={"c": 1})
    A.conforms_to(Signature(constants=("c",)))
    with pytest.raises(SignatureError):
        A.conforms_to(Signature())


# ---------------------------------------------------------------- evaluation

def test_triangle_has_no_independent_pair(triangle):
    independent = Exists(("x", "y"), And((Not(Eq(x, y)), Not(E(x, y)))))
    assert not eval_formula(triangle, {}, independent)
    assert eval_formula(triangle, {}, Forall(("x",), Exists(("y",), E(x, y))))


def test_terms_with_constants_and_functions():
    A = FiniteStructure(3, constants={"c": 2}, functions={"succ": {(0,): 1, (1,): 2, (2,): 0}})
    phi = Eq(App("succ", (Const("c"),)), Var("x"))
    assert eval_formula(A, {"x": 0}, phi)
    assert not eval_formula(A, {"x": 1}, phi)


def test_monadic_atoms_read_supplied_sets(triangle):
    phi = Forall(("x",), Or((Mon(1, x), Mon(2, x))))
    assert eval_formula(triangle, {}, phi, [{0, 1}, {2}])
    assert not eval_formula(triangle, {}, phi, [{0}, {2}])


def test_missing_assignment_is_an_error(triangle):
    with pytest.raises(EvaluationError):
        eval_formula(triangle, {}, E(x, y))


def test_missing_monadic_set_is_an_error(triangle):
    with pytest.raises(EvaluationError):
        eval_formula(triangle, {"x": 0}, Mon(2, x), [{0}])
    with pytest.raises(EvaluationError):
        compile_formula(triangle, Mon(2, x), ("x",))((0,), [{0}])


def test_empty_connectives():
    A = FiniteStructure(1)
    assert eval_formula(A, {}, And(()))
    assert not eval_formula(A, {}, Or(()))
    assert conjunction([]) == VERUM
    assert disjunction([]) == FALSUM
    assert conjunction([Eq(x, x)]) == Eq(x, x)


def test_shadowed_quantifier_restores_outer_value():
    A = FiniteStructure(2, {"P": {(1,)}})
    phi = And((Exists(("x",), Rel("P", (x,))), Not(Rel("P", (x,)))))
    assert eval_formula(A, {"x": 0}, phi)
    assert compile_formula(A, phi, ("x",))((0,))


@given(st.data())
def test_compiled_formula_agrees_with_interpreter(data):
    A = data.draw(structures())
    phi = data.draw(st.one_of(pure_formulas, quantifier_free_formulas(2)))
    v = data.draw(assignments(A))
    mon = [frozenset(data.draw(st.frozensets(st.integers(0, A.size - 1)))) for _ in range(2)]
    compiled = compile_formula(A, phi, VARIABLES)
    assert compiled([v[name] for name in VARIABLES], mon) == eval_formula(A, v, phi, mon)


# ---------------------------------------------------------------- syntax helpers

def test_free_and_bound_variables():
    phi = Forall(("x",), And((E(x, y), Exists(("z",), E(z, x)))))
    assert free_variables(phi) == {"y"}
    assert all_variables(phi) == {"x", "y", "z"}
    assert node_count(phi) == 5


def test_purity_and_monadic_indices():
    phi = Implies(Mon(2, x), Mon(1, y))
    assert not is_pure(phi)
    assert is_quantifier_free(phi)
    assert monadic_indices(phi) == {1, 2}


def test_quantifier_needs_variables():
    with pytest.raises(ValueError):
        Forall((), VERUM)


# ---------------------------------------------------------------- renaming

def test_rename_avoids_capture():
    phi = Exists(("y",), E(x, y))
    renamed = rename_variables(phi, {"x": "y"})
    assert free_variables(renamed) == {"y"}
    assert isinstance(renamed, Exists) and renamed.variables != ("y",)


def test_rename_with_bound_name_supply():
    phi = Forall(("w",), Exists(("v",), E(Var("w"), Var("v"))))
    renamed = rename_variables(phi, {}, iter(["b0", "b1"]))
    assert renamed == Forall(("b0",), Exists(("b1",), E(Var("b0"), Var("b1"))))


@given(structures(), pure_formulas, st.data())
def test_renaming_preserves_truth(A, phi, data):
    v = data.draw(assignments(A))
    mapping = {"x": "y", "y": "x"}
    renamed = rename_variables(phi, mapping)
    swapped = {"x": v["y"], "y": v["x"], "z": v["z"]}
    assert eval_formula(A, swapped, renamed) == eval_formula(A, v, phi)


@given(pure_formulas)
def test_standardize_apart_gives_distinct_binders(phi):
    result = standardize_apart(phi)
    binders = []
    stack = [result]
    while stack:
        node = stack.pop()
        if isinstance(node, (Forall, Exists)):
            binders.extend(node.variables)
        for attr in ("body", "antecedent", "consequent"):
            if hasattr(node, attr):
                stack.append(getattr(node, attr))
        stack.extend(getattr(node, "parts", ()))
    assert len(binders) == len(set(binders))
    assert not set(binders) & free_variables(result)


# ---------------------------------------------------------------- prenex form

@given(structures(), pure_formulas, st.data())
def test_prenex_form_is_equivalent(A, phi, data):
    v = data.draw(assignments(A))
    assert eval_formula(A, v, prenex_normal_form(phi)) == eval_formula(A, v, phi)


def test_prenex_rejects_monadic_atoms():
    with pytest.raises(MonadicAtomError):
        prenex_normal_form(Forall(("x",), Mon(1, x)))


def test_existential_in_antecedent_becomes_universal():
    phi = Implies(Exists(("x",), E(x, x)), Forall(("y",), E(y, y)))
    assert quantifier_prefix(phi) == [True, True]
    assert is_universal(phi)


def test_negated_universal_is_not_universal():
    assert not is_universal(Not(Forall(("x",), E(x, x))))
    assert is_universal(Not(Not(Forall(("x",), E(x, x)))))


@given(pure_formulas)
def test_universality_matches_prenex_prefix(phi):
    assert is_universal(phi) == all(quantifier_prefix(phi))


# ---------------------------------------------------------------- simplifier

def test_simplify_eliminates_constants():
    phi = And((VERUM, Or((FALSUM, E(x, y))), Implies(FALSUM, E(y, x))))
    assert simplify(phi) == E(x, y)
    assert simplify(Not(Not(E(x, x)))) == E(x, x)
    assert simplify(Forall(("x",), Or((VERUM, E(x, x))))) == VERUM


@given(structures(), pure_formulas, st.data())
def test_simplify_preserves_truth(A, phi, data):
    v = data.draw(assignments(A))
    assert eval_formula(A, v, simplify(phi)) == eval_formula(A, v, phi)


def test_all_structures_of_size_two_distinguish_edge_formulas():
    phi = Forall(("x", "y"), Implies(E(x, y), E(y, x)))
    symmetric = 0
    pairs = list(itertools.product(range(2), repeat=2))
    for mask in range(1 << len(pairs)):
        edges = {p for n, p in enumerate(pairs) if mask >> n & 1}
        symmetric += eval_formula(FiniteStructure(2, {"E": edges}), {}, phi)
    assert symmetric == 8
